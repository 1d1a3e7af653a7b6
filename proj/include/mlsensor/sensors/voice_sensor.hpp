#pragma once

// Voice-command sensor. Pin mode latches STATE on "on"/"off"; serial mode
// queues (command index, sequence) packets for the host to poll.

#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mlsensor/devkit.hpp"
#include "mlsensor/stimuli/audio.hpp"

namespace mlsensor {

inline constexpr std::uint8_t kDefaultVoiceAddress = 0x3A;
inline constexpr std::size_t kCommandQueueDepth = 16;
inline constexpr std::uint64_t kVoiceCadenceMs = 100;

struct VoiceParams {
  double threshold = kDefaultKeywordThreshold;
  std::vector<std::vector<double>> patterns;  // one per vocabulary word, same order

  friend bool operator==(const VoiceParams&, const VoiceParams&) = default;
};

// Payload: threshold n_templates, then n_templates x 65 pattern values.
inline std::vector<double> encode_voice_params(const VoiceParams& p) {
  std::vector<double> v{p.threshold, static_cast<double>(p.patterns.size())};
  for (const auto& pat : p.patterns) v.insert(v.end(), pat.begin(), pat.end());
  return v;
}

inline VoiceParams decode_voice_params(const std::vector<double>& v) {
  auto bad = [](const std::string& m) { return Error(Errc::MalformedBlob, "voice parameters: " + m); };
  if (v.size() < 2) throw bad("too short");
  VoiceParams p;
  p.threshold = v[0];
  const auto n = static_cast<std::size_t>(v[1]);
  constexpr auto k = audio_constants::kPatternSize;
  if (v[1] != static_cast<double>(n) || v.size() != 2 + n * k) throw bad("template count disagrees with length");
  if (!(p.threshold > -1.0 && p.threshold <= 1.0)) throw bad("threshold outside (-1, 1]");
  for (std::size_t i = 0; i < n; ++i) p.patterns.emplace_back(v.begin() + 2 + i * k, v.begin() + 2 + (i + 1) * k);
  return p;
}

inline VoiceParams default_voice_params(const std::vector<std::string>& vocabulary) {
  VoiceParams p;
  for (const auto& t : templates_for(vocabulary)) p.patterns.push_back(t.pattern);
  return p;
}

enum class VoiceMode : std::uint8_t { Pin, Serial };

/// Audio frames are scored by a streaming spotter; a 100 ms word is judged at
/// the first step at or after its last frame ends.
class VoiceSensor final : public SensorDevice {
 public:
  VoiceSensor(VoiceMode mode, std::vector<std::string> vocabulary, std::uint8_t address = kDefaultVoiceAddress)
      : SensorDevice(SensorKind::Voice, interface_for(mode, address), kVoiceCadenceMs),
        mode_(mode), vocabulary_(std::move(vocabulary)), params_(default_voice_params(vocabulary_)) {
    if (mode_ == VoiceMode::Pin && vocabulary_ != std::vector<std::string>{"on", "off"})
      throw Error(Errc::InvalidArgument, "pin-mode vocabulary must be exactly {on, off}");
    if (vocabulary_.empty() || vocabulary_.size() > 255)
      throw Error(Errc::InvalidArgument, "vocabulary size must be 1..255");
    rebuild();
  }

  static InterfaceDecl interface_for(VoiceMode mode, std::uint8_t address = kDefaultVoiceAddress) {
    if (mode == VoiceMode::Pin)
      return {{{"VDD", PinRole::Power}, {"GND", PinRole::Ground}, {"STATE", PinRole::SignalOut}},
              std::nullopt,
              "STATE: one bit, set HIGH by \"on\" and LOW by \"off\""};
    return {{{"VDD", PinRole::Power}, {"GND", PinRole::Ground}},
            SerialDecl{address, 2, "command-packet-v1"},
            "2-byte packet per recognized command: vocabulary index, wrapping sequence number"};
  }

  VoiceMode mode() const noexcept { return mode_; }
  const std::vector<std::string>& vocabulary() const noexcept { return vocabulary_; }

  std::map<std::string, std::uint64_t> timing_constants() const override {
    return {{"cadence_ms", cadence_ms()}};
  }

  /// Packets lost to queue overflow. Reported through datasheet statistics only.
  std::uint64_t dropped_packets() const noexcept { return dropped_; }

  void step(DevicePort& port) override {
    const SimTime t = port.now();
    while (!frames_.empty() && frames_.front().first + audio_constants::kHopMs <= t) {
      spotter_->push(frames_.front().first, frames_.front().second);
      frames_.pop_front();
    }
    for (const auto& hit : spotter_->poll(t)) {
      if (mode_ == VoiceMode::Pin) {
        port.drive("STATE", to_level(vocabulary_[hit.index] == "on"));
      } else {
        if (queue_.size() == kCommandQueueDepth) {
          queue_.pop_front();
          ++dropped_;
        }
        queue_.push_back({static_cast<std::uint8_t>(hit.index), seq_++});
      }
    }
    schedule(t + cadence_ms());
  }

  std::vector<std::uint8_t> serial_read(std::size_t n, SimTime) override {
    std::vector<std::uint8_t> out{0xFF, 0xFF};
    if (!queue_.empty()) {
      out = {queue_.front()[0], queue_.front()[1]};
      queue_.pop_front();
    }
    out.resize(n, 0xFF);
    return out;
  }

 protected:
  void apply_parameters(const std::vector<double>& v) override {
    auto p = decode_voice_params(v);
    if (p.patterns.size() != vocabulary_.size())
      throw Error(Errc::MalformedBlob, "voice parameters carry " + std::to_string(p.patterns.size()) +
                                           " templates for a vocabulary of " + std::to_string(vocabulary_.size()));
    params_ = std::move(p);
    rebuild();
  }
  bool accepts(const Stimulus& s) const override { return std::holds_alternative<FeatureWindow>(s); }
  void enqueue(Stimulus s, SimTime at) override {
    const auto& w = std::get<FeatureWindow>(s);
    w.validate();
    for (std::size_t i = 0; i < w.frames.size(); ++i) {
      const SimTime ts = at + i * audio_constants::kHopMs;
      if (!frames_.empty() && ts <= frames_.back().first)
        throw Error(Errc::TimeTravel, "audio frames must be fed in time order");
      frames_.emplace_back(ts, w.frames[i]);
    }
  }

 private:
  void rebuild() { spotter_.emplace(params_.patterns, params_.threshold); }

  VoiceMode mode_;
  std::vector<std::string> vocabulary_;
  VoiceParams params_;
  std::optional<KeywordSpotter> spotter_;
  std::deque<std::pair<SimTime, FeatureVector>> frames_;
  std::deque<std::array<std::uint8_t, 2>> queue_;
  std::uint8_t seq_ = 0;
  std::uint64_t dropped_ = 0;
};

inline std::unique_ptr<SensorDevice> voice_sensor_pin(const std::optional<ParameterBlob>& params = std::nullopt) {
  auto d = std::make_unique<VoiceSensor>(VoiceMode::Pin, std::vector<std::string>{"on", "off"});
  if (params) d->load_parameters(*params);
  return d;
}

inline std::unique_ptr<SensorDevice> voice_sensor_serial(std::vector<std::string> vocabulary,
                                                         std::uint8_t address = kDefaultVoiceAddress,
                                                         const std::optional<ParameterBlob>& params = std::nullopt) {
  auto d = std::make_unique<VoiceSensor>(VoiceMode::Serial, std::move(vocabulary), address);
  if (params) d->load_parameters(*params);
  return d;
}

}  // namespace mlsensor
