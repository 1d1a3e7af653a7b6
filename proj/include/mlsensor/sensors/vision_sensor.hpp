#pragma once

// Person and gaze detectors: a camera, a template core, and one debounced
// signal pin held HIGH while the core keeps seeing its target.

#include <deque>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "mlsensor/devkit.hpp"
#include "mlsensor/stimuli/vision.hpp"

namespace mlsensor {

struct PersonPinPolicy {
  std::uint64_t frame_period_ms = 100;
  int rise_frames = 2;
  int fall_frames = 2;

  void validate() const {
    if (frame_period_ms < 1 || rise_frames < 1 || fall_frames < 1)
      throw Error(Errc::InvalidArgument, "pin policy values must be >= 1");
  }

  friend bool operator==(const PersonPinPolicy&, const PersonPinPolicy&) = default;
};

// Payload: window(4) min_h max_h scale_ratio stride_fraction refine threshold
//          n_rects, then n_rects x (x0 y0 x1 y1 weight).
inline std::vector<double> encode_vision_params(const VisionParams& p) {
  std::vector<double> v{p.window.x0, p.window.y0, p.window.x1, p.window.y1,
                        static_cast<double>(p.min_height_px), static_cast<double>(p.max_height_px),
                        p.scale_ratio, p.stride_fraction, p.refine ? 1.0 : 0.0, p.threshold,
                        static_cast<double>(p.rects.size())};
  for (const auto& r : p.rects) v.insert(v.end(), {r.x0, r.y0, r.x1, r.y1, r.weight});
  return v;
}

inline VisionParams decode_vision_params(const std::vector<double>& v) {
  auto bad = [](const std::string& m) { return Error(Errc::MalformedBlob, "vision parameters: " + m); };
  if (v.size() < 11) throw bad("too short");
  VisionParams p;
  p.window = {v[0], v[1], v[2], v[3]};
  p.min_height_px = static_cast<int>(v[4]);
  p.max_height_px = static_cast<int>(v[5]);
  p.scale_ratio = v[6];
  p.stride_fraction = v[7];
  p.refine = v[8] != 0.0;
  p.threshold = v[9];
  const auto n = static_cast<std::size_t>(v[10]);
  if (v[10] != static_cast<double>(n) || v.size() != 11 + 5 * n) throw bad("rect count disagrees with length");
  for (std::size_t i = 0; i < n; ++i) {
    const double* r = &v[11 + 5 * i];
    p.rects.push_back({r[0], r[1], r[2], r[3], r[4]});
  }
  if (p.min_height_px < 2 || p.max_height_px < p.min_height_px) throw bad("height range");
  if (!(p.scale_ratio > 1.0) || !(p.stride_fraction > 0.0 && p.stride_fraction <= 1.0)) throw bad("search grid");
  if (!(p.threshold >= 0.0 && p.threshold <= 1.0)) throw bad("threshold outside [0, 1]");
  if (!(p.window.x1 > p.window.x0 && p.window.y1 > p.window.y0) || p.rects.empty()) throw bad("empty template");
  return p;
}

inline ParameterBlob vision_blob(SensorKind kind, const VisionParams& p) {
  return ParameterBlob::encode(kind, encode_vision_params(p));
}

/// Shared by PERSON and GAZE. A step at t judges the newest frame captured
/// in (t - 2 * period, t - period]: inference takes one frame period. A step
/// without a fresh frame counts as a negative.
class VisionPinSensor final : public SensorDevice {
 public:
  VisionPinSensor(SensorKind kind, PersonPinPolicy policy)
      : SensorDevice(kind, interface_for(), (policy.validate(), policy.frame_period_ms)),
        policy_(policy),
        params_(kind == SensorKind::Gaze ? presets::gaze_template() : presets::person_template()) {
    if (kind != SensorKind::Person && kind != SensorKind::Gaze)
      throw Error(Errc::InvalidArgument, "vision pin sensor must be PERSON or GAZE");
  }

  static InterfaceDecl interface_for() {
    return {{{"VDD", PinRole::Power}, {"GND", PinRole::Ground}, {"DETECT", PinRole::SignalOut}},
            std::nullopt,
            "DETECT: one bit, HIGH while the target is present (debounced)"};
  }

  std::map<std::string, std::uint64_t> timing_constants() const override {
    return {{"cadence_ms", cadence_ms()},
            {"rise_frames", static_cast<std::uint64_t>(policy_.rise_frames)},
            {"fall_frames", static_cast<std::uint64_t>(policy_.fall_frames)}};
  }

  void step(DevicePort& port) override {
    const SimTime t = port.now();
    const SimTime period = cadence_ms();
    std::optional<Frame> frame;
    while (!frames_.empty() && frames_.front().first + period <= t) {
      if (frames_.front().first + 2 * period > t) frame = std::move(frames_.front().second);
      frames_.pop_front();
    }
    const bool positive = frame && detect_with_template(*frame, params_).present;
    if (positive) {
      ++run_pos_;
      run_neg_ = 0;
    } else {
      ++run_neg_;
      run_pos_ = 0;
    }
    if (!high_ && run_pos_ >= policy_.rise_frames) high_ = true;
    if (high_ && run_neg_ >= policy_.fall_frames) high_ = false;
    port.drive("DETECT", to_level(high_));
    schedule(t + period);
  }

 protected:
  void apply_parameters(const std::vector<double>& v) override { params_ = decode_vision_params(v); }
  bool accepts(const Stimulus& s) const override { return std::holds_alternative<Frame>(s); }
  void enqueue(Stimulus s, SimTime at) override {
    if (!frames_.empty() && at < frames_.back().first)
      throw Error(Errc::TimeTravel, "frames must be fed in capture order");
    frames_.emplace_back(at, std::get<Frame>(std::move(s)));
  }

 private:
  PersonPinPolicy policy_;
  VisionParams params_;
  std::deque<std::pair<SimTime, Frame>> frames_;
  int run_pos_ = 0, run_neg_ = 0;
  bool high_ = false;
};

inline std::unique_ptr<SensorDevice> person_detector(PersonPinPolicy policy = {},
                                                     const std::optional<ParameterBlob>& params = std::nullopt) {
  auto d = std::make_unique<VisionPinSensor>(SensorKind::Person, policy);
  if (params) d->load_parameters(*params);
  return d;
}

inline std::unique_ptr<SensorDevice> gaze_detector(PersonPinPolicy policy = {},
                                                   const std::optional<ParameterBlob>& params = std::nullopt) {
  auto d = std::make_unique<VisionPinSensor>(SensorKind::Gaze, policy);
  if (params) d->load_parameters(*params);
  return d;
}

}  // namespace mlsensor
