#pragma once

// Seven-segment text reader: camera in, an 8-byte BCD register file out over I2C.

#include <deque>
#include <memory>
#include <optional>

#include "mlsensor/devkit.hpp"
#include "mlsensor/sensors/bcd.hpp"
#include "mlsensor/stimuli/seven_segment.hpp"

namespace mlsensor {

inline constexpr std::uint8_t kDefaultTextReaderAddress = 0x29;
inline constexpr std::uint64_t kDefaultRefreshMs = 500;

/// Every refresh period the newest frame captured at or before the step is
/// decoded and the registers rewritten (sentinel when unreadable). Reads
/// return whole_word then frac_word, big-endian.
class TextReader final : public SensorDevice {
 public:
  explicit TextReader(std::uint8_t address = kDefaultTextReaderAddress, std::uint64_t refresh_ms = kDefaultRefreshMs)
      : SensorDevice(SensorKind::TextReader, interface_for(address), refresh_ms) {}

  static InterfaceDecl interface_for(std::uint8_t address = kDefaultTextReaderAddress) {
    return {{{"VDD", PinRole::Power}, {"GND", PinRole::Ground}},
            SerialDecl{address, 8, "bcd-reading-v1"},
            "8-byte register file: signed packed-BCD whole part, packed-BCD fraction; all-FF when unreadable"};
  }

  std::map<std::string, std::uint64_t> timing_constants() const override {
    return {{"cadence_ms", cadence_ms()}, {"refresh_period_ms", cadence_ms()}};
  }

  void step(DevicePort& port) override {
    const SimTime t = port.now();
    std::optional<Frame> latest;
    while (!frames_.empty() && frames_.front().first <= t) {
      latest = std::move(frames_.front().second);
      frames_.pop_front();
    }
    if (latest) {
      const auto r = decode_display(*latest);
      registers_ = r ? encode_reading(*r) : kNoReading;
    }
    schedule(t + cadence_ms());
  }

  std::vector<std::uint8_t> serial_read(std::size_t n, SimTime) override {
    std::vector<std::uint8_t> out(registers_.begin(), registers_.end());
    out.resize(n, 0xFF);
    return out;
  }

 protected:
  void apply_parameters(const std::vector<double>& v) override {
    if (!v.empty()) throw Error(Errc::MalformedBlob, "text reader takes no numeric parameters");
  }
  bool accepts(const Stimulus& s) const override { return std::holds_alternative<Frame>(s); }
  void enqueue(Stimulus s, SimTime at) override {
    if (!frames_.empty() && at < frames_.back().first)
      throw Error(Errc::TimeTravel, "frames must be fed in capture order");
    frames_.emplace_back(at, std::get<Frame>(std::move(s)));
  }

 private:
  std::deque<std::pair<SimTime, Frame>> frames_;
  RegisterBytes registers_ = kNoReading;
};

inline std::unique_ptr<SensorDevice> text_reader(std::uint8_t address = kDefaultTextReaderAddress,
                                                 const std::optional<ParameterBlob>& params = std::nullopt,
                                                 std::uint64_t refresh_ms = kDefaultRefreshMs) {
  auto d = std::make_unique<TextReader>(address, refresh_ms);
  if (params) d->load_parameters(*params);
  return d;
}

}  // namespace mlsensor
