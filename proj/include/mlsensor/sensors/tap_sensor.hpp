#pragma once

// Finger-tap sensor: accelerometer in, one fixed-width pulse out per tap.

#include <deque>
#include <memory>
#include <optional>

#include "mlsensor/devkit.hpp"
#include "mlsensor/stimuli/imu.hpp"

namespace mlsensor {

inline constexpr std::uint64_t kDefaultPulseMs = 200;

// Payload: threshold_g refractory_ms
inline std::vector<double> encode_tap_params(const TapParams& p) {
  return {p.threshold_g, static_cast<double>(p.refractory_ms)};
}

inline TapParams decode_tap_params(const std::vector<double>& v) {
  if (v.size() != 2 || !(v[0] > 0.0) || !(v[1] >= 0.0))
    throw Error(Errc::MalformedBlob, "tap parameters: expected threshold_g > 0 and refractory_ms >= 0");
  return {v[0], static_cast<std::uint64_t>(v[1])};
}

/// Samples are judged at their own timestamps (one step per 10 ms sample).
/// A detection raises TAP for exactly pulse_ms; detections while TAP is
/// HIGH, or at the very tick it falls, are absorbed.
class TapSensor final : public SensorDevice {
 public:
  explicit TapSensor(std::uint64_t pulse_ms = kDefaultPulseMs)
      : SensorDevice(SensorKind::Tap, interface_for(), tap_constants::kSamplePeriodMs), pulse_ms_(pulse_ms),
        detector_(params_) {
    if (pulse_ms < 1) throw Error(Errc::InvalidArgument, "pulse_ms must be >= 1");
  }

  static InterfaceDecl interface_for() {
    return {{{"VDD", PinRole::Power}, {"GND", PinRole::Ground}, {"TAP", PinRole::SignalOut}},
            std::nullopt,
            "TAP: one bit, a fixed-width HIGH pulse per detected tap"};
  }

  std::uint64_t pulse_ms() const noexcept { return pulse_ms_; }

  std::map<std::string, std::uint64_t> timing_constants() const override {
    return {{"cadence_ms", cadence_ms()}, {"pulse_ms", pulse_ms_}};
  }

  SimTime next_wakeup() const override {
    const SimTime n = SensorDevice::next_wakeup();
    return pulse_end_ ? std::min(n, *pulse_end_) : n;
  }

  void step(DevicePort& port) override {
    const SimTime t = port.now();
    bool detected = false;
    while (!samples_.empty() && samples_.front().first <= t) {
      detected |= detector_.push(samples_.front().second, samples_.front().first);
      samples_.pop_front();
    }
    if (pulse_end_ && t >= *pulse_end_) {
      port.drive("TAP", Level::Low);
      pulse_end_.reset();
      detected = false;  // absorbed at the falling edge
    } else if (detected && !pulse_end_) {
      port.drive("TAP", Level::High);
      pulse_end_ = t + pulse_ms_;
    }
    if (SensorDevice::next_wakeup() <= t) schedule(t + cadence_ms());
  }

 protected:
  void apply_parameters(const std::vector<double>& v) override {
    params_ = decode_tap_params(v);
    detector_ = TapDetector(params_);
  }
  bool accepts(const Stimulus& s) const override { return std::holds_alternative<ImuWindow>(s); }
  void enqueue(Stimulus s, SimTime at) override {
    const auto& w = std::get<ImuWindow>(s);
    w.validate();
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
      const SimTime ts = at + i * tap_constants::kSamplePeriodMs;
      if (!samples_.empty() && ts <= samples_.back().first)
        throw Error(Errc::TimeTravel, "IMU samples must be fed in time order");
      samples_.emplace_back(ts, w.samples[i]);
    }
  }

 private:
  std::uint64_t pulse_ms_;
  TapParams params_{};
  TapDetector detector_;
  std::deque<std::pair<SimTime, ImuSample>> samples_;
  std::optional<SimTime> pulse_end_;
};

inline std::unique_ptr<SensorDevice> tap_sensor(std::uint64_t pulse_ms = kDefaultPulseMs,
                                                const std::optional<ParameterBlob>& params = std::nullopt) {
  auto d = std::make_unique<TapSensor>(pulse_ms);
  if (params) d->load_parameters(*params);
  return d;
}

}  // namespace mlsensor
