#pragma once

// Accelerometer streams with finger-tap transients, and the reference tap
// detector: first-difference high-pass, vector magnitude, threshold, refractory.

#include <array>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <cstdint>
#include <optional>
#include <vector>

#include "mlsensor/error.hpp"
#include "mlsensor/rng.hpp"

namespace mlsensor {

namespace tap_constants {
inline constexpr int kSampleRateHz = 100;
inline constexpr std::uint64_t kSamplePeriodMs = 10;
inline constexpr double kPeakG = 3.0;
inline constexpr std::uint64_t kTransientMs = 30;
inline constexpr double kDecayMs = 10.0;
inline constexpr double kMaxAbsG = 16.0;
}  // namespace tap_constants

using ImuSample = std::array<double, 3>;  // ax, ay, az in g

struct ImuWindow {
  int sample_rate_hz = tap_constants::kSampleRateHz;
  std::vector<ImuSample> samples;

  void validate() const {
    if (sample_rate_hz != tap_constants::kSampleRateHz)
      throw Error(Errc::InvalidArgument, "IMU sample rate must be 100 Hz");
    if (samples.empty()) throw Error(Errc::InvalidArgument, "IMU window is empty");
    for (const auto& s : samples)
      for (double v : s)
        if (!(std::abs(v) <= tap_constants::kMaxAbsG))
          throw Error(Errc::InvalidArgument, "IMU sample outside +-16 g");
  }

  friend bool operator==(const ImuWindow&, const ImuWindow&) = default;
};

/// Tap transient at `dt` ms after onset: damped oscillation, zero from 30 ms on.
inline double tap_transient(std::uint64_t dt_ms, double peak_g = tap_constants::kPeakG) {
  if (dt_ms >= tap_constants::kTransientMs) return 0.0;
  const double t = static_cast<double>(dt_ms);
  return peak_g * std::exp(-t / tap_constants::kDecayMs) * std::cos(std::numbers::pi * t / 10.0);
}

/// Gravity on z plus per-axis Gaussian noise; each tap adds a transient on a
/// seeded random axis and sign, starting at the first sample at or after it.
inline ImuWindow synth_imu(const std::vector<std::uint64_t>& tap_times_ms, std::uint64_t duration_ms,
                           double noise_sigma_g, std::uint64_t seed,
                           double peak_g = tap_constants::kPeakG) {
  using namespace tap_constants;
  if (duration_ms < kSamplePeriodMs) throw Error(Errc::InvalidArgument, "IMU duration shorter than one sample");
  for (auto t : tap_times_ms)
    if (t >= duration_ms) throw Error(Errc::InvalidArgument, "tap time outside the window");
  if (noise_sigma_g < 0.0) throw Error(Errc::InvalidArgument, "negative IMU noise");

  const std::size_t n = duration_ms / kSamplePeriodMs;
  ImuWindow w;
  w.samples.assign(n, ImuSample{0.0, 0.0, 1.0});
  Rng taps(derive_seed({seed, 0x7A95}));
  for (auto t : tap_times_ms) {
    const int axis = static_cast<int>(taps.uniform_int(0, 2));
    const double sign = taps.coin() ? 1.0 : -1.0;
    const std::size_t first = (t + kSamplePeriodMs - 1) / kSamplePeriodMs;
    for (std::size_t i = first; i < n; ++i) {
      const auto dt = i * kSamplePeriodMs - first * kSamplePeriodMs;
      if (dt >= kTransientMs) break;
      w.samples[i][axis] += sign * tap_transient(dt, peak_g);
    }
  }
  Rng noise(derive_seed({seed, 0x1301}));
  for (auto& s : w.samples)
    for (double& v : s) v = std::clamp(v + noise.normal(0.0, noise_sigma_g), -kMaxAbsG, kMaxAbsG);
  return w;
}

struct TapParams {
  double threshold_g = 1.0;
  std::uint64_t refractory_ms = 100;

  friend bool operator==(const TapParams&, const TapParams&) = default;
};

/// Streaming form of detect_tap; feed samples in order, one per 10 ms.
class TapDetector {
 public:
  explicit TapDetector(TapParams params = {}) : params_(params) {}

  /// Returns true when the sample at `t_ms` triggers a detection.
  bool push(const ImuSample& s, std::uint64_t t_ms) {
    const auto prev = prev_;
    prev_ = s;
    if (!prev) return false;
    const double dx = s[0] - (*prev)[0], dy = s[1] - (*prev)[1], dz = s[2] - (*prev)[2];
    const double mag = std::sqrt(dx * dx + dy * dy + dz * dz);
    if (mag < params_.threshold_g) return false;
    if (last_ && t_ms < *last_ + params_.refractory_ms) return false;
    last_ = t_ms;
    return true;
  }

 private:
  TapParams params_;
  std::optional<ImuSample> prev_;
  std::optional<std::uint64_t> last_;
};

/// Detection times in ms relative to the window start.
inline std::vector<std::uint64_t> detect_tap(const ImuWindow& window, const TapParams& params = {}) {
  std::vector<std::uint64_t> out;
  TapDetector det(params);
  for (std::size_t i = 0; i < window.samples.size(); ++i) {
    const auto t = i * tap_constants::kSamplePeriodMs;
    if (det.push(window.samples[i], t)) out.push_back(t);
  }
  return out;
}

}  // namespace mlsensor
