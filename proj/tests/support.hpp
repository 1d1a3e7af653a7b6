#pragma once

// Test-side oracles. Nothing in here calls the library code it checks:
// each one recomputes the expected answer the slow, obvious way.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "mlsensor/vbus.hpp"

namespace mlsensor {
// readable gtest failure output
inline void PrintTo(const PinTrace& t, std::ostream* os) {
  *os << t.line_id() << " init " << (t.initial_level() == Level::High) << " [";
  for (const auto& tr : t.transitions()) *os << ' ' << tr.at << ':' << (tr.level == Level::High);
  *os << " ]";
}
}  // namespace mlsensor

namespace oracle {

using mlsensor::Level;
using mlsensor::PinTrace;
using mlsensor::SimTime;

inline std::filesystem::path fixtures() { return MLSENSOR_FIXTURES; }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("mlsensor_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

// --- BCD ------------------------------------------------------------------------

/// Builds the register bytes from the digit strings by writing out the hex text.
inline std::vector<std::uint8_t> bcd_bytes(bool negative, const std::string& whole, const std::string& frac) {
  std::string hex = std::string(7 - whole.size(), '0') + whole + (negative ? "D" : "C");
  hex += frac + std::string(8 - frac.size(), '0');
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i < 16; i += 2) out.push_back(static_cast<std::uint8_t>(std::stoi(hex.substr(i, 2), nullptr, 16)));
  return out;
}

// --- level traces, one tick at a time ------------------------------------------------

using Ticks = std::vector<int>;  // level per ms, 0 or 1

inline Ticks sample(const PinTrace& t, SimTime horizon) {
  Ticks v(horizon);
  for (SimTime i = 0; i < horizon; ++i) v[i] = t.level_at(i) == Level::High;
  return v;
}

inline bool rising(const Ticks& v, int initial, SimTime t) { return v[t] && !(t == 0 ? initial : v[t - 1]); }

inline Ticks tick_invert(const Ticks& in) {
  Ticks o(in.size());
  for (std::size_t t = 0; t < in.size(); ++t) o[t] = !in[t];
  return o;
}

inline Ticks tick_gated(const Ticks& ev, int ev_init, const Ticks& gate, SimTime window) {
  Ticks o(ev.size(), 0);
  for (SimTime e = 0; e < ev.size(); ++e) {
    if (!rising(ev, ev_init, e)) continue;
    bool seen = false;
    for (SimTime t = e >= window ? e - window : 0; t <= e; ++t) seen = seen || gate[t];
    if (seen) o[e] = 1;
  }
  return o;
}

inline Ticks tick_debounce(const Ticks& in, int init, SimTime hold) {
  Ticks o(in.size());
  std::optional<SimTime> last_change;
  int prev_out = init, prev_in = init;
  for (SimTime t = 0; t < in.size(); ++t) {
    if (in[t] != prev_in) last_change = t;
    prev_in = in[t];
    const bool stable = !last_change || *last_change + hold <= t;
    o[t] = stable ? in[t] : prev_out;
    prev_out = o[t];
  }
  return o;
}

inline Ticks tick_stretch(const Ticks& in, int init, SimTime ms) {
  Ticks o(in.size());
  std::optional<SimTime> last_rise;
  for (SimTime t = 0; t < in.size(); ++t) {
    if (rising(in, init, t)) last_rise = t;
    o[t] = in[t] || (last_rise && t < *last_rise + ms);
  }
  return o;
}

inline Ticks tick_latch(const Ticks& set, int set_init, const Ticks& reset, int reset_init) {
  Ticks o(set.size());
  int state = 0;
  for (SimTime t = 0; t < set.size(); ++t) {
    if (rising(reset, reset_init, t)) state = 0;
    else if (rising(set, set_init, t)) state = 1;
    o[t] = state;
  }
  return o;
}

/// Latched voice pin. A word starting at `start` is judged at the first
/// device step after its 100 ms block ends; "on" sets the pin, "off" clears it.
inline Ticks tick_voice_latch(const std::vector<std::pair<SimTime, bool>>& words, SimTime step, SimTime horizon) {
  Ticks o(horizon, 0);
  int state = 0;
  for (SimTime t = 0; t < horizon; ++t) {
    for (const auto& [start, on] : words)
      if ((start + 100 + step - 1) / step * step == t) state = on;
    o[t] = state;
  }
  return o;
}

/// Random alternating trace with transitions in [0, span).
inline PinTrace random_trace(std::mt19937_64& g, const std::string& id, SimTime span, int max_edges) {
  std::uniform_int_distribution<int> coin(0, 1), n(0, max_edges);
  PinTrace t(id, coin(g) ? Level::High : Level::Low);
  std::vector<SimTime> times;
  std::uniform_int_distribution<SimTime> at(0, span - 1);
  for (int i = n(g); i > 0; --i) times.push_back(at(g));
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  Level l = t.initial_level();
  for (auto x : times) {
    l = l == Level::High ? Level::Low : Level::High;
    t.drive(l, x);
  }
  return t;
}

// --- device policies -------------------------------------------------------------------

/// Person-pin policy run frame by frame: the step at k*period judges the frame
/// captured one period earlier; rise/fall consecutive judgements flip the pin.
/// Returns the pin's transitions over `steps` steps.
inline std::vector<std::pair<SimTime, int>> person_pin(const std::vector<int>& labels, SimTime period, int rise,
                                                      int fall, std::size_t steps) {
  std::vector<std::pair<SimTime, int>> out;
  int pin = 0, pos = 0, neg = 0;
  for (std::size_t k = 1; k <= steps; ++k) {
    const int judged = k - 1 < labels.size() ? labels[k - 1] : 0;
    if (judged) {
      ++pos;
      neg = 0;
    } else {
      ++neg;
      pos = 0;
    }
    if (!pin && pos >= rise) {
      pin = 1;
      out.push_back({k * period, 1});
    } else if (pin && neg >= fall) {
      pin = 0;
      out.push_back({k * period, 0});
    }
  }
  return out;
}

}  // namespace oracle
