#pragma once

// Conformance harness: labeled trials over a two-axis grid of environmental
// conditions, scored as true/false positive rates and assertion latency.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mlsensor/devkit.hpp"
#include "mlsensor/rng.hpp"
#include "mlsensor/sensors.hpp"
#include "mlsensor/stimuli/audio.hpp"
#include "mlsensor/stimuli/imu.hpp"
#include "mlsensor/stimuli/scene.hpp"

namespace mlsensor {

inline constexpr std::string_view kToolVersion = "mlsensor-conformance 1.0";

struct Axis {
  std::string name;
  std::vector<double> levels;
  bool harder_when_increasing = true;

  friend bool operator==(const Axis&, const Axis&) = default;
};

/// The condition axes each kind is tested along, with their default levels.
inline std::pair<Axis, Axis> default_axes(SensorKind kind) {
  switch (kind) {
    case SensorKind::Person:
    case SensorKind::Gaze:
      return {{"distance_m", {1, 2, 3, 5}, true}, {"illuminance_lux", {50, 200, 800}, false}};
    case SensorKind::Tap:
      return {{"noise_sigma_g", {0.02, 0.1, 0.3}, true}, {"peak_g", {3.0, 1.5, 0.75}, false}};
    case SensorKind::Voice:
      return {{"noise_sigma", {0.3, 0.6, 1.0}, true}, {"distractor_rate_hz", {0, 1, 2}, true}};
    case SensorKind::TextReader: break;
  }
  throw Error(Errc::InvalidArgument, "no conformance axes for " + std::string(to_string(kind)));
}

struct TestProtocol {
  SensorKind sensor_kind = SensorKind::Person;
  Axis axis_a = default_axes(SensorKind::Person).first;
  Axis axis_b = default_axes(SensorKind::Person).second;
  std::size_t trials_per_cell = 200;
  double positive_fraction = 0.5;
  std::uint64_t latency_budget_ms = 1000;
  std::uint64_t negative_window_ms = 5000;
  std::uint64_t seed = 0;

  static TestProtocol for_kind(SensorKind kind) {
    TestProtocol p;
    p.sensor_kind = kind;
    std::tie(p.axis_a, p.axis_b) = default_axes(kind);
    return p;
  }

  void validate() const {
    auto fail = [](const std::string& m) { throw Error(Errc::InvalidArgument, "protocol: " + m); };
    const auto expected = default_axes(sensor_kind);
    if (axis_a.name != expected.first.name || axis_b.name != expected.second.name)
      fail("axes for " + std::string(to_string(sensor_kind)) + " are " + expected.first.name + " x " +
           expected.second.name);
    if (axis_a.levels.empty() || axis_b.levels.empty()) fail("grids must be non-empty");
    if (trials_per_cell < 10) fail("trials_per_cell must be >= 10");
    if (!(positive_fraction > 0.0 && positive_fraction < 1.0)) fail("positive_fraction must be in (0, 1)");
    if (latency_budget_ms < 1 || negative_window_ms < 1) fail("windows must be >= 1 ms");
  }

  std::size_t cell_count() const { return axis_a.levels.size() * axis_b.levels.size(); }
  std::size_t positives_per_cell() const {
    return static_cast<std::size_t>(std::lround(positive_fraction * static_cast<double>(trials_per_cell)));
  }

  friend bool operator==(const TestProtocol&, const TestProtocol&) = default;
};

using DeviceFactory = std::function<std::unique_ptr<SensorDevice>()>;

struct TrialOutcome {
  bool positive = false;  // label
  bool asserted = false;  // TP for positives, FP for negatives
  std::optional<std::uint64_t> latency_ms;

  friend bool operator==(const TrialOutcome&, const TrialOutcome&) = default;
};

struct CellResult {
  double a = 0, b = 0;
  std::size_t trials = 0, positives = 0, negatives = 0, true_positives = 0, false_positives = 0;
  double tpr = 0, fpr = 0;
  std::optional<double> latency_mean_ms;
  std::optional<std::uint64_t> latency_p95_ms;

  friend bool operator==(const CellResult&, const CellResult&) = default;
};

struct OperatingEnvelope {
  double a_limit = 0, b_limit = 0;  // hardest qualifying level on each axis

  friend bool operator==(const OperatingEnvelope&, const OperatingEnvelope&) = default;
};

struct ConformanceReport {
  TestProtocol protocol;
  std::vector<CellResult> cells;  // a-major, in protocol level order
  std::optional<OperatingEnvelope> envelope;
  std::string tool_version{kToolVersion};

  const CellResult& cell(std::size_t ia, std::size_t ib) const { return cells.at(ia * protocol.axis_b.levels.size() + ib); }
};

// --- one trial ---------------------------------------------------------------

namespace detail {

inline std::string signal_pin(const SensorDevice& d) {
  const auto pins = d.declared_surface().signal_pins();
  if (pins.size() != 1) throw Error(Errc::FactoryKindMismatch, "conformance needs a single-signal-pin device");
  return pins.front();
}

/// Feeds a trial's stimuli. Returns the time the positive stimulus begins.
inline SimTime feed_trial(SensorDevice& dev, const TestProtocol& p, double a, double b, bool positive,
                          SimTime duration, std::uint64_t seed) {
  Rng rng(derive_seed({seed, 0xC0F}));
  switch (p.sensor_kind) {
    case SensorKind::Person:
    case SensorKind::Gaze: {
      SceneParams sp;
      sp.distance_m = a;
      sp.illuminance_lux = b;
      sp.center_x = rng.uniform(0.35, 0.65);
      if (p.sensor_kind == SensorKind::Person) {
        sp.person_present = positive;
      } else {
        sp.person_present = true;  // gaze negatives: someone looking elsewhere
        sp.facing_camera = positive;
      }
      const auto period = dev.cadence_ms();
      for (SimTime t = 0, i = 0; t < duration; t += period, ++i) {
        sp.seed = derive_seed({seed, i});
        dev.feed_stimulus(render_scene(sp), t);
      }
      return 0;
    }
    case SensorKind::Tap: {
      const SimTime onset = positive ? 100 + 10 * static_cast<SimTime>(rng.uniform_int(0, 20)) : 0;
      std::vector<std::uint64_t> taps;
      if (positive) taps.push_back(onset);
      dev.feed_stimulus(synth_imu(taps, onset + duration, a, derive_seed({seed, 1}), b), 0);
      return onset;
    }
    case SensorKind::Voice: {
      const SimTime onset = positive ? 200 + 20 * static_cast<SimTime>(rng.uniform_int(0, 10)) : 0;
      const SimTime total = onset + duration;
      std::vector<ScriptEntry> script;
      if (positive) script.push_back({"on", onset});
      const auto n = static_cast<std::size_t>(std::lround(b * static_cast<double>(total) / 1000.0));
      const std::vector<std::string> pool(distractor_words().begin(), distractor_words().end());
      for (std::size_t i = 0; i < n; ++i) {
        const auto& w = pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))];
        script.push_back({w, static_cast<SimTime>(rng.uniform_int(0, static_cast<std::int64_t>(total) - 100))});
      }
      dev.feed_stimulus(synth_audio(script, {"on", "off"}, derive_seed({seed, 1}), total, a), 0);
      return onset;
    }
    case SensorKind::TextReader: break;
  }
  throw Error(Errc::InvalidArgument, "unsupported conformance kind");
}

}  // namespace detail

inline std::uint64_t trial_seed(const TestProtocol& p, std::size_t cell, std::size_t trial) {
  return derive_seed({p.seed, cell, trial});
}

/// Runs one trial on a fresh bus. The first positives_per_cell() trials of a
/// cell are positive.
inline TrialOutcome run_trial(const DeviceFactory& factory, const TestProtocol& p, std::size_t cell,
                              std::size_t trial) {
  auto dev = factory();
  if (!dev || dev->kind() != p.sensor_kind)
    throw Error(Errc::FactoryKindMismatch, "factory does not build " + std::string(to_string(p.sensor_kind)) + " devices");
  const std::string pin = detail::signal_pin(*dev);
  const std::size_t nb = p.axis_b.levels.size();
  const double a = p.axis_a.levels.at(cell / nb), b = p.axis_b.levels.at(cell % nb);
  const bool positive = trial < p.positives_per_cell();
  const SimTime duration = positive ? p.latency_budget_ms : p.negative_window_ms;

  Bus bus;
  auto& d = *dev;
  auto handle = power_on(std::move(dev), bus, default_wiring(d.declared_surface()));
  const SimTime onset = detail::feed_trial(*handle, p, a, b, positive, duration, trial_seed(p, cell, trial));
  bus.advance(onset + duration);

  TrialOutcome out{positive, false, std::nullopt};
  for (const auto& tr : bus.line(pin).transitions()) {
    if (tr.level != Level::High) continue;
    if (positive && (tr.at < onset || tr.at > onset + p.latency_budget_ms)) continue;
    out.asserted = true;
    if (positive) out.latency_ms = tr.at - onset;
    break;
  }
  return out;
}

inline CellResult summarize_cell(double a, double b, const std::vector<TrialOutcome>& trials) {
  CellResult c;
  c.a = a;
  c.b = b;
  c.trials = trials.size();
  std::vector<std::uint64_t> lat;
  for (const auto& t : trials) {
    if (t.positive) {
      ++c.positives;
      if (t.asserted) {
        ++c.true_positives;
        lat.push_back(*t.latency_ms);
      }
    } else {
      ++c.negatives;
      c.false_positives += t.asserted;
    }
  }
  c.tpr = c.positives ? static_cast<double>(c.true_positives) / static_cast<double>(c.positives) : 0.0;
  c.fpr = c.negatives ? static_cast<double>(c.false_positives) / static_cast<double>(c.negatives) : 0.0;
  if (!lat.empty()) {
    std::sort(lat.begin(), lat.end());
    c.latency_mean_ms = static_cast<double>(std::accumulate(lat.begin(), lat.end(), std::uint64_t{0})) /
                        static_cast<double>(lat.size());
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(lat.size())));
    c.latency_p95_ms = lat[std::max<std::size_t>(rank, 1) - 1];
  }
  return c;
}

// --- envelope ------------------------------------------------------------------

namespace detail {

/// Level indices ordered from easiest to hardest.
inline std::vector<std::size_t> easy_order(const Axis& ax) {
  std::vector<std::size_t> idx(ax.levels.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
    return ax.harder_when_increasing ? ax.levels[i] < ax.levels[j] : ax.levels[i] > ax.levels[j];
  });
  return idx;
}

}  // namespace detail

/// Largest easy-corner-anchored rectangle of cells meeting both thresholds
/// (ties go to the one reaching further along the first axis).
inline std::optional<OperatingEnvelope> envelope(const ConformanceReport& r, double tpr_min = 0.9,
                                                 double fpr_max = 0.05) {
  const auto oa = detail::easy_order(r.protocol.axis_a), ob = detail::easy_order(r.protocol.axis_b);
  auto ok = [&](std::size_t i, std::size_t j) {
    const auto& c = r.cell(oa[i], ob[j]);
    return c.tpr >= tpr_min && c.fpr <= fpr_max;
  };
  std::optional<OperatingEnvelope> best;
  std::size_t best_area = 0;
  std::size_t jmax = ob.size();
  for (std::size_t i = 0; i < oa.size(); ++i) {
    std::size_t j = 0;
    while (j < jmax && ok(i, j)) ++j;
    jmax = j;  // a rectangle must qualify on every earlier row too
    if (jmax == 0) break;
    const std::size_t area = (i + 1) * jmax;
    if (area > best_area) {
      best_area = area;
      best = OperatingEnvelope{r.protocol.axis_a.levels[oa[i]], r.protocol.axis_b.levels[ob[jmax - 1]]};
    }
  }
  return best;
}

// --- run -------------------------------------------------------------------------

struct RunOptions {
  unsigned threads = 1;
  /// Executes trials in a seeded random order; the report must not change.
  std::optional<std::uint64_t> shuffle_seed;
};

inline ConformanceReport run(const DeviceFactory& factory, const TestProtocol& p, const RunOptions& opt = {}) {
  p.validate();
  {
    auto probe = factory();
    if (!probe || probe->kind() != p.sensor_kind)
      throw Error(Errc::FactoryKindMismatch, "factory does not build " + std::string(to_string(p.sensor_kind)) + " devices");
  }
  const std::size_t n_cells = p.cell_count(), n_trials = p.trials_per_cell;
  std::vector<std::size_t> order(n_cells * n_trials);
  std::iota(order.begin(), order.end(), 0);
  if (opt.shuffle_seed) {
    Rng rng(*opt.shuffle_seed);
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
  }

  std::vector<TrialOutcome> outcomes(order.size());
  auto work = [&](std::size_t begin, std::size_t step) {
    for (std::size_t k = begin; k < order.size(); k += step) {
      const std::size_t idx = order[k];
      outcomes[idx] = run_trial(factory, p, idx / n_trials, idx % n_trials);
    }
  };
  const unsigned threads = std::max(1u, opt.threads);
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        try {
          work(t, threads);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  ConformanceReport r;
  r.protocol = p;
  const std::size_t nb = p.axis_b.levels.size();
  for (std::size_t c = 0; c < n_cells; ++c) {
    std::vector<TrialOutcome> cell(outcomes.begin() + static_cast<std::ptrdiff_t>(c * n_trials),
                                   outcomes.begin() + static_cast<std::ptrdiff_t>((c + 1) * n_trials));
    r.cells.push_back(summarize_cell(p.axis_a.levels[c / nb], p.axis_b.levels[c % nb], cell));
  }
  r.envelope = envelope(r);
  return r;
}

// --- compare ---------------------------------------------------------------------

struct CellDelta {
  double a = 0, b = 0;
  double d_tpr = 0, d_fpr = 0;
  std::optional<double> d_latency_mean_ms;
};

struct Comparison {
  std::vector<CellDelta> cells;  // second minus first
  std::size_t second_dominates = 0, first_dominates = 0, equal = 0, incomparable = 0;
};

inline Comparison compare(const ConformanceReport& x, const ConformanceReport& y) {
  if (x.protocol.sensor_kind != y.protocol.sensor_kind || !(x.protocol.axis_a == y.protocol.axis_a) ||
      !(x.protocol.axis_b == y.protocol.axis_b) || x.cells.size() != y.cells.size())
    throw Error(Errc::ShapeMismatch, "reports cover different grids");
  Comparison c;
  for (std::size_t i = 0; i < x.cells.size(); ++i) {
    const auto &p = x.cells[i], &q = y.cells[i];
    CellDelta d{p.a, p.b, q.tpr - p.tpr, q.fpr - p.fpr, std::nullopt};
    if (p.latency_mean_ms && q.latency_mean_ms) d.d_latency_mean_ms = *q.latency_mean_ms - *p.latency_mean_ms;
    const bool y_ge = q.tpr >= p.tpr && q.fpr <= p.fpr, x_ge = p.tpr >= q.tpr && p.fpr <= q.fpr;
    if (y_ge && x_ge) ++c.equal;
    else if (y_ge) ++c.second_dominates;
    else if (x_ge) ++c.first_dominates;
    else ++c.incomparable;
    c.cells.push_back(d);
  }
  return c;
}

// --- JSON ------------------------------------------------------------------------

using Json = nlohmann::json;

/// Sorted keys, two-space indent, LF, trailing newline.
inline std::string canonical_dump(const Json& j) { return j.dump(2) + "\n"; }

inline Json axis_to_json(const Axis& a) {
  return {{"name", a.name}, {"levels", a.levels}, {"harder", a.harder_when_increasing ? "increasing" : "decreasing"}};
}

inline Json protocol_to_json(const TestProtocol& p) {
  return {{"sensor_kind", std::string(to_string(p.sensor_kind))},
          {"axes", Json::array({axis_to_json(p.axis_a), axis_to_json(p.axis_b)})},
          {"trials_per_cell", p.trials_per_cell},
          {"positive_fraction", p.positive_fraction},
          {"latency_budget_ms", p.latency_budget_ms},
          {"negative_window_ms", p.negative_window_ms},
          {"seed", p.seed}};
}

/// Accepts either generic "axes" or, for camera sensors, "distance_levels_m"
/// and "lux_levels". Missing fields take defaults.
inline TestProtocol protocol_from_json(const Json& j) {
  try {
    auto p = TestProtocol::for_kind(parse_sensor_kind(j.at("sensor_kind").get<std::string>()));
    if (j.contains("axes")) {
      const auto& ax = j.at("axes");
      if (!ax.is_array() || ax.size() != 2) throw Error(Errc::InvalidArgument, "protocol: axes must list two axes");
      for (int k = 0; k < 2; ++k) {
        Axis& dst = k == 0 ? p.axis_a : p.axis_b;
        if (ax[k].at("name").get<std::string>() != dst.name)
          throw Error(Errc::InvalidArgument, "protocol: axis " + std::to_string(k) + " must be " + dst.name);
        dst.levels = ax[k].at("levels").get<std::vector<double>>();
      }
    }
    if (j.contains("distance_levels_m")) p.axis_a.levels = j.at("distance_levels_m").get<std::vector<double>>();
    if (j.contains("lux_levels")) p.axis_b.levels = j.at("lux_levels").get<std::vector<double>>();
    p.trials_per_cell = j.value("trials_per_cell", p.trials_per_cell);
    p.positive_fraction = j.value("positive_fraction", p.positive_fraction);
    p.latency_budget_ms = j.value("latency_budget_ms", p.latency_budget_ms);
    p.negative_window_ms = j.value("negative_window_ms", p.negative_window_ms);
    p.seed = j.value("seed", p.seed);
    p.validate();
    return p;
  } catch (const Json::exception& e) {
    throw Error(Errc::ParseError, std::string("protocol: ") + e.what());
  }
}

inline Json envelope_to_json(const TestProtocol& p, const std::optional<OperatingEnvelope>& e) {
  if (!e) return nullptr;
  auto key = [](const Axis& ax) { return (ax.harder_when_increasing ? "max_" : "min_") + ax.name; };
  return {{key(p.axis_a), e->a_limit}, {key(p.axis_b), e->b_limit}};
}

inline Json report_to_json(const ConformanceReport& r) {
  Json cells = Json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{r.protocol.axis_a.name, c.a},
                     {r.protocol.axis_b.name, c.b},
                     {"trials", c.trials},
                     {"positives", c.positives},
                     {"negatives", c.negatives},
                     {"true_positives", c.true_positives},
                     {"false_positives", c.false_positives},
                     {"tpr", c.tpr},
                     {"fpr", c.fpr},
                     {"latency_mean_ms", c.latency_mean_ms ? Json(*c.latency_mean_ms) : Json(nullptr)},
                     {"latency_p95_ms", c.latency_p95_ms ? Json(*c.latency_p95_ms) : Json(nullptr)}});
  }
  return {{"sensor_kind", std::string(to_string(r.protocol.sensor_kind))},
          {"protocol", protocol_to_json(r.protocol)},
          {"cells", cells},
          {"envelope", envelope_to_json(r.protocol, r.envelope)},
          {"envelope_thresholds", {{"tpr_min", 0.9}, {"fpr_max", 0.05}}},
          {"tool_version", r.tool_version}};
}

inline ConformanceReport report_from_json(const Json& j) {
  try {
    ConformanceReport r;
    r.protocol = protocol_from_json(j.at("protocol"));
    for (const auto& c : j.at("cells")) {
      CellResult x;
      x.a = c.at(r.protocol.axis_a.name).get<double>();
      x.b = c.at(r.protocol.axis_b.name).get<double>();
      x.trials = c.at("trials").get<std::size_t>();
      x.positives = c.at("positives").get<std::size_t>();
      x.negatives = c.at("negatives").get<std::size_t>();
      x.true_positives = c.at("true_positives").get<std::size_t>();
      x.false_positives = c.at("false_positives").get<std::size_t>();
      x.tpr = c.at("tpr").get<double>();
      x.fpr = c.at("fpr").get<double>();
      if (!c.at("latency_mean_ms").is_null()) x.latency_mean_ms = c.at("latency_mean_ms").get<double>();
      if (!c.at("latency_p95_ms").is_null()) x.latency_p95_ms = c.at("latency_p95_ms").get<std::uint64_t>();
      r.cells.push_back(x);
    }
    if (r.cells.size() != r.protocol.cell_count()) throw Error(Errc::ShapeMismatch, "report cells do not cover the grid");
    r.envelope = envelope(r);
    r.tool_version = j.at("tool_version").get<std::string>();
    return r;
  } catch (const Json::exception& e) {
    throw Error(Errc::ParseError, std::string("report: ") + e.what());
  }
}

}  // namespace mlsensor
