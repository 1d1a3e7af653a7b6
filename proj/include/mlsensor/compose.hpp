#pragma once

// Pin-level combinators. Each exists twice: as an offline transform of
// complete traces, and as a bus processor that produces the same line while a
// simulation runs. Tie rules: gate windows are inclusive at both ends; on a
// latch, reset beats set at the same tick.

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mlsensor/devkit.hpp"
#include "mlsensor/vbus.hpp"

namespace mlsensor {

inline constexpr SimTime kForever = std::numeric_limits<SimTime>::max();
inline constexpr std::uint64_t kDefaultGazeWindowMs = 500;

namespace detail {

inline std::vector<SimTime> rising_edges(const PinTrace& t) {
  std::vector<SimTime> out;
  for (const auto& tr : t.transitions())
    if (tr.level == Level::High) out.push_back(tr.at);
  return out;
}

/// Whether `gate` is HIGH at any instant of [a, b].
inline bool high_somewhere(const PinTrace& gate, SimTime a, SimTime b) {
  if (gate.level_at(a) == Level::High) return true;
  for (const auto& tr : gate.transitions())
    if (tr.level == Level::High && tr.at > a && tr.at <= b) return true;
  return false;
}

inline SimTime window_start(SimTime e, std::uint64_t window) { return e >= window ? e - window : 0; }

}  // namespace detail

// --- offline -----------------------------------------------------------------

inline PinTrace invert(const PinTrace& in, const std::string& out_id) {
  PinTrace out(out_id, !in.initial_level());
  for (const auto& tr : in.transitions()) out.drive(!tr.level, tr.at);
  return out;
}

/// One-tick pulse at every rising edge of `event` that saw `gate` HIGH
/// somewhere in [edge - window, edge].
inline PinTrace gated_event(const PinTrace& event, const PinTrace& gate, std::uint64_t window_ms,
                            const std::string& out_id) {
  PinTrace out(out_id, Level::Low);
  for (SimTime e : detail::rising_edges(event)) {
    if (!detail::high_somewhere(gate, detail::window_start(e, window_ms), e)) continue;
    out.drive(Level::High, e);
    out.drive(Level::Low, e + 1);
  }
  return out;
}

/// Output takes the input's level once the input has not changed for hold_ms.
inline PinTrace debounce(const PinTrace& in, std::uint64_t hold_ms, const std::string& out_id) {
  PinTrace out(out_id, in.initial_level());
  const auto& tr = in.transitions();
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const SimTime fire = tr[i].at + hold_ms;
    const SimTime next = i + 1 < tr.size() ? tr[i + 1].at : kForever;
    if (next > fire) out.drive(tr[i].level, fire);
  }
  return out;
}

/// HIGH while the input is HIGH and for ms after each rising edge.
inline PinTrace pulse_stretch(const PinTrace& in, std::uint64_t ms, const std::string& out_id) {
  std::vector<std::pair<SimTime, SimTime>> spans;  // [begin, end)
  std::optional<SimTime> start;
  if (in.initial_level() == Level::High) start = 0;
  for (const auto& tr : in.transitions()) {
    if (tr.level == Level::High) {
      start = tr.at;
      spans.push_back({tr.at, tr.at + ms});
    } else if (start) {
      spans.push_back({*start, tr.at});
      start.reset();
    }
  }
  if (start) spans.push_back({*start, kForever});
  std::sort(spans.begin(), spans.end());

  std::vector<std::pair<SimTime, SimTime>> merged;
  for (const auto& s : spans) {
    if (s.first == s.second) continue;
    if (!merged.empty() && s.first <= merged.back().second) merged.back().second = std::max(merged.back().second, s.second);
    else merged.push_back(s);
  }

  PinTrace out(out_id, in.initial_level());
  // an input that starts HIGH but drops at 0 leaves nothing covering t = 0
  if (merged.empty() || merged.front().first != 0) out.drive(Level::Low, 0);
  for (const auto& [b, e] : merged) {
    out.drive(Level::High, b);
    if (e != kForever) out.drive(Level::Low, e);
  }
  return out;
}

/// LOW initially; HIGH from a set edge, LOW from a reset edge; reset wins ties.
inline PinTrace sr_latch(const PinTrace& set, const PinTrace& reset, const std::string& out_id) {
  PinTrace out(out_id, Level::Low);
  const auto s = detail::rising_edges(set), r = detail::rising_edges(reset);
  std::size_t i = 0, j = 0;
  while (i < s.size() || j < r.size()) {
    const SimTime t = std::min(i < s.size() ? s[i] : kForever, j < r.size() ? r[j] : kForever);
    const bool is_set = i < s.size() && s[i] == t, is_reset = j < r.size() && r[j] == t;
    out.drive(is_reset ? Level::Low : Level::High, t);
    i += is_set;
    j += is_reset;
  }
  return out;
}

// --- online --------------------------------------------------------------------

namespace detail {

/// Reads a source line's transitions incrementally.
class Cursor {
 public:
  explicit Cursor(std::string id) : id_(std::move(id)) {}
  const std::string& id() const noexcept { return id_; }
  std::optional<Transition> peek(const Bus& bus, SimTime t) const {
    const auto& tr = bus.line(id_).transitions();
    if (i_ < tr.size() && tr[i_].at <= t) return tr[i_];
    return std::nullopt;
  }
  void pop() { ++i_; }

 private:
  std::string id_;
  std::size_t i_ = 0;
};

inline void ensure_line(Bus& bus, const std::string& id, Level initial) {
  if (bus.has_line(id)) throw Error(Errc::LineConflict, "composite output '" + id + "' already exists");
  bus.add_line(id, initial);
}

}  // namespace detail

class InvertProcessor final : public LineProcessor {
 public:
  InvertProcessor(Bus& bus, std::string in, std::string out) : in_(std::move(in)), out_(std::move(out)) {
    detail::ensure_line(bus, out_, !bus.line(in_.id()).initial_level());
  }
  void advance_to(Bus& bus, SimTime t) override {
    while (auto tr = in_.peek(bus, t)) {
      bus.drive_virtual(out_, !tr->level, tr->at);
      in_.pop();
    }
  }

 private:
  detail::Cursor in_;
  std::string out_;
};

class GatedEventProcessor final : public LineProcessor {
 public:
  GatedEventProcessor(Bus& bus, std::string event, std::string gate, std::uint64_t window_ms, std::string out)
      : event_(std::move(event)), gate_(std::move(gate)), window_(window_ms), out_(std::move(out)) {
    bus.line(gate_);
    detail::ensure_line(bus, out_, Level::Low);
  }
  void advance_to(Bus& bus, SimTime t) override {
    while (auto tr = event_.peek(bus, t)) {
      flush(bus, tr->at);
      if (tr->level == Level::High &&
          detail::high_somewhere(bus.line(gate_), detail::window_start(tr->at, window_), tr->at)) {
        bus.drive_virtual(out_, Level::High, tr->at);
        fall_ = tr->at + 1;
      }
      event_.pop();
    }
    flush(bus, t);
  }

 private:
  void flush(Bus& bus, SimTime t) {
    if (fall_ && *fall_ <= t) {
      bus.drive_virtual(out_, Level::Low, *fall_);
      fall_.reset();
    }
  }

  detail::Cursor event_;
  std::string gate_;
  std::uint64_t window_;
  std::string out_;
  std::optional<SimTime> fall_;
};

class DebounceProcessor final : public LineProcessor {
 public:
  DebounceProcessor(Bus& bus, std::string in, std::uint64_t hold_ms, std::string out)
      : in_(std::move(in)), hold_(hold_ms), out_(std::move(out)) {
    detail::ensure_line(bus, out_, bus.line(in_.id()).initial_level());
  }
  void advance_to(Bus& bus, SimTime t) override {
    while (auto tr = in_.peek(bus, t)) {
      // A newer input change at or before the pending time cancels it.
      if (pending_ && pending_->at < tr->at) bus.drive_virtual(out_, pending_->level, pending_->at);
      pending_ = Transition{tr->at + hold_, tr->level};
      in_.pop();
    }
    if (pending_ && pending_->at <= t) {
      bus.drive_virtual(out_, pending_->level, pending_->at);
      pending_.reset();
    }
  }

 private:
  detail::Cursor in_;
  std::uint64_t hold_;
  std::string out_;
  std::optional<Transition> pending_;
};

class PulseStretchProcessor final : public LineProcessor {
 public:
  PulseStretchProcessor(Bus& bus, std::string in, std::uint64_t ms, std::string out)
      : in_(std::move(in)), ms_(ms), out_(std::move(out)) {
    level_ = bus.line(in_.id()).initial_level();
    detail::ensure_line(bus, out_, level_);
  }
  void advance_to(Bus& bus, SimTime t) override {
    for (;;) {
      const auto tr = in_.peek(bus, t);
      const bool expiry = expiry_pending_ && until_ <= t;
      if (!tr && !expiry) break;
      SimTime tau = tr ? tr->at : until_;
      if (expiry) tau = std::min(tau, until_);
      if (expiry && until_ == tau) expiry_pending_ = false;
      if (tr && tr->at == tau) {
        level_ = tr->level;
        if (level_ == Level::High) {
          until_ = tau + ms_;
          expiry_pending_ = ms_ > 0;
        }
        in_.pop();
      }
      bus.drive_virtual(out_, to_level(level_ == Level::High || tau < until_), tau);
    }
  }

 private:
  detail::Cursor in_;
  std::uint64_t ms_;
  std::string out_;
  Level level_ = Level::Low;
  SimTime until_ = 0;
  bool expiry_pending_ = false;
};

class SrLatchProcessor final : public LineProcessor {
 public:
  SrLatchProcessor(Bus& bus, std::string set, std::string reset, std::string out)
      : set_(std::move(set)), reset_(std::move(reset)), out_(std::move(out)) {
    bus.line(set_.id());
    bus.line(reset_.id());
    detail::ensure_line(bus, out_, Level::Low);
  }
  void advance_to(Bus& bus, SimTime t) override {
    for (;;) {
      const auto s = set_.peek(bus, t), r = reset_.peek(bus, t);
      if (!s && !r) break;
      const SimTime tau = std::min(s ? s->at : kForever, r ? r->at : kForever);
      const bool is_set = s && s->at == tau && s->level == Level::High;
      const bool is_reset = r && r->at == tau && r->level == Level::High;
      if (is_reset) bus.drive_virtual(out_, Level::Low, tau);
      else if (is_set) bus.drive_virtual(out_, Level::High, tau);
      if (s && s->at == tau) set_.pop();
      if (r && r->at == tau) reset_.pop();
    }
  }

 private:
  detail::Cursor set_, reset_;
  std::string out_;
};

// --- declarative composites ----------------------------------------------------

/// One combinator application, as written in a scenario file.
struct CompositeSpec {
  std::string op;  // invert | gated_event | debounce | pulse_stretch | sr_latch
  std::vector<std::string> inputs;
  std::string output;
  std::uint64_t param_ms = 0;

  friend bool operator==(const CompositeSpec&, const CompositeSpec&) = default;
};

inline std::size_t composite_arity(const std::string& op) {
  if (op == "invert" || op == "debounce" || op == "pulse_stretch") return 1;
  if (op == "gated_event" || op == "sr_latch") return 2;
  throw Error(Errc::InvalidArgument, "unknown combinator '" + op + "'");
}

inline void add_composite(Bus& bus, const CompositeSpec& c) {
  if (c.inputs.size() != composite_arity(c.op))
    throw Error(Errc::InvalidArgument, c.op + " takes " + std::to_string(composite_arity(c.op)) + " inputs");
  for (const auto& in : c.inputs) bus.line(in);
  std::unique_ptr<LineProcessor> p;
  if (c.op == "invert") p = std::make_unique<InvertProcessor>(bus, c.inputs[0], c.output);
  else if (c.op == "debounce") p = std::make_unique<DebounceProcessor>(bus, c.inputs[0], c.param_ms, c.output);
  else if (c.op == "pulse_stretch") p = std::make_unique<PulseStretchProcessor>(bus, c.inputs[0], c.param_ms, c.output);
  else if (c.op == "gated_event")
    p = std::make_unique<GatedEventProcessor>(bus, c.inputs[0], c.inputs[1], c.param_ms, c.output);
  else p = std::make_unique<SrLatchProcessor>(bus, c.inputs[0], c.inputs[1], c.output);
  bus.add_processor(std::move(p));
}

/// Offline evaluation of the same spec over recorded traces.
inline PinTrace evaluate_composite(const CompositeSpec& c, const std::map<std::string, PinTrace>& lines) {
  if (c.inputs.size() != composite_arity(c.op))
    throw Error(Errc::InvalidArgument, c.op + " takes " + std::to_string(composite_arity(c.op)) + " inputs");
  auto in = [&](std::size_t i) -> const PinTrace& {
    auto it = lines.find(c.inputs[i]);
    if (it == lines.end()) throw Error(Errc::UnknownLine, "no line '" + c.inputs[i] + "'");
    return it->second;
  };
  if (c.op == "invert") return invert(in(0), c.output);
  if (c.op == "debounce") return debounce(in(0), c.param_ms, c.output);
  if (c.op == "pulse_stretch") return pulse_stretch(in(0), c.param_ms, c.output);
  if (c.op == "gated_event") return gated_event(in(0), in(1), c.param_ms, c.output);
  return sr_latch(in(0), in(1), c.output);
}

/// The light switch: "on" while looked at sets LIGHT_ON, "off" while looked
/// at clears it. Output and helper lines carry `prefix`.
inline std::vector<CompositeSpec> gaze_voice_specs(const std::string& state_line, const std::string& gaze_line,
                                                   std::uint64_t window_ms = kDefaultGazeWindowMs,
                                                   const std::string& prefix = "") {
  return {
      {"invert", {state_line}, prefix + "STATE_N", 0},
      {"gated_event", {state_line, gaze_line}, prefix + "ON_CMD", window_ms},
      {"gated_event", {prefix + "STATE_N", gaze_line}, prefix + "OFF_CMD", window_ms},
      {"sr_latch", {prefix + "ON_CMD", prefix + "OFF_CMD"}, prefix + "LIGHT_ON", 0},
  };
}

/// Wires the composite onto a bus holding a powered gaze detector and a
/// powered pin-mode voice sensor. Returns the LIGHT_ON line id.
inline std::string gaze_voice_demo(Bus& bus, const PoweredDevice& gaze, const PoweredDevice& voice,
                                   std::uint64_t window_ms = kDefaultGazeWindowMs, const std::string& prefix = "") {
  if (gaze->kind() != SensorKind::Gaze || !gaze->powered())
    throw Error(Errc::InvalidArgument, "first device must be a powered gaze detector");
  if (voice->kind() != SensorKind::Voice || !voice.wiring.count("STATE") || !voice->powered())
    throw Error(Errc::InvalidArgument, "second device must be a powered pin-mode voice sensor");
  for (const auto& c : gaze_voice_specs(voice.wiring.at("STATE"), gaze.wiring.at("DETECT"), window_ms, prefix))
    add_composite(bus, c);
  return prefix + "LIGHT_ON";
}

}  // namespace mlsensor
