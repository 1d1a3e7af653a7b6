#pragma once

// Discrete-time virtual hardware: logic lines with recorded traces, an
// atomic I2C transaction channel, and a 1 ms simulation clock.

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "mlsensor/error.hpp"

namespace mlsensor {

/// Milliseconds since power-on.
using SimTime = std::uint64_t;

enum class Level : std::uint8_t { Low = 0, High = 1 };

constexpr Level operator!(Level l) noexcept { return l == Level::High ? Level::Low : Level::High; }
constexpr Level to_level(bool b) noexcept { return b ? Level::High : Level::Low; }
constexpr int to_bit(Level l) noexcept { return l == Level::High ? 1 : 0; }

struct Transition {
  SimTime at = 0;
  Level level = Level::Low;

  friend bool operator==(const Transition&, const Transition&) = default;
};

/// Time-ordered record of a single logic line. Transitions are strictly
/// increasing in time and alternate in level.
class PinTrace {
 public:
  PinTrace() = default;
  explicit PinTrace(std::string line_id, Level initial = Level::Low)
      : line_id_(std::move(line_id)), initial_(initial) {}

  const std::string& line_id() const noexcept { return line_id_; }
  Level initial_level() const noexcept { return initial_; }
  const std::vector<Transition>& transitions() const noexcept { return transitions_; }

  Level current_level() const noexcept {
    return transitions_.empty() ? initial_ : transitions_.back().level;
  }

  std::optional<SimTime> last_change() const noexcept {
    if (transitions_.empty()) return std::nullopt;
    return transitions_.back().at;
  }

  /// Level in force at t: last transition at or before t, else the initial level.
  Level level_at(SimTime t) const noexcept {
    auto it = std::upper_bound(transitions_.begin(), transitions_.end(), t,
                               [](SimTime v, const Transition& tr) { return v < tr.at; });
    if (it == transitions_.begin()) return initial_;
    return std::prev(it)->level;
  }

  /// Appends a transition unless the line already sits at `level`.
  /// Returns whether the trace changed.
  bool drive(Level level, SimTime at) {
    if (level == current_level()) return false;
    if (!transitions_.empty() && at <= transitions_.back().at) {
      throw Error(at < transitions_.back().at ? Errc::TimeTravel : Errc::InvalidArgument,
                  "line '" + line_id_ + "': transition at " + std::to_string(at) +
                      (at < transitions_.back().at ? " precedes" : " coincides with") +
                      " the previous transition at " + std::to_string(transitions_.back().at));
    }
    transitions_.push_back({at, level});
    return true;
  }

  friend bool operator==(const PinTrace&, const PinTrace&) = default;

 private:
  std::string line_id_;
  Level initial_ = Level::Low;
  std::vector<Transition> transitions_;
};

/// Half-open [begin, end). open_ended marks a HIGH level still in force at run end.
struct Interval {
  SimTime begin = 0;
  SimTime end = 0;
  bool open_ended = false;

  SimTime length() const noexcept { return end - begin; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

inline std::vector<Interval> high_intervals(const PinTrace& trace, SimTime run_end) {
  std::vector<Interval> out;
  bool high = trace.initial_level() == Level::High;
  SimTime start = 0;
  for (const auto& tr : trace.transitions()) {
    if (tr.at >= run_end) break;
    if (tr.level == Level::High) {
      high = true;
      start = tr.at;
    } else if (high) {
      out.push_back({start, tr.at, false});
      high = false;
    }
  }
  if (high && start < run_end) out.push_back({start, run_end, true});
  return out;
}

inline std::vector<Interval> high_intervals(const PinTrace& trace) {
  const SimTime end = trace.last_change().value_or(0);
  return high_intervals(trace, end + 1);
}

// --- I2C --------------------------------------------------------------------

enum class I2CDirection : std::uint8_t { Read, Write };
enum class I2CStatus : std::uint8_t { Ack, Nack };

constexpr std::uint8_t kI2CAddressMin = 0x08;
constexpr std::uint8_t kI2CAddressMax = 0x77;

constexpr bool valid_i2c_address(unsigned address) noexcept {
  return address >= kI2CAddressMin && address <= kI2CAddressMax;
}

struct I2CTransaction {
  SimTime at = 0;
  std::uint8_t address = 0;
  I2CDirection direction = I2CDirection::Read;
  std::vector<std::uint8_t> payload;
  I2CStatus status = I2CStatus::Nack;

  friend bool operator==(const I2CTransaction&, const I2CTransaction&) = default;
};

inline std::string hex_bytes(std::span<const std::uint8_t> bytes) {
  std::ostringstream os;
  os << std::hex << std::uppercase << std::setfill('0');
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    if (i) os << ' ';
    os << std::setw(2) << static_cast<int>(bytes[i]);
  }
  return os.str();
}

inline std::string hex_address(unsigned address) {
  std::ostringstream os;
  os << "0x" << std::hex << std::uppercase << std::setfill('0') << std::setw(2) << address;
  return os.str();
}

// --- exposure ---------------------------------------------------------------

enum class ChannelKind : std::uint8_t { Pin, Serial };

/// One host-observable emission crossing a device boundary.
struct ExposureRecord {
  SimTime at = 0;
  ChannelKind channel = ChannelKind::Pin;
  std::string pin;      // device-side pin name (PIN records)
  std::string line_id;  // bus line the pin drives (PIN records)
  std::uint8_t address = 0;  // SERIAL records
  std::size_t bits = 0;

  friend bool operator==(const ExposureRecord&, const ExposureRecord&) = default;
};

// --- devices and processors as seen by the bus -------------------------------

class Bus;

/// The only handle a device gets on the outside world while stepping.
class DevicePort {
 public:
  DevicePort(Bus& bus, std::size_t device_index) : bus_(bus), index_(device_index) {}

  SimTime now() const noexcept;
  /// Drives the line wired to `pin`; no-op if already at `level`.
  void drive(const std::string& pin, Level level);
  /// Device-initiated serial transmission. Logged and exposed like any other
  /// serial traffic; shipped devices never call it.
  void serial_write(std::uint8_t address, std::span<const std::uint8_t> bytes);

 private:
  Bus& bus_;
  std::size_t index_;
};

class BusDevice {
 public:
  virtual ~BusDevice() = default;

  /// Absolute time of the next step; called after attach and after each step.
  virtual SimTime next_wakeup() const = 0;
  virtual void step(DevicePort& port) = 0;
  virtual void on_attach(SimTime now) = 0;

  virtual std::vector<std::uint8_t> serial_read(std::size_t n, SimTime now) {
    (void)now;
    return std::vector<std::uint8_t>(n, 0xFF);
  }
  virtual void serial_write(std::span<const std::uint8_t> bytes, SimTime now) {
    (void)bytes;
    (void)now;
  }
};

/// Online trace transform evaluated by the bus after every event time.
class LineProcessor {
 public:
  virtual ~LineProcessor() = default;
  /// Consume source transitions up to and including t; emit outputs at times <= t.
  virtual void advance_to(Bus& bus, SimTime t) = 0;
};

struct DeviceBinding {
  std::map<std::string, std::string> pin_to_line;  // SIGNAL_OUT pins only
  std::optional<std::uint8_t> serial_address;
};

struct LineTransition {
  SimTime at = 0;
  std::string line_id;
  Level level = Level::Low;

  friend bool operator==(const LineTransition&, const LineTransition&) = default;
};

/// Owns lines, attached devices and online processors. Single-threaded.
class Bus {
 public:
  using DeviceId = std::size_t;

  SimTime clock() const noexcept { return clock_; }

  PinTrace& add_line(const std::string& line_id, Level initial = Level::Low) {
    if (lines_.count(line_id)) throw Error(Errc::LineConflict, "line '" + line_id + "' already exists");
    return lines_.emplace(line_id, PinTrace(line_id, initial)).first->second;
  }

  bool has_line(const std::string& line_id) const { return lines_.count(line_id) != 0; }

  const PinTrace& line(const std::string& line_id) const {
    auto it = lines_.find(line_id);
    if (it == lines_.end()) throw Error(Errc::UnknownLine, "no line '" + line_id + "'");
    return it->second;
  }

  const std::map<std::string, PinTrace>& lines() const noexcept { return lines_; }

  /// Host-side drive of an undriven line.
  bool drive(const std::string& line_id, Level level, SimTime at) {
    auto it = lines_.find(line_id);
    if (it == lines_.end()) throw Error(Errc::UnknownLine, "no line '" + line_id + "'");
    if (at < clock_) throw Error(Errc::TimeTravel, "time travel: drive at " + std::to_string(at) +
                                                       " before clock " + std::to_string(clock_));
    if (line_owner_.count(line_id))
      throw Error(Errc::LineConflict, "line '" + line_id + "' is driven by a device");
    return it->second.drive(level, at);
  }

  /// Writes to a processor-owned line; times may lag the clock but never the line.
  bool drive_virtual(const std::string& line_id, Level level, SimTime at) {
    auto it = lines_.find(line_id);
    if (it == lines_.end()) throw Error(Errc::UnknownLine, "no line '" + line_id + "'");
    return it->second.drive(level, at);
  }

  DeviceId attach(std::unique_ptr<BusDevice> device, DeviceBinding binding) {
    if (binding.serial_address) {
      const auto addr = *binding.serial_address;
      if (!valid_i2c_address(addr))
        throw Error(Errc::InvalidArgument, "I2C address " + hex_address(addr) + " outside [0x08, 0x77]");
      if (responders_.count(addr))
        throw Error(Errc::AddressConflict, "I2C address " + hex_address(addr) + " already occupied");
    }
    for (const auto& [pin, line_id] : binding.pin_to_line) {
      if (line_owner_.count(line_id))
        throw Error(Errc::LineConflict, "line '" + line_id + "' already driven by another device");
    }
    const DeviceId id = devices_.size();
    for (const auto& [pin, line_id] : binding.pin_to_line) {
      if (!lines_.count(line_id)) add_line(line_id, Level::Low);
      line_owner_[line_id] = id;
    }
    if (binding.serial_address) responders_[*binding.serial_address] = id;
    device->on_attach(clock_);
    devices_.push_back(Attached{std::move(device), std::move(binding), {}});
    return id;
  }

  std::size_t device_count() const noexcept { return devices_.size(); }
  BusDevice& device(DeviceId id) { return *devices_.at(id).device; }
  const DeviceBinding& binding(DeviceId id) const { return devices_.at(id).binding; }
  const std::vector<ExposureRecord>& exposure_log(DeviceId id) const { return devices_.at(id).exposure; }

  void add_processor(std::unique_ptr<LineProcessor> p) {
    p->advance_to(*this, clock_);
    processors_.push_back(std::move(p));
  }

  /// Moves the clock forward by dt, stepping devices at their declared wakeups
  /// (ties resolved in attach order). Returns transitions in (old, new] ordered
  /// by (time, line_id).
  std::vector<LineTransition> advance(SimTime dt) {
    if (dt < 1) throw Error(Errc::InvalidArgument, "dt must be >= 1");
    const SimTime start = clock_;
    const SimTime target = clock_ + dt;
    for (;;) {
      std::optional<SimTime> next;
      for (const auto& d : devices_) {
        const SimTime w = d.device->next_wakeup();
        if (w > clock_ && w <= target && (!next || w < *next)) next = w;
      }
      if (!next) break;
      clock_ = *next;
      for (std::size_t i = 0; i < devices_.size(); ++i) {
        // A device may need several steps at one instant only if it asks for it.
        while (devices_[i].device->next_wakeup() == clock_) {
          DevicePort port(*this, i);
          devices_[i].device->step(port);
        }
      }
      run_processors();
    }
    clock_ = target;
    run_processors();
    return transitions_between(start, target);
  }

  std::vector<LineTransition> transitions_between(SimTime after, SimTime upto) const {
    std::vector<LineTransition> out;
    for (const auto& [id, trace] : lines_) {
      for (const auto& tr : trace.transitions()) {
        if (tr.at > after && tr.at <= upto) out.push_back({tr.at, id, tr.level});
      }
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      return std::tie(a.at, a.line_id) < std::tie(b.at, b.line_id);
    });
    return out;
  }

  I2CTransaction i2c_read(std::uint8_t address, std::size_t n) {
    check_address(address);
    I2CTransaction tx{clock_, address, I2CDirection::Read, {}, I2CStatus::Nack};
    auto it = responders_.find(address);
    if (it != responders_.end()) {
      auto& dev = devices_[it->second];
      tx.payload = dev.device->serial_read(n, clock_);
      tx.payload.resize(n, 0xFF);
      tx.status = I2CStatus::Ack;
      if (n > 0) {
        dev.exposure.push_back({clock_, ChannelKind::Serial, {}, {}, address, 8 * n});
      }
    }
    i2c_log_.push_back(tx);
    return tx;
  }

  I2CTransaction i2c_write(std::uint8_t address, std::span<const std::uint8_t> bytes) {
    check_address(address);
    I2CTransaction tx{clock_, address, I2CDirection::Write, {}, I2CStatus::Nack};
    auto it = responders_.find(address);
    if (it != responders_.end()) {
      devices_[it->second].device->serial_write(bytes, clock_);
      tx.payload.assign(bytes.begin(), bytes.end());
      tx.status = I2CStatus::Ack;
    }
    i2c_log_.push_back(tx);
    return tx;
  }

  I2CTransaction i2c_transfer(std::uint8_t address, I2CDirection direction, std::size_t n,
                              std::span<const std::uint8_t> bytes = {}) {
    return direction == I2CDirection::Read ? i2c_read(address, n) : i2c_write(address, bytes);
  }

  const std::vector<I2CTransaction>& i2c_log() const noexcept { return i2c_log_; }

 private:
  static void check_address(std::uint8_t address) {
    if (!valid_i2c_address(address))
      throw Error(Errc::InvalidArgument, "I2C address " + hex_address(address) + " outside [0x08, 0x77]");
  }

  friend class DevicePort;

  struct Attached {
    std::unique_ptr<BusDevice> device;
    DeviceBinding binding;
    std::vector<ExposureRecord> exposure;
  };

  void run_processors() {
    for (auto& p : processors_) p->advance_to(*this, clock_);
  }

  void device_drive(std::size_t index, const std::string& pin, Level level) {
    auto& dev = devices_[index];
    auto it = dev.binding.pin_to_line.find(pin);
    if (it == dev.binding.pin_to_line.end())
      throw Error(Errc::MissingPin, "device drives unwired pin '" + pin + "'");
    if (lines_.at(it->second).drive(level, clock_)) {
      dev.exposure.push_back({clock_, ChannelKind::Pin, pin, it->second, 0, 1});
    }
  }

  void device_serial_write(std::size_t index, std::uint8_t address, std::span<const std::uint8_t> bytes) {
    auto& dev = devices_[index];
    i2c_log_.push_back({clock_, address, I2CDirection::Write, {bytes.begin(), bytes.end()}, I2CStatus::Ack});
    dev.exposure.push_back({clock_, ChannelKind::Serial, {}, {}, address, 8 * bytes.size()});
  }

  SimTime clock_ = 0;
  std::map<std::string, PinTrace> lines_;
  std::map<std::string, DeviceId> line_owner_;
  std::map<std::uint8_t, DeviceId> responders_;
  std::vector<Attached> devices_;
  std::vector<std::unique_ptr<LineProcessor>> processors_;
  std::vector<I2CTransaction> i2c_log_;
};

inline SimTime DevicePort::now() const noexcept { return bus_.clock(); }

inline void DevicePort::drive(const std::string& pin, Level level) { bus_.device_drive(index_, pin, level); }

inline void DevicePort::serial_write(std::uint8_t address, std::span<const std::uint8_t> bytes) {
  bus_.device_serial_write(index_, address, bytes);
}

// --- dumps ------------------------------------------------------------------

/// `time_ms,line_id,level`, rows sorted by (time_ms, line_id). Initial levels
/// are emitted as time-0 rows so the file alone reconstructs every trace.
inline void write_trace_csv(std::ostream& os, const std::map<std::string, PinTrace>& lines) {
  struct Row {
    SimTime at;
    std::string id;
    int level;
  };
  std::vector<Row> rows;
  for (const auto& [id, trace] : lines) {
    const bool has_t0 = !trace.transitions().empty() && trace.transitions().front().at == 0;
    if (!has_t0) rows.push_back({0, id, to_bit(trace.initial_level())});
    for (const auto& tr : trace.transitions()) rows.push_back({tr.at, id, to_bit(tr.level)});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return std::tie(a.at, a.id) < std::tie(b.at, b.id); });
  os << "time_ms,line_id,level\n";
  for (const auto& r : rows) os << r.at << ',' << r.id << ',' << r.level << '\n';
}

inline void write_i2c_csv(std::ostream& os, std::span<const I2CTransaction> log) {
  os << "time_ms,address,direction,status,payload\n";
  for (const auto& tx : log) {
    os << tx.at << ',' << hex_address(tx.address) << ','
       << (tx.direction == I2CDirection::Read ? "READ" : "WRITE") << ','
       << (tx.status == I2CStatus::Ack ? "ACK" : "NACK") << ',' << hex_bytes(tx.payload) << '\n';
  }
}

}  // namespace mlsensor
