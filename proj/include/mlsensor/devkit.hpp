#pragma once

// Sensor-device framework: interface declarations, parameter blobs, the power
// lifecycle, the private stimulus channel, and the exposure audit.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <boost/crc.hpp>

#include "mlsensor/error.hpp"
#include "mlsensor/stimuli/audio.hpp"
#include "mlsensor/stimuli/frame.hpp"
#include "mlsensor/stimuli/imu.hpp"
#include "mlsensor/vbus.hpp"

namespace mlsensor {

// --- kinds ------------------------------------------------------------------

enum class SensorKind : std::uint8_t { Person = 1, Gaze = 2, Tap = 3, Voice = 4, TextReader = 5 };

inline constexpr std::string_view to_string(SensorKind k) noexcept {
  switch (k) {
    case SensorKind::Person: return "PERSON";
    case SensorKind::Gaze: return "GAZE";
    case SensorKind::Tap: return "TAP";
    case SensorKind::Voice: return "VOICE";
    case SensorKind::TextReader: return "TEXT_READER";
  }
  return "UNKNOWN";
}

inline SensorKind parse_sensor_kind(std::string_view s) {
  for (auto k : {SensorKind::Person, SensorKind::Gaze, SensorKind::Tap, SensorKind::Voice, SensorKind::TextReader})
    if (to_string(k) == s) return k;
  throw Error(Errc::InvalidArgument, "unknown sensor kind '" + std::string(s) + "'");
}

// --- interface declaration ---------------------------------------------------

enum class PinRole : std::uint8_t { Power, Ground, SignalOut };

inline constexpr std::string_view to_string(PinRole r) noexcept {
  switch (r) {
    case PinRole::Power: return "POWER";
    case PinRole::Ground: return "GROUND";
    case PinRole::SignalOut: return "SIGNAL_OUT";
  }
  return "UNKNOWN";
}

inline PinRole parse_pin_role(std::string_view s) {
  for (auto r : {PinRole::Power, PinRole::Ground, PinRole::SignalOut})
    if (to_string(r) == s) return r;
  throw Error(Errc::InvalidArgument, "unknown pin role '" + std::string(s) + "'");
}

struct PinDecl {
  std::string name;
  PinRole role = PinRole::SignalOut;

  friend bool operator==(const PinDecl&, const PinDecl&) = default;
};

struct SerialDecl {
  std::uint8_t address = 0;
  std::size_t register_map_len = 0;
  std::string packet_spec_id;

  friend bool operator==(const SerialDecl&, const SerialDecl&) = default;
};

struct InterfaceDecl {
  std::vector<PinDecl> pins;
  std::optional<SerialDecl> serial;
  std::string declared_outputs;

  void validate() const {
    std::set<std::string> names;
    for (const auto& p : pins)
      if (!names.insert(p.name).second) throw Error(Errc::InvalidArgument, "duplicate pin '" + p.name + "'");
    if (declared_outputs.empty()) throw Error(Errc::InvalidArgument, "declared_outputs is empty");
    if (serial && !valid_i2c_address(serial->address))
      throw Error(Errc::InvalidArgument, "serial address outside [0x08, 0x77]");
  }

  std::vector<std::string> signal_pins() const {
    std::vector<std::string> out;
    for (const auto& p : pins)
      if (p.role == PinRole::SignalOut) out.push_back(p.name);
    return out;
  }

  /// Equality of pins, roles and serial packet layout; the configured address
  /// is installation detail and does not change the shape.
  bool same_shape(const InterfaceDecl& o) const {
    if (pins != o.pins || serial.has_value() != o.serial.has_value()) return false;
    if (serial && (serial->register_map_len != o.serial->register_map_len ||
                   serial->packet_spec_id != o.serial->packet_spec_id))
      return false;
    return true;
  }

  friend bool operator==(const InterfaceDecl&, const InterfaceDecl&) = default;
};

// --- parameter blobs ---------------------------------------------------------

/// "MLSP" | version u8 | kind u8 | payload_len u32le | payload | crc32 u32le.
/// The payload is a sequence of little-endian IEEE doubles and nothing else.
class ParameterBlob {
 public:
  static constexpr std::uint8_t kVersion = 1;
  static constexpr std::size_t kHeaderLen = 10;

  ParameterBlob() = default;
  explicit ParameterBlob(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}

  static ParameterBlob encode(SensorKind kind, std::span<const double> values) {
    std::vector<std::uint8_t> b{'M', 'L', 'S', 'P', kVersion, static_cast<std::uint8_t>(kind)};
    put_u32(b, static_cast<std::uint32_t>(values.size() * 8));
    for (double v : values) {
      if (!std::isfinite(v)) throw Error(Errc::InvalidArgument, "parameter values must be finite");
      const auto bits = std::bit_cast<std::uint64_t>(v);
      for (int i = 0; i < 8; ++i) b.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
    put_u32(b, crc32(b));
    return ParameterBlob(std::move(b));
  }

  const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }

  /// Checks framing, CRC and kind, and returns the parameter values.
  std::vector<double> decode(SensorKind expected) const {
    if (bytes_.size() < kHeaderLen + 4) throw Error(Errc::MalformedBlob, "blob shorter than header + crc");
    if (std::memcmp(bytes_.data(), "MLSP", 4) != 0) throw Error(Errc::BadMagic, "blob magic is not MLSP");
    const std::uint32_t len = get_u32(6);
    if (bytes_.size() != kHeaderLen + static_cast<std::size_t>(len) + 4)
      throw Error(Errc::MalformedBlob, "payload_len disagrees with blob size");
    const std::uint32_t stored = get_u32(kHeaderLen + len);
    if (stored != crc32(std::span(bytes_).first(kHeaderLen + len)))
      throw Error(Errc::BadCrc, "blob checksum mismatch");
    if (bytes_[4] != kVersion) throw Error(Errc::MalformedBlob, "unsupported blob version " + std::to_string(bytes_[4]));
    if (bytes_[5] != static_cast<std::uint8_t>(expected))
      throw Error(Errc::KindMismatch, "blob kind " + std::to_string(bytes_[5]) + " does not match device kind " +
                                          std::string(to_string(expected)));
    if (len % 8 != 0) throw Error(Errc::MalformedBlob, "payload is not a whole number of doubles");
    std::vector<double> out;
    for (std::size_t off = kHeaderLen; off < kHeaderLen + len; off += 8) {
      std::uint64_t bits = 0;
      for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes_[off + i]) << (8 * i);
      const double v = std::bit_cast<double>(bits);
      if (!std::isfinite(v)) throw Error(Errc::MalformedBlob, "non-finite parameter value");
      out.push_back(v);
    }
    return out;
  }

  static std::uint32_t crc32(std::span<const std::uint8_t> data) {
    boost::crc_32_type crc;
    crc.process_bytes(data.data(), data.size());
    return crc.checksum();
  }

  friend bool operator==(const ParameterBlob&, const ParameterBlob&) = default;

 private:
  static void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::uint32_t get_u32(std::size_t off) const {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[off + i]) << (8 * i);
    return v;
  }

  std::vector<std::uint8_t> bytes_;
};

// --- stimuli and devices -----------------------------------------------------

using Stimulus = std::variant<Frame, ImuWindow, FeatureWindow>;

inline std::string_view modality_name(const Stimulus& s) {
  static constexpr std::string_view names[] = {"frame", "imu", "audio"};
  return names[s.index()];
}

/// A powered ML sensor. Stimuli go in through feed_stimulus and stay inside:
/// there is deliberately no accessor for them, nor for detector state.
class SensorDevice : public BusDevice {
 public:
  SensorKind kind() const noexcept { return kind_; }
  const InterfaceDecl& declared_surface() const noexcept { return decl_; }
  std::uint64_t cadence_ms() const noexcept { return cadence_ms_; }
  bool powered() const noexcept { return powered_; }

  /// Calibration upload; allowed only before power-on.
  void load_parameters(const ParameterBlob& blob) {
    if (powered_) throw Error(Errc::Powered, "parameters are frozen once the device is powered");
    apply_parameters(blob.decode(kind_));
  }

  void feed_stimulus(Stimulus s, SimTime at) {
    if (!accepts(s))
      throw Error(Errc::ModalityMismatch, std::string(modality_name(s)) + " stimulus cannot drive a " +
                                              std::string(to_string(kind_)) + " device");
    enqueue(std::move(s), at);
  }

  /// Timing constants a datasheet must repeat (cadence_ms, pulse_ms, ...).
  virtual std::map<std::string, std::uint64_t> timing_constants() const { return {{"cadence_ms", cadence_ms_}}; }

  SimTime next_wakeup() const override { return next_; }

  void on_attach(SimTime now) final {
    powered_ = true;
    next_ = now + cadence_ms_;
    on_power(now);
  }

 protected:
  SensorDevice(SensorKind kind, InterfaceDecl decl, std::uint64_t cadence_ms)
      : kind_(kind), decl_(std::move(decl)), cadence_ms_(cadence_ms) {
    decl_.validate();
    if (cadence_ms_ < 1) throw Error(Errc::InvalidArgument, "cadence must be >= 1 ms");
  }

  virtual void apply_parameters(const std::vector<double>& values) = 0;
  virtual bool accepts(const Stimulus& s) const = 0;
  virtual void enqueue(Stimulus s, SimTime at) = 0;
  virtual void on_power(SimTime) {}

  void schedule(SimTime t) { next_ = t; }

 private:
  SensorKind kind_;
  InterfaceDecl decl_;
  std::uint64_t cadence_ms_;
  bool powered_ = false;
  SimTime next_ = 0;
};

/// Handle returned by power_on; the bus owns the device.
struct PoweredDevice {
  SensorDevice* device = nullptr;
  Bus::DeviceId id = 0;
  std::map<std::string, std::string> wiring;

  SensorDevice& operator*() const { return *device; }
  SensorDevice* operator->() const { return device; }
};

/// Attaches a device. `wiring` maps every declared pin to a bus line; power and
/// ground entries are recorded but create no lines.
inline PoweredDevice power_on(std::unique_ptr<SensorDevice> device, Bus& bus,
                              const std::map<std::string, std::string>& wiring) {
  if (!device) throw Error(Errc::InvalidArgument, "null device");
  if (device->powered()) throw Error(Errc::Powered, "device is already powered");
  const auto& decl = device->declared_surface();
  DeviceBinding binding;
  for (const auto& p : decl.pins) {
    auto it = wiring.find(p.name);
    if (it == wiring.end()) throw Error(Errc::MissingPin, "wiring has no entry for pin '" + p.name + "'");
    if (p.role == PinRole::SignalOut) binding.pin_to_line[p.name] = it->second;
  }
  for (const auto& [pin, line] : wiring) {
    const bool known = std::any_of(decl.pins.begin(), decl.pins.end(), [&](const auto& p) { return p.name == pin; });
    if (!known) throw Error(Errc::InvalidArgument, "wiring names undeclared pin '" + pin + "'");
  }
  if (decl.serial) binding.serial_address = decl.serial->address;
  SensorDevice* raw = device.get();
  const auto id = bus.attach(std::move(device), std::move(binding));
  return {raw, id, wiring};
}

// --- audit -------------------------------------------------------------------

enum class FindingCode : std::uint8_t {
  UndeclaredChannel,
  OversizedPayload,
  PinoutMismatch,
  TimingMismatch,
  UndisclosedExposure,
};

inline constexpr std::string_view to_string(FindingCode c) noexcept {
  switch (c) {
    case FindingCode::UndeclaredChannel: return "UNDECLARED_CHANNEL";
    case FindingCode::OversizedPayload: return "OVERSIZED_PAYLOAD";
    case FindingCode::PinoutMismatch: return "PINOUT_MISMATCH";
    case FindingCode::TimingMismatch: return "TIMING_MISMATCH";
    case FindingCode::UndisclosedExposure: return "UNDISCLOSED_EXPOSURE";
  }
  return "UNKNOWN";
}

struct Finding {
  FindingCode code;
  std::string message;

  friend bool operator==(const Finding&, const Finding&) = default;
};

struct AuditVerdict {
  bool pass = true;
  std::vector<Finding> findings;
};

/// Channel label used in exposure dumps and privacy labels: "pin:DETECT",
/// "i2c:0x29".
inline std::string channel_label(const ExposureRecord& r) {
  return r.channel == ChannelKind::Pin ? "pin:" + r.pin : "i2c:" + hex_address(r.address);
}

inline AuditVerdict audit(std::span<const ExposureRecord> log, const InterfaceDecl& decl) {
  AuditVerdict v;
  const auto signals = decl.signal_pins();
  for (const auto& r : log) {
    const std::string at = " at " + std::to_string(r.at) + " ms";
    if (r.channel == ChannelKind::Pin) {
      if (std::find(signals.begin(), signals.end(), r.pin) == signals.end())
        v.findings.push_back({FindingCode::UndeclaredChannel, "pin '" + r.pin + "' is not a declared signal" + at});
      else if (r.bits != 1)
        v.findings.push_back({FindingCode::OversizedPayload, "pin event carried " + std::to_string(r.bits) + " bits" + at});
    } else {
      if (!decl.serial || decl.serial->address != r.address)
        v.findings.push_back({FindingCode::UndeclaredChannel, "serial traffic at " + hex_address(r.address) +
                                                                  " is not declared" + at});
      else if (r.bits > 8 * decl.serial->register_map_len)
        v.findings.push_back({FindingCode::OversizedPayload,
                              std::to_string(r.bits / 8) + "-byte payload exceeds register map of " +
                                  std::to_string(decl.serial->register_map_len) + " bytes" + at});
    }
  }
  v.pass = v.findings.empty();
  return v;
}

// --- exposure CSV --------------------------------------------------------------

/// `time_ms,channel,detail,bits`; PIN detail is "pin@line", SERIAL detail the address.
inline void write_exposure_csv(std::ostream& os, std::span<const ExposureRecord> log) {
  os << "time_ms,channel,detail,bits\n";
  for (const auto& r : log) {
    os << r.at << ',';
    if (r.channel == ChannelKind::Pin) os << "PIN," << r.pin << '@' << r.line_id;
    else os << "SERIAL," << hex_address(r.address);
    os << ',' << r.bits << '\n';
  }
}

inline std::vector<ExposureRecord> read_exposure_csv(std::istream& is) {
  std::vector<ExposureRecord> out;
  std::string line;
  if (!std::getline(is, line) || line != "time_ms,channel,detail,bits")
    throw Error(Errc::ParseError, "exposure log: missing header");
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    auto fail = [&] { return Error(Errc::ParseError, "exposure log line " + std::to_string(lineno) + ": '" + line + "'"); };
    if (f.size() != 4) throw fail();
    ExposureRecord r;
    try {
      r.at = std::stoull(f[0]);
      r.bits = std::stoull(f[3]);
      if (f[1] == "PIN") {
        const auto at = f[2].find('@');
        if (at == std::string::npos) throw fail();
        r.channel = ChannelKind::Pin;
        r.pin = f[2].substr(0, at);
        r.line_id = f[2].substr(at + 1);
      } else if (f[1] == "SERIAL") {
        r.channel = ChannelKind::Serial;
        if (f[2].rfind("0x", 0) != 0) throw fail();
        const auto a = std::stoul(f[2].substr(2), nullptr, 16);
        if (a > 0x7F) throw fail();
        r.address = static_cast<std::uint8_t>(a);
      } else {
        throw fail();
      }
    } catch (const std::logic_error&) {
      throw fail();
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace mlsensor
