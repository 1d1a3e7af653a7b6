#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mlsensor/devkit.hpp"
#include "mlsensor/sensors/bcd.hpp"
#include "mlsensor/sensors/tap_sensor.hpp"
#include "mlsensor/sensors/text_reader.hpp"
#include "mlsensor/sensors/vision_sensor.hpp"
#include "mlsensor/sensors/voice_sensor.hpp"

namespace mlsensor {

/// Construction-time configuration of any shipped device.
struct DeviceConfig {
  SensorKind kind = SensorKind::Person;
  PersonPinPolicy policy{};                        // PERSON, GAZE
  std::uint64_t pulse_ms = kDefaultPulseMs;        // TAP
  VoiceMode voice_mode = VoiceMode::Pin;           // VOICE
  std::vector<std::string> vocabulary{"on", "off"};  // VOICE
  std::optional<std::uint8_t> address;             // VOICE serial, TEXT_READER
  std::uint64_t refresh_ms = kDefaultRefreshMs;    // TEXT_READER
  std::optional<ParameterBlob> params;
};

inline std::unique_ptr<SensorDevice> make_device(const DeviceConfig& c) {
  switch (c.kind) {
    case SensorKind::Person: return person_detector(c.policy, c.params);
    case SensorKind::Gaze: return gaze_detector(c.policy, c.params);
    case SensorKind::Tap: return tap_sensor(c.pulse_ms, c.params);
    case SensorKind::Voice:
      if (c.voice_mode == VoiceMode::Pin) return voice_sensor_pin(c.params);
      return voice_sensor_serial(c.vocabulary, c.address.value_or(kDefaultVoiceAddress), c.params);
    case SensorKind::TextReader:
      return text_reader(c.address.value_or(kDefaultTextReaderAddress), c.params, c.refresh_ms);
  }
  throw Error(Errc::InvalidArgument, "unknown sensor kind");
}

/// Default wiring: every pin to a line of the same name, prefixed.
inline std::map<std::string, std::string> default_wiring(const InterfaceDecl& decl, const std::string& prefix = "") {
  std::map<std::string, std::string> w;
  for (const auto& p : decl.pins) w[p.name] = prefix + p.name;
  return w;
}

/// Person-detector calibration that retargets it to rodents.
inline ParameterBlob rodent_blob() { return vision_blob(SensorKind::Person, presets::rodent_template()); }

}  // namespace mlsensor
