#pragma once

// Scenario files: devices, timed stimuli, composites and host reads, all in
// the same JSON syntax as datasheets. simulate() runs one on a fresh bus.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlsensor/compose.hpp"
#include "mlsensor/conformance.hpp"
#include "mlsensor/sensors.hpp"

namespace mlsensor {

struct DeviceSpec {
  std::string id;
  DeviceConfig config;
  std::map<std::string, std::string> wiring;  // empty: each pin to a line of its own name
};

struct I2cReadSpec {
  SimTime at = 0;
  std::uint8_t address = 0;
  std::size_t bytes = 1;
};

struct LineDriveSpec {
  SimTime at = 0;
  std::string line;
  Level level = Level::Low;
};

/// A stimulus entry: "modality" is one of scene, imu, audio, display; the
/// rest are that generator's parameters. Kept as JSON until simulate time.
struct Scenario {
  std::uint64_t seed = 0;
  SimTime duration_ms = 1000;
  std::vector<DeviceSpec> devices;
  std::vector<Json> stimuli;
  std::vector<CompositeSpec> composites;
  std::vector<I2cReadSpec> i2c_reads;
  std::vector<LineDriveSpec> drives;
};

namespace detail {

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot read " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint8_t address_from_json(const Json& v) {
  if (v.is_number_unsigned()) return static_cast<std::uint8_t>(v.get<unsigned>());
  const auto s = v.get<std::string>();
  std::size_t used = 0;
  const auto a = std::stoul(s, &used, 0);
  if (used != s.size() || a > 0x7F) throw Error(Errc::InvalidArgument, "bad I2C address '" + s + "'");
  return static_cast<std::uint8_t>(a);
}

inline DeviceSpec device_from_json(const Json& j, const std::filesystem::path& base) {
  DeviceSpec d;
  d.id = j.at("id").get<std::string>();
  d.config.kind = parse_sensor_kind(j.at("kind").get<std::string>());
  const Json cfg = j.value("config", Json::object());
  d.config.policy.frame_period_ms = cfg.value("frame_period_ms", d.config.policy.frame_period_ms);
  d.config.policy.rise_frames = cfg.value("rise_frames", d.config.policy.rise_frames);
  d.config.policy.fall_frames = cfg.value("fall_frames", d.config.policy.fall_frames);
  d.config.pulse_ms = cfg.value("pulse_ms", d.config.pulse_ms);
  if (cfg.contains("voice_mode")) {
    const auto m = cfg.at("voice_mode").get<std::string>();
    if (m != "pin" && m != "serial") throw Error(Errc::InvalidArgument, "voice_mode must be pin or serial");
    d.config.voice_mode = m == "pin" ? VoiceMode::Pin : VoiceMode::Serial;
  }
  d.config.vocabulary = cfg.value("vocabulary", d.config.vocabulary);
  if (cfg.contains("address")) d.config.address = address_from_json(cfg.at("address"));
  d.config.refresh_ms = cfg.value("refresh_ms", d.config.refresh_ms);
  if (j.contains("params_file")) {
    const auto raw = read_file(base / j.at("params_file").get<std::string>());
    d.config.params = ParameterBlob(std::vector<std::uint8_t>(raw.begin(), raw.end()));
  } else if (j.contains("preset")) {
    const auto p = j.at("preset").get<std::string>();
    if (p != "rodent") throw Error(Errc::InvalidArgument, "unknown parameter preset '" + p + "'");
    d.config.params = rodent_blob();
  }
  d.wiring = j.value("wiring", std::map<std::string, std::string>{});
  return d;
}

}  // namespace detail

inline Scenario scenario_from_json(const Json& j, const std::filesystem::path& base = ".") {
  try {
    Scenario s;
    s.seed = j.value("seed", s.seed);
    s.duration_ms = j.at("duration_ms").get<SimTime>();
    if (s.duration_ms < 1) throw Error(Errc::InvalidArgument, "duration_ms must be at least 1");
    std::set<std::string> ids;
    for (const auto& d : j.at("devices")) {
      s.devices.push_back(detail::device_from_json(d, base));
      if (!ids.insert(s.devices.back().id).second)
        throw Error(Errc::InvalidArgument, "device id '" + s.devices.back().id + "' used twice");
    }
    for (const auto& st : j.value("stimuli", Json::array())) s.stimuli.push_back(st);
    if (j.contains("corpus")) {
      std::istringstream in(detail::read_file(base / j.at("corpus").get<std::string>()));
      std::string line;
      while (std::getline(in, line))
        if (line.find_first_not_of(" \t\r") != std::string::npos) s.stimuli.push_back(Json::parse(line));
    }
    for (const auto& st : s.stimuli) {
      if (!ids.count(st.at("device").get<std::string>()))
        throw Error(Errc::InvalidArgument, "stimulus for unknown device '" + st.at("device").get<std::string>() + "'");
      (void)st.at("modality").get<std::string>();
    }
    for (const auto& c : j.value("composites", Json::array())) {
      CompositeSpec cs{c.at("op").get<std::string>(), c.at("inputs").get<std::vector<std::string>>(),
                       c.at("output").get<std::string>(), c.value("param_ms", std::uint64_t{0})};
      if (cs.inputs.size() != composite_arity(cs.op))
        throw Error(Errc::InvalidArgument, cs.op + " takes " + std::to_string(composite_arity(cs.op)) + " input(s)");
      s.composites.push_back(std::move(cs));
    }
    for (const auto& r : j.value("i2c_reads", Json::array()))
      s.i2c_reads.push_back({r.at("at_ms").get<SimTime>(), detail::address_from_json(r.at("address")),
                             r.value("bytes", std::size_t{1})});
    for (const auto& d : j.value("drives", Json::array()))
      s.drives.push_back({d.at("at_ms").get<SimTime>(), d.at("line").get<std::string>(),
                          d.at("level").get<int>() ? Level::High : Level::Low});
    return s;
  } catch (const Json::exception& e) {
    throw Error(Errc::ParseError, std::string("scenario: ") + e.what());
  }
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  const auto text = detail::read_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
  return scenario_from_json(j, path.parent_path());
}

// --- stimulus generation -------------------------------------------------------------

struct TimedStimulus {
  SimTime at;
  Stimulus stimulus;
};

/// Expands one stimulus entry into device-bound stimuli. Times in the entry are
/// absolute scenario times.
inline std::vector<TimedStimulus> expand_stimulus(const Json& e, std::uint64_t seed, std::uint64_t cadence_ms,
                                                  SimTime duration) {
  std::vector<TimedStimulus> out;
  const auto mod = e.at("modality").get<std::string>();
  if (mod == "scene") {
    SceneParams sp;
    sp.person_present = e.value("person_present", false);
    sp.facing_camera = e.value("facing_camera", false);
    sp.distance_m = e.value("distance_m", sp.distance_m);
    sp.illuminance_lux = e.value("illuminance_lux", sp.illuminance_lux);
    sp.noise_sigma = e.value("noise_sigma", sp.noise_sigma);
    sp.center_x = e.value("center_x", sp.center_x);
    const auto fig = e.value("figure", std::string("person"));
    if (fig != "person" && fig != "rodent") throw Error(Errc::InvalidArgument, "figure must be person or rodent");
    sp.figure = fig == "rodent" ? FigureKind::Rodent : FigureKind::Person;
    const SimTime start = e.value("start_ms", SimTime{0}), end = e.value("end_ms", duration);
    const SimTime every = e.value("every_ms", cadence_ms);
    if (every == 0) throw Error(Errc::InvalidArgument, "every_ms must be positive");
    std::uint64_t i = 0;
    for (SimTime t = start; t < end; t += every, ++i) {
      sp.seed = derive_seed({seed, i});
      out.push_back({t, render_scene(sp)});
    }
  } else if (mod == "imu") {
    const SimTime at = e.value("at_ms", SimTime{0});
    const SimTime len = e.value("duration_ms", duration > at ? duration - at : SimTime{0});
    std::vector<std::uint64_t> taps;
    for (auto t : e.value("taps_ms", std::vector<SimTime>{})) {
      if (t < at) throw Error(Errc::InvalidArgument, "tap before its IMU window");
      taps.push_back(t - at);
    }
    out.push_back({at, synth_imu(taps, len, e.value("noise_sigma_g", 0.02), seed,
                                 e.value("peak_g", tap_constants::kPeakG))});
  } else if (mod == "audio") {
    const SimTime at = e.value("at_ms", SimTime{0});
    std::vector<ScriptEntry> script;
    std::vector<std::string> words;
    for (const auto& w : e.value("script", Json::array())) {
      const auto t = w.at("start_ms").get<SimTime>();
      if (t < at) throw Error(Errc::InvalidArgument, "word before its audio window");
      script.push_back({w.at("word").get<std::string>(), t - at});
      words.push_back(script.back().word);
    }
    std::optional<std::uint64_t> len;
    if (e.contains("duration_ms")) len = e.at("duration_ms").get<std::uint64_t>();
    out.push_back({at, synth_audio(script, words, seed, len,
                                   e.value("noise_sigma", audio_constants::kDefaultNoise))});
  } else if (mod == "display") {
    DisplayLayout layout;
    layout.x = e.value("x", layout.x);
    layout.y = e.value("y", layout.y);
    layout.rotation = e.value("rotation", layout.rotation);
    DisplayScene scene;
    scene.noise_sigma = e.value("noise_sigma", scene.noise_sigma);
    const bool blank = e.value("blank", false);
    const auto reading = blank ? Reading{} : parse_reading(e.at("reading").get<std::string>());
    const SimTime start = e.value("start_ms", SimTime{0}), end = e.value("end_ms", duration);
    const SimTime every = e.value("every_ms", cadence_ms);
    if (every == 0) throw Error(Errc::InvalidArgument, "every_ms must be positive");
    std::uint64_t i = 0;
    for (SimTime t = start; t < end; t += every, ++i) {
      scene.seed = derive_seed({seed, i});
      if (blank) {
        out.push_back({t, Frame(layout.frame_side, layout.frame_side, static_cast<std::uint8_t>(scene.background))});
      } else {
        out.push_back({t, render_display(reading, layout, scene)});
      }
    }
  } else {
    throw Error(Errc::InvalidArgument, "unknown stimulus modality '" + mod + "'");
  }
  return out;
}

// --- simulation --------------------------------------------------------------------

struct SimulatedDevice {
  std::string id;
  PoweredDevice handle;
};

struct Simulation {
  std::unique_ptr<Bus> bus = std::make_unique<Bus>();
  std::vector<SimulatedDevice> devices;
  SimTime duration = 0;

  const SimulatedDevice& device(const std::string& id) const {
    for (const auto& d : devices)
      if (d.id == id) return d;
    throw Error(Errc::InvalidArgument, "no device '" + id + "' in scenario");
  }
};

/// Powers every device at t = 0, queues every stimulus, adds composites, then
/// advances to each host action in time order and finally to duration_ms.
/// Factories may be overridden per device id (tests use this for adversarial devices).
inline Simulation simulate(const Scenario& s,
                           const std::map<std::string, std::function<std::unique_ptr<SensorDevice>()>>& overrides = {}) {
  Simulation sim;
  sim.duration = s.duration_ms;
  Bus& bus = *sim.bus;
  for (const auto& d : s.devices) {
    auto dev = overrides.count(d.id) ? overrides.at(d.id)() : make_device(d.config);
    const auto wiring = d.wiring.empty() ? default_wiring(dev->declared_surface()) : d.wiring;
    sim.devices.push_back({d.id, power_on(std::move(dev), bus, wiring)});
  }

  std::map<std::string, std::vector<TimedStimulus>> queued;
  for (std::size_t i = 0; i < s.stimuli.size(); ++i) {
    const auto& e = s.stimuli[i];
    const auto& target = sim.device(e.at("device").get<std::string>());
    const std::uint64_t seed = e.contains("seed") ? e.at("seed").get<std::uint64_t>() : derive_seed({s.seed, i});
    for (auto& ts : expand_stimulus(e, seed, target.handle.device->cadence_ms(), s.duration_ms))
      queued[target.id].push_back(std::move(ts));
  }
  for (auto& [id, list] : queued) {
    std::stable_sort(list.begin(), list.end(), [](const auto& a, const auto& b) { return a.at < b.at; });
    auto* dev = sim.device(id).handle.device;
    for (auto& ts : list) dev->feed_stimulus(std::move(ts.stimulus), ts.at);
  }

  for (const auto& d : s.drives)
    if (!bus.has_line(d.line)) bus.add_line(d.line);
  for (const auto& c : s.composites) add_composite(bus, c);

  // A host drive at t lands before instant t is settled, so composites see it
  // together with whatever devices drive at t. Reads happen at t itself.
  struct Action {
    SimTime at;
    bool drive;
    std::function<void()> run;
  };
  std::vector<Action> actions;
  for (const auto& d : s.drives) actions.push_back({d.at, true, [&bus, d] { bus.drive(d.line, d.level, d.at); }});
  for (const auto& r : s.i2c_reads) actions.push_back({r.at, false, [&bus, r] { bus.i2c_read(r.address, r.bytes); }});
  std::stable_sort(actions.begin(), actions.end(), [](const Action& a, const Action& b) {
    return a.at != b.at ? a.at < b.at : a.drive > b.drive;
  });
  for (const auto& a : actions) {
    if (a.at > s.duration_ms) throw Error(Errc::InvalidArgument, "host action after duration_ms");
    const SimTime settle_to = a.drive && a.at > 0 ? a.at - 1 : a.at;
    if (settle_to > bus.clock()) bus.advance(settle_to - bus.clock());
    a.run();
  }
  if (s.duration_ms > bus.clock()) bus.advance(s.duration_ms - bus.clock());
  return sim;
}

enum class OutputFormat : std::uint8_t { Csv, Json };

inline Json trace_to_json(const std::map<std::string, PinTrace>& lines) {
  Json j = Json::object();
  for (const auto& [id, t] : lines) {
    Json tr = Json::array();
    for (const auto& x : t.transitions()) tr.push_back({x.at, x.level == Level::High ? 1 : 0});
    j[id] = {{"initial", t.initial_level() == Level::High ? 1 : 0}, {"transitions", tr}};
  }
  return j;
}

inline Json i2c_to_json(std::span<const I2CTransaction> log) {
  Json j = Json::array();
  for (const auto& tx : log)
    j.push_back({{"time_ms", tx.at},
                 {"address", hex_address(tx.address)},
                 {"direction", tx.direction == I2CDirection::Read ? "read" : "write"},
                 {"status", tx.status == I2CStatus::Ack ? "ack" : "nack"},
                 {"bytes", hex_bytes(tx.payload)}});
  return j;
}

inline Json exposure_to_json(std::span<const ExposureRecord> log) {
  Json j = Json::array();
  for (const auto& r : log) j.push_back({{"time_ms", r.at}, {"channel", channel_label(r)}, {"bits", r.bits}});
  return j;
}

/// Writes trace, I2C log and one exposure log per device into `dir`; returns the paths.
inline std::vector<std::filesystem::path> write_outputs(const Simulation& sim, const std::filesystem::path& dir,
                                                        OutputFormat fmt = OutputFormat::Csv) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, auto&& body) {
    const auto p = dir / name;
    std::ofstream os(p, std::ios::binary);
    if (!os) throw Error(Errc::Io, "cannot write " + p.string());
    body(os);
    written.push_back(p);
  };
  const Bus& bus = *sim.bus;
  if (fmt == OutputFormat::Csv) {
    emit("trace.csv", [&](std::ostream& os) { write_trace_csv(os, bus.lines()); });
    emit("i2c.csv", [&](std::ostream& os) { write_i2c_csv(os, bus.i2c_log()); });
    for (const auto& d : sim.devices)
      emit("exposure_" + d.id + ".csv", [&](std::ostream& os) { write_exposure_csv(os, bus.exposure_log(d.handle.id)); });
  } else {
    emit("trace.json", [&](std::ostream& os) { os << canonical_dump(trace_to_json(bus.lines())); });
    emit("i2c.json", [&](std::ostream& os) { os << canonical_dump(i2c_to_json(bus.i2c_log())); });
    for (const auto& d : sim.devices)
      emit("exposure_" + d.id + ".json",
           [&](std::ostream& os) { os << canonical_dump(exposure_to_json(bus.exposure_log(d.handle.id))); });
  }
  return written;
}

}  // namespace mlsensor
