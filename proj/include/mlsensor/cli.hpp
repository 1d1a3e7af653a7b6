#pragma once

// The mlsensor command line. run_cli is the whole tool; tools/mlsensor.cpp
// only forwards argv. Exit codes: 0 ok, 1 violations or findings, 2 usage/IO.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mlsensor/datasheet.hpp"
#include "mlsensor/scenario.hpp"

namespace mlsensor {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFindings = 1;
inline constexpr int kExitUsage = 2;

namespace cli_detail {

struct Loaded {
  std::optional<Datasheet> ds;
  int code = kExitOk;
};

inline Loaded load_datasheet(const std::string& path, std::ostream& err) {
  const auto text = detail::read_file(path);
  auto r = parse_datasheet(text);
  if (!r.ok()) {
    for (const auto& i : r.issues) err << path << ":" << format_issue(i) << "\n";
    return {std::nullopt, kExitFindings};
  }
  return {std::move(r.datasheet), kExitOk};
}

inline void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(Errc::Io, "cannot write " + path);
  os << text;
}

inline void print_findings(std::ostream& os, const std::vector<Finding>& fs) {
  for (const auto& f : fs) os << to_string(f.code) << ": " << f.message << "\n";
}

/// Built-in gaze-gated light switch: "on" at 1000 and "off" at 2000 while a
/// person is in view, either looking at the camera or not.
inline Scenario compose_demo_scenario(bool gaze, std::uint64_t seed, std::uint64_t window_ms) {
  Scenario s;
  s.seed = seed;
  s.duration_ms = 3000;
  DeviceSpec g{"gaze", {}, {{"VDD", "VDD"}, {"GND", "GND"}, {"DETECT", "GAZE"}}};
  g.config.kind = SensorKind::Gaze;
  DeviceSpec v{"voice", {}, {{"VDD", "VDD"}, {"GND", "GND"}, {"STATE", "STATE"}}};
  v.config.kind = SensorKind::Voice;
  s.devices = {g, v};
  s.stimuli.push_back({{"device", "gaze"}, {"modality", "scene"}, {"person_present", true}, {"facing_camera", gaze}});
  s.stimuli.push_back({{"device", "voice"},
                       {"modality", "audio"},
                       {"script", Json::array({{{"word", "on"}, {"start_ms", 1000}}, {{"word", "off"}, {"start_ms", 2000}}})},
                       {"duration_ms", 3000}});
  s.composites = gaze_voice_specs("STATE", "GAZE", window_ms);
  return s;
}

inline std::string intervals_text(const PinTrace& t, SimTime end) {
  std::string s;
  for (const auto& iv : high_intervals(t, end))
    s += (s.empty() ? "" : " ") + std::string("[") + std::to_string(iv.begin) + "," +
         (iv.open_ended ? std::string("end)") : std::to_string(iv.end) + ")");
  return s.empty() ? "never" : s;
}

}  // namespace cli_detail

/// `args` excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Virtual ML-sensor toolkit: simulate devices, run conformance, check datasheets", "mlsensor"};
  app.require_subcommand(1);

  bool quiet = false;
  std::optional<std::uint64_t> seed;
  std::string format = "csv";
  std::string sim_out, conf_out, out_path;
  auto common = [&](CLI::App* c, bool with_format) {
    c->add_flag("--quiet,-q", quiet, "Print nothing on success");
    c->add_option("--seed", seed, "Override the file's seed");
    if (with_format) c->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  };

  std::string scenario_path;
  auto* sim = app.add_subcommand("simulate", "Run a scenario; write trace, I2C log and exposure logs");
  sim->add_option("scenario", scenario_path, "Scenario file")->required();
  sim->add_option("--out", sim_out, "Output directory")->default_val("sim_out");
  common(sim, true);

  std::string protocol_path;
  unsigned threads = 1;
  auto* conf = app.add_subcommand("conformance", "Run a conformance protocol against the reference device");
  conf->add_option("protocol", protocol_path, "Protocol file (.json)")->required();
  conf->add_option("--out", conf_out, "Report file")->default_val("report.cfr.json");
  conf->add_option("--threads", threads, "Worker threads")->check(CLI::Range(1u, 64u));
  common(conf, false);

  std::string ds_path, mode = "machine", device_from, device_id, report_path;
  auto* ds = app.add_subcommand("datasheet", "Datasheet tools");
  ds->require_subcommand(1);
  auto* ds_validate = ds->add_subcommand("validate", "Check a datasheet's structure");
  ds_validate->add_option("file", ds_path)->required();
  common(ds_validate, true);
  auto* ds_render = ds->add_subcommand("render", "Render a valid datasheet");
  ds_render->add_option("file", ds_path)->required();
  ds_render->add_option("--mode", mode, "machine or human")->check(CLI::IsMember({"machine", "human"}));
  ds_render->add_option("--out", out_path, "Output file (default stdout)");
  common(ds_render, false);
  auto* ds_cross = ds->add_subcommand("crosscheck", "Check a datasheet against a device run");
  ds_cross->add_option("file", ds_path)->required();
  ds_cross->add_option("--device-from", device_from, "Scenario whose device and run are checked")->required();
  ds_cross->add_option("--device", device_id, "Device id in the scenario (default: first of the datasheet's kind)");
  common(ds_cross, false);
  auto* ds_attach = ds->add_subcommand("attach", "Fill the end-to-end performance section from a report");
  ds_attach->add_option("file", ds_path)->required();
  ds_attach->add_option("report", report_path)->required();
  ds_attach->add_option("--out", out_path, "Output file (default stdout)");
  common(ds_attach, false);

  std::string log_path;
  auto* aud = app.add_subcommand("audit", "Audit an exposure log against a datasheet's declared interface");
  aud->add_option("exposure-log", log_path)->required();
  aud->add_option("datasheet", ds_path)->required();
  common(aud, false);

  std::uint64_t window_ms = kDefaultGazeWindowMs;
  auto* demo = app.add_subcommand("compose-demo", "Gaze-gated voice light switch, with and without gaze");
  demo->add_option("--out", out_path, "Directory for traces");
  demo->add_option("--window", window_ms, "Gaze window in ms");
  common(demo, false);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*sim) {
      auto s = load_scenario(scenario_path);
      if (seed) s.seed = *seed;
      const auto run = simulate(s);
      const auto files = write_outputs(run, sim_out, format == "json" ? OutputFormat::Json : OutputFormat::Csv);
      if (!quiet)
        for (const auto& f : files) out << "wrote " << f.generic_string() << "\n";
      return kExitOk;
    }

    if (*conf) {
      auto p = protocol_from_json(Json::parse(detail::read_file(protocol_path)));
      if (seed) p.seed = *seed;
      const SensorKind kind = p.sensor_kind;
      DeviceFactory factory = [kind] {
        DeviceConfig c;
        c.kind = kind;
        return make_device(c);
      };
      const auto report = run(factory, p, RunOptions{threads, std::nullopt});
      cli_detail::write_text(conf_out, canonical_dump(report_to_json(report)), out);
      if (!quiet) {
        out << p.axis_a.name << "," << p.axis_b.name << ",tpr,fpr\n";
        for (const auto& c : report.cells) out << c.a << "," << c.b << "," << c.tpr << "," << c.fpr << "\n";
        out << "envelope: " << envelope_to_json(p, report.envelope).dump() << "\n";
        out << "wrote " << conf_out << "\n";
      }
      return kExitOk;
    }

    if (*ds_validate) {
      auto l = cli_detail::load_datasheet(ds_path, err);
      if (!l.ds) return l.code;
      const auto v = validate(*l.ds);
      if (format == "json") {
        Json j = Json::array();
        for (const auto& x : v)
          j.push_back({{"section", x.section}, {"code", std::string(to_string(x.code))}, {"message", x.message}});
        out << canonical_dump(j);
      } else if (!quiet || !v.empty()) {
        for (const auto& x : v) out << format_violation(x) << "\n";
        if (v.empty()) out << ds_path << ": valid\n";
      }
      return v.empty() ? kExitOk : kExitFindings;
    }

    if (*ds_render) {
      auto l = cli_detail::load_datasheet(ds_path, err);
      if (!l.ds) return l.code;
      cli_detail::write_text(out_path, render(*l.ds, mode == "human" ? RenderMode::Human : RenderMode::Machine), out);
      return kExitOk;
    }

    if (*ds_cross) {
      auto l = cli_detail::load_datasheet(ds_path, err);
      if (!l.ds) return l.code;
      if (const auto v = validate(*l.ds); !v.empty()) {
        for (const auto& x : v) err << format_violation(x) << "\n";
        return kExitFindings;
      }
      auto s = load_scenario(device_from);
      if (seed) s.seed = *seed;
      const auto run = simulate(s);
      const SimulatedDevice* target = nullptr;
      for (const auto& d : run.devices)
        if (device_id.empty() ? d.handle.device->kind() == l.ds->sensor_kind() : d.id == device_id) {
          target = &d;
          break;
        }
      if (!target) throw Error(Errc::InvalidArgument, "scenario has no matching device");
      const auto fs = cross_check(*l.ds, *target->handle.device, run.bus->exposure_log(target->handle.id));
      cli_detail::print_findings(out, fs);
      if (fs.empty() && !quiet) out << ds_path << ": consistent with device '" << target->id << "'\n";
      return fs.empty() ? kExitOk : kExitFindings;
    }

    if (*ds_attach) {
      auto l = cli_detail::load_datasheet(ds_path, err);
      if (!l.ds) return l.code;
      const auto report = report_from_json(Json::parse(detail::read_file(report_path)));
      const auto updated = attach_performance(*l.ds, report);
      cli_detail::write_text(out_path, canonical_dump(updated.doc), out);
      if (const auto v = validate(updated); !v.empty()) {
        for (const auto& x : v) err << format_violation(x) << "\n";
        return kExitFindings;
      }
      return kExitOk;
    }

    if (*aud) {
      std::ifstream in(log_path);
      if (!in) throw Error(Errc::Io, "cannot read " + log_path);
      const auto log = read_exposure_csv(in);
      auto l = cli_detail::load_datasheet(ds_path, err);
      if (!l.ds) return l.code;
      if (const auto v = validate(*l.ds); !v.empty()) {
        for (const auto& x : v) err << format_violation(x) << "\n";
        return kExitFindings;
      }
      const auto verdict = audit_against(*l.ds, log);
      cli_detail::print_findings(out, verdict.findings);
      if (verdict.pass && !quiet) out << "PASS: " << log.size() << " exposure record(s) within the declared interface\n";
      if (!verdict.pass) out << "FAIL: " << verdict.findings.size() << " finding(s)\n";
      return verdict.pass ? kExitOk : kExitFindings;
    }

    if (*demo) {
      bool as_expected = true;
      for (bool gaze : {true, false}) {
        const auto s = cli_detail::compose_demo_scenario(gaze, seed.value_or(0), window_ms);
        const auto run = simulate(s);
        const auto& light = run.bus->line("LIGHT_ON");
        const bool lit = light.level_at(1500) == Level::High;
        as_expected = as_expected && lit == gaze;
        if (!quiet)
          out << (gaze ? "with gaze:    " : "without gaze: ") << "LIGHT_ON high " << cli_detail::intervals_text(light, s.duration_ms)
              << "\n";
        if (!out_path.empty()) write_outputs(run, std::filesystem::path(out_path) / (gaze ? "with_gaze" : "without_gaze"));
      }
      return as_expected ? kExitOk : kExitFindings;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.code()) {
      case Errc::InvalidDatasheet:
      case Errc::KindMismatch:
        return kExitFindings;
      default:
        return kExitUsage;
    }
  } catch (const Json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace mlsensor
