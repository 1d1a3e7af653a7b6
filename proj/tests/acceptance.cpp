// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "adversary.hpp"
#include "mlsensor/cli.hpp"
#include "support.hpp"

using namespace mlsensor;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool ok = true;
  std::string why;
  void expect(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      why = what;
    }
  }
};

std::vector<std::uint8_t> bytes_of(const RegisterBytes& b) { return {b.begin(), b.end()}; }

std::string canonical_text(Reading r) {
  while (r.whole_digits.size() > 1 && r.whole_digits[0] == '0') r.whole_digits.erase(0, 1);
  while (!r.frac_digits.empty() && r.frac_digits.back() == '0') r.frac_digits.pop_back();
  return r.to_string();
}

Reading random_reading(std::mt19937_64& g) {
  Reading r;
  r.negative = g() & 1;
  const auto nw = 1 + g() % 7, nf = g() % 9;
  for (std::size_t i = 0; i < nw; ++i) r.whole_digits += static_cast<char>('0' + g() % 10);
  for (std::size_t i = 0; i < nf; ++i) r.frac_digits += static_cast<char>('0' + g() % 10);
  return r;
}

TestProtocol load_protocol(const std::string& name) {
  return protocol_from_json(Json::parse(oracle::slurp(oracle::fixtures() / "protocols" / (name + ".json"))));
}

Datasheet load_sheet(const std::string& name) {
  auto r = parse_datasheet(oracle::slurp(oracle::fixtures() / (name + ".mlsd.json")));
  if (!r.ok()) throw Error(Errc::InvalidArgument, name + " does not parse");
  return *r.datasheet;
}

const std::vector<std::string> kScenarios{"gaze", "gaze_voice", "person", "rodent_corpus",
                                          "tap",  "text_reader", "voice_pin", "voice_serial"};

// AC4's report is reused by AC6
std::optional<ConformanceReport> g_person_report;

// --- 1 ---------------------------------------------------------------------------

Check interface_contracts() {
  Check c;
  std::mt19937_64 g(1001);
  std::size_t pulses = 0;
  for (int n = 0; n < 1000 && c.ok; ++n) {
    std::vector<std::uint64_t> taps;
    for (std::uint64_t t = g() % 300; t < 2900; t += 20 + g() % 700) taps.push_back(t);
    const double noise = std::uniform_real_distribution<double>(0.01, 0.35)(g);
    Bus bus;
    auto h = power_on(tap_sensor(), bus, {{"VDD", "V"}, {"GND", "G"}, {"TAP", "TAP"}});
    h->feed_stimulus(synth_imu(taps, 3000, noise, g()), 0);
    bus.advance(3000);
    for (const auto& iv : high_intervals(bus.line("TAP"), 3000)) {
      if (iv.open_ended) continue;
      ++pulses;
      c.expect(iv.end - iv.begin == 200, "tap pulse of " + std::to_string(iv.end - iv.begin) + " ms");
    }
  }
  c.expect(pulses > 1000, "too few tap pulses to judge");

  for (int n = 0; n < 10 && c.ok; ++n) {
    const SimTime enter = 100 * (2 + g() % 8), leave = enter + 100 * (5 + g() % 15);
    Bus bus;
    auto h = power_on(person_detector(), bus, {{"VDD", "V"}, {"GND", "G"}, {"DETECT", "DETECT"}});
    for (SimTime t = 0; t < leave + 1000; t += 100) {
      SceneParams sp;
      sp.person_present = t >= enter && t < leave;
      sp.seed = g();
      h->feed_stimulus(render_scene(sp), t);
    }
    bus.advance(leave + 1000);
    const auto& tr = bus.line("DETECT").transitions();
    c.expect(tr.size() == 2, "person pin did not rise and fall once");
    if (tr.size() != 2) break;
    const SimTime rise_delay = tr[0].at - (enter + 100), fall_delay = tr[1].at - (leave + 100);
    c.expect(tr[0].level == Level::High && rise_delay <= 200, "assertion late");
    c.expect(rise_delay == fall_delay, "assertion and deassertion delays differ");
  }

  const auto templates = templates_for({"on", "off"});
  const std::vector<std::string> words{"on", "off", "on", "off", "often", "hello", "water"};
  int moved = 0;
  for (int n = 0; n < 500 && c.ok; ++n) {
    std::vector<ScriptEntry> script;
    for (int k = static_cast<int>(g() % 7); k > 0; --k) script.push_back({words[g() % words.size()], g() % 1800});
    const auto audio = synth_audio(script, {"on", "off"}, g(), 2000, (g() & 1) ? 0.3 : 0.6);
    std::vector<std::pair<SimTime, bool>> heard;
    for (const auto& h : scan_keywords(audio, templates)) heard.push_back({h.t_ms, h.index == 0});
    Bus bus;
    auto h = power_on(voice_sensor_pin(), bus, {{"VDD", "V"}, {"GND", "G"}, {"STATE", "STATE"}});
    h->feed_stimulus(audio, 0);
    bus.advance(2000);
    moved += !bus.line("STATE").transitions().empty();
    c.expect(oracle::sample(bus.line("STATE"), 2000) == oracle::tick_voice_latch(heard, 100, 2000),
             "voice pin disagrees with the latch oracle on script " + std::to_string(n));
  }
  c.expect(moved > 100, "voice scripts rarely moved the pin");
  return c;
}

// --- 2 ---------------------------------------------------------------------------

Check bcd_protocol() {
  Check c;
  std::vector<std::string> parts{""};
  for (int d = 0; d < 10; ++d) parts.push_back(std::string(1, char('0' + d)));
  for (int d = 0; d < 100; ++d) parts.push_back({char('0' + d / 10), char('0' + d % 10)});
  std::size_t n = 0;
  for (bool neg : {false, true})
    for (const auto& w : parts)
      for (const auto& f : parts) {
        if (w.empty()) continue;
        const Reading r{neg, w, f};
        const auto enc = encode_reading(r);
        const auto back = decode_reading(enc);
        c.expect(bytes_of(enc) == oracle::bcd_bytes(neg, w, f), "layout of " + r.to_string());
        c.expect(back && back->to_string() == canonical_text(r) && encode_reading(*back) == enc,
                 "round trip of " + r.to_string());
        ++n;
      }
  c.expect(n == 2 * 110 * 111, "short readings not exhausted");

  std::mt19937_64 g(7);
  for (int i = 0; i < 100000 && c.ok; ++i) {
    const Reading r = random_reading(g);
    const auto back = decode_reading(encode_reading(r));
    c.expect(back && *back == canonical_reading(r), "round trip of " + r.to_string());
  }

  Bus bus;
  auto h = power_on(text_reader(), bus, {{"VDD", "V"}, {"GND", "G"}});
  c.expect(bus.i2c_read(kDefaultTextReaderAddress, 8).payload == bytes_of(kNoReading), "blank reader is not the sentinel");
  h->feed_stimulus(render_display(parse_reading("1234.5")), 0);
  bus.advance(600);
  c.expect(bus.i2c_read(kDefaultTextReaderAddress, 8).payload ==
               std::vector<std::uint8_t>{0x00, 0x01, 0x23, 0x4C, 0x50, 0x00, 0x00, 0x00},
           "1234.5 register bytes");
  h->feed_stimulus(Frame(96, 96, 30), 600);
  bus.advance(600);
  const auto blank = bus.i2c_read(kDefaultTextReaderAddress, 8).payload;
  c.expect(blank == bytes_of(kNoReading), "unreadable display is not the sentinel");
  RegisterBytes rb{};
  std::copy(blank.begin(), blank.end(), rb.begin());
  c.expect(!decode_reading(rb), "sentinel decodes to a reading");
  return c;
}

// --- 3 ---------------------------------------------------------------------------

Check seven_segment() {
  Check c;
  const std::map<std::string, int> standard{{"abcdef", 0}, {"bc", 1},     {"abdeg", 2}, {"abcdg", 3},
                                            {"bcfg", 4},   {"acdfg", 5},  {"acdefg", 6}, {"abc", 7},
                                            {"abcdefg", 8}, {"abcdfg", 9}};
  for (unsigned set = 0; set < 128; ++set) {
    std::string name;
    for (int k = 0; k < 7; ++k)
      if (set & (1u << k)) name += static_cast<char>('a' + k);
    const auto it = standard.find(name);
    const auto got = segment_lookup(static_cast<SegmentSet>(set));
    c.expect(it == standard.end() ? !got : got == it->second, "segment set " + name);
  }
  std::mt19937_64 g(2022);
  for (int i = 0; i < 100; ++i) {
    const Reading r = random_reading(g);
    for (int rot = 0; rot < 4; ++rot) {
      DisplayLayout L;
      L.rotation = rot;
      DisplayScene sc;
      sc.seed = static_cast<std::uint64_t>(i);
      const auto back = decode_display(render_display(r, L, sc));
      c.expect(back && *back == r, r.to_string() + " at rotation " + std::to_string(rot));
    }
  }
  return c;
}

// --- 4 ---------------------------------------------------------------------------

Check conformance() {
  Check c;
  const auto p = load_protocol("person_4x3x50");
  c.expect(p.cell_count() == 12 && p.trials_per_cell == 50, "fixture is not a 4x3x50 person protocol");
  const DeviceFactory factory = [] { return person_detector(); };
  std::string first;
  for (int rep = 0; rep < 2; ++rep) {
    const auto t0 = std::chrono::steady_clock::now();
    auto r = run(factory, p);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.expect(secs < 60.0, "run took " + std::to_string(secs) + " s");
    const auto bytes = canonical_dump(report_to_json(r));
    if (rep == 0) {
      first = bytes;
      g_person_report = std::move(r);
    } else {
      c.expect(bytes == first, "two runs differ");
    }
  }
  const auto& r = *g_person_report;
  const auto& ax = p.axis_a.levels;
  const auto& bx = p.axis_b.levels;
  for (std::size_t i = 0; i < ax.size(); ++i)
    for (std::size_t j = 0; j < bx.size(); ++j) {
      const auto& cell = r.cell(i, j);
      if (ax[i] == 1.0 && bx[j] == 800.0)
        c.expect(cell.tpr == 1.0 && cell.fpr == 0.0, "nominal cell is not perfect");
      if (i > 0) c.expect(cell.tpr <= r.cell(i - 1, j).tpr, "TPR rises with distance");
    }
  return c;
}

// --- 5 ---------------------------------------------------------------------------

Check isolation() {
  Check c;
  std::set<SensorKind> kinds;
  for (const auto& name : kScenarios) {
    const auto sim = simulate(load_scenario(oracle::fixtures() / "scenarios" / (name + ".json")));
    for (const auto& d : sim.devices) {
      kinds.insert(d.handle.device->kind());
      const auto v = audit(sim.bus->exposure_log(d.handle.id), d.handle.device->declared_surface());
      c.expect(v.pass, name + "/" + d.id + " exposed an undeclared channel");
    }
  }
  c.expect(kinds.size() == 5, "not every device kind was exercised");

  const auto dir = oracle::scratch_dir("acceptance_leaky");
  const auto scenario = load_scenario(oracle::fixtures() / "scenarios" / "person.json");
  write_outputs(simulate(scenario, {{"door", [] { return oracle::leaky_detector(); }}}), dir);
  std::ostringstream out, err;
  const int rc = run_cli({"audit", (dir / "exposure_door.csv").string(), (oracle::fixtures() / "person.mlsd.json").string()},
                         out, err);
  c.expect(rc == 1, "audit of the leaky device exited " + std::to_string(rc));
  c.expect(out.str().find("UNDECLARED_CHANNEL") != std::string::npos, "audit did not name the undeclared channel");
  return c;
}

// --- 6 ---------------------------------------------------------------------------

Check datasheets() {
  Check c;
  for (const std::string n : {"person", "gaze", "tap", "voice", "text_reader", "pinout_mismatch"}) {
    const auto text = oracle::slurp(oracle::fixtures() / (n + ".mlsd.json"));
    const auto ds = load_sheet(n);
    const auto once = render(ds, RenderMode::Machine);
    c.expect(once == text, n + " does not render back to its own text");
    c.expect(parse_datasheet(once).datasheet == ds, n + " render does not parse back");
  }
  for (const std::string n : {"missing_nutrition", "wifi"})
    c.expect(canonical_dump(load_sheet(n).doc) == oracle::slurp(oracle::fixtures() / (n + ".mlsd.json")),
             n + " does not round-trip");

  const auto missing = validate(load_sheet("missing_nutrition"));
  c.expect(missing.size() == 1 && missing[0].section == "dataset_nutrition" &&
               missing[0].code == ViolationCode::MissingSection,
           "missing_nutrition verdict");
  const auto wifi = validate(load_sheet("wifi"));
  c.expect(wifi.size() == 1 && wifi[0].code == ViolationCode::ForbiddenValue &&
               wifi[0].message.find("network_capability") != std::string::npos,
           "wifi verdict");
  const auto sim = simulate(load_scenario(oracle::fixtures() / "scenarios" / "person.json"));
  const auto& d = sim.devices.front();
  const auto pin = cross_check(load_sheet("pinout_mismatch"), *d.handle.device, sim.bus->exposure_log(d.handle.id));
  c.expect(pin.size() == 1 && pin[0].code == FindingCode::PinoutMismatch, "pinout_mismatch verdict");

  c.expect(g_person_report.has_value(), "no conformance report to attach");
  if (g_person_report) {
    const auto attached = attach_performance(load_sheet("person"), *g_person_report);
    const auto& perf = attached.section("end_to_end_performance");
    c.expect(perf.at("cells").size() == 12 && perf.at("trials_per_cell") == 50, "attached section is incomplete");
    c.expect(validate(attached).empty(), "attached datasheet does not validate");
  }
  return c;
}

// --- 7 ---------------------------------------------------------------------------

Check composition() {
  Check c;
  for (bool gaze : {true, false}) {
    const auto s = cli_detail::compose_demo_scenario(gaze, 0, kDefaultGazeWindowMs);
    const auto sim = simulate(s);
    const auto& light = sim.bus->line("LIGHT_ON");
    const bool lit = light.level_at(1500) == Level::High;
    c.expect(lit == gaze, gaze ? "light stayed off with gaze" : "light came on without gaze");
    if (!gaze) c.expect(light.transitions().empty(), "light moved without gaze");
  }

  std::mt19937_64 g(314);
  const SimTime span = 400, horizon = 520;
  for (int n = 0; n < 500 && c.ok; ++n) {
    const PinTrace a = oracle::random_trace(g, "A", span, 14), b = oracle::random_trace(g, "B", span, 14);
    const std::uint64_t p = g() % 80;
    const auto ta = oracle::sample(a, horizon), tb = oracle::sample(b, horizon);
    const int ha = a.initial_level() == Level::High, hb = b.initial_level() == Level::High;
    const std::vector<std::pair<CompositeSpec, oracle::Ticks>> cases{
        {{"invert", {"A"}, "O", 0}, oracle::tick_invert(ta)},
        {{"gated_event", {"A", "B"}, "O", p}, oracle::tick_gated(ta, ha, tb, p)},
        {{"debounce", {"A"}, "O", p}, oracle::tick_debounce(ta, ha, p)},
        {{"pulse_stretch", {"A"}, "O", p}, oracle::tick_stretch(ta, ha, p)},
        {{"sr_latch", {"A", "B"}, "O", 0}, oracle::tick_latch(ta, ha, tb, hb)},
    };
    for (const auto& [spec, want] : cases)
      c.expect(oracle::sample(evaluate_composite(spec, {{"A", a}, {"B", b}}), horizon) == want,
               spec.op + " disagrees with the tick oracle on pair " + std::to_string(n));
  }
  return c;
}

// --- 8 ---------------------------------------------------------------------------

Check determinism() {
  Check c;
  for (const auto& name : kScenarios) {
    for (int rep = 0; rep < 2; ++rep) {
      const auto dir = oracle::scratch_dir("acceptance_" + name + std::to_string(rep));
      write_outputs(simulate(load_scenario(oracle::fixtures() / "scenarios" / (name + ".json"))), dir);
      for (const auto& e : fs::directory_iterator(oracle::fixtures() / "golden" / name))
        c.expect(oracle::slurp(dir / e.path().filename()) == oracle::slurp(e.path()),
                 name + "/" + e.path().filename().string() + " differs from the golden file");
    }
  }
  for (const std::string proto : {"tap", "person_small"}) {
    const auto p = load_protocol(proto);
    const DeviceFactory f = [k = p.sensor_kind] {
      DeviceConfig cfg;
      cfg.kind = k;
      return make_device(cfg);
    };
    const auto base = canonical_dump(report_to_json(run(f, p)));
    for (std::uint64_t s : {1u, 2u, 3u})
      c.expect(canonical_dump(report_to_json(run(f, p, {1 + static_cast<unsigned>(s % 2), s}))) == base,
               proto + " report changes with trial order " + std::to_string(s));
  }
  return c;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Check()>>> criteria{
      {"AC1 interface contracts (tap width, person timing, voice latch)", interface_contracts},
      {"AC2 BCD protocol", bcd_protocol},
      {"AC3 seven-segment table and round trip", seven_segment},
      {"AC4 conformance reproducibility and monotonicity", conformance},
      {"AC5 isolation and audit", isolation},
      {"AC6 datasheet toolchain", datasheets},
      {"AC7 composition", composition},
      {"AC8 determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Check c;
    try {
      c = fn();
    } catch (const std::exception& e) {
      c.ok = false;
      c.why = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto id = name.substr(0, 3), rest = name.substr(4);
    std::cout << id << (c.ok ? " PASS " : " FAIL ") << rest << " (" << static_cast<int>(secs * 1000) << " ms)";
    if (!c.ok) std::cout << ": " << c.why;
    std::cout << std::endl;
    failed += !c.ok;
  }
  return failed ? 1 : 0;
}
