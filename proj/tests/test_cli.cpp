#include <gtest/gtest.h>

#include <sstream>

#include "adversary.hpp"
#include "mlsensor/cli.hpp"
#include "support.hpp"

using namespace mlsensor;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string fx(const std::string& rel) { return (oracle::fixtures() / rel).string(); }

const std::vector<std::string> kScenarios{"gaze",        "gaze_voice", "person",    "rodent_corpus",
                                          "tap",         "text_reader", "voice_pin", "voice_serial"};

}  // namespace

TEST(Cli, UsageErrorsAreTwo) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  EXPECT_EQ(cli({"simulate"}).code, 2);
  EXPECT_EQ(cli({"simulate", "/nonexistent/scenario.json"}).code, 2);
  EXPECT_EQ(cli({"datasheet", "validate", fx("person.mlsd.json"), "--format", "xml"}).code, 2);

  const auto dir = oracle::scratch_dir("cli_unknown_kind");
  std::ofstream(dir / "s.json") << R"({"devices": [{"id": "x", "kind": "THERMOSTAT"}], "duration_ms": 100, "seed": 1})";
  const auto r = cli({"simulate", (dir / "s.json").string(), "--out", (dir / "out").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
  EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(Cli, ValidateExitCodes) {
  for (const std::string ok : {"person", "gaze", "tap", "voice", "text_reader", "pinout_mismatch"}) {
    const auto r = cli({"datasheet", "validate", fx(ok + ".mlsd.json")});
    EXPECT_EQ(r.code, 0) << ok << "\n" << r.out << r.err;
  }
  for (const std::string bad : {"missing_nutrition", "wifi"}) {
    const auto r = cli({"datasheet", "validate", fx(bad + ".mlsd.json")});
    EXPECT_EQ(r.code, 1) << bad;
    EXPECT_FALSE(r.out.empty());
  }
  EXPECT_EQ(cli({"datasheet", "validate", fx("person.mlsd.json"), "--quiet"}).out, "");
}

TEST(Cli, ValidateJsonFormat) {
  const auto r = cli({"datasheet", "validate", fx("wifi.mlsd.json"), "--format", "json"});
  EXPECT_EQ(r.code, 1);
  const auto j = Json::parse(r.out);
  ASSERT_TRUE(j.is_array());
  ASSERT_FALSE(j.empty());
  EXPECT_EQ(j[0].at("section"), "privacy_security_label");
  EXPECT_EQ(j[0].at("code"), "FORBIDDEN_VALUE");
  EXPECT_EQ(Json::parse(cli({"datasheet", "validate", fx("person.mlsd.json"), "--format", "json"}).out), Json::array());
}

TEST(Cli, SimulateMatchesGoldenFilesByteForByte) {
  for (const auto& name : kScenarios) {
    for (int rep = 0; rep < 2; ++rep) {
      const auto dir = oracle::scratch_dir("cli_golden_" + name + std::to_string(rep));
      const auto r = cli({"simulate", fx("scenarios/" + name + ".json"), "--out", dir.string()});
      ASSERT_EQ(r.code, 0) << name << r.err;
      std::size_t n = 0;
      for (const auto& e : fs::directory_iterator(oracle::fixtures() / "golden" / name)) {
        const auto got = dir / e.path().filename();
        ASSERT_TRUE(fs::exists(got)) << got;
        EXPECT_EQ(oracle::slurp(got), oracle::slurp(e.path())) << name << "/" << e.path().filename();
        ++n;
      }
      EXPECT_EQ(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}), static_cast<long>(n)) << name;
    }
  }
}

TEST(Cli, SimulateJsonAgreesWithCsv) {
  const auto dir = oracle::scratch_dir("cli_sim_json");
  ASSERT_EQ(cli({"simulate", fx("scenarios/voice_serial.json"), "--out", dir.string(), "--format", "json", "-q"}).code, 0);
  const auto i2c = Json::parse(oracle::slurp(dir / "i2c.json"));
  const auto csv = oracle::slurp(oracle::fixtures() / "golden" / "voice_serial" / "i2c.csv");
  const auto rows = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) - 1;
  EXPECT_EQ(i2c.size(), rows);
  EXPECT_EQ(Json::parse(oracle::slurp(dir / "trace.json")), Json::object());  // serial only, no pin moved

  ASSERT_EQ(cli({"simulate", fx("scenarios/person.json"), "--out", dir.string(), "--format", "json", "-q"}).code, 0);
  const auto trace = Json::parse(oracle::slurp(dir / "trace.json"));
  const auto golden = oracle::slurp(oracle::fixtures() / "golden" / "person" / "trace.csv");
  std::size_t transitions = 0;
  for (const auto& [line, tr] : trace.items()) transitions += 1 + tr.at("transitions").size();  // csv has an initial row
  EXPECT_EQ(transitions, static_cast<std::size_t>(std::count(golden.begin(), golden.end(), '\n')) - 1);
}

TEST(Cli, NoOutputCarriesRawStimuli) {
  // a 96x96 frame or an audio window would need thousands of values on some line
  for (const auto& name : kScenarios) {
    const auto dir = oracle::scratch_dir("cli_raw_" + name);
    for (const std::string fmt : {"csv", "json"}) {
      const auto r = cli({"simulate", fx("scenarios/" + name + ".json"), "--out", dir.string(), "--format", fmt});
      ASSERT_EQ(r.code, 0);
      EXPECT_LT(r.out.size(), 1000u);
      for (const auto& e : fs::directory_iterator(dir)) {
        std::istringstream in(oracle::slurp(e.path()));
        for (std::string line; std::getline(in, line);) ASSERT_LT(line.size(), 200u) << e.path();
        if (e.path().filename().string().rfind("exposure_", 0) == 0 && fmt == "csv") {
          std::istringstream ex(oracle::slurp(e.path()));
          std::string header;
          std::getline(ex, header);
          EXPECT_EQ(header, "time_ms,channel,detail,bits");
        }
      }
    }
  }
}

TEST(Cli, Crosscheck) {
  EXPECT_EQ(cli({"datasheet", "crosscheck", fx("person.mlsd.json"), "--device-from", fx("scenarios/person.json")}).code, 0);
  EXPECT_EQ(cli({"datasheet", "crosscheck", fx("tap.mlsd.json"), "--device-from", fx("scenarios/tap.json")}).code, 0);
  const auto r = cli({"datasheet", "crosscheck", fx("pinout_mismatch.mlsd.json"), "--device-from", fx("scenarios/person.json")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("PINOUT_MISMATCH"), std::string::npos);
  EXPECT_EQ(cli({"datasheet", "crosscheck", fx("wifi.mlsd.json"), "--device-from", fx("scenarios/person.json")}).code, 1);
}

TEST(Cli, AuditCatchesALeakyDevice) {
  const auto scenario = load_scenario(oracle::fixtures() / "scenarios" / "person.json");
  const auto honest_dir = oracle::scratch_dir("cli_audit_honest");
  const auto leaky_dir = oracle::scratch_dir("cli_audit_leaky");
  write_outputs(simulate(scenario), honest_dir);
  write_outputs(simulate(scenario, {{"door", [] { return oracle::leaky_detector(); }}}), leaky_dir);

  const auto ok = cli({"audit", (honest_dir / "exposure_door.csv").string(), fx("person.mlsd.json")});
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_EQ(ok.out.rfind("PASS", 0), 0u);

  const auto bad = cli({"audit", (leaky_dir / "exposure_door.csv").string(), fx("person.mlsd.json")});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.out.find("UNDISCLOSED_EXPOSURE"), std::string::npos) << bad.out;
  EXPECT_NE(bad.out.find("FAIL"), std::string::npos);

  EXPECT_EQ(cli({"audit", (leaky_dir / "missing.csv").string(), fx("person.mlsd.json")}).code, 2);
}

TEST(Cli, ComposeDemo) {
  const auto dir = oracle::scratch_dir("cli_demo");
  const auto r = cli({"compose-demo", "--out", dir.string()});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("with gaze:    LIGHT_ON high ["), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("without gaze: LIGHT_ON high never"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(dir / "with_gaze" / "trace.csv"));
  EXPECT_TRUE(fs::exists(dir / "without_gaze" / "trace.csv"));
  EXPECT_EQ(cli({"compose-demo"}).out, r.out);
}

TEST(Cli, ConformanceAttachValidate) {
  const auto dir = oracle::scratch_dir("cli_flow");
  const auto report = (dir / "r.json").string(), sheet = (dir / "person.mlsd.json").string();
  const auto c = cli({"conformance", fx("protocols/person_small.json"), "--out", report});
  ASSERT_EQ(c.code, 0) << c.err;
  EXPECT_NE(c.out.find("envelope: "), std::string::npos);
  const auto first = oracle::slurp(report);
  ASSERT_EQ(cli({"conformance", fx("protocols/person_small.json"), "--out", report, "-q"}).code, 0);
  EXPECT_EQ(oracle::slurp(report), first);

  ASSERT_EQ(cli({"datasheet", "attach", fx("person.mlsd.json"), report, "--out", sheet}).code, 0);
  EXPECT_EQ(cli({"datasheet", "validate", sheet}).code, 0);
  const auto doc = Json::parse(oracle::slurp(sheet));
  EXPECT_EQ(doc.at("end_to_end_performance").at("envelope"),
            Json({{"max_distance_m", 1.0}, {"min_illuminance_lux", 200.0}}));

  // a report for another kind cannot be attached
  const auto tap = (dir / "tap.json").string();
  ASSERT_EQ(cli({"conformance", fx("protocols/tap.json"), "--out", tap, "-q"}).code, 0);
  EXPECT_EQ(cli({"datasheet", "attach", fx("person.mlsd.json"), tap}).code, 1);
}
