#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "adversary.hpp"
#include "mlsensor/sensors.hpp"
#include "mlsensor/stimuli/scene.hpp"
#include "support.hpp"

using namespace mlsensor;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::Io;
}

const std::map<std::string, std::string> kPersonWiring{{"VDD", "VDD"}, {"GND", "GND"}, {"DETECT", "DETECT"}};

// host view: no requires-expression can name a way to read a stimulus back
template <typename D>
concept StimulusQueryable = requires(D& d) { d.stimulus(); } || requires(D& d) { d.last_stimulus(); } ||
                            requires(D& d) { d.frames(); } || requires(D& d) { d.samples(); };
static_assert(!StimulusQueryable<SensorDevice>);
static_assert(!StimulusQueryable<VisionPinSensor>);
static_assert(!StimulusQueryable<TapSensor>);
static_assert(!StimulusQueryable<VoiceSensor>);
static_assert(!StimulusQueryable<TextReader>);

}  // namespace

TEST(ParameterBlob, RoundTripsValues) {
  const std::vector<double> v{1.5, -2.0, 0.0, 1e-9};
  const auto b = ParameterBlob::encode(SensorKind::Tap, v);
  EXPECT_EQ(b.bytes().size(), ParameterBlob::kHeaderLen + 8 * v.size() + 4);
  EXPECT_EQ(b.decode(SensorKind::Tap), v);
}

TEST(ParameterBlob, FramingErrors) {
  const std::vector<double> v{1.0, 2.0};
  auto bytes = ParameterBlob::encode(SensorKind::Person, v).bytes();

  auto crc = bytes;
  crc.back() ^= 0x01;
  EXPECT_EQ(code_of([&] { ParameterBlob(crc).decode(SensorKind::Person); }), Errc::BadCrc);

  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_EQ(code_of([&] { ParameterBlob(magic).decode(SensorKind::Person); }), Errc::BadMagic);

  EXPECT_EQ(code_of([&] { ParameterBlob(bytes).decode(SensorKind::Gaze); }), Errc::KindMismatch);

  auto shortb = bytes;
  shortb.resize(8);
  EXPECT_EQ(code_of([&] { ParameterBlob(shortb).decode(SensorKind::Person); }), Errc::MalformedBlob);

  auto payload = bytes;
  payload[12] ^= 0xFF;  // payload byte, crc now stale
  EXPECT_EQ(code_of([&] { ParameterBlob(payload).decode(SensorKind::Person); }), Errc::BadCrc);
}

TEST(ParameterBlob, LoadAfterPowerOnIsRefused) {
  Bus bus;
  auto h = power_on(person_detector(), bus, kPersonWiring);
  EXPECT_EQ(code_of([&] { h->load_parameters(rodent_blob()); }), Errc::Powered);
}

TEST(ParameterBlob, RandomOperationSequencesNeverUnfreeze) {
  std::mt19937_64 g(3);
  for (int run = 0; run < 100; ++run) {
    Bus bus;
    auto h = power_on(tap_sensor(), bus, {{"VDD", "V"}, {"GND", "G"}, {"TAP", "T"}});
    for (int k = 0; k < 10; ++k) {
      switch (g() % 3) {
        case 0: bus.advance(1 + g() % 50); break;
        case 1: bus.i2c_read(0x29, 2); break;
        default: break;
      }
      const auto blob = ParameterBlob::encode(SensorKind::Tap, encode_tap_params({0.5 + (g() % 10) / 10.0, 100}));
      ASSERT_EQ(code_of([&] { h->load_parameters(blob); }), Errc::Powered);
    }
  }
}

TEST(ParameterBlob, RodentCalibrationRetargetsThePersonDetector) {
  // reference: the rodent template applied directly to frames
  int rodent_hits = 0, person_hits = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    SceneParams rodent;
    rodent.person_present = true;
    rodent.figure = FigureKind::Rodent;
    rodent.distance_m = 0.4;
    rodent.seed = s;
    SceneParams person;
    person.person_present = true;
    person.seed = s;
    rodent_hits += detect_with_template(render_scene(rodent), presets::rodent_template()).present;
    person_hits += detect_with_template(render_scene(person), presets::rodent_template()).present;
  }
  EXPECT_EQ(rodent_hits, 20);
  EXPECT_EQ(person_hits, 0);

  auto run = [](FigureKind fig, bool calibrated) {
    auto dev = person_detector();
    if (calibrated) dev->load_parameters(rodent_blob());
    Bus bus;
    auto h = power_on(std::move(dev), bus, kPersonWiring);
    for (SimTime t = 0; t < 1000; t += 100) {
      SceneParams sp;
      sp.person_present = true;
      sp.figure = fig;
      sp.distance_m = fig == FigureKind::Rodent ? 0.4 : 1.0;
      sp.seed = t;
      h->feed_stimulus(render_scene(sp), t);
    }
    bus.advance(1000);
    return bus.line("DETECT").level_at(1000) == Level::High;
  };
  EXPECT_TRUE(run(FigureKind::Rodent, true));
  EXPECT_FALSE(run(FigureKind::Person, true));
  EXPECT_TRUE(run(FigureKind::Person, false));
  EXPECT_FALSE(run(FigureKind::Rodent, false));
}

TEST(PowerOn, WiringRules) {
  Bus bus;
  auto h = power_on(person_detector(), bus, kPersonWiring);
  EXPECT_TRUE(h->powered());
  EXPECT_EQ(bus.line("DETECT").initial_level(), Level::Low);
  EXPECT_TRUE(bus.line("DETECT").transitions().empty());
  EXPECT_FALSE(bus.has_line("VDD"));  // power pins are not logic lines

  Bus b2;
  EXPECT_EQ(code_of([&] { power_on(person_detector(), b2, {{"VDD", "V"}, {"GND", "G"}}); }), Errc::MissingPin);
  EXPECT_EQ(code_of([&] { power_on(person_detector(), b2, {{"VDD", "V"}, {"GND", "G"}, {"DETECT", "D"}, {"X", "Y"}}); }),
            Errc::InvalidArgument);

  Bus b3;
  power_on(text_reader(), b3, {{"VDD", "V"}, {"GND", "G"}});
  EXPECT_EQ(code_of([&] { power_on(text_reader(), b3, {{"VDD", "V"}, {"GND", "G"}}); }), Errc::AddressConflict);
}

TEST(FeedStimulus, ModalityIsChecked) {
  Bus bus;
  auto tap = power_on(tap_sensor(), bus, {{"VDD", "V"}, {"GND", "G"}, {"TAP", "T"}});
  EXPECT_NO_THROW(tap->feed_stimulus(synth_imu({}, 100, 0.01, 1), 0));
  EXPECT_EQ(code_of([&] { tap->feed_stimulus(Frame(), 0); }), Errc::ModalityMismatch);
  auto voice = voice_sensor_pin();
  EXPECT_EQ(code_of([&] { voice->feed_stimulus(Frame(), 0); }), Errc::ModalityMismatch);
}

TEST(DeclaredSurface, ShippedShapes) {
  const auto p = person_detector()->declared_surface();
  EXPECT_EQ(p.pins, (std::vector<PinDecl>{{"VDD", PinRole::Power}, {"GND", PinRole::Ground}, {"DETECT", PinRole::SignalOut}}));
  EXPECT_FALSE(p.serial);

  const auto t = text_reader(0x2A)->declared_surface();
  EXPECT_EQ(t.pins.size(), 2u);
  ASSERT_TRUE(t.serial);
  EXPECT_EQ(t.serial->address, 0x2A);
  EXPECT_EQ(t.serial->register_map_len, 8u);

  const auto tap = tap_sensor()->declared_surface();
  EXPECT_EQ(tap.pins.size(), 3u);
  EXPECT_EQ(tap.signal_pins(), std::vector<std::string>{"TAP"});
  EXPECT_FALSE(tap.serial);

  EXPECT_EQ(voice_sensor_pin()->declared_surface().signal_pins(), std::vector<std::string>{"STATE"});
}

TEST(Audit, Findings) {
  const auto decl = person_detector()->declared_surface();
  std::vector<ExposureRecord> log{{200, ChannelKind::Pin, "DETECT", "DETECT", 0, 1}};
  EXPECT_TRUE(audit(log, decl).pass);

  log.push_back({300, ChannelKind::Serial, {}, {}, 0x29, 16});
  const auto v = audit(log, decl);
  ASSERT_EQ(v.findings.size(), 1u);
  EXPECT_EQ(v.findings[0].code, FindingCode::UndeclaredChannel);

  const auto reader = text_reader()->declared_surface();
  const std::vector<ExposureRecord> big{{500, ChannelKind::Serial, {}, {}, 0x29, 72}};
  const auto w = audit(big, reader);
  ASSERT_EQ(w.findings.size(), 1u);
  EXPECT_EQ(w.findings[0].code, FindingCode::OversizedPayload);

  const std::vector<ExposureRecord> stray{{500, ChannelKind::Pin, "GND", "G", 0, 1}};
  EXPECT_EQ(audit(stray, decl).findings.at(0).code, FindingCode::UndeclaredChannel);
}

TEST(Audit, CatchesADeviceWritingOnAnUndeclaredChannel) {
  Bus bus;
  auto h = power_on(oracle::leaky_detector(), bus, kPersonWiring);
  bus.advance(1000);
  const auto& log = bus.exposure_log(h.id);
  const auto v = audit(log, h->declared_surface());
  EXPECT_FALSE(v.pass);
  ASSERT_EQ(v.findings.size(), 1u);
  EXPECT_EQ(v.findings[0].code, FindingCode::UndeclaredChannel);
  // the write shows up on the bus log as well
  ASSERT_EQ(bus.i2c_log().size(), 1u);
  EXPECT_EQ(bus.i2c_log()[0].direction, I2CDirection::Write);
}

TEST(Exposure, CsvRoundTrip) {
  const std::vector<ExposureRecord> log{{200, ChannelKind::Pin, "DETECT", "door", 0, 1},
                                        {600, ChannelKind::Serial, {}, {}, 0x29, 64}};
  std::stringstream ss;
  write_exposure_csv(ss, log);
  EXPECT_EQ(ss.str(), "time_ms,channel,detail,bits\n200,PIN,DETECT@door,1\n600,SERIAL,0x29,64\n");
  EXPECT_EQ(read_exposure_csv(ss), log);
  std::stringstream bad("time_ms,channel,detail,bits\n1,WIFI,x,1\n");
  EXPECT_EQ(code_of([&] { read_exposure_csv(bad); }), Errc::ParseError);
  EXPECT_EQ(channel_label(log[0]), "pin:DETECT");
  EXPECT_EQ(channel_label(log[1]), "i2c:0x29");
}

TEST(Exposure, HostViewEqualsExposureLog) {
  // everything the host can observe, rebuilt from traces and the I2C log,
  // must match the exposure records one for one
  Bus bus;
  auto person = power_on(person_detector(), bus, kPersonWiring);
  auto reader = power_on(text_reader(), bus, {{"VDD", "V"}, {"GND", "G"}});
  auto tap = power_on(tap_sensor(), bus, {{"VDD", "V"}, {"GND", "G"}, {"TAP", "TAP"}});
  for (SimTime t = 0; t < 1500; t += 100) {
    SceneParams sp;
    sp.person_present = t < 800;
    sp.seed = t;
    person->feed_stimulus(render_scene(sp), t);
  }
  reader->feed_stimulus(render_display(parse_reading("88.1")), 0);
  tap->feed_stimulus(synth_imu({250, 1200}, 1500, 0.02, 9), 0);
  bus.advance(700);
  bus.i2c_read(0x29, 8);
  bus.i2c_read(0x50, 2);  // nobody home: nothing exposed
  bus.advance(800);

  std::multiset<std::tuple<SimTime, std::string, std::size_t>> host, logged;
  for (const auto& [id, trace] : bus.lines())
    for (const auto& tr : trace.transitions()) host.insert({tr.at, "line:" + id, 1});
  for (const auto& tx : bus.i2c_log())
    if (tx.status == I2CStatus::Ack) host.insert({tx.at, "i2c:" + hex_address(tx.address), 8 * tx.payload.size()});
  for (auto id : {person.id, reader.id, tap.id})
    for (const auto& r : bus.exposure_log(id))
      logged.insert({r.at, r.channel == ChannelKind::Pin ? "line:" + r.line_id : channel_label(r), r.bits});
  EXPECT_EQ(host, logged);
  EXPECT_GE(logged.size(), 5u);
}

TEST(Exposure, PersonRunIsBoundedByCadence) {
  std::mt19937_64 g(8);
  for (int run = 0; run < 5; ++run) {
    Bus bus;
    auto h = power_on(person_detector(), bus, kPersonWiring);
    const SimTime T = 2000;
    for (SimTime t = 0; t < T; t += 100) {
      SceneParams sp;
      sp.person_present = g() & 1;
      sp.seed = g();
      h->feed_stimulus(render_scene(sp), t);
    }
    bus.advance(T);
    const auto& log = bus.exposure_log(h.id);
    EXPECT_LE(log.size(), (T + 99) / 100);
    for (const auto& r : log) {
      EXPECT_EQ(r.channel, ChannelKind::Pin);
      EXPECT_EQ(r.bits, 1u);
    }
  }
}
