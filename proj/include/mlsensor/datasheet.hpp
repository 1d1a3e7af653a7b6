#pragma once

// ML-sensor datasheets: a JSON document with ten required sections, plus the
// checks that tie a datasheet to a real device and a real run.

#include <algorithm>
#include <array>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mlsensor/conformance.hpp"
#include "mlsensor/devkit.hpp"

namespace mlsensor {

inline constexpr int kDatasheetSchema = 1;

inline constexpr std::array<std::string_view, 10> kSectionNames{
    "description",            "compliance",        "model_characteristics",    "dataset_nutrition",
    "privacy_security_label", "environmental_impact", "end_to_end_performance", "form_factor",
    "hardware_characteristics", "comm_spec_pinout",
};

inline constexpr std::array<std::string_view, 10> kSectionTitles{
    "Description, Features and Use Cases",
    "Compliance",
    "Model Characteristics",
    "Dataset Nutrition Label",
    "Security and Privacy Label",
    "Environmental Impact",
    "End-to-End Performance",
    "Diagrams and Form Factor",
    "Hardware Characteristics",
    "Communication Specification and Pinout",
};

struct Datasheet {
  Json doc = Json::object();

  bool has_section(std::string_view name) const { return doc.is_object() && doc.contains(std::string(name)); }
  const Json& section(std::string_view name) const { return doc.at(std::string(name)); }
  std::size_t section_count() const {
    return static_cast<std::size_t>(
        std::count_if(kSectionNames.begin(), kSectionNames.end(), [&](auto n) { return has_section(n); }));
  }
  SensorKind sensor_kind() const { return parse_sensor_kind(doc.at("sensor_kind").get<std::string>()); }

  friend bool operator==(const Datasheet&, const Datasheet&) = default;
};

// --- parse ---------------------------------------------------------------------

struct ParseIssue {
  std::size_t line = 0, column = 0;  // 1-based
  Errc code = Errc::ParseError;
  std::string message;
};

struct ParseResult {
  std::optional<Datasheet> datasheet;
  std::vector<ParseIssue> issues;

  bool ok() const { return datasheet.has_value(); }
};

namespace detail {

inline std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

struct KeyHit {
  std::string key;
  std::size_t offset;
};

/// Keys of the top-level object with their byte offsets. Assumes valid JSON.
inline std::vector<KeyHit> top_level_keys(std::string_view text) {
  std::vector<KeyHit> out;
  int depth = 0;
  bool top_is_object = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '"') {
      const std::size_t start = i;
      std::string s;
      for (++i; i < text.size() && text[i] != '"'; ++i) {
        if (text[i] == '\\') ++i;
        s += text[i];
      }
      if (depth == 1 && top_is_object) {
        std::size_t j = i + 1;
        while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j < text.size() && text[j] == ':') out.push_back({s, start});
      }
    } else if (c == '{' || c == '[') {
      if (depth == 0) top_is_object = c == '{';
      ++depth;
    } else if (c == '}' || c == ']') {
      --depth;
    }
  }
  return out;
}

}  // namespace detail

/// UTF-8 JSON in, datasheet out. Syntax errors carry line and column; a
/// repeated top-level section is an error too (JSON itself would keep the last).
/// An empty document parses as an empty datasheet.
inline ParseResult parse_datasheet(std::string_view text) {
  ParseResult r;
  const bool blank = std::all_of(text.begin(), text.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
  if (blank) {
    r.datasheet = Datasheet{};
    return r;
  }
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    const auto off = e.byte > 0 ? e.byte - 1 : 0;
    const auto [l, c] = detail::line_col(text, off);
    std::string msg = e.what();
    if (const auto p = msg.find("syntax error"); p != std::string::npos) msg = msg.substr(p);
    r.issues.push_back({l, c, Errc::ParseError, msg});
    return r;
  }
  if (!doc.is_object()) {
    r.issues.push_back({1, 1, Errc::ParseError, "datasheet must be a JSON object"});
    return r;
  }
  std::set<std::string> seen;
  for (const auto& k : detail::top_level_keys(text)) {
    if (!seen.insert(k.key).second) {
      const auto [l, c] = detail::line_col(text, k.offset);
      r.issues.push_back({l, c, Errc::DuplicateSection, "duplicate section '" + k.key + "'"});
    }
  }
  if (r.issues.empty()) r.datasheet = Datasheet{std::move(doc)};
  return r;
}

inline std::string format_issue(const ParseIssue& i) {
  return std::to_string(i.line) + ":" + std::to_string(i.column) + ": " + std::string(to_string(i.code)) + ": " +
         i.message;
}

// --- validate ------------------------------------------------------------------

enum class ViolationCode : std::uint8_t { MissingSection, MissingField, Inconsistent, ForbiddenValue };

inline constexpr std::string_view to_string(ViolationCode c) noexcept {
  switch (c) {
    case ViolationCode::MissingSection: return "MISSING_SECTION";
    case ViolationCode::MissingField: return "MISSING_FIELD";
    case ViolationCode::Inconsistent: return "INCONSISTENT";
    case ViolationCode::ForbiddenValue: return "FORBIDDEN_VALUE";
  }
  return "UNKNOWN";
}

struct Violation {
  std::string section;
  ViolationCode code;
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

namespace detail {

class Checker {
 public:
  std::vector<Violation> out;

  void add(std::string_view section, ViolationCode code, std::string msg) {
    out.push_back({std::string(section), code, std::move(msg)});
  }

  /// Field present and of the expected JSON type; records MISSING_FIELD otherwise.
  template <typename Pred>
  const Json* field(std::string_view section, const Json& obj, const char* name, Pred ok, const char* what) {
    if (!obj.contains(name)) {
      add(section, ViolationCode::MissingField, std::string(name) + " is missing");
      return nullptr;
    }
    const Json& v = obj.at(name);
    if (!ok(v)) {
      add(section, ViolationCode::MissingField, std::string(name) + " must be " + what);
      return nullptr;
    }
    return &v;
  }
};

inline bool is_text(const Json& v) { return v.is_string() && !v.get<std::string>().empty(); }
inline bool is_text_list(const Json& v) {
  return v.is_array() && std::all_of(v.begin(), v.end(), [](const Json& x) { return is_text(x); });
}
inline bool is_count(const Json& v) { return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0); }
inline bool is_number_or_unreported(const Json& v) {
  return (v.is_number() && v.get<double>() >= 0) || (v.is_string() && v.get<std::string>() == "unreported");
}

inline std::optional<std::uint8_t> parse_hex_address(const Json& v) {
  if (!v.is_string()) return std::nullopt;
  const auto s = v.get<std::string>();
  if (s.size() < 3 || s.rfind("0x", 0) != 0) return std::nullopt;
  try {
    std::size_t used = 0;
    const auto a = std::stoul(s.substr(2), &used, 16);
    if (used != s.size() - 2 || a > 0x7F) return std::nullopt;
    return static_cast<std::uint8_t>(a);
  } catch (const std::logic_error&) {
    return std::nullopt;
  }
}

}  // namespace detail

/// Structural violations, sorted by (section, code). Empty means valid.
inline std::vector<Violation> validate(const Datasheet& ds) {
  using detail::is_text;
  using detail::is_text_list;
  using VC = ViolationCode;
  detail::Checker ck;
  const Json& d = ds.doc;
  if (!d.is_object()) {
    ck.add("document", VC::MissingSection, "document is not an object");
    return ck.out;
  }

  if (!d.contains("schema")) ck.add("header", VC::MissingField, "schema is missing");
  else if (d.at("schema") != kDatasheetSchema) ck.add("header", VC::ForbiddenValue, "schema must be 1");
  if (!d.contains("sensor_kind")) {
    ck.add("header", VC::MissingField, "sensor_kind is missing");
  } else {
    try {
      (void)ds.sensor_kind();
    } catch (const std::exception&) {
      ck.add("header", VC::ForbiddenValue, "sensor_kind is not a known kind");
    }
  }

  auto obj_section = [&](std::string_view name) -> const Json* {
    if (!ds.has_section(name)) {
      ck.add(name, VC::MissingSection, std::string(name) + " section is missing");
      return nullptr;
    }
    const Json& s = ds.section(name);
    if (!s.is_object()) {
      ck.add(name, VC::MissingField, std::string(name) + " must be an object");
      return nullptr;
    }
    return &s;
  };
  auto any = [](const Json&) { return true; };

  if (const Json* s = obj_section("description")) {
    ck.field("description", *s, "text", is_text, "non-empty text");
    ck.field("description", *s, "features", is_text_list, "a list of text");
    ck.field("description", *s, "use_cases", is_text_list, "a list of text");
  }

  if (!ds.has_section("compliance")) ck.add("compliance", VC::MissingSection, "compliance section is missing");
  else if (!is_text_list(ds.section("compliance"))) ck.add("compliance", VC::MissingField, "compliance must be a list of marks");

  if (const Json* s = obj_section("model_characteristics")) {
    const char* n = "model_characteristics";
    ck.field(n, *s, "architecture", is_text, "non-empty text");
    ck.field(n, *s, "input_modality", is_text, "non-empty text");
    ck.field(n, *s, "input_shape", [](const Json& v) { return v.is_array() && !v.empty() &&
        std::all_of(v.begin(), v.end(), [](const Json& x) { return x.is_number_integer() && x.get<long long>() > 0; }); },
             "a list of positive integers");
    ck.field(n, *s, "train_set_size", detail::is_count, "a non-negative integer");
    ck.field(n, *s, "test_set_size", detail::is_count, "a non-negative integer");
    ck.field(n, *s, "open_source", [](const Json& v) { return v.is_boolean(); }, "true or false");
    ck.field(n, *s, "validation_authority", is_text, "non-empty text");
  }

  if (const Json* s = obj_section("dataset_nutrition")) {
    const char* n = "dataset_nutrition";
    ck.field(n, *s, "provenance", is_text, "non-empty text");
    ck.field(n, *s, "licensing", is_text, "non-empty text");
    ck.field(n, *s, "ethical_review", [](const Json& v) { return v.is_boolean(); }, "true or false");
    ck.field(n, *s, "known_skews", is_text_list, "a list of text");
  }

  std::set<std::string> exposed;
  if (const Json* s = obj_section("privacy_security_label")) {
    const char* n = "privacy_security_label";
    ck.field(n, *s, "data_collected", is_text, "non-empty text");
    if (const Json* e = ck.field(n, *s, "data_exposed", is_text_list, "a list of channel labels"))
      for (const auto& x : *e) exposed.insert(x.get<std::string>());
    if (const Json* u = ck.field(n, *s, "update_policy", is_text, "non-empty text"); u && *u != "none")
      ck.add(n, VC::ForbiddenValue, "update_policy must be \"none\": deployed sensors are not updatable");
    if (const Json* c = ck.field(n, *s, "network_capability", is_text, "non-empty text"); c && *c != "none")
      ck.add(n, VC::ForbiddenValue, "network_capability must be \"none\", found \"" + c->get<std::string>() + "\"");
  }

  if (const Json* s = obj_section("environmental_impact")) {
    const char* n = "environmental_impact";
    ck.field(n, *s, "training_footprint_kgco2e", detail::is_number_or_unreported, "a number or \"unreported\"");
    ck.field(n, *s, "energy_per_inference_mj", detail::is_number_or_unreported, "a number or \"unreported\"");
  }

  if (const Json* s = obj_section("end_to_end_performance")) {
    const char* n = "end_to_end_performance";
    ck.field(n, *s, "conditions", is_text_list, "a list of condition axis names");
    ck.field(n, *s, "cells", [](const Json& v) { return v.is_array(); }, "a list");
    ck.field(n, *s, "envelope", [](const Json& v) { return v.is_null() || v.is_object(); }, "an object or null");
  }

  if (const Json* s = obj_section("form_factor")) {
    const char* n = "form_factor";
    ck.field(n, *s, "dimensions_mm", [](const Json& v) { return v.is_array() && v.size() == 3 &&
        std::all_of(v.begin(), v.end(), [](const Json& x) { return x.is_number() && x.get<double>() > 0; }); },
             "three positive numbers");
    ck.field(n, *s, "mounting", is_text, "non-empty text");
  }

  if (const Json* s = obj_section("hardware_characteristics")) {
    const char* n = "hardware_characteristics";
    auto range = [](const Json& v) { return v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number(); };
    if (const Json* t = ck.field(n, *s, "operating_temperature_c", range, "[min, max]"); t && (*t)[0] >= (*t)[1])
      ck.add(n, VC::Inconsistent, "operating_temperature_c minimum is not below maximum");
    ck.field(n, *s, "power_mw", [](const Json& v) { return v.is_number() && v.get<double>() >= 0; }, "a non-negative number");
    if (const Json* v = ck.field(n, *s, "input_voltage_v", range, "[min, max]"); v && (*v)[0] > (*v)[1])
      ck.add(n, VC::Inconsistent, "input_voltage_v minimum exceeds maximum");
    ck.field(n, *s, "esd_rating", is_text, "non-empty text");
  }

  if (const Json* s = obj_section("comm_spec_pinout")) {
    const char* n = "comm_spec_pinout";
    bool has_signal = false, has_power = false, has_ground = false;
    if (const Json* pins = ck.field(n, *s, "pins", [](const Json& v) { return v.is_array(); }, "a list")) {
      std::set<std::string> names;
      for (const auto& p : *pins) {
        if (!p.is_object() || !p.contains("name") || !p.contains("role") || !is_text(p["name"]) || !p["role"].is_string()) {
          ck.add(n, VC::MissingField, "every pin needs a name and a role");
          continue;
        }
        if (!names.insert(p["name"].get<std::string>()).second)
          ck.add(n, VC::Inconsistent, "pin '" + p["name"].get<std::string>() + "' is listed twice");
        try {
          const auto role = parse_pin_role(p["role"].get<std::string>());
          has_signal |= role == PinRole::SignalOut;
          has_power |= role == PinRole::Power;
          has_ground |= role == PinRole::Ground;
        } catch (const Error&) {
          ck.add(n, VC::Inconsistent, "pin '" + p["name"].get<std::string>() + "' has unknown role");
        }
      }
      if (!has_power || !has_ground) ck.add(n, VC::Inconsistent, "pinout lacks a power or ground pin");
    }
    bool has_serial = false;
    if (const Json* ser = ck.field(n, *s, "serial", [](const Json& v) { return v.is_null() || v.is_object(); },
                                   "an object or null");
        ser && ser->is_object()) {
      has_serial = true;
      const auto addr = ser->contains("address") ? detail::parse_hex_address(ser->at("address")) : std::nullopt;
      if (!addr || !valid_i2c_address(*addr)) ck.add(n, VC::Inconsistent, "serial address must be \"0x08\"..\"0x77\"");
      ck.field(n, *ser, "register_map_len", [](const Json& v) { return v.is_number_integer() && v.get<long long>() > 0; },
               "a positive integer");
      ck.field(n, *ser, "packet_spec_id", is_text, "non-empty text");
    }
    if (const Json* pins = s->contains("pins") ? &s->at("pins") : nullptr; pins && pins->is_array() && !has_signal && !has_serial)
      ck.add(n, VC::Inconsistent, "device declares no output channel");
    ck.field(n, *s, "timing", [](const Json& v) { return v.is_object() && std::all_of(v.begin(), v.end(),
        [](const Json& x) { return detail::is_count(x); }); }, "an object of non-negative integers");
    (void)any;
  }

  std::stable_sort(ck.out.begin(), ck.out.end(), [](const Violation& a, const Violation& b) {
    return std::tie(a.section, a.code) < std::tie(b.section, b.code);
  });
  return ck.out;
}

inline std::string format_violation(const Violation& v) {
  return v.section + ": " + std::string(to_string(v.code)) + ": " + v.message;
}

// --- render ----------------------------------------------------------------------

enum class RenderMode : std::uint8_t { Machine, Human };

namespace detail {

inline std::string plain(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "n/a";
  if (v.is_array()) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ", ") + plain(x);
    return s;
  }
  return v.dump();
}

inline void human_fields(std::ostream& os, const Json& obj) {
  for (const auto& [k, v] : obj.items()) {
    if (v.is_object()) {
      os << "- " << k << ":\n";
      for (const auto& [k2, v2] : v.items()) os << "  - " << k2 << ": " << plain(v2) << "\n";
    } else if (v.is_array() && !v.empty() && v[0].is_object()) {
      os << "- " << k << ":\n";
      for (const auto& x : v) os << "  - " << x.dump() << "\n";
    } else {
      os << "- " << k << ": " << plain(v) << "\n";
    }
  }
}

}  // namespace detail

inline std::string render(const Datasheet& ds, RenderMode mode) {
  const auto v = validate(ds);
  if (!v.empty())
    throw Error(Errc::InvalidDatasheet, std::to_string(v.size()) + " violation(s), first: " + format_violation(v.front()));
  if (mode == RenderMode::Machine) return canonical_dump(ds.doc);

  std::ostringstream os;
  os << "# " << std::string(to_string(ds.sensor_kind())) << " ML sensor datasheet\n";
  for (std::size_t i = 0; i < kSectionNames.size(); ++i) {
    const Json& s = ds.section(kSectionNames[i]);
    os << "\n## " << kSectionTitles[i] << "\n\n";
    if (kSectionNames[i] == "description") {
      os << s.at("text").get<std::string>() << "\n\nFeatures:\n";
      for (const auto& f : s.at("features")) os << "- " << f.get<std::string>() << "\n";
      os << "\nUse cases:\n";
      for (const auto& u : s.at("use_cases")) os << "- " << u.get<std::string>() << "\n";
    } else if (kSectionNames[i] == "compliance") {
      for (const auto& m : s) os << "- " << m.get<std::string>() << "\n";
    } else if (kSectionNames[i] == "end_to_end_performance") {
      os << "Conditions: " << detail::plain(s.at("conditions")) << "\n\n";
      const auto cond = s.at("conditions");
      if (!s.at("cells").empty() && cond.size() == 2) {
        const auto a = cond[0].get<std::string>(), b = cond[1].get<std::string>();
        os << "| " << a << " | " << b << " | TPR | FPR | mean latency (ms) |\n|---|---|---|---|---|\n";
        for (const auto& c : s.at("cells"))
          os << "| " << detail::plain(c.value(a, Json())) << " | " << detail::plain(c.value(b, Json())) << " | "
             << detail::plain(c.value("tpr", Json())) << " | " << detail::plain(c.value("fpr", Json())) << " | "
             << detail::plain(c.value("latency_mean_ms", Json())) << " |\n";
        os << "\n";
      }
      os << "Operating envelope: " << (s.at("envelope").is_null() ? "not measured" : s.at("envelope").dump()) << "\n";
    } else {
      detail::human_fields(os, s);
    }
  }
  return os.str();
}

// --- device binding ----------------------------------------------------------------

/// The comm_spec_pinout section a device's own declaration implies.
inline Json pinout_json(const SensorDevice& dev) {
  const auto& decl = dev.declared_surface();
  Json pins = Json::array();
  for (const auto& p : decl.pins) pins.push_back({{"name", p.name}, {"role", std::string(to_string(p.role))}});
  Json serial = nullptr;
  if (decl.serial)
    serial = {{"address", hex_address(decl.serial->address)},
              {"register_map_len", decl.serial->register_map_len},
              {"packet_spec_id", decl.serial->packet_spec_id}};
  Json timing = Json::object();
  for (const auto& [k, v] : dev.timing_constants()) timing[k] = v;
  return {{"pins", pins}, {"serial", serial}, {"timing", timing}};
}

/// The interface a datasheet claims, rebuilt from its pinout section.
inline InterfaceDecl declared_interface(const Datasheet& ds) {
  const Json& pin = ds.section("comm_spec_pinout");
  InterfaceDecl d;
  for (const auto& p : pin.at("pins"))
    d.pins.push_back({p.at("name").get<std::string>(), parse_pin_role(p.at("role").get<std::string>())});
  if (const Json& ser = pin.at("serial"); !ser.is_null())
    d.serial = SerialDecl{*detail::parse_hex_address(ser.at("address")), ser.at("register_map_len").get<std::size_t>(),
                          ser.at("packet_spec_id").get<std::string>()};
  return d;
}

/// Observed channels the privacy label does not list, one finding per channel.
inline std::vector<Finding> undisclosed_exposure(const Datasheet& ds, std::span<const ExposureRecord> log) {
  std::set<std::string> exposed;
  for (const auto& x : ds.section("privacy_security_label").at("data_exposed")) exposed.insert(x.get<std::string>());
  std::vector<Finding> out;
  std::set<std::string> reported;
  for (const auto& r : log) {
    const auto label = channel_label(r);
    if (!exposed.count(label) && reported.insert(label).second)
      out.push_back({FindingCode::UndisclosedExposure, label + " was observed but is not in data_exposed"});
  }
  return out;
}

/// A recorded exposure log judged against a datasheet alone: the declared
/// pinout stands in for the device.
inline AuditVerdict audit_against(const Datasheet& ds, std::span<const ExposureRecord> log) {
  const auto v = validate(ds);
  if (!v.empty()) throw Error(Errc::InvalidDatasheet, format_violation(v.front()));
  auto verdict = audit(log, declared_interface(ds));
  for (auto& f : undisclosed_exposure(ds, log)) verdict.findings.push_back(std::move(f));
  verdict.pass = verdict.findings.empty();
  return verdict;
}

/// Findings for: pinout or serial disagreeing with the device, timing
/// constants disagreeing, audit findings on the run log, and observed
/// channels the privacy label does not disclose.
inline std::vector<Finding> cross_check(const Datasheet& ds, const SensorDevice& dev,
                                        std::span<const ExposureRecord> run_log) {
  const auto v = validate(ds);
  if (!v.empty()) throw Error(Errc::InvalidDatasheet, format_violation(v.front()));
  std::vector<Finding> out;
  const Json& pin = ds.section("comm_spec_pinout");
  const Json actual = pinout_json(dev);

  auto pin_set = [](const Json& pins) {
    std::set<std::pair<std::string, std::string>> s;
    for (const auto& p : pins) s.insert({p.at("name").get<std::string>(), p.at("role").get<std::string>()});
    return s;
  };
  if (pin_set(pin.at("pins")) != pin_set(actual.at("pins")))
    out.push_back({FindingCode::PinoutMismatch, "datasheet pins differ from the device's declared pins"});
  if (pin.at("serial").is_null() != actual.at("serial").is_null())
    out.push_back({FindingCode::PinoutMismatch, actual.at("serial").is_null()
                                                    ? "datasheet declares a serial port the device lacks"
                                                    : "device has a serial port the datasheet omits"});
  else if (!pin.at("serial").is_null() && pin.at("serial") != actual.at("serial"))
    out.push_back({FindingCode::PinoutMismatch, "serial declaration differs: datasheet " + pin.at("serial").dump() +
                                                    ", device " + actual.at("serial").dump()});

  const Json& dt = pin.at("timing");
  for (const auto& [k, val] : actual.at("timing").items()) {
    if (!dt.contains(k)) out.push_back({FindingCode::TimingMismatch, k + " is not documented"});
    else if (dt.at(k) != val)
      out.push_back({FindingCode::TimingMismatch, k + ": datasheet " + dt.at(k).dump() + ", device " + val.dump()});
  }
  for (const auto& [k, val] : dt.items())
    if (!actual.at("timing").contains(k)) out.push_back({FindingCode::TimingMismatch, k + " does not apply to this device"});

  for (auto& f : audit(run_log, dev.declared_surface()).findings) out.push_back(std::move(f));

  for (auto& f : undisclosed_exposure(ds, run_log)) out.push_back(std::move(f));
  return out;
}

/// Replaces the end-to-end performance section with a report's grid and envelope.
inline Datasheet attach_performance(Datasheet ds, const ConformanceReport& report) {
  if (!ds.doc.contains("sensor_kind") || ds.sensor_kind() != report.protocol.sensor_kind)
    throw Error(Errc::KindMismatch, std::string(to_string(report.protocol.sensor_kind)) +
                                        " report cannot describe this datasheet's sensor");
  const Json r = report_to_json(report);
  ds.doc["end_to_end_performance"] = {
      {"conditions", {report.protocol.axis_a.name, report.protocol.axis_b.name}},
      {"cells", r.at("cells")},
      {"envelope", r.at("envelope")},
      {"envelope_thresholds", r.at("envelope_thresholds")},
      {"trials_per_cell", report.protocol.trials_per_cell},
      {"latency_budget_ms", report.protocol.latency_budget_ms},
      {"seed", report.protocol.seed},
      {"tool_version", report.tool_version},
  };
  return ds;
}

}  // namespace mlsensor
