#pragma once

// Seven-segment panels: rendering a decimal reading into a camera frame at any
// right-angle rotation, and reading it back.

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mlsensor/error.hpp"
#include "mlsensor/rng.hpp"
#include "mlsensor/stimuli/frame.hpp"

namespace mlsensor {

/// A displayed number, digit for digit. No normalization: "007.50" keeps its zeros.
struct Reading {
  bool negative = false;
  std::string whole_digits;
  std::string frac_digits;

  std::string to_string() const {
    std::string s = negative ? "-" : "";
    s += whole_digits;
    if (!frac_digits.empty()) s += "." + frac_digits;
    return s;
  }

  friend bool operator==(const Reading&, const Reading&) = default;
};

inline bool all_digits(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

/// Parses "-12.50" style text. Throws InvalidArgument on anything else.
inline Reading parse_reading(const std::string& text) {
  Reading r;
  std::string s = text;
  if (!s.empty() && s[0] == '-') {
    r.negative = true;
    s.erase(0, 1);
  }
  const auto dot = s.find('.');
  r.whole_digits = s.substr(0, dot);
  if (dot != std::string::npos) r.frac_digits = s.substr(dot + 1);
  if (r.whole_digits.empty() || !all_digits(r.whole_digits) || !all_digits(r.frac_digits) ||
      (dot != std::string::npos && r.frac_digits.empty()))
    throw Error(Errc::InvalidArgument, "not a decimal reading: '" + text + "'");
  return r;
}

// Segment bits: a=0 (top), b=1 (upper right), c=2 (lower right), d=3 (bottom),
// e=4 (lower left), f=5 (upper left), g=6 (middle).
using SegmentSet = std::uint8_t;
inline constexpr SegmentSet seg(char name) { return static_cast<SegmentSet>(1u << (name - 'a')); }

inline constexpr std::array<SegmentSet, 10> kSegmentTable{
    0b0111111,  // 0 abcdef
    0b0000110,  // 1 bc
    0b1011011,  // 2 abdeg
    0b1001111,  // 3 abcdg
    0b1100110,  // 4 bcfg
    0b1101101,  // 5 acdfg
    0b1111101,  // 6 acdefg
    0b0000111,  // 7 abc
    0b1111111,  // 8
    0b1101111,  // 9 abcdfg
};
inline constexpr SegmentSet kMinusSegments = 0b1000000;  // g only

inline std::optional<int> segment_lookup(SegmentSet s) {
  for (int d = 0; d < 10; ++d)
    if (kSegmentTable[static_cast<std::size_t>(d)] == s) return d;
  return std::nullopt;
}

/// Panel geometry. Margins are deliberately lopsided so a panel and its
/// half-turn never look alike.
struct DisplayLayout {
  int x = 8, y = 8;    // top-left of the rotated panel in the frame
  int rotation = 0;    // counter-clockwise quarter turns, 0..3
  int frame_side = 128;

  static constexpr int kCellW = 5, kCellH = 9, kGap = 2;
  static constexpr int kMarginTop = 2, kMarginBottom = 5, kMarginLeft = 2, kMarginRight = 2;
  static constexpr std::size_t kMaxWhole = 7, kMaxFrac = 8;

  static int panel_width(int cells) { return kMarginLeft + cells * kCellW + (cells - 1) * kGap + kMarginRight; }
  static constexpr int panel_height() { return kMarginTop + kCellH + kMarginBottom; }
};

/// Lighting of the simulated display scene.
struct DisplayScene {
  double background = 20.0;
  double panel = 70.0;
  double lit = 220.0;
  double noise_sigma = 2.0;
  std::uint64_t seed = 0;
};

namespace detail {

struct SegmentPixels {
  int x0, y0, x1, y1;  // inclusive, cell-relative
};

inline constexpr std::array<SegmentPixels, 7> kSegmentPixels{{
    {1, 0, 3, 0},  // a
    {4, 1, 4, 3},  // b
    {4, 5, 4, 7},  // c
    {1, 8, 3, 8},  // d
    {0, 5, 0, 7},  // e
    {0, 1, 0, 3},  // f
    {1, 4, 3, 4},  // g
}};

inline int cell_x(int i) { return DisplayLayout::kMarginLeft + i * (DisplayLayout::kCellW + DisplayLayout::kGap); }

/// Cell contents and decimal-point position for a reading.
struct PanelPlan {
  std::vector<SegmentSet> cells;
  std::optional<int> dot_after;  // cell index
};

inline PanelPlan plan_panel(const Reading& r) {
  if (r.whole_digits.empty() || !all_digits(r.whole_digits) || !all_digits(r.frac_digits))
    throw Error(Errc::InvalidArgument, "reading must have at least one whole digit and digits only");
  if (r.whole_digits.size() > DisplayLayout::kMaxWhole || r.frac_digits.size() > DisplayLayout::kMaxFrac)
    throw Error(Errc::LayoutOverflow, "reading '" + r.to_string() + "' does not fit 7+8 digit cells");
  PanelPlan p;
  if (r.negative) p.cells.push_back(kMinusSegments);
  for (char c : r.whole_digits) p.cells.push_back(kSegmentTable[static_cast<std::size_t>(c - '0')]);
  if (!r.frac_digits.empty()) p.dot_after = static_cast<int>(p.cells.size()) - 1;
  for (char c : r.frac_digits) p.cells.push_back(kSegmentTable[static_cast<std::size_t>(c - '0')]);
  return p;
}

/// Unrotated panel: 0 outside the panel never occurs here; 1 = panel, 2 = lit.
inline Plane<std::uint8_t> panel_mask(const Reading& r) {
  const auto plan = plan_panel(r);
  const int n = static_cast<int>(plan.cells.size());
  Plane<std::uint8_t> m(DisplayLayout::panel_width(n), DisplayLayout::panel_height(), 1);
  for (int i = 0; i < n; ++i) {
    for (int s = 0; s < 7; ++s) {
      if (!(plan.cells[static_cast<std::size_t>(i)] & (1u << s))) continue;
      const auto& sp = kSegmentPixels[static_cast<std::size_t>(s)];
      for (int y = sp.y0; y <= sp.y1; ++y)
        for (int x = sp.x0; x <= sp.x1; ++x) m.at(cell_x(i) + x, DisplayLayout::kMarginTop + y) = 2;
    }
  }
  if (plan.dot_after)
    m.at(cell_x(*plan.dot_after) + DisplayLayout::kCellW, DisplayLayout::kMarginTop + DisplayLayout::kCellH - 1) = 2;
  return m;
}

}  // namespace detail

inline Frame render_display(const Reading& r, const DisplayLayout& layout = {}, const DisplayScene& scene = {}) {
  if (layout.rotation < 0 || layout.rotation > 3) throw Error(Errc::InvalidArgument, "rotation must be 0..3");
  const auto mask = rotate_quarter_turns(detail::panel_mask(r), layout.rotation);
  if (layout.x < 0 || layout.y < 0 || layout.x + mask.width() > layout.frame_side ||
      layout.y + mask.height() > layout.frame_side)
    throw Error(Errc::LayoutOverflow, "panel does not fit the frame at the requested position");
  Frame f(layout.frame_side, layout.frame_side);
  Rng noise(derive_seed({scene.seed, 0x5E65}));
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) {
      const int mx = x - layout.x, my = y - layout.y;
      double v = scene.background;
      if (mx >= 0 && my >= 0 && mx < mask.width() && my < mask.height())
        v = mask.at(mx, my) == 2 ? scene.lit : scene.panel;
      if (scene.noise_sigma > 0.0) v += noise.normal(0.0, scene.noise_sigma);
      f.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return f;
}

namespace detail {

/// Two thresholds maximizing three-class between-class variance.
/// Returns nullopt if the image does not have three populated classes.
inline std::optional<std::pair<int, int>> otsu3(const Frame& f) {
  std::array<double, 257> cnt{}, sum{};
  std::array<double, 256> hist{};
  for (auto v : f.pixels()) hist[v] += 1.0;
  for (int i = 0; i < 256; ++i) {
    cnt[static_cast<std::size_t>(i) + 1] = cnt[static_cast<std::size_t>(i)] + hist[static_cast<std::size_t>(i)];
    sum[static_cast<std::size_t>(i) + 1] = sum[static_cast<std::size_t>(i)] + i * hist[static_cast<std::size_t>(i)];
  }
  auto term = [&](int lo, int hi) {  // classes are [lo, hi)
    const double c = cnt[static_cast<std::size_t>(hi)] - cnt[static_cast<std::size_t>(lo)];
    const double s = sum[static_cast<std::size_t>(hi)] - sum[static_cast<std::size_t>(lo)];
    return c > 0.0 ? s * s / c : -1.0;
  };
  double best = -1.0;
  std::optional<std::pair<int, int>> out;
  for (int t1 = 1; t1 < 255; ++t1) {
    const double a = term(0, t1);
    if (a < 0.0) continue;
    for (int t2 = t1 + 1; t2 < 256; ++t2) {
      const double b = term(t1, t2), c = term(t2, 256);
      if (b < 0.0 || c < 0.0) continue;
      if (a + b + c > best) {
        best = a + b + c;
        out = std::pair{t1, t2};
      }
    }
  }
  return out;
}

inline std::optional<Reading> read_panel(const Plane<std::uint8_t>& m) {
  using L = DisplayLayout;
  if (m.height() != L::panel_height()) return std::nullopt;
  const int span = m.width() - L::kMarginLeft - L::kMarginRight + L::kGap;
  if (span <= 0 || span % (L::kCellW + L::kGap) != 0) return std::nullopt;
  const int n = span / (L::kCellW + L::kGap);

  Reading r;
  std::optional<int> dot;
  for (int i = 0; i < n; ++i) {
    SegmentSet s = 0;
    for (int k = 0; k < 7; ++k) {
      const auto& sp = kSegmentPixels[static_cast<std::size_t>(k)];
      const int sx = (sp.x0 + sp.x1) / 2, sy = (sp.y0 + sp.y1) / 2;
      if (m.at(cell_x(i) + sx, L::kMarginTop + sy) == 2) s |= static_cast<SegmentSet>(1u << k);
    }
    if (i + 1 < n && m.at(cell_x(i) + L::kCellW, L::kMarginTop + L::kCellH - 1) == 2) {
      if (dot) return std::nullopt;
      dot = i;
    }
    if (i == 0 && s == kMinusSegments) {
      r.negative = true;
      continue;
    }
    const auto d = segment_lookup(s);
    if (!d) return std::nullopt;
    const char c = static_cast<char>('0' + *d);
    if (dot && i > *dot) r.frac_digits += c;
    else r.whole_digits += c;
  }
  if (r.whole_digits.empty() || r.whole_digits.size() > L::kMaxWhole || r.frac_digits.size() > L::kMaxFrac)
    return std::nullopt;
  if (dot && r.frac_digits.empty()) return std::nullopt;
  // The sampled reading must reproduce the panel pixel for pixel.
  if (!(panel_mask(r) == m)) return std::nullopt;
  return r;
}

}  // namespace detail

/// Finds the panel (brightest-but-one intensity class), tries the four
/// right-angle orientations and returns the reading whose re-rendering matches
/// the panel exactly. nullopt for blank frames or unreadable panels.
inline std::optional<Reading> decode_display(const Frame& f) {
  const auto th = detail::otsu3(f);
  if (!th) return std::nullopt;
  const auto [t_panel, t_lit] = *th;
  int x0 = f.width(), y0 = f.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x)
      if (f.at(x, y) >= t_panel) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
  if (x1 < 0) return std::nullopt;
  Plane<std::uint8_t> box(x1 - x0 + 1, y1 - y0 + 1);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const auto v = f.at(x, y);
      box.at(x - x0, y - y0) = v >= t_lit ? 2 : (v >= t_panel ? 1 : 0);
    }
  for (int q = 0; q < 4; ++q) {
    if (auto r = detail::read_panel(rotate_quarter_turns(box, q))) return r;
  }
  return std::nullopt;
}

}  // namespace mlsensor
