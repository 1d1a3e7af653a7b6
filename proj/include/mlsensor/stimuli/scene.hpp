#pragma once

// Synthetic camera scenes: a textured room background with an optional
// figure (person or rodent), lit according to an illuminance level.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "mlsensor/error.hpp"
#include "mlsensor/rng.hpp"
#include "mlsensor/stimuli/frame.hpp"

namespace mlsensor {

/// Axis-aligned rectangle in figure units (figure height == 1) with a weight.
/// The weight is unused by the renderer and means "template value" to detectors.
struct FigureRect {
  double x0, y0, x1, y1;
  double weight = 1.0;

  friend bool operator==(const FigureRect&, const FigureRect&) = default;
};

enum class FigureKind : std::uint8_t { Person, Rodent };

namespace figure {

// Person silhouette; width 0.4 figure heights.
inline constexpr double kPersonAspect = 0.4;
inline constexpr FigureRect kHead{0.13, 0.00, 0.27, 0.15};
inline constexpr FigureRect kNeck{0.17, 0.15, 0.23, 0.18};
inline constexpr FigureRect kTorso{0.04, 0.18, 0.36, 0.56};
inline constexpr FigureRect kLeftLeg{0.07, 0.56, 0.18, 1.00};
inline constexpr FigureRect kRightLeg{0.22, 0.56, 0.33, 1.00};
inline constexpr FigureRect kLeftEye{0.155, 0.05, 0.185, 0.09};
inline constexpr FigureRect kRightEye{0.215, 0.05, 0.245, 0.09};

// Rodent silhouette; width 2.5 figure heights, drawn at a quarter of the
// apparent height of a person at the same distance.
inline constexpr double kRodentAspect = 2.5;
inline constexpr double kRodentRelativeHeight = 0.25;
inline constexpr FigureRect kRodentBody{0.30, 0.15, 2.10, 1.00};
inline constexpr FigureRect kRodentHead{2.10, 0.30, 2.50, 0.80};
inline constexpr FigureRect kRodentTail{0.00, 0.75, 0.30, 0.90};

/// Apparent person height in pixels at 1 m; scales as 1/distance.
inline constexpr double kPixelsAtOneMeter = 60.0;

}  // namespace figure

/// Pixel rectangle [x0, x1) x [y0, y1) of a figure rect at figure height h,
/// relative to the figure origin. Shared by the renderer and every detector.
struct PixelRect {
  int x0, y0, x1, y1;
};

inline PixelRect rasterize(const FigureRect& r, int h) {
  const double hh = static_cast<double>(h);
  return {static_cast<int>(std::lround(r.x0 * hh)), static_cast<int>(std::lround(r.y0 * hh)),
          static_cast<int>(std::lround(r.x1 * hh)), static_cast<int>(std::lround(r.y1 * hh))};
}

struct SceneParams {
  bool person_present = false;
  bool facing_camera = false;
  double distance_m = 1.0;
  double illuminance_lux = 500.0;
  double noise_sigma = 4.0;
  std::uint64_t seed = 0;
  FigureKind figure = FigureKind::Person;
  double center_x = 0.5;  // horizontal figure centre as a fraction of frame width
  int width = Frame::kDefaultSide;
  int height = Frame::kDefaultSide;

  void validate() const {
    auto fail = [](const std::string& m) { throw Error(Errc::InvalidArgument, "scene: " + m); };
    if (!(distance_m >= 0.25 && distance_m <= 10.0)) fail("distance_m outside [0.25, 10]");
    if (!(illuminance_lux >= 1.0 && illuminance_lux <= 2000.0)) fail("illuminance_lux outside [1, 2000]");
    if (!(noise_sigma >= 0.0)) fail("noise_sigma < 0");
    if (facing_camera && !person_present) fail("facing_camera requires person_present");
    if (!(center_x >= 0.0 && center_x <= 1.0)) fail("center_x outside [0, 1]");
  }
};

/// 0 at 1 lux, 1 at 2000 lux, logarithmic in between.
inline double light_factor(double lux) {
  return std::clamp(std::log10(lux) / std::log10(2000.0), 0.0, 1.0);
}

/// Apparent figure height in pixels for the scene's subject.
inline int figure_height_px(const SceneParams& p) {
  double h = figure::kPixelsAtOneMeter / p.distance_m;
  if (p.figure == FigureKind::Rodent) h *= figure::kRodentRelativeHeight;
  return std::max(1, static_cast<int>(std::lround(h)));
}

namespace detail {

inline void fill_rect(Plane<double>& img, int ox, int oy, const PixelRect& r, double value) {
  const int x0 = std::max(0, ox + r.x0), x1 = std::min(img.width(), ox + r.x1);
  const int y0 = std::max(0, oy + r.y0), y1 = std::min(img.height(), oy + r.y1);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) img.at(x, y) = value;
}

}  // namespace detail

/// Deterministic in every field of p, including seed.
inline Frame render_scene(const SceneParams& p) {
  p.validate();
  Rng rng(derive_seed({p.seed, 0x5CE4E}));
  const double light = light_factor(p.illuminance_lux);
  const double background = 30.0 + 40.0 * light;
  const double contrast = 90.0 * light;

  // Low-frequency wall texture.
  const double tex_amp = 3.0;
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double fx = rng.uniform(0.5, 1.5) / p.width;
  const double fy = rng.uniform(0.5, 1.5) / p.height;
  Plane<double> img(p.width, p.height);
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x)
      img.at(x, y) = background + tex_amp * std::sin(2.0 * std::numbers::pi * (fx * x + fy * y) + phase);

  if (p.person_present) {
    const int h = figure_height_px(p);
    const double aspect = p.figure == FigureKind::Person ? figure::kPersonAspect : figure::kRodentAspect;
    const int w = static_cast<int>(std::lround(aspect * h));
    const int ox = static_cast<int>(std::lround(p.center_x * p.width)) - w / 2;
    const int oy = p.height / 2 - h / 2;
    const double body = background + contrast;
    if (p.figure == FigureKind::Person) {
      using namespace figure;
      for (const auto& r : {kNeck, kTorso, kLeftLeg, kRightLeg}) detail::fill_rect(img, ox, oy, rasterize(r, h), body);
      if (p.facing_camera) {
        detail::fill_rect(img, ox, oy, rasterize(kHead, h), background + 1.1 * contrast);
        detail::fill_rect(img, ox, oy, rasterize(kLeftEye, h), background - 0.3 * contrast);
        detail::fill_rect(img, ox, oy, rasterize(kRightEye, h), background - 0.3 * contrast);
      } else {
        detail::fill_rect(img, ox, oy, rasterize(kHead, h), background - 0.5 * contrast);
      }
    } else {
      using namespace figure;
      for (const auto& r : {kRodentBody, kRodentHead, kRodentTail}) detail::fill_rect(img, ox, oy, rasterize(r, h), body);
    }
  }

  Frame frame(p.width, p.height);
  Rng noise(derive_seed({p.seed, 0x7015E}));
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      double v = img.at(x, y);
      if (p.noise_sigma > 0.0) v += noise.normal(0.0, p.noise_sigma);
      frame.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return frame;
}

}  // namespace mlsensor
