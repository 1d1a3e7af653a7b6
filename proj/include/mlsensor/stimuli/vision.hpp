#pragma once

// Reference vision cores: maximum normalized cross-correlation of a frame
// against a weighted-rectangle template over a coarse scale/translation grid.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "mlsensor/stimuli/frame.hpp"
#include "mlsensor/stimuli/scene.hpp"

namespace mlsensor {

struct Detection {
  bool present = false;
  double score = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

/// Template and search grid. Rects are in figure units and may overlap;
/// overlapping weights add. The correlation window is `window`.
struct VisionParams {
  FigureRect window{0.0, 0.0, 0.4, 1.0};
  std::vector<FigureRect> rects;
  int min_height_px = 12;
  int max_height_px = 90;
  double scale_ratio = 1.15;
  double stride_fraction = 1.0 / 16.0;
  bool refine = true;
  double threshold = 0.6;

  friend bool operator==(const VisionParams&, const VisionParams&) = default;
};

namespace presets {

/// Body and legs; the window starts below the head so facing direction
/// does not matter.
inline VisionParams person_template() {
  using namespace figure;
  VisionParams p;
  p.window = {0.0, 0.16, kPersonAspect, 1.0};
  p.rects = {kNeck, kTorso, kLeftLeg, kRightLeg};
  p.min_height_px = 14;
  p.max_height_px = 90;
  p.threshold = 0.8;
  return p;
}

/// The facing-camera figure: body as in the person template plus a heavily
/// weighted lit face with dark eyes, so a turned-away head scores low.
inline VisionParams gaze_template() {
  using namespace figure;
  VisionParams p;
  p.window = {0.0, 0.0, kPersonAspect, 1.0};
  FigureRect head = kHead, le = kLeftEye, re = kRightEye;
  head.weight = 2.0;
  le.weight = re.weight = -3.0;
  p.rects = {kNeck, kTorso, kLeftLeg, kRightLeg, head, le, re};
  p.min_height_px = 30;
  p.max_height_px = 90;
  p.threshold = 0.8;
  return p;
}

inline VisionParams rodent_template() {
  using namespace figure;
  VisionParams p;
  p.window = {0.0, 0.0, kRodentAspect, 1.0};
  p.rects = {kRodentBody, kRodentHead, kRodentTail};
  p.min_height_px = 8;
  p.max_height_px = 40;
  p.threshold = 0.85;
  return p;
}

}  // namespace presets

namespace detail {

/// Summed-area tables of I and I^2 with a zero border row/column.
class IntegralImage {
 public:
  explicit IntegralImage(const Plane<double>& img)
      : w_(img.width()), h_(img.height()),
        sum_(static_cast<std::size_t>(w_ + 1) * (h_ + 1), 0.0),
        sq_(sum_.size(), 0.0) {
    for (int y = 0; y < h_; ++y) {
      double row = 0.0, row_sq = 0.0;
      for (int x = 0; x < w_; ++x) {
        const double v = img.at(x, y);
        row += v;
        row_sq += v * v;
        sum_[idx(x + 1, y + 1)] = sum_[idx(x + 1, y)] + row;
        sq_[idx(x + 1, y + 1)] = sq_[idx(x + 1, y)] + row_sq;
      }
    }
  }

  double sum(int x0, int y0, int x1, int y1) const { return box(sum_, x0, y0, x1, y1); }
  double sum_sq(int x0, int y0, int x1, int y1) const { return box(sq_, x0, y0, x1, y1); }

 private:
  std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * (w_ + 1) + x; }
  double box(const std::vector<double>& t, int x0, int y0, int x1, int y1) const {
    return t[idx(x1, y1)] - t[idx(x0, y1)] - t[idx(x1, y0)] + t[idx(x0, y0)];
  }

  int w_, h_;
  std::vector<double> sum_, sq_;
};

struct ScaledTemplate {
  PixelRect window;
  std::vector<std::pair<PixelRect, double>> rects;  // clipped to the window
  double n = 0, sum_t = 0, var_t = 0;
};

inline ScaledTemplate scale_template(const VisionParams& p, int h) {
  ScaledTemplate st;
  st.window = rasterize(p.window, h);
  const int ww = st.window.x1 - st.window.x0, wh = st.window.y1 - st.window.y0;
  if (ww <= 0 || wh <= 0) return st;
  Plane<double> t(ww, wh, 0.0);
  for (const auto& fr : p.rects) {
    PixelRect r = rasterize(fr, h);
    r.x0 = std::max(r.x0, st.window.x0);
    r.y0 = std::max(r.y0, st.window.y0);
    r.x1 = std::min(r.x1, st.window.x1);
    r.y1 = std::min(r.y1, st.window.y1);
    if (r.x0 >= r.x1 || r.y0 >= r.y1) continue;
    st.rects.push_back({r, fr.weight});
    for (int y = r.y0; y < r.y1; ++y)
      for (int x = r.x0; x < r.x1; ++x) t.at(x - st.window.x0, y - st.window.y0) += fr.weight;
  }
  double s = 0, s2 = 0;
  for (int y = 0; y < wh; ++y)
    for (int x = 0; x < ww; ++x) {
      s += t.at(x, y);
      s2 += t.at(x, y) * t.at(x, y);
    }
  st.n = static_cast<double>(ww) * wh;
  st.sum_t = s;
  st.var_t = s2 - s * s / st.n;
  return st;
}

inline std::vector<int> scale_grid(const VisionParams& p) {
  std::vector<int> out;
  double h = p.min_height_px;
  while (std::lround(h) <= p.max_height_px) {
    const int hi = static_cast<int>(std::lround(h));
    if (out.empty() || out.back() != hi) out.push_back(hi);
    h *= p.scale_ratio;
  }
  return out;
}

}  // namespace detail

namespace detail {

struct Candidate {
  double ncc = -2.0;
  int h = 0, wx = 0, wy = 0;
};

/// NCC of one template placement; nullopt when the window leaves the image
/// or carries no intensity variance.
inline std::optional<double> placement_ncc(const IntegralImage& ii, int img_w, int img_h,
                                           const ScaledTemplate& st, int wx, int wy) {
  const int ww = st.window.x1 - st.window.x0, wh = st.window.y1 - st.window.y0;
  if (wx < 0 || wy < 0 || wx + ww > img_w || wy + wh > img_h) return std::nullopt;
  const double s_i = ii.sum(wx, wy, wx + ww, wy + wh);
  const double var_i = ii.sum_sq(wx, wy, wx + ww, wy + wh) - s_i * s_i / st.n;
  if (var_i <= 1e-9 * st.n) return std::nullopt;
  // Figure origin such that the window lands at (wx, wy).
  const int ox = wx - st.window.x0, oy = wy - st.window.y0;
  double s_ti = 0.0;
  for (const auto& [r, wgt] : st.rects) s_ti += wgt * ii.sum(ox + r.x0, oy + r.y0, ox + r.x1, oy + r.y1);
  const double cov = s_ti - st.sum_t * s_i / st.n;
  return cov / std::sqrt(st.var_t * var_i);
}

}  // namespace detail

/// Maximum normalized cross-correlation, clamped to [0, 1].
///
/// A coarse pass visits the geometric scale grid with a stride proportional
/// to the figure height; the best placement of every coarse scale is then
/// searched at each integer height within one grid ratio and each pixel
/// within one stride. Windows with no intensity variance score 0, so the
/// result is invariant under intensity scaling.
inline double template_score(const Plane<double>& img, const VisionParams& p) {
  const detail::IntegralImage ii(img);
  const int iw = img.width(), ih = img.height();
  std::vector<detail::Candidate> top;  // best placement per coarse scale

  double best = 0.0;
  for (int h : detail::scale_grid(p)) {
    const auto st = detail::scale_template(p, h);
    if (st.var_t <= 0.0) continue;
    const int ww = st.window.x1 - st.window.x0, wh = st.window.y1 - st.window.y0;
    const int stride = std::max(1, static_cast<int>(std::lround(h * p.stride_fraction)));
    detail::Candidate scale_best;
    for (int wy = 0; wy + wh <= ih; wy += stride) {
      for (int wx = 0; wx + ww <= iw; wx += stride) {
        const auto ncc = detail::placement_ncc(ii, iw, ih, st, wx, wy);
        if (!ncc) continue;
        best = std::max(best, *ncc);
        if (*ncc > scale_best.ncc) scale_best = {*ncc, h, wx, wy};
      }
    }
    if (p.refine && scale_best.h > 0) top.push_back(scale_best);
  }

  for (const auto& c : top) {
    const int h_lo = std::max(p.min_height_px, static_cast<int>(std::floor(c.h / p.scale_ratio)));
    const int h_hi = std::min(p.max_height_px, static_cast<int>(std::ceil(c.h * p.scale_ratio)));
    const int stride = std::max(1, static_cast<int>(std::lround(c.h * p.stride_fraction)));
    const auto base = rasterize(p.window, c.h);
    for (int h = h_lo; h <= h_hi; ++h) {
      const auto st = detail::scale_template(p, h);
      if (st.var_t <= 0.0) continue;
      // Keep the figure origin fixed while the scale changes.
      const int ox = c.wx - base.x0, oy = c.wy - base.y0;
      for (int dy = -stride; dy <= stride; ++dy) {
        for (int dx = -stride; dx <= stride; ++dx) {
          const auto ncc = detail::placement_ncc(ii, iw, ih, st, ox + st.window.x0 + dx, oy + st.window.y0 + dy);
          if (ncc) best = std::max(best, *ncc);
        }
      }
    }
  }
  return std::clamp(best, 0.0, 1.0);
}

inline Plane<double> to_plane(const Frame& f) {
  Plane<double> out(f.width(), f.height());
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x) out.at(x, y) = f.at(x, y);
  return out;
}

inline Detection detect_with_template(const Frame& frame, const VisionParams& p) {
  const double score = template_score(to_plane(frame), p);
  return {score >= p.threshold, score};
}

inline Detection detect_person(const Frame& frame, const VisionParams& p = presets::person_template()) {
  return detect_with_template(frame, p);
}

inline Detection detect_gaze(const Frame& frame, const VisionParams& p = presets::gaze_template()) {
  return detect_with_template(frame, p);
}

}  // namespace mlsensor
