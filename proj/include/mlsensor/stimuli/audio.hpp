#pragma once

// Audio-feature streams and the reference keyword spotter: one matched
// filter (Pearson correlation) per vocabulary word, thresholded, with a
// word-length refractory period.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mlsensor/error.hpp"
#include "mlsensor/rng.hpp"

namespace mlsensor {

namespace audio_constants {
inline constexpr std::size_t kFeatureDim = 13;
inline constexpr std::uint64_t kHopMs = 20;
inline constexpr std::size_t kWordFrames = 5;  // 100 ms
inline constexpr std::size_t kPatternSize = kFeatureDim * kWordFrames;
inline constexpr double kDefaultNoise = 0.3;
/// Correlation between "often" and "off" signatures before noise.
inline constexpr double kOftenSimilarity = 0.75;
}  // namespace audio_constants

using FeatureVector = std::array<double, audio_constants::kFeatureDim>;

struct FeatureWindow {
  std::vector<FeatureVector> frames;

  void validate() const {
    for (const auto& f : frames)
      for (double v : f)
        if (!std::isfinite(v)) throw Error(Errc::InvalidArgument, "non-finite audio feature");
  }

  friend bool operator==(const FeatureWindow&, const FeatureWindow&) = default;
};

/// Words the generator knows besides any vocabulary. "often" is built as a
/// near-match of "off".
inline const std::set<std::string>& distractor_words() {
  static const std::set<std::string> words{"often", "hello", "table", "water", "window"};
  return words;
}

namespace detail {

inline std::vector<double> raw_signature(const std::string& key) {
  Rng rng(derive_seed({hash_string(key), 0xA0D10}));
  std::vector<double> v(audio_constants::kPatternSize);
  for (double& x : v) x = rng.normal();
  return v;
}

/// Zero mean, unit RMS.
inline void standardize(std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double& x : v) {
    x -= mean;
    ss += x * x;
  }
  const double rms = std::sqrt(ss / static_cast<double>(v.size()));
  for (double& x : v) x /= rms;
}

}  // namespace detail

/// Feature signature of a spoken word, flattened frame-major (5 x 13).
inline std::vector<double> word_signature(const std::string& word) {
  auto sig = detail::raw_signature(word);
  detail::standardize(sig);
  if (word == "often") {
    auto off = word_signature("off");
    auto orth = detail::raw_signature("often/orth");
    detail::standardize(orth);
    double dot = 0.0;
    for (std::size_t i = 0; i < off.size(); ++i) dot += off[i] * orth[i];
    dot /= static_cast<double>(off.size());
    for (std::size_t i = 0; i < off.size(); ++i) orth[i] -= dot * off[i];
    detail::standardize(orth);
    const double c = audio_constants::kOftenSimilarity;
    for (std::size_t i = 0; i < sig.size(); ++i) sig[i] = c * off[i] + std::sqrt(1.0 - c * c) * orth[i];
    detail::standardize(sig);
  }
  return sig;
}

struct ScriptEntry {
  std::string word;
  std::uint64_t start_ms = 0;

  friend bool operator==(const ScriptEntry&, const ScriptEntry&) = default;
};

/// Noise-only background with each scripted word's signature added from the
/// first frame at or after its start. Default duration ends 500 ms after the
/// last word.
inline FeatureWindow synth_audio(const std::vector<ScriptEntry>& script, const std::vector<std::string>& vocabulary,
                                 std::uint64_t seed, std::optional<std::uint64_t> duration_ms = std::nullopt,
                                 double noise_sigma = audio_constants::kDefaultNoise) {
  using namespace audio_constants;
  std::uint64_t end = 0;
  for (const auto& e : script) {
    const bool known = std::find(vocabulary.begin(), vocabulary.end(), e.word) != vocabulary.end() ||
                       distractor_words().count(e.word);
    if (!known) throw Error(Errc::InvalidArgument, "script word '" + e.word + "' is neither vocabulary nor distractor");
    end = std::max(end, e.start_ms + kWordFrames * kHopMs);
  }
  const std::uint64_t duration = duration_ms.value_or(end + 500);
  if (duration < kHopMs) throw Error(Errc::InvalidArgument, "audio duration shorter than one hop");
  if (noise_sigma < 0.0) throw Error(Errc::InvalidArgument, "negative audio noise");

  FeatureWindow w;
  w.frames.assign(duration / kHopMs, FeatureVector{});
  for (const auto& e : script) {
    const auto sig = word_signature(e.word);
    const std::size_t first = (e.start_ms + kHopMs - 1) / kHopMs;
    for (std::size_t f = 0; f < kWordFrames && first + f < w.frames.size(); ++f)
      for (std::size_t d = 0; d < kFeatureDim; ++d) w.frames[first + f][d] += sig[f * kFeatureDim + d];
  }
  Rng noise(derive_seed({seed, 0xA5D10}));
  for (auto& f : w.frames)
    for (double& v : f) v += noise.normal(0.0, noise_sigma);
  return w;
}

struct KeywordTemplate {
  std::string word;
  std::vector<double> pattern;  // kPatternSize values

  friend bool operator==(const KeywordTemplate&, const KeywordTemplate&) = default;
};

inline std::vector<KeywordTemplate> templates_for(const std::vector<std::string>& vocabulary) {
  std::vector<KeywordTemplate> out;
  for (const auto& w : vocabulary) out.push_back({w, word_signature(w)});
  return out;
}

struct KeywordHit {
  std::size_t index = 0;  // into the template list
  std::uint64_t t_ms = 0;  // word start
  double score = 0.0;

  friend bool operator==(const KeywordHit&, const KeywordHit&) = default;
};

namespace detail {

inline double pearson(const std::vector<double>& pattern, const std::vector<const FeatureVector*>& block) {
  using namespace audio_constants;
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t f = 0; f < kWordFrames; ++f) {
    for (std::size_t d = 0; d < kFeatureDim; ++d) {
      const double x = pattern[f * kFeatureDim + d], y = (*block[f])[d];
      sx += x;
      sy += y;
      sxx += x * x;
      syy += y * y;
      sxy += x * y;
    }
  }
  const double n = static_cast<double>(kPatternSize);
  const double vx = sxx - sx * sx / n, vy = syy - sy * sy / n;
  if (vx <= 0.0 || vy <= 0.0) return 0.0;
  return (sxy - sx * sy / n) / std::sqrt(vx * vy);
}

}  // namespace detail

/// Streaming spotter. Frames are pushed in time order; each 5-frame block
/// is scored once, when its last frame has ended.
class KeywordSpotter {
 public:
  KeywordSpotter(std::vector<std::vector<double>> patterns, double threshold)
      : patterns_(std::move(patterns)), threshold_(threshold) {
    for (const auto& p : patterns_)
      if (p.size() != audio_constants::kPatternSize)
        throw Error(Errc::InvalidArgument, "keyword pattern must have 65 values");
  }

  void push(std::uint64_t t_ms, const FeatureVector& f) {
    if (!frames_.empty() && t_ms <= frames_.back().first)
      throw Error(Errc::InvalidArgument, "audio frames must arrive in time order");
    frames_.push_back({t_ms, f});
  }

  /// Scores every block whose last frame ended at or before `now`.
  std::vector<KeywordHit> poll(std::uint64_t now) {
    using namespace audio_constants;
    std::vector<KeywordHit> hits;
    while (frames_.size() >= kWordFrames) {
      const auto last_end = frames_[kWordFrames - 1].first + kHopMs;
      if (last_end > now) break;
      bool contiguous = true;
      for (std::size_t f = 1; f < kWordFrames; ++f)
        contiguous &= frames_[f].first == frames_[f - 1].first + kHopMs;
      const auto start = frames_.front().first;
      if (contiguous && (!refractory_until_ || start >= *refractory_until_)) {
        std::vector<const FeatureVector*> block;
        for (std::size_t f = 0; f < kWordFrames; ++f) block.push_back(&frames_[f].second);
        std::optional<KeywordHit> best;
        for (std::size_t i = 0; i < patterns_.size(); ++i) {
          const double s = detail::pearson(patterns_[i], block);
          if (s >= threshold_ && (!best || s > best->score)) best = KeywordHit{i, start, s};
        }
        if (best) {
          hits.push_back(*best);
          refractory_until_ = start + kWordFrames * kHopMs;
        }
      }
      frames_.pop_front();
    }
    return hits;
  }

 private:
  std::vector<std::vector<double>> patterns_;
  double threshold_;
  std::deque<std::pair<std::uint64_t, FeatureVector>> frames_;
  std::optional<std::uint64_t> refractory_until_;
};

inline constexpr double kDefaultKeywordThreshold = 0.7;

/// All detections in a window, in time order.
inline std::vector<KeywordHit> scan_keywords(const FeatureWindow& window, const std::vector<KeywordTemplate>& templates,
                                             double threshold = kDefaultKeywordThreshold) {
  std::vector<std::vector<double>> patterns;
  for (const auto& t : templates) patterns.push_back(t.pattern);
  KeywordSpotter spotter(std::move(patterns), threshold);
  for (std::size_t i = 0; i < window.frames.size(); ++i) spotter.push(i * audio_constants::kHopMs, window.frames[i]);
  return spotter.poll(window.frames.size() * audio_constants::kHopMs);
}

/// Highest-scoring detection in the window, if any.
inline std::optional<std::pair<std::string, std::uint64_t>> detect_keyword(
    const FeatureWindow& window, const std::vector<KeywordTemplate>& templates,
    double threshold = kDefaultKeywordThreshold) {
  const auto hits = scan_keywords(window, templates, threshold);
  if (hits.empty()) return std::nullopt;
  const auto best = std::max_element(hits.begin(), hits.end(),
                                     [](const auto& a, const auto& b) { return a.score < b.score; });
  return std::pair{templates[best->index].word, best->t_ms};
}

}  // namespace mlsensor
