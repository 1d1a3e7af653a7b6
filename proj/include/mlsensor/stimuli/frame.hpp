#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mlsensor/error.hpp"

namespace mlsensor {

/// Row-major 8-bit grayscale image.
class Frame {
 public:
  static constexpr int kMinSide = 16;
  static constexpr int kDefaultSide = 96;

  Frame() : Frame(kDefaultSide, kDefaultSide) {}
  Frame(int width, int height, std::uint8_t fill = 0) : width_(width), height_(height) {
    if (width < kMinSide || height < kMinSide)
      throw Error(Errc::InvalidArgument, "frame sides must be >= 16, got " + std::to_string(width) + "x" +
                                             std::to_string(height));
    pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  std::uint8_t at(int x, int y) const noexcept { return pixels_[index(x, y)]; }
  std::uint8_t& at(int x, int y) noexcept { return pixels_[index(x, y)]; }

  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> pixels_;
};

/// Minimal raster with no size floor, for intermediate images.
template <typename T>
class Plane {
 public:
  Plane() = default;
  Plane(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  T at(int x, int y) const noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  T& at(int x, int y) noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }

  friend bool operator==(const Plane&, const Plane&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

/// Counter-clockwise quarter-turn rotation of any raster; lossless.
template <typename Raster>
Raster rotate_quarter_turns(const Raster& src, int quarter_turns) {
  const int q = ((quarter_turns % 4) + 4) % 4;
  if (q == 0) return src;
  const int w = src.width(), h = src.height();
  Raster out = (q == 2) ? Raster(w, h) : Raster(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int nx = x, ny = y;
      switch (q) {
        case 1: nx = y; ny = w - 1 - x; break;
        case 2: nx = w - 1 - x; ny = h - 1 - y; break;
        default: nx = h - 1 - y; ny = x; break;
      }
      out.at(nx, ny) = src.at(x, y);
    }
  }
  return out;
}

}  // namespace mlsensor
