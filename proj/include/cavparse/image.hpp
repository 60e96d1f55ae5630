#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "cavparse/error.hpp"

namespace cavparse {

using ClassId = std::uint8_t;
inline constexpr ClassId kIgnore = 255;

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Row-major 8-bit RGB raster.
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int width, int height, Rgb fill = {}) : width_(width), height_(height) {
    if (width < 1 || height < 1) throw InvalidInput("RasterImage: dimensions must be >= 1x1");
    pixels_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }

  Rgb& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  const Rgb& at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  Rgb& operator[](std::size_t i) { return pixels_[i]; }
  const Rgb& operator[](std::size_t i) const { return pixels_[i]; }

  const std::vector<Rgb>& pixels() const { return pixels_; }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Rgb> pixels_;
};

// Row-major class-index map; kIgnore marks void pixels.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(int width, int height, ClassId fill = 0) : width_(width), height_(height) {
    if (width < 1 || height < 1) throw InvalidInput("LabelMap: dimensions must be >= 1x1");
    labels_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return labels_.size(); }

  ClassId& at(int x, int y) { return labels_[static_cast<std::size_t>(y) * width_ + x]; }
  ClassId at(int x, int y) const { return labels_[static_cast<std::size_t>(y) * width_ + x]; }
  ClassId& operator[](std::size_t i) { return labels_[i]; }
  ClassId operator[](std::size_t i) const { return labels_[i]; }

  const std::vector<ClassId>& labels() const { return labels_; }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<ClassId> labels_;
};

}  // namespace cavparse
