#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cyldepth/error.hpp"

namespace cyldepth {

/// Dense row-major W x H grid holding one T per pixel.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, const T& fill = T{})
      : width_(width), height_(height) {
    if (width < 0 || height < 0) throw DimensionError("negative grid size");
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int x, int y) { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const { return data_[index(x, y)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  template <typename U>
  bool same_shape(const Grid<U>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  bool operator==(const Grid&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using Mask = Grid<std::uint8_t>;

/// W x H x C raster of doubles, channels interleaved. Used for images
/// (unit-range colors) and feature maps.
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, int channels, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  double& operator()(int x, int y, int c = 0) { return data_[index(x, y) + c]; }
  double operator()(int x, int y, int c = 0) const { return data_[index(x, y) + c]; }

  std::span<double> pixel(int x, int y) { return {data_.data() + index(x, y), static_cast<std::size_t>(channels_)}; }
  std::span<const double> pixel(int x, int y) const {
    return {data_.data() + index(x, y), static_cast<std::size_t>(channels_)};
  }
  std::span<double> pixel(std::size_t i) { return {data_.data() + i * channels_, static_cast<std::size_t>(channels_)}; }
  std::span<const double> pixel(std::size_t i) const {
    return {data_.data() + i * channels_, static_cast<std::size_t>(channels_)};
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const Raster& o) const {
    return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
  }
  bool operator==(const Raster&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

using ImageRaster = Raster;
using FeatureMap = Raster;

/// Depth in meters along the camera z-axis. A pixel is usable only where
/// `valid` is set; valid entries are strictly positive and finite.
struct DepthMap {
  Grid<double> values;
  Mask valid;

  DepthMap() = default;
  DepthMap(int width, int height) : values(width, height, 0.0), valid(width, height, 0) {}

  /// Builds a map whose validity is "finite and > 0".
  static DepthMap from_values(Grid<double> values);

  int width() const { return values.width(); }
  int height() const { return values.height(); }
  bool is_valid(int x, int y) const { return valid(x, y) != 0; }
  void set(int x, int y, double depth) {
    values(x, y) = depth;
    valid(x, y) = 1;
  }
  /// Multiplies every valid depth by `s` (s > 0).
  DepthMap scaled(double s) const;
};

/// Bilinear taps for a continuous location with pixel centers at integer
/// coordinates. Taps with zero weight are dropped, so integer locations on
/// the last row/column stay in bounds. Returns nullopt when any required
/// tap falls outside the raster. Locations within kTapSnap pixels of a grid
/// line are snapped onto it.
inline constexpr double kTapSnap = 1e-9;
struct BilinearTaps {
  int count = 0;
  int x[4]{};
  int y[4]{};
  double w[4]{};
};
std::optional<BilinearTaps> bilinear_taps(int width, int height, double x, double y);

/// Samples all channels of `raster` at (x, y). Returns false when a tap is
/// out of bounds or (if given) masked out.
bool sample_bilinear(const Raster& raster, double x, double y, std::span<double> out,
                     const Mask* mask = nullptr);

/// Samples depth by bilinear interpolation of inverse depth, which is exact
/// on planar surfaces. Every tap must be valid.
std::optional<double> sample_depth(const DepthMap& depth, double x, double y);

}  // namespace cyldepth
