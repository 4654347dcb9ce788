#include "cyldepth/raster.hpp"

#include <cmath>

namespace cyldepth {

Raster::Raster(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0 || channels < 1) throw DimensionError("invalid raster shape");
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

DepthMap DepthMap::from_values(Grid<double> values) {
  DepthMap d;
  d.valid = Mask(values.width(), values.height(), 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    d.valid[i] = (std::isfinite(v) && v > 0.0) ? 1 : 0;
  }
  d.values = std::move(values);
  return d;
}

DepthMap DepthMap::scaled(double s) const {
  DepthMap out = *this;
  for (std::size_t i = 0; i < out.values.size(); ++i)
    if (out.valid[i]) out.values[i] *= s;
  return out;
}

std::optional<BilinearTaps> bilinear_taps(int width, int height, double x, double y) {
  if (!std::isfinite(x) || !std::isfinite(y)) return std::nullopt;
  // Projection round-off puts exact pixel hits a few ulps off the grid,
  // which would pull in a zero-ish tap beyond the border.
  if (std::abs(x - std::round(x)) <= kTapSnap) x = std::round(x);
  if (std::abs(y - std::round(y)) <= kTapSnap) y = std::round(y);
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  if (fx < 0.0 || fy < 0.0 || fx > width - 1 || fy > height - 1) return std::nullopt;
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const double tx = x - fx;
  const double ty = y - fy;
  BilinearTaps taps;
  const double wx[2] = {1.0 - tx, tx};
  const double wy[2] = {1.0 - ty, ty};
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < 2; ++i) {
      const double w = wx[i] * wy[j];
      if (w == 0.0) continue;
      const int xi = x0 + i;
      const int yj = y0 + j;
      if (xi >= width || yj >= height) return std::nullopt;
      taps.x[taps.count] = xi;
      taps.y[taps.count] = yj;
      taps.w[taps.count] = w;
      ++taps.count;
    }
  }
  return taps;
}

bool sample_bilinear(const Raster& raster, double x, double y, std::span<double> out, const Mask* mask) {
  const auto taps = bilinear_taps(raster.width(), raster.height(), x, y);
  if (!taps) return false;
  if (mask) {
    for (int k = 0; k < taps->count; ++k)
      if (!(*mask)(taps->x[k], taps->y[k])) return false;
  }
  for (int c = 0; c < raster.channels(); ++c) {
    double acc = 0.0;
    for (int k = 0; k < taps->count; ++k) acc += taps->w[k] * raster(taps->x[k], taps->y[k], c);
    out[c] = acc;
  }
  return true;
}

std::optional<double> sample_depth(const DepthMap& depth, double x, double y) {
  const auto taps = bilinear_taps(depth.width(), depth.height(), x, y);
  if (!taps) return std::nullopt;
  double inv = 0.0;
  for (int k = 0; k < taps->count; ++k) {
    if (!depth.is_valid(taps->x[k], taps->y[k])) return std::nullopt;
    inv += taps->w[k] / depth.values(taps->x[k], taps->y[k]);
  }
  if (!(inv > 0.0)) return std::nullopt;
  return 1.0 / inv;
}

}  // namespace cyldepth
