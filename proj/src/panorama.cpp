#include "cyldepth/panorama.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cyldepth/error.hpp"

namespace cyldepth {

bool Panorama::bin(const CylCoord& c, int& col, int& row) const {
  const int w = image.width();
  const int h = image.height();
  if (!(c.h >= h_min && c.h <= h_max)) return false;
  const double u = (std::numbers::pi - c.theta) / (2.0 * std::numbers::pi) * w;
  col = std::clamp(static_cast<int>(std::floor(u)), 0, w - 1);
  const double span = h_max - h_min;
  const double v = span > 0.0 ? (h_max - c.h) / span * h : 0.0;
  row = std::clamp(static_cast<int>(std::floor(v)), 0, h - 1);
  return true;
}

Panorama render_panorama(const CameraRig& rig, const std::vector<DepthMap>& depths,
                         const std::vector<ImageRaster>& images, const PanoramaOptions& options) {
  if (depths.size() != rig.size() || images.size() != rig.size())
    throw DimensionError("one depth map and one image per camera required");
  if (options.width <= 0 || options.height < 0) throw ParameterError("panorama size must be positive");
  const Cylinder cyl{rig.cylinder_center};

  struct Sample {
    CylCoord c;
    double r;
  };
  std::vector<Grid<Sample>> samples;
  std::vector<Mask> ok;
  double h_min = std::numeric_limits<double>::infinity();
  double h_max = -std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < rig.size(); ++v) {
    const auto& cam = rig.cameras[v];
    const auto& d = depths[v];
    if (d.width() != cam.intrinsics.width || d.height() != cam.intrinsics.height)
      throw DimensionError("depth of camera '" + cam.name + "' does not match its intrinsics");
    if (images[v].width() != d.width() || images[v].height() != d.height())
      throw DimensionError("image of camera '" + cam.name + "' does not match its depth");
    if (images[v].channels() != 3 && images[v].channels() != 1)
      throw DimensionError("panorama images need 1 or 3 channels");
    Grid<Sample> s(d.width(), d.height());
    Mask m(d.width(), d.height(), 0);
    for (int y = 0; y < d.height(); ++y) {
      for (int x = 0; x < d.width(); ++x) {
        if (!d.is_valid(x, y)) continue;
        const Eigen::Vector3d p = cam.cam_to_ref * (cam.intrinsics.ray(x, y) * d.values(x, y));
        CylCoord c;
        if (!try_project_point(p, cyl, c)) continue;
        s(x, y) = {c, (p - cyl.center).head<2>().norm()};
        m(x, y) = 1;
        h_min = std::min(h_min, c.h);
        h_max = std::max(h_max, c.h);
      }
    }
    samples.push_back(std::move(s));
    ok.push_back(std::move(m));
  }
  if (!(h_min <= h_max)) throw EmptyEvaluationError("no valid depth to build a panorama from");

  Panorama pano;
  pano.h_min = h_min;
  pano.h_max = h_max;
  int height = options.height;
  if (height == 0)
    height = std::max(1, static_cast<int>(std::lround(options.width * (h_max - h_min) / (2.0 * std::numbers::pi))));
  pano.image = ImageRaster(options.width, height, 3, 0.0);
  pano.written = Mask(options.width, height, 0);
  pano.radius = Grid<double>(options.width, height, std::numeric_limits<double>::infinity());
  pano.source = Grid<PanoramaSource>(options.width, height);

  // Sequential in view/row/column order; ties keep the earlier sample.
  for (std::size_t v = 0; v < rig.size(); ++v) {
    const auto& img = images[v];
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) {
        if (!ok[v](x, y)) continue;
        const Sample& s = samples[v](x, y);
        int col = 0;
        int row = 0;
        if (!pano.bin(s.c, col, row)) continue;
        if (!(s.r < pano.radius(col, row))) continue;
        pano.radius(col, row) = s.r;
        pano.written(col, row) = 1;
        pano.source(col, row) = {static_cast<std::int32_t>(v), x, y};
        for (int c = 0; c < 3; ++c) pano.image(col, row, c) = img(x, y, img.channels() == 3 ? c : 0);
      }
    }
  }
  return pano;
}

}  // namespace cyldepth
