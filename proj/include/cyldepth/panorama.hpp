#pragma once

#include <cstdint>
#include <vector>

#include "cyldepth/cylinder.hpp"
#include "cyldepth/raster.hpp"
#include "cyldepth/rig.hpp"

namespace cyldepth {

struct PanoramaOptions {
  int width = 2048;
  /// 0 picks width * (h_max - h_min) / (2 pi), so bins are square on the
  /// developed surface.
  int height = 0;
};

/// Which source pixel won a panorama bin.
struct PanoramaSource {
  std::int32_t view = -1;
  std::int32_t x = -1;
  std::int32_t y = -1;
};

/// Debug view of the shared cylinder: column from azimuth over (-pi, pi]
/// (theta = pi at the left edge), row from height (h_max at the top).
struct Panorama {
  ImageRaster image;
  Mask written;
  Grid<double> radius;  ///< z-buffer: distance from the cylinder axis
  Grid<PanoramaSource> source;
  double h_min = 0.0;
  double h_max = 0.0;

  /// Bin of a cylinder coordinate; false when h is outside [h_min, h_max].
  bool bin(const CylCoord& c, int& col, int& row) const;
};

/// Splats every valid pixel of every view to the bin of its cylinder
/// coordinate; the sample nearest to the axis wins and holes stay black.
Panorama render_panorama(const CameraRig& rig, const std::vector<DepthMap>& depths,
                         const std::vector<ImageRaster>& images, const PanoramaOptions& options = {});

}  // namespace cyldepth
