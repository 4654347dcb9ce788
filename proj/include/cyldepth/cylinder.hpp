#pragma once

#include <vector>

#include <Eigen/Core>

#include "cyldepth/raster.hpp"
#include "cyldepth/rig.hpp"

namespace cyldepth {

/// Points closer than this to the cylinder axis have no projection.
inline constexpr double kMinAxisDistance = 1e-6;

/// Unit cylinder (radius 1) whose axis is parallel to the reference z-axis.
struct Cylinder {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  static constexpr double radius = 1.0;
};

/// Azimuth in (-pi, pi] and height on the unit cylinder.
struct CylCoord {
  double theta = 0.0;
  double h = 0.0;
  bool operator==(const CylCoord&) const = default;
};

struct CylProjection {
  CylCoord coord;
  /// Intersection of the ray c + b (p - c), b > 0, with the lateral surface.
  Eigen::Vector3d surface_point;
};

/// Central projection through the cylinder center onto its lateral surface.
/// Throws OnAxisError when p is within kMinAxisDistance of the axis.
CylProjection project_point(const Eigen::Vector3d& p, const Cylinder& cyl);

/// Non-throwing variant used for whole rasters.
bool try_project_point(const Eigen::Vector3d& p, const Cylinder& cyl, CylCoord& out);

struct PositionMap {
  Grid<CylCoord> coords;
  Mask valid;
  int width() const { return coords.width(); }
  int height() const { return coords.height(); }
};

std::vector<PositionMap> build_position_maps(const std::vector<PointMap>& points, const Cylinder& cyl);

/// Displacement on the developed cylinder surface: (a.theta - b.theta)
/// wrapped into (-pi, pi], and a.h - b.h.
Eigen::Vector2d geodesic_delta(const CylCoord& a, const CylCoord& b);

/// Wraps an angle difference into (-pi, pi].
double wrap_angle(double angle);

}  // namespace cyldepth
