#include "cyldepth/cylinder.hpp"

#include <cmath>
#include <numbers>

#include "cyldepth/error.hpp"
#include "cyldepth/parallel.hpp"

namespace cyldepth {
namespace {

// atan2 returns -pi for (-0.0, x<0); the azimuth range is (-pi, pi].
double azimuth(double y, double x) {
  const double theta = std::atan2(y, x);
  return theta == -std::numbers::pi ? std::numbers::pi : theta;
}

}  // namespace

double wrap_angle(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (angle > std::numbers::pi || angle <= -std::numbers::pi) {
    angle = std::remainder(angle, two_pi);
    if (angle <= -std::numbers::pi) angle += two_pi;
  }
  return angle;
}

bool try_project_point(const Eigen::Vector3d& p, const Cylinder& cyl, CylCoord& out) {
  const Eigen::Vector3d po = p - cyl.center;
  const double r = std::hypot(po.x(), po.y());
  if (!(r > kMinAxisDistance) || !std::isfinite(r) || !std::isfinite(po.z())) return false;
  // The surface point is c + (r_c / r) p_o. Its azimuth equals that of p_o
  // because the ray parameter is positive, so it is taken from p_o directly.
  out.theta = azimuth(po.y(), po.x());
  out.h = po.z() / r;
  return true;
}

CylProjection project_point(const Eigen::Vector3d& p, const Cylinder& cyl) {
  CylProjection result;
  if (!try_project_point(p, cyl, result.coord)) throw OnAxisError("point lies on the cylinder axis");
  const Eigen::Vector3d po = p - cyl.center;
  const double r = std::hypot(po.x(), po.y());
  result.surface_point = cyl.center + (Cylinder::radius / r) * po;
  return result;
}

std::vector<PositionMap> build_position_maps(const std::vector<PointMap>& points, const Cylinder& cyl) {
  std::vector<PositionMap> maps;
  maps.reserve(points.size());
  for (const auto& pm : points) {
    PositionMap out{Grid<CylCoord>(pm.width(), pm.height()), Mask(pm.width(), pm.height(), 0)};
    parallel_for(pm.points.size(), [&](std::size_t i) {
      if (!pm.valid[i]) return;
      CylCoord c;
      if (try_project_point(pm.points[i], cyl, c)) {
        out.coords[i] = c;
        out.valid[i] = 1;
      }
    });
    maps.push_back(std::move(out));
  }
  return maps;
}

Eigen::Vector2d geodesic_delta(const CylCoord& a, const CylCoord& b) {
  return {wrap_angle(a.theta - b.theta), a.h - b.h};
}

}  // namespace cyldepth
