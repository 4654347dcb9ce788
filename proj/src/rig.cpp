#include "cyldepth/rig.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "cyldepth/error.hpp"
#include "cyldepth/parallel.hpp"

namespace cyldepth {

void Intrinsics::validate() const {
  if (!(std::isfinite(fx) && std::isfinite(fy) && fx > 0.0 && fy > 0.0))
    throw ParameterError("intrinsics: focal lengths must be finite and positive");
  if (width <= 0 || height <= 0) throw ParameterError("intrinsics: image size must be positive");
  if (!(cx > 0.0 && cx < width && cy > 0.0 && cy < height))
    throw ParameterError("intrinsics: principal point outside the image");
}

Eigen::Matrix3d Intrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

double pose_defect(const Eigen::Matrix4d& m) {
  if (!m.allFinite()) return std::numeric_limits<double>::infinity();
  const Eigen::Matrix3d r = m.topLeftCorner<3, 3>();
  double defect = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  defect = std::max(defect, std::abs(r.determinant() - 1.0));
  const Eigen::RowVector4d last(0.0, 0.0, 0.0, 1.0);
  defect = std::max(defect, (m.row(3) - last).cwiseAbs().maxCoeff());
  return defect;
}

Pose Pose::from_matrix(const Eigen::Matrix4d& m, double tol) {
  const double defect = pose_defect(m);
  if (!(defect <= tol)) {
    std::ostringstream os;
    os << "pose is not a rigid transform (defect " << defect << ", determinant "
       << m.topLeftCorner<3, 3>().determinant() << ")";
    throw ParameterError(os.str());
  }
  return Pose(m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>());
}

Pose Pose::from_rotation_translation(const Eigen::Matrix3d& r, const Eigen::Vector3d& t, double tol) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = r;
  m.topRightCorner<3, 1>() = t;
  return from_matrix(m, tol);
}

Pose Pose::from_translation(const Eigen::Vector3d& t) {
  if (!t.allFinite()) throw ParameterError("pose translation is not finite");
  return Pose(Eigen::Matrix3d::Identity(), t);
}

Pose Pose::from_yaw(double angle, const Eigen::Vector3d& t) {
  if (!std::isfinite(angle) || !t.allFinite()) throw ParameterError("pose parameters are not finite");
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Eigen::Matrix3d r;
  r << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  return Pose(r, t);
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Pose Pose::inverse() const {
  const Eigen::Matrix3d rt = rotation_.transpose();
  return Pose(rt, -(rt * translation_));
}

Pose Pose::operator*(const Pose& rhs) const {
  return Pose(rotation_ * rhs.rotation_, rotation_ * rhs.translation_ + translation_);
}

void CameraRig::validate() const {
  if (cameras.empty()) throw ParameterError("rig has no cameras");
  if (front >= cameras.size()) throw ParameterError("front camera index out of range");
  if (!cylinder_center.allFinite()) throw ParameterError("cylinder center is not finite");
  for (const auto& cam : cameras) {
    try {
      cam.intrinsics.validate();
    } catch (const ParameterError& e) {
      throw ParameterError("camera '" + cam.name + "': " + e.what());
    }
    if (!(pose_defect(cam.cam_to_ref.matrix()) <= kPoseTolerance))
      throw ParameterError("camera '" + cam.name + "': invalid pose");
  }
}

Pose CameraRig::relative_pose(std::size_t to, std::size_t from) const {
  return cameras.at(to).cam_to_ref.inverse() * cameras.at(from).cam_to_ref;
}

bool project_point_to_view(const Eigen::Vector3d& p_ref, const Intrinsics& intr, const Pose& cam_to_ref,
                           PixelDepth& out) {
  const Eigen::Vector3d pc = cam_to_ref.inverse() * p_ref;
  if (!(pc.z() > kMinProjectionDepth)) return false;
  out.u = intr.fx * pc.x() / pc.z() + intr.cx;
  out.v = intr.fy * pc.y() / pc.z() + intr.cy;
  out.depth = pc.z();
  return out.u >= -0.5 && out.u < intr.width - 0.5 && out.v >= -0.5 && out.v < intr.height - 0.5;
}

std::vector<std::pair<std::size_t, std::size_t>> adjacent_views(const CameraRig& rig) {
  static constexpr double kProbeDepths[] = {0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0};
  static constexpr int kLattice = 17;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < rig.size(); ++i) {
    const auto& ci = rig.cameras[i];
    for (std::size_t j = 0; j < rig.size(); ++j) {
      if (i == j) continue;
      const auto& cj = rig.cameras[j];
      bool hit = false;
      for (int a = 0; a < kLattice && !hit; ++a) {
        for (int b = 0; b < kLattice && !hit; ++b) {
          const double u = (ci.intrinsics.width - 1) * a / double(kLattice - 1);
          const double v = (ci.intrinsics.height - 1) * b / double(kLattice - 1);
          for (double d : kProbeDepths) {
            const Eigen::Vector3d p = ci.cam_to_ref * (ci.intrinsics.ray(u, v) * d);
            PixelDepth pd;
            if (project_point_to_view(p, cj.intrinsics, cj.cam_to_ref, pd)) {
              hit = true;
              break;
            }
          }
        }
      }
      if (hit) pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

PointMap backproject(const DepthMap& depth, const Intrinsics& intr, const Pose& cam_to_ref, int stride) {
  intr.validate();
  if (stride <= 0) throw ParameterError("stride must be positive");
  if (depth.width() != intr.width || depth.height() != intr.height)
    throw DimensionError("depth raster does not match intrinsics");
  if (depth.width() % stride != 0 || depth.height() % stride != 0)
    throw DimensionError("depth dimensions are not divisible by stride " + std::to_string(stride));

  const int ws = depth.width() / stride;
  const int hs = depth.height() / stride;
  PointMap out{Grid<Eigen::Vector3d>(ws, hs, Eigen::Vector3d::Zero()), Mask(ws, hs, 0)};
  const double half = (stride - 1) / 2.0;
  parallel_for(static_cast<std::size_t>(hs), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < ws; ++x) {
      double sum = 0.0;
      int n = 0;
      for (int dy = 0; dy < stride; ++dy) {
        for (int dx = 0; dx < stride; ++dx) {
          const int px = x * stride + dx;
          const int py = y * stride + dy;
          if (depth.is_valid(px, py)) {
            sum += depth.values(px, py);
            ++n;
          }
        }
      }
      if (n == 0) continue;
      const double d = sum / n;
      const Eigen::Vector3d pc = intr.ray(x * stride + half, y * stride + half) * d;
      out.points(x, y) = cam_to_ref * pc;
      out.valid(x, y) = out.points(x, y).allFinite() ? 1 : 0;
    }
  }, 4);
  return out;
}

ProjectionMap project_to_view(const PointMap& points, const Intrinsics& intr, const Pose& cam_to_ref) {
  ProjectionMap out{Grid<PixelDepth>(points.width(), points.height()), Mask(points.width(), points.height(), 0)};
  parallel_for(points.points.size(), [&](std::size_t i) {
    if (!points.valid[i]) return;
    PixelDepth pd;
    const bool ok = project_point_to_view(points.points[i], intr, cam_to_ref, pd);
    out.pixels[i] = pd;
    out.valid[i] = ok ? 1 : 0;
  });
  return out;
}

WarpResult warp_spatial(const DepthMap& target_depth, const ImageRaster& source_image, const Intrinsics& intr_i,
                        const Intrinsics& intr_j, const Pose& relpose_ji) {
  intr_i.validate();
  intr_j.validate();
  if (target_depth.width() != intr_i.width || target_depth.height() != intr_i.height)
    throw DimensionError("target depth does not match target intrinsics");
  if (source_image.width() != intr_j.width || source_image.height() != intr_j.height)
    throw DimensionError("source image does not match source intrinsics");

  const int w = target_depth.width();
  const int h = target_depth.height();
  WarpResult out{ImageRaster(w, h, source_image.channels(), 0.0), Mask(w, h, 0)};
  parallel_for(static_cast<std::size_t>(h), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < w; ++x) {
      if (!target_depth.is_valid(x, y)) continue;
      const Eigen::Vector3d pj = relpose_ji * (intr_i.ray(x, y) * target_depth.values(x, y));
      if (!(pj.z() > kMinProjectionDepth)) continue;
      const double u = intr_j.fx * pj.x() / pj.z() + intr_j.cx;
      const double v = intr_j.fy * pj.y() / pj.z() + intr_j.cy;
      if (sample_bilinear(source_image, u, v, out.image.pixel(x, y))) out.valid(x, y) = 1;
    }
  }, 4);
  return out;
}

Pose compose_temporal_pose(const Pose& front_motion, const Pose& cam_to_front) {
  return cam_to_front.inverse() * front_motion * cam_to_front;
}

Pose compose_spatiotemporal_pose(const Pose& temporal_j, const Pose& spatial_ji) {
  return temporal_j * spatial_ji;
}

}  // namespace cyldepth
