#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "cyldepth/raster.hpp"

namespace cyldepth {

/// Points closer than this to the camera's principal plane are "behind".
inline constexpr double kMinProjectionDepth = 1e-3;
/// Tolerance on rotation orthonormality, determinant and the last row.
inline constexpr double kPoseTolerance = 1e-9;

/// Pinhole intrinsics. Pixel centers sit at integer coordinates and the
/// principal point uses the same convention.
struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws ParameterError when the matrix is not invertible or the
  /// principal point lies outside the image.
  void validate() const;
  Eigen::Matrix3d matrix() const;
  /// K^-1 (u, v, 1).
  Eigen::Vector3d ray(double u, double v) const {
    return {(u - cx) / fx, (v - cy) / fy, 1.0};
  }
  bool operator==(const Intrinsics&) const = default;
};

/// Rigid transform. Constructed only through validating factories, so every
/// instance has an orthonormal rotation with determinant +1.
class Pose {
 public:
  Pose() : rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}

  static Pose from_matrix(const Eigen::Matrix4d& m, double tol = kPoseTolerance);
  static Pose from_rotation_translation(const Eigen::Matrix3d& r, const Eigen::Vector3d& t,
                                        double tol = kPoseTolerance);
  static Pose from_translation(const Eigen::Vector3d& t);
  /// Rotation by `angle` radians about the z-axis.
  static Pose from_yaw(double angle, const Eigen::Vector3d& t = Eigen::Vector3d::Zero());

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }
  Eigen::Matrix4d matrix() const;

  Pose inverse() const;
  Pose operator*(const Pose& rhs) const;
  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const { return rotation_ * p + translation_; }

  bool operator==(const Pose& o) const {
    return rotation_ == o.rotation_ && translation_ == o.translation_;
  }

 private:
  Pose(const Eigen::Matrix3d& r, const Eigen::Vector3d& t) : rotation_(r), translation_(t) {}

  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
};

/// Largest deviation of `m` from a valid rigid transform; used by the
/// factories and by schema diagnostics.
double pose_defect(const Eigen::Matrix4d& m);

struct Camera {
  std::string name;
  Intrinsics intrinsics;
  /// Maps camera coordinates into the rig reference frame.
  Pose cam_to_ref;
};

/// Ordered cameras of a surround rig. The order is the view order of every
/// per-view raster. `front` indexes the front camera (the pose network's
/// camera).
struct CameraRig {
  std::vector<Camera> cameras;
  std::size_t front = 0;
  Eigen::Vector3d cylinder_center = Eigen::Vector3d::Zero();
  /// Non-fatal configuration notes, e.g. a ring without overlap.
  std::vector<std::string> warnings;

  std::size_t size() const { return cameras.size(); }
  void validate() const;
  /// Pose mapping camera `from` coordinates into camera `to` coordinates.
  Pose relative_pose(std::size_t to, std::size_t from) const;
  /// Pose of camera i relative to the front camera.
  Pose cam_to_front(std::size_t i) const { return relative_pose(front, i); }
};

/// Ordered view pairs (i, j), i != j, whose frusta intersect. Estimated by
/// pushing a pixel lattice of view i out to several depths and testing
/// visibility in view j.
std::vector<std::pair<std::size_t, std::size_t>> adjacent_views(const CameraRig& rig);

/// Reference-frame 3D point per (strided) pixel.
struct PointMap {
  Grid<Eigen::Vector3d> points;
  Mask valid;
  int width() const { return points.width(); }
  int height() const { return points.height(); }
};

/// Lifts every stride x stride window to 3D. The window's depth is the
/// average of its valid pixels and the window center (s*i + (s-1)/2) is the
/// pixel that gets back-projected.
PointMap backproject(const DepthMap& depth, const Intrinsics& intr, const Pose& cam_to_ref,
                     int stride = 1);

/// Continuous pixel location plus depth along the camera z-axis.
struct PixelDepth {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

/// Projects one reference-frame point. Returns false when the point is
/// behind the camera (z <= kMinProjectionDepth) or outside
/// [-0.5, W-0.5) x [-0.5, H-0.5).
bool project_point_to_view(const Eigen::Vector3d& p_ref, const Intrinsics& intr, const Pose& cam_to_ref,
                           PixelDepth& out);

struct ProjectionMap {
  Grid<PixelDepth> pixels;
  Mask valid;
};
ProjectionMap project_to_view(const PointMap& points, const Intrinsics& intr, const Pose& cam_to_ref);

struct WarpResult {
  ImageRaster image;
  Mask valid;
};

/// Inverse warp: every target pixel of camera i is lifted with its depth,
/// moved into camera j by `relpose_ji` and the source image is bilinearly
/// sampled there. Samples that need out-of-bounds taps are invalid.
WarpResult warp_spatial(const DepthMap& target_depth, const ImageRaster& source_image,
                        const Intrinsics& intr_i, const Intrinsics& intr_j, const Pose& relpose_ji);

/// Per-camera temporal motion from the front camera's motion:
/// cam_to_front^-1 * front_motion * cam_to_front.
Pose compose_temporal_pose(const Pose& front_motion, const Pose& cam_to_front);

/// temporal_j * spatial_ji: camera i at t into camera j at t'.
Pose compose_spatiotemporal_pose(const Pose& temporal_j, const Pose& spatial_ji);

}  // namespace cyldepth
