#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "cyldepth/metrics.hpp"
#include "cyldepth/raster.hpp"
#include "cyldepth/rig.hpp"

namespace cyldepth {

enum class TextureKind { checker, stripes, flat };

/// Procedural albedo evaluated on world coordinates, so every view sees the
/// same color for the same surface point. The pattern is a product of
/// sinusoids (band-limited checker) or a single sinusoid (stripes); its
/// amplitude decays as exp(-(rho / fade_distance)^2) with rho the distance
/// to the rig origin, keeping far surfaces below the raster's Nyquist rate.
struct Texture {
  TextureKind kind = TextureKind::checker;
  double frequency = 0.5;  ///< cycles per meter
  double contrast = 0.4;   ///< pattern amplitude relative to base color
  Eigen::Vector3d color{0.6, 0.6, 0.6};
  double fade_distance = std::numeric_limits<double>::infinity();
};

/// Horizontal square patch at height z.
struct GroundPlane {
  double z = 0.0;
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double half_extent = 50.0;
};

struct Box {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Ones();
};

struct Sphere {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 1.0;
};

struct Primitive {
  std::variant<GroundPlane, Box, Sphere> shape;
  Texture texture;
};

struct SynthScene {
  std::vector<Primitive> primitives;
  CameraRig rig;
  std::uint64_t seed = 0;
  Eigen::Vector3d light_dir = Eigen::Vector3d(0.3, 0.2, 0.93).normalized();
  Eigen::Vector3d sky_color{0.55, 0.7, 0.9};

  /// Throws ParameterError for degenerate primitives.
  void validate() const;
};

struct Hit {
  double t = 0.0;  ///< ray parameter; equals camera depth for z-normalized rays
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::Zero();
  std::size_t primitive = 0;
};

/// Nearest intersection with t > t_min of origin + t * dir (dir need not be
/// normalized).
std::optional<Hit> intersect(const SynthScene& scene, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                             double t_min = 1e-9);

/// Lambertian color of a hit point, independent of the viewing ray.
Eigen::Vector3d shade(const SynthScene& scene, const Hit& hit);

/// Exact depth seen by `view` at continuous pixel (x, y); nullopt for sky.
std::optional<double> raycast_depth(const SynthScene& scene, std::size_t view, double x, double y);

struct ViewRender {
  ImageRaster image;  ///< RGB, unit range
  DepthMap depth;     ///< sky pixels invalid
};

struct RenderBundle {
  std::vector<ViewRender> views;
};

/// One ray per pixel center, closed-form nearest hit.
RenderBundle render(const SynthScene& scene);

struct RingRigOptions {
  int cameras = 6;
  double fov_deg = 90.0;  ///< horizontal field of view
  double radius_m = 1.0;
  double height_m = 1.5;
  int width = 640;
  int height = 384;
};

/// Outward-facing cameras at yaw k * 360 / n on a horizontal circle. Camera
/// 0 looks along +x and is the front camera. A ring without horizontal
/// overlap is built but carries a warning.
CameraRig make_ring_rig(const RingRigOptions& options = {});

/// Horizontal overlap between adjacent ring cameras in degrees.
double ring_overlap_deg(int cameras, double fov_deg);

/// Preset scenes: "plane", "boxtown" (plane + 12 seeded boxes) and
/// "occlusion-pair". Throws ParameterError for an unknown name.
SynthScene make_preset(const std::string& name, const CameraRig& rig, std::uint64_t seed = 7);
std::vector<std::string> preset_names();

/// Analytic correspondences from view_i to view_j: a pixel pairs with the
/// projection of its hit point when a ray from camera j reaches that same
/// point first. Landing locations must be sampleable, i.e. inside
/// [0, W-1] x [0, H-1].
CorrespondenceSet exact_correspondences(const SynthScene& scene, std::size_t view_i, std::size_t view_j);

/// Deterministic features for render fixtures: stride x stride average of
/// RGB plus a constant channel.
FeatureMap pooled_features(const ImageRaster& image, int stride);

}  // namespace cyldepth
