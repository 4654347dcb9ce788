#include "cyldepth/synthworld.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "cyldepth/error.hpp"
#include "cyldepth/parallel.hpp"

namespace cyldepth {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kAmbient = 0.35;
constexpr double kDiffuse = 0.65;
// Minimum texture period in pixels that presets allow on screen.
constexpr double kBandLimitPx = 6.0;

std::optional<Hit> intersect_plane(const GroundPlane& g, const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                                   double t_min) {
  if (d.z() == 0.0) return std::nullopt;
  const double t = (g.z - o.z()) / d.z();
  if (!(t > t_min)) return std::nullopt;
  const Eigen::Vector3d p = o + t * d;
  if (std::abs(p.x() - g.center.x()) > g.half_extent || std::abs(p.y() - g.center.y()) > g.half_extent)
    return std::nullopt;
  Hit hit;
  hit.t = t;
  hit.point = p;
  hit.normal = Eigen::Vector3d(0.0, 0.0, o.z() >= g.z ? 1.0 : -1.0);
  return hit;
}

std::optional<Hit> intersect_box(const Box& b, const Eigen::Vector3d& o, const Eigen::Vector3d& d, double t_min) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  int near_axis = -1;
  int far_axis = -1;
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < b.min[a] || o[a] > b.max[a]) return std::nullopt;
      continue;
    }
    double t0 = (b.min[a] - o[a]) / d[a];
    double t1 = (b.max[a] - o[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > t_near) {
      t_near = t0;
      near_axis = a;
    }
    if (t1 < t_far) {
      t_far = t1;
      far_axis = a;
    }
  }
  if (t_near > t_far) return std::nullopt;
  Hit hit;
  int axis = -1;
  if (t_near > t_min) {
    hit.t = t_near;
    axis = near_axis;
  } else if (t_far > t_min) {
    hit.t = t_far;
    axis = far_axis;
  } else {
    return std::nullopt;
  }
  if (axis < 0) return std::nullopt;
  hit.point = o + hit.t * d;
  hit.normal = Eigen::Vector3d::Zero();
  const double mid = 0.5 * (b.min[axis] + b.max[axis]);
  hit.normal[axis] = hit.point[axis] >= mid ? 1.0 : -1.0;
  return hit;
}

std::optional<Hit> intersect_sphere(const Sphere& s, const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                                    double t_min) {
  const Eigen::Vector3d oc = o - s.center;
  const double a = d.dot(d);
  const double b = oc.dot(d);
  const double c = oc.dot(oc) - s.radius * s.radius;
  const double disc = b * b - a * c;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  // Numerically stable roots of a t^2 + 2 b t + c.
  const double q = b > 0.0 ? -(b + sq) : -b + sq;
  double t0 = q / a;
  double t1 = q != 0.0 ? c / q : t0;
  if (t0 > t1) std::swap(t0, t1);
  double t = t0;
  if (!(t > t_min)) t = t1;
  if (!(t > t_min)) return std::nullopt;
  Hit hit;
  hit.t = t;
  hit.point = o + t * d;
  hit.normal = (hit.point - s.center) / s.radius;
  return hit;
}

// Pattern coordinates on the surface, in meters.
Eigen::Vector2d surface_coords(const Primitive& prim, const Hit& hit) {
  const Eigen::Vector3d& p = hit.point;
  if (std::holds_alternative<GroundPlane>(prim.shape)) return {p.x(), p.y()};
  if (std::holds_alternative<Box>(prim.shape)) {
    if (hit.normal.x() != 0.0) return {p.y(), p.z()};
    if (hit.normal.y() != 0.0) return {p.x(), p.z()};
    return {p.x(), p.y()};
  }
  return {p.x() + 0.5 * p.y(), p.z() + 0.5 * p.y()};
}

double pattern(const Texture& tex, const Eigen::Vector2d& uv) {
  switch (tex.kind) {
    case TextureKind::checker:
      return std::sin(kTwoPi * tex.frequency * uv.x()) * std::sin(kTwoPi * tex.frequency * uv.y());
    case TextureKind::stripes:
      return std::sin(kTwoPi * tex.frequency * uv.x());
    case TextureKind::flat:
      break;
  }
  return 0.0;
}

// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

double max_focal(const CameraRig& rig) {
  double f = 1.0;
  for (const auto& c : rig.cameras) f = std::max({f, c.intrinsics.fx, c.intrinsics.fy});
  return f;
}

double mean_camera_height(const CameraRig& rig) {
  if (rig.cameras.empty()) return 1.5;
  double h = 0.0;
  for (const auto& c : rig.cameras) h += std::abs(c.cam_to_ref.translation().z());
  return std::max(0.5, h / static_cast<double>(rig.cameras.size()));
}

// Fade distances that keep the on-screen texture period above the band
// limit: frontal surfaces shrink with 1/rho, the ground with h/rho^2.
double frontal_fade(const CameraRig& rig, double frequency) {
  return max_focal(rig) / (frequency * kBandLimitPx);
}
double ground_fade(const CameraRig& rig, double frequency) {
  return std::sqrt(max_focal(rig) * mean_camera_height(rig) / (frequency * kBandLimitPx));
}

Primitive ground(const CameraRig& rig) {
  Texture tex;
  tex.kind = TextureKind::checker;
  tex.frequency = 0.5;
  tex.contrast = 0.45;
  tex.color = {0.55, 0.5, 0.42};
  tex.fade_distance = ground_fade(rig, tex.frequency);
  return {GroundPlane{0.0, Eigen::Vector2d::Zero(), 60.0}, tex};
}

Primitive box_at(double azimuth, double distance, double sx, double sy, double sz, const Texture& base,
                 const CameraRig& rig) {
  const Eigen::Vector3d c(distance * std::cos(azimuth), distance * std::sin(azimuth), 0.0);
  Box b{c - Eigen::Vector3d(sx / 2, sy / 2, 0.0), c + Eigen::Vector3d(sx / 2, sy / 2, sz)};
  Texture tex = base;
  tex.fade_distance = frontal_fade(rig, tex.frequency);
  return {b, tex};
}

}  // namespace

void SynthScene::validate() const {
  for (std::size_t k = 0; k < primitives.size(); ++k) {
    const auto& prim = primitives[k];
    const std::string where = "primitive " + std::to_string(k) + ": ";
    if (const auto* g = std::get_if<GroundPlane>(&prim.shape)) {
      if (!(g->half_extent > 0.0) || !std::isfinite(g->z)) throw ParameterError(where + "plane needs a positive extent");
    } else if (const auto* b = std::get_if<Box>(&prim.shape)) {
      if (!((b->max - b->min).minCoeff() > 0.0) || !b->min.allFinite() || !b->max.allFinite())
        throw ParameterError(where + "box needs positive extents");
    } else if (const auto* s = std::get_if<Sphere>(&prim.shape)) {
      if (!(s->radius > 0.0) || !s->center.allFinite()) throw ParameterError(where + "sphere needs a positive radius");
    }
    const Texture& t = prim.texture;
    if (!(t.frequency >= 0.0) || !(t.contrast >= 0.0 && t.contrast <= 1.0) || !(t.fade_distance > 0.0) ||
        !t.color.allFinite())
      throw ParameterError(where + "invalid texture parameters");
  }
  if (!(light_dir.norm() > 0.0)) throw ParameterError("light direction must be nonzero");
}

std::optional<Hit> intersect(const SynthScene& scene, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                             double t_min) {
  std::optional<Hit> best;
  for (std::size_t k = 0; k < scene.primitives.size(); ++k) {
    const auto& shape = scene.primitives[k].shape;
    std::optional<Hit> hit;
    if (const auto* g = std::get_if<GroundPlane>(&shape)) hit = intersect_plane(*g, origin, dir, t_min);
    else if (const auto* b = std::get_if<Box>(&shape)) hit = intersect_box(*b, origin, dir, t_min);
    else if (const auto* s = std::get_if<Sphere>(&shape)) hit = intersect_sphere(*s, origin, dir, t_min);
    if (hit && (!best || hit->t < best->t)) {
      hit->primitive = k;
      best = hit;
    }
  }
  return best;
}

Eigen::Vector3d shade(const SynthScene& scene, const Hit& hit) {
  const Primitive& prim = scene.primitives.at(hit.primitive);
  const Texture& tex = prim.texture;
  const double rho = hit.point.norm();
  const double fade = std::isfinite(tex.fade_distance) ? std::exp(-(rho / tex.fade_distance) * (rho / tex.fade_distance)) : 1.0;
  const double albedo_scale = 1.0 + tex.contrast * fade * pattern(tex, surface_coords(prim, hit));
  const double lambert = std::max(0.0, hit.normal.dot(scene.light_dir.normalized()));
  const Eigen::Vector3d color = tex.color * albedo_scale * (kAmbient + kDiffuse * lambert);
  return color.cwiseMax(0.0).cwiseMin(1.0);
}

std::optional<double> raycast_depth(const SynthScene& scene, std::size_t view, double x, double y) {
  const Camera& cam = scene.rig.cameras.at(view);
  const Eigen::Vector3d dir = cam.cam_to_ref.rotation() * cam.intrinsics.ray(x, y);
  const auto hit = intersect(scene, cam.cam_to_ref.translation(), dir);
  if (!hit) return std::nullopt;
  return hit->t;
}

RenderBundle render(const SynthScene& scene) {
  scene.validate();
  scene.rig.validate();
  RenderBundle bundle;
  for (const auto& cam : scene.rig.cameras) {
    const int w = cam.intrinsics.width;
    const int h = cam.intrinsics.height;
    ViewRender view{ImageRaster(w, h, 3, 0.0), DepthMap(w, h)};
    const Eigen::Vector3d origin = cam.cam_to_ref.translation();
    parallel_for(static_cast<std::size_t>(h), [&](std::size_t row) {
      const int y = static_cast<int>(row);
      for (int x = 0; x < w; ++x) {
        const Eigen::Vector3d dir = cam.cam_to_ref.rotation() * cam.intrinsics.ray(x, y);
        const auto hit = intersect(scene, origin, dir);
        Eigen::Vector3d color = scene.sky_color;
        if (hit) {
          view.depth.set(x, y, hit->t);
          color = shade(scene, *hit);
        }
        for (int c = 0; c < 3; ++c) view.image(x, y, c) = color[c];
      }
    }, 2);
    bundle.views.push_back(std::move(view));
  }
  return bundle;
}

double ring_overlap_deg(int cameras, double fov_deg) { return fov_deg - 360.0 / cameras; }

CameraRig make_ring_rig(const RingRigOptions& o) {
  if (o.cameras < 2) throw ParameterError("a ring rig needs at least 2 cameras");
  if (!(o.fov_deg > 0.0 && o.fov_deg < 180.0)) throw ParameterError("field of view must lie in (0, 180) degrees");
  if (o.width <= 0 || o.height <= 0) throw ParameterError("raster size must be positive");
  if (!(o.radius_m >= 0.0) || !std::isfinite(o.height_m)) throw ParameterError("invalid ring geometry");

  CameraRig rig;
  const double f = (o.width / 2.0) / std::tan(o.fov_deg * std::numbers::pi / 360.0);
  for (int k = 0; k < o.cameras; ++k) {
    const double yaw = kTwoPi * k / o.cameras;
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    Eigen::Matrix3d r;
    // Columns: camera right, down and forward axes in the reference frame.
    r << s, 0.0, c,
        -c, 0.0, s,
        0.0, -1.0, 0.0;
    const Eigen::Vector3d t(o.radius_m * c, o.radius_m * s, o.height_m);
    Camera cam;
    cam.name = "cam" + std::to_string(k);
    cam.intrinsics = {f, f, (o.width - 1) / 2.0, (o.height - 1) / 2.0, o.width, o.height};
    cam.cam_to_ref = Pose::from_rotation_translation(r, t);
    rig.cameras.push_back(cam);
  }
  const double overlap = ring_overlap_deg(o.cameras, o.fov_deg);
  if (!(overlap > 0.0)) {
    std::ostringstream os;
    os << "adjacent cameras do not overlap (" << overlap << " deg)";
    rig.warnings.push_back(os.str());
  }
  return rig;
}

std::vector<std::string> preset_names() { return {"plane", "boxtown", "occlusion-pair"}; }

SynthScene make_preset(const std::string& name, const CameraRig& rig, std::uint64_t seed) {
  SynthScene scene;
  scene.rig = rig;
  scene.seed = seed;
  scene.primitives.push_back(ground(rig));
  if (name == "plane") return scene;
  if (name == "boxtown") {
    std::mt19937_64 rng(seed);
    for (int k = 0; k < 12; ++k) {
      Texture tex;
      tex.kind = k % 2 == 0 ? TextureKind::checker : TextureKind::stripes;
      tex.frequency = uniform(rng, 0.25, 0.5);
      tex.contrast = 0.4;
      tex.color = {uniform(rng, 0.3, 0.9), uniform(rng, 0.3, 0.9), uniform(rng, 0.3, 0.9)};
      const double azimuth = kTwoPi * (k + uniform(rng, 0.1, 0.9)) / 12.0;
      const double distance = uniform(rng, 8.0, 16.0);
      const double sx = uniform(rng, 1.0, 3.0);
      const double sy = uniform(rng, 1.0, 3.0);
      const double sz = uniform(rng, 1.0, 4.0);
      scene.primitives.push_back(box_at(azimuth, distance, sx, sy, sz, tex, rig));
    }
    return scene;
  }
  if (name == "occlusion-pair") {
    Texture near_tex{TextureKind::stripes, 1.0, 0.4, {0.8, 0.35, 0.3}};
    Texture far_tex{TextureKind::checker, 0.6, 0.4, {0.3, 0.5, 0.8}};
    const double azimuth = std::numbers::pi / 6.0;
    scene.primitives.push_back(box_at(azimuth, 3.5, 0.8, 0.8, 2.5, near_tex, rig));
    scene.primitives.push_back(box_at(azimuth, 10.0, 3.0, 3.0, 3.0, far_tex, rig));
    return scene;
  }
  throw ParameterError("unknown scene preset '" + name + "'");
}

CorrespondenceSet exact_correspondences(const SynthScene& scene, std::size_t view_i, std::size_t view_j) {
  const Camera& ci = scene.rig.cameras.at(view_i);
  const Camera& cj = scene.rig.cameras.at(view_j);
  const int w = ci.intrinsics.width;
  const int h = ci.intrinsics.height;
  const Pose ref_to_j = cj.cam_to_ref.inverse();
  const Eigen::Vector3d origin_i = ci.cam_to_ref.translation();
  const Eigen::Vector3d origin_j = cj.cam_to_ref.translation();
  std::vector<CorrespondenceSet> rows(static_cast<std::size_t>(h));
  parallel_for(rows.size(), [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < w; ++x) {
      const auto hit = intersect(scene, origin_i, ci.cam_to_ref.rotation() * ci.intrinsics.ray(x, y));
      if (!hit) continue;
      const Eigen::Vector3d& p = hit->point;
      const Eigen::Vector3d pj = ref_to_j * p;
      if (!(pj.z() > kMinProjectionDepth)) continue;
      const double vx = cj.intrinsics.fx * pj.x() / pj.z() + cj.intrinsics.cx;
      const double vy = cj.intrinsics.fy * pj.y() / pj.z() + cj.intrinsics.cy;
      if (!bilinear_taps(cj.intrinsics.width, cj.intrinsics.height, vx, vy)) continue;
      // p sits at parameter 1 of this ray; anything hit earlier occludes it.
      const auto first = intersect(scene, origin_j, p - origin_j);
      if (!first || std::abs(first->t - 1.0) > 1e-9) continue;
      rows[row].push_back({view_i, x, y, view_j, vx, vy, p.norm(), pj.z()});
    }
  }, 2);
  CorrespondenceSet out;
  for (auto& r : rows) out.insert(out.end(), r.begin(), r.end());
  return out;
}

FeatureMap pooled_features(const ImageRaster& image, int stride) {
  if (stride <= 0) throw ParameterError("stride must be positive");
  if (image.width() % stride != 0 || image.height() % stride != 0)
    throw DimensionError("image dimensions are not divisible by the feature stride");
  const int ws = image.width() / stride;
  const int hs = image.height() / stride;
  FeatureMap f(ws, hs, image.channels() + 1, 0.0);
  const double inv = 1.0 / (stride * stride);
  for (int y = 0; y < hs; ++y) {
    for (int x = 0; x < ws; ++x) {
      for (int c = 0; c < image.channels(); ++c) {
        double acc = 0.0;
        for (int dy = 0; dy < stride; ++dy)
          for (int dx = 0; dx < stride; ++dx) acc += image(x * stride + dx, y * stride + dy, c);
        f(x, y, c) = acc * inv;
      }
      f(x, y, image.channels()) = 1.0;
    }
  }
  return f;
}

}  // namespace cyldepth
