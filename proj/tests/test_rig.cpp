#include <doctest.h>

#include <random>

#include <Eigen/Geometry>

#include "cyldepth/photometry.hpp"
#include "cyldepth/rig.hpp"
#include "cyldepth/synthworld.hpp"
#include "oracles.hpp"

using namespace cyldepth;

namespace {

const Intrinsics kCam{100.0, 100.0, 32.0, 24.0, 64, 48};

DepthMap constant_depth(int w, int h, double d) {
  DepthMap m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m.set(x, y, d);
  return m;
}

Pose random_pose(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector4d q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  const Eigen::Matrix3d r = Eigen::Quaterniond(q[0], q[1], q[2], q[3]).toRotationMatrix();
  return Pose::from_rotation_translation(r, Eigen::Vector3d(n(rng), n(rng), n(rng)) * 3.0, 1e-12);
}

double max_abs(const Eigen::Matrix4d& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_SUITE("rig") {

TEST_CASE("intrinsics are validated") {
  CHECK_NOTHROW(kCam.validate());
  Intrinsics bad = kCam;
  bad.fx = 0.0;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  bad = kCam;
  bad.cx = 64.0;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  bad = kCam;
  bad.cy = -1.0;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
}

TEST_CASE("backproject on the principal ray") {
  DepthMap d = constant_depth(64, 48, 1.0);
  d.set(32, 24, 5.0);
  const PointMap pm = backproject(d, kCam, Pose());
  CHECK(pm.points(32, 24) == Eigen::Vector3d(0.0, 0.0, 5.0));
}

TEST_CASE("backproject one focal length off axis") {
  const Intrinsics k{50.0, 50.0, 10.0, 10.0, 64, 48};
  DepthMap d = constant_depth(64, 48, 1.0);
  d.set(60, 10, 4.0);  // u = cx + fx
  const PointMap pm = backproject(d, k, Pose());
  CHECK(pm.points(60, 10).isApprox(Eigen::Vector3d(4.0, 0.0, 4.0), 1e-15));
}

TEST_CASE("backproject follows the pose translation") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1.0, 30.0);
  DepthMap d(64, 48);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x) d.set(x, y, u(rng));
  const Eigen::Vector3d t(1.0, 2.0, 3.0);
  const PointMap a = backproject(d, kCam, Pose());
  const PointMap b = backproject(d, kCam, Pose::from_translation(t));
  for (std::size_t i = 0; i < a.points.size(); ++i) CHECK((b.points[i] - (a.points[i] + t)).norm() == 0.0);
}

TEST_CASE("strided backprojection averages valid depths and rejects ragged strides") {
  DepthMap d(4, 4);
  d.set(0, 0, 2.0);
  d.set(1, 0, 4.0);
  d.set(0, 1, 6.0);
  // Bottom-right window entirely invalid.
  d.set(2, 0, 1.0);
  d.set(3, 1, 3.0);
  d.set(0, 2, 5.0);
  const Intrinsics k{10.0, 10.0, 1.5, 1.5, 4, 4};
  const PointMap pm = backproject(d, k, Pose(), 2);
  REQUIRE(pm.width() == 2);
  REQUIRE(pm.height() == 2);
  // Window (0,0): mean 4 at center (0.5, 0.5).
  CHECK(pm.points(0, 0).z() == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(pm.points(0, 0).x() == doctest::Approx((0.5 - 1.5) / 10.0 * 4.0).epsilon(1e-15));
  CHECK(pm.points(1, 0).z() == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(pm.valid(0, 1) == 1);
  CHECK(pm.valid(1, 1) == 0);
  CHECK_THROWS_AS(backproject(d, k, Pose(), 3), DimensionError);
  Intrinsics bad = k;
  bad.fy = 0.0;
  CHECK_THROWS_AS(backproject(d, bad, Pose(), 1), ParameterError);
}

TEST_CASE("project_to_view examples") {
  PixelDepth pd;
  REQUIRE(project_point_to_view({0.0, 0.0, 5.0}, kCam, Pose(), pd));
  CHECK(pd.u == 32.0);
  CHECK(pd.v == 24.0);
  CHECK(pd.depth == 5.0);
  CHECK_FALSE(project_point_to_view({0.0, 0.0, -1.0}, kCam, Pose(), pd));
  CHECK_FALSE(project_point_to_view({0.0, 0.0, 5e-4}, kCam, Pose(), pd));
  // Far off the image.
  CHECK_FALSE(project_point_to_view({10.0, 0.0, 1.0}, kCam, Pose(), pd));
}

TEST_CASE("backproject then project returns the pixel centers") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.5, 80.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Pose pose = random_pose(rng);
    DepthMap d(64, 48);
    for (int y = 0; y < 48; ++y)
      for (int x = 0; x < 64; ++x) d.set(x, y, u(rng));
    const ProjectionMap pm = project_to_view(backproject(d, kCam, pose), kCam, pose);
    for (int y = 0; y < 48; ++y) {
      for (int x = 0; x < 64; ++x) {
        REQUIRE(pm.valid(x, y));
        CHECK(std::abs(pm.pixels(x, y).u - x) < 1e-6);
        CHECK(std::abs(pm.pixels(x, y).v - y) < 1e-6);
      }
    }
  }
}

TEST_CASE("projection agrees with a direct pinhole evaluation") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const Pose pose = random_pose(rng);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d p = pose * Eigen::Vector3d(u(rng), u(rng), 4.0 + u(rng));
    PixelDepth pd;
    if (!project_point_to_view(p, kCam, pose, pd)) continue;
    const Eigen::Vector3d o = oracle::pinhole(kCam, pose.rotation(), pose.translation(), p);
    CHECK(std::abs(pd.u - o.x()) < 1e-9);
    CHECK(std::abs(pd.v - o.y()) < 1e-9);
    CHECK(std::abs(pd.depth - o.z()) < 1e-12);
  }
}

TEST_CASE("pose group laws") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const Pose a = random_pose(rng);
    const Pose b = random_pose(rng);
    const Pose c = random_pose(rng);
    CHECK(max_abs(((a * b) * c).matrix() - (a * (b * c)).matrix()) < 1e-9);
    CHECK(max_abs((a * a.inverse()).matrix() - Eigen::Matrix4d::Identity()) < 1e-9);
    CHECK(max_abs((a.inverse() * a).matrix() - Eigen::Matrix4d::Identity()) < 1e-9);
    CHECK(pose_defect((a * b).matrix()) < 1e-9);
  }
}

TEST_CASE("non-rigid matrices are rejected") {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m(0, 0) = 0.9;  // determinant 0.9
  CHECK_THROWS_AS(Pose::from_matrix(m), ParameterError);
  m = Eigen::Matrix4d::Identity();
  m(3, 0) = 1e-6;
  CHECK_THROWS_AS(Pose::from_matrix(m), ParameterError);
  m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = -Eigen::Matrix3d::Identity();  // reflection
  CHECK_THROWS_AS(Pose::from_matrix(m), ParameterError);
}

TEST_CASE("temporal pose composition") {
  std::mt19937_64 rng(13);
  const Pose side = random_pose(rng);
  const Pose motion = random_pose(rng);
  CHECK(max_abs(compose_temporal_pose(Pose(), side).matrix() - Eigen::Matrix4d::Identity()) < 1e-12);
  CHECK(compose_temporal_pose(motion, Pose()) == motion);

  // Unit x-translation of the front camera, seen from a camera yawed by 90
  // degrees: R^T (1, 0, 0) with R = Rz(90) is (0, -1, 0).
  const Pose yawed = Pose::from_yaw(std::numbers::pi / 2);
  const Pose t = compose_temporal_pose(Pose::from_translation({1.0, 0.0, 0.0}), yawed);
  CHECK((t.translation() - Eigen::Vector3d(0.0, -1.0, 0.0)).norm() < 1e-15);
  CHECK((t.rotation() - Eigen::Matrix3d::Identity()).norm() < 1e-15);
}

TEST_CASE("spatio-temporal pose composition") {
  std::mt19937_64 rng(17);
  const Pose spatial = random_pose(rng);
  CHECK(compose_spatiotemporal_pose(Pose(), Pose()) == Pose());
  CHECK(compose_spatiotemporal_pose(Pose(), spatial) == spatial);
  const Pose sum = compose_spatiotemporal_pose(Pose::from_translation({1.0, 2.0, 3.0}),
                                               Pose::from_translation({0.5, -1.0, 4.0}));
  CHECK(sum.translation() == Eigen::Vector3d(1.5, 1.0, 7.0));
  CHECK(sum.rotation() == Eigen::Matrix3d::Identity());
}

TEST_CASE("identity warp reproduces the source") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageRaster src(64, 48, 3);
  for (double& x : src.data()) x = u(rng);
  DepthMap d(64, 48);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x) d.set(x, y, 0.5 + 40.0 * u(rng));
  const WarpResult w = warp_spatial(d, src, kCam, kCam, Pose());
  for (std::size_t i = 0; i < w.valid.size(); ++i) CHECK(w.valid[i] == 1);
  CHECK(w.image == src);
}

TEST_CASE("warp rejects mismatched rasters") {
  ImageRaster src(64, 48, 3);
  DepthMap d(32, 48);
  CHECK_THROWS_AS(warp_spatial(d, src, kCam, kCam, Pose()), DimensionError);
  DepthMap ok(64, 48);
  CHECK_THROWS_AS(warp_spatial(ok, ImageRaster(10, 10, 3), kCam, kCam, Pose()), DimensionError);
}

TEST_CASE("warp is intensity-linear") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageRaster x(64, 48, 3), y(64, 48, 3), mix(64, 48, 3);
  for (std::size_t i = 0; i < x.data().size(); ++i) {
    x.data()[i] = u(rng);
    y.data()[i] = u(rng);
    mix.data()[i] = 0.3 * x.data()[i] + 0.7 * y.data()[i];
  }
  DepthMap d(64, 48);
  for (int r = 0; r < 48; ++r)
    for (int c = 0; c < 64; ++c) d.set(c, r, 2.0 + 10.0 * u(rng));
  const Pose rel = Pose::from_yaw(0.05, {0.3, 0.0, 0.1});
  const auto wx = warp_spatial(d, x, kCam, kCam, rel);
  const auto wy = warp_spatial(d, y, kCam, kCam, rel);
  const auto wm = warp_spatial(d, mix, kCam, kCam, rel);
  CHECK(wx.valid == wm.valid);
  std::size_t valid = 0;
  for (std::size_t i = 0; i < wm.valid.size(); ++i) {
    if (!wm.valid[i]) continue;
    ++valid;
    for (int c = 0; c < 3; ++c)
      CHECK(std::abs(wm.image.pixel(i)[c] - (0.3 * wx.image.pixel(i)[c] + 0.7 * wy.image.pixel(i)[c])) < 1e-12);
  }
  CHECK(valid > 1000);
}

TEST_CASE("fronto-parallel plane has disparity fx * b / d") {
  // Two cameras looking along +x, the second displaced by b along the
  // first camera's x-axis (reference -y), facing a wall at distance d.
  const double b = 0.4;
  const double dist = 7.0;
  CameraRig rig;
  const Intrinsics k{200.0, 200.0, 64.0, 48.0, 129, 97};
  Eigen::Matrix3d r;
  r << 0, 0, 1, -1, 0, 0, 0, -1, 0;
  rig.cameras.push_back({"left", k, Pose::from_rotation_translation(r, {0.0, 0.0, 1.5})});
  rig.cameras.push_back({"right", k, Pose::from_rotation_translation(r, {0.0, -b, 1.5})});
  SynthScene scene;
  scene.rig = rig;
  Texture tex{TextureKind::stripes, 0.5, 0.4, {0.6, 0.5, 0.4}};
  scene.primitives.push_back({Box{{dist, -20.0, -5.0}, {dist + 1.0, 20.0, 20.0}}, tex});
  const RenderBundle bundle = render(scene);
  const DepthMap& depth = bundle.views[0].depth;

  const Pose rel = rig.relative_pose(1, 0);
  const double expected = k.fx * b / dist;
  std::size_t checked = 0;
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      REQUIRE(depth.is_valid(x, y));
      CHECK(std::abs(depth.values(x, y) - dist) < 1e-9 * dist);
      const Eigen::Vector3d pj = rel * (k.ray(x, y) * depth.values(x, y));
      const double u = k.fx * pj.x() / pj.z() + k.cx;
      const double v = k.fy * pj.y() / pj.z() + k.cy;
      CHECK(std::abs((x - u) - expected) < 0.01);
      CHECK(std::abs(v - y) < 1e-9);
      ++checked;
    }
  }
  CHECK(checked == static_cast<std::size_t>(k.width * k.height));

  // The warp itself must reconstruct the target where the shift stays inside.
  const WarpResult w = warp_spatial(depth, bundle.views[1].image, k, k, rel);
  const double shift = std::ceil(expected);
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      const bool inside = x - shift >= 0.0;
      CHECK(static_cast<bool>(w.valid(x, y)) == inside);
    }
  }
  CHECK(photometric_loss(w.image, bundle.views[0].image, w.valid, 0.0) < 0.01);
}

TEST_CASE("ground-truth warps are photometrically consistent and scale errors hurt") {
  const CameraRig rig = make_ring_rig();
  const SynthScene scene = make_preset("boxtown", rig);
  const RenderBundle bundle = render(scene);
  auto mean_error = [&](double s) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& [i, j] : adjacent_views(rig)) {
      const auto w = warp_spatial(bundle.views[i].depth.scaled(s), bundle.views[j].image, rig.cameras[i].intrinsics,
                                  rig.cameras[j].intrinsics, rig.relative_pose(j, i));
      for (std::size_t p = 0; p < w.valid.size(); ++p) {
        if (!w.valid[p]) continue;
        double e = 0.0;
        for (int c = 0; c < 3; ++c) e += std::abs(w.image.pixel(p)[c] - bundle.views[i].image.pixel(p)[c]);
        sum += e / 3.0;
        ++n;
      }
    }
    return sum / static_cast<double>(n);
  };
  const double at_gt = mean_error(1.0);
  CHECK(at_gt < 0.02);
  CHECK(mean_error(0.5) > at_gt);
  CHECK(mean_error(2.0) > at_gt);
}

TEST_CASE("ring rig adjacency") {
  const CameraRig rig = make_ring_rig();
  const auto pairs = adjacent_views(rig);
  CHECK(pairs.size() == 12);
  for (const auto& [i, j] : pairs) {
    const std::size_t d = (j + 6 - i) % 6;
    CHECK((d == 1 || d == 5));
  }
}

}  // TEST_SUITE
