// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "cyldepth/attention.hpp"
#include "cyldepth/cylinder.hpp"
#include "cyldepth/io.hpp"
#include "cyldepth/metrics.hpp"
#include "cyldepth/parallel.hpp"
#include "cyldepth/photometry.hpp"
#include "cyldepth/rig.hpp"
#include "cyldepth/synthworld.hpp"
#include "oracles.hpp"

using namespace cyldepth;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

void fail(Outcome& o, const std::string& why) {
  o.pass = false;
  if (!o.detail.empty()) o.detail += "; ";
  o.detail += why;
}

void note(Outcome& o, const std::string& what) {
  if (!o.detail.empty()) o.detail += "; ";
  o.detail += what;
}

std::vector<DepthMap> depths_of(const RenderBundle& b) {
  std::vector<DepthMap> d;
  for (const auto& v : b.views) d.push_back(v.depth);
  return d;
}

// 1. Surface law on a million points.
Outcome cylinder_surface_law() {
  Outcome o;
  std::mt19937_64 rng(1001);
  std::uniform_real_distribution<double> lr(std::log(1e-3), std::log(1e3));
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> z(-100.0, 100.0);
  const Cylinder cyl{{0.7, -1.3, 1.5}};
  PointMap pm{Grid<Eigen::Vector3d>(1000, 1000), Mask(1000, 1000, 1)};
  for (auto& p : pm.points.data()) {
    const double r = std::exp(lr(rng));
    const double a = ang(rng);
    p = cyl.center + Eigen::Vector3d(r * std::cos(a), r * std::sin(a), z(rng));
  }
  const auto t0 = Clock::now();
  const auto maps = build_position_maps({pm}, cyl);
  double worst = 0.0;
  std::size_t theta_mismatch = 0;
  std::size_t invalid = 0;
  for (std::size_t i = 0; i < pm.points.size(); ++i) {
    if (!maps[0].valid[i]) {
      ++invalid;
      continue;
    }
    const auto proj = project_point(pm.points[i], cyl);
    worst = std::max(worst, std::abs((proj.surface_point - cyl.center).head<2>().norm() - 1.0));
    const Eigen::Vector3d po = pm.points[i] - cyl.center;
    if (maps[0].coords[i].theta != std::atan2(po.y(), po.x()) || proj.coord.theta != maps[0].coords[i].theta)
      ++theta_mismatch;
  }
  const double elapsed = seconds_since(t0);
  if (invalid) fail(o, std::to_string(invalid) + " points rejected");
  if (!(worst < 1e-12)) fail(o, "radius error " + fmt("%.3g", worst));
  if (theta_mismatch) fail(o, std::to_string(theta_mismatch) + " azimuth mismatches");
  if (!(elapsed < 5.0)) fail(o, "runtime " + fmt("%.2f", elapsed) + " s");
  note(o, "max | |p'-c|_xy - 1 | = " + fmt("%.3g", worst) + ", " + fmt("%.2f", elapsed) + " s");
  return o;
}

// 2. Corresponding pixels land on the same cylinder point.
Outcome cross_view_coincidence() {
  Outcome o;
  const CameraRig rig = make_ring_rig();
  const SynthScene scene = make_preset("boxtown", rig);
  const RenderBundle bundle = render(scene);
  const Cylinder cyl{rig.cylinder_center};
  double worst = 0.0;
  std::size_t pairs = 0;
  for (const auto& [i, j] : adjacent_views(rig)) {
    const auto& ci = rig.cameras[i];
    const auto& cj = rig.cameras[j];
    for (const auto& c : exact_correspondences(scene, i, j)) {
      const Eigen::Vector3d pi = ci.cam_to_ref * (ci.intrinsics.ray(c.ux, c.uy) * bundle.views[i].depth.values(c.ux, c.uy));
      const auto dj = raycast_depth(scene, j, c.vx, c.vy);
      if (!dj) {
        fail(o, "landing location misses the scene");
        return o;
      }
      const Eigen::Vector3d pj = cj.cam_to_ref * (cj.intrinsics.ray(c.vx, c.vy) * *dj);
      worst = std::max(worst, geodesic_delta(project_point(pi, cyl).coord, project_point(pj, cyl).coord).norm());
      ++pairs;
    }
  }
  if (pairs == 0) fail(o, "no pairs");
  if (!(worst < 1e-9)) fail(o, "distance " + fmt("%.3g", worst));
  note(o, std::to_string(pairs) + " pairs, max distance " + fmt("%.3g", worst));
  return o;
}

// 3. Attention constants.
Outcome attention_constants() {
  Outcome o;
  const AttentionParams p;
  const Eigen::Matrix2d inv = p.sigma.inverse();
  const double near = spatial_weight(mahalanobis_sq_inv({0.1, 0.0}, inv), p.tau);
  const double far = spatial_weight(mahalanobis_sq_inv({0.2, 0.1}, inv), p.tau);
  if (!(std::abs(near - std::exp(-0.25)) <= 1e-12)) fail(o, "a(0.1, 0) = " + fmt("%.17g", near));
  if (far != 0.0) fail(o, "a(0.2, 0.1) = " + fmt("%.17g", far));

  // The same through the full construction, including across the branch cut.
  PositionMap m{Grid<CylCoord>(3, 1), Mask(3, 1, 1)};
  m.coords(0, 0) = {std::numbers::pi - 0.05, 0.0};
  m.coords(1, 0) = {-std::numbers::pi + 0.05, 0.0};
  m.coords(2, 0) = {std::numbers::pi - 0.25, 0.1};
  FeatureMap f(3, 1, 1, 1.0);
  const auto attn = build_sparse_attention({m}, {f}, p);
  double built = -1.0;
  for (const auto& e : attn.row(0)) {
    if (e.key == 1) built = e.spatial;
    if (e.key == 2) fail(o, "pair at (0.2, 0.1) stored");
  }
  if (!(std::abs(built - std::exp(-0.25)) <= 1e-12)) fail(o, "wrapped pair weight " + fmt("%.17g", built));
  note(o, "exp(-0.25) err " + fmt("%.2g", std::abs(near - std::exp(-0.25))) + ", far " + fmt("%g", far));
  return o;
}

bool equal_rows(const SparseAttention& a, const std::vector<std::vector<AttentionEntry>>& rows) {
  if (a.tokens.size() != rows.size()) return false;
  for (std::size_t u = 0; u < rows.size(); ++u) {
    const auto r = a.row(u);
    if (!std::equal(r.begin(), r.end(), rows[u].begin(), rows[u].end())) return false;
  }
  return true;
}

// 4. Binned attention equals brute force; and is much faster.
Outcome oracle_equivalence() {
  Outcome o;
  std::mt19937_64 rng(4004);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::size_t max_tokens = 0;
  std::size_t mismatches = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const int target = inst == 49 ? 5000 : 100 + static_cast<int>(u01(rng) * 4900);
    const int h = 2 + static_cast<int>(u01(rng) * 11);
    const double invalid = inst % 3 == 0 ? 0.0 : 0.2 * u01(rng);
    const int w = std::max(1, static_cast<int>(std::ceil(target / (6.0 * h * (1.0 - invalid)))));
    const double span = 0.2 + 1.5 * u01(rng);
    auto pos = oracle::random_positions(rng, 6, w, h, span, invalid);
    // Trim to the requested token count so the largest instance is exact.
    std::size_t count = 0;
    for (auto& m : pos)
      for (auto& v : m.valid.data())
        if (v && ++count > static_cast<std::size_t>(target)) v = 0;
    const auto feat = oracle::random_features(rng, 6, w, h, 1 + inst % 5);
    AttentionParams p;
    const double s_t = 0.005 + 0.1 * u01(rng);
    const double s_h = 0.005 + 0.1 * u01(rng);
    const double rho = inst % 4 == 0 ? 0.5 * (u01(rng) - 0.5) : 0.0;
    p.sigma << s_t, rho * std::sqrt(s_t * s_h), rho * std::sqrt(s_t * s_h), s_h;
    p.tau = 0.8 + u01(rng);
    p.clamp_similarity = inst % 2 == 0;
    p.weighting = inst % 7 == 3 ? Weighting::geometric : Weighting::full;
    const auto attn = build_sparse_attention(pos, feat, p);
    max_tokens = std::max(max_tokens, attn.tokens.size());
    if (!equal_rows(attn, oracle::brute_force_attention(pos, feat, p))) ++mismatches;
  }
  if (mismatches) fail(o, std::to_string(mismatches) + "/50 instances differ");
  if (max_tokens != 5000) fail(o, "largest instance has " + std::to_string(max_tokens) + " tokens");

  // Speed at T = 6 x 12 x 20 with one thread, on a ring-like layout.
  const unsigned before = thread_count();
  set_thread_count(1);
  const CameraRig rig = make_ring_rig();
  std::vector<PositionMap> pos;
  std::vector<FeatureMap> feat;
  {
    std::vector<PointMap> points;
    std::uniform_real_distribution<double> depth(3.0, 40.0);
    for (const auto& cam : rig.cameras) {
      DepthMap d(cam.intrinsics.width, cam.intrinsics.height);
      for (int y = 0; y < d.height(); ++y)
        for (int x = 0; x < d.width(); ++x) d.set(x, y, depth(rng));
      points.push_back(backproject(d, cam.intrinsics, cam.cam_to_ref, 32));
    }
    pos = build_position_maps(points, Cylinder{rig.cylinder_center});
    feat = oracle::random_features(rng, 6, 20, 12, 16);
  }
  const AttentionParams p;
  auto best_of = [](int reps, const std::function<void()>& fn) {
    double best = 1e30;
    for (int r = 0; r < reps; ++r) {
      const auto t0 = Clock::now();
      fn();
      best = std::min(best, seconds_since(t0));
    }
    return best;
  };
  std::size_t tokens = 0;
  const double t_binned = best_of(20, [&] { tokens = build_sparse_attention(pos, feat, p).tokens.size(); });
  const double t_brute = best_of(5, [&] { oracle::brute_force_attention(pos, feat, p); });
  set_thread_count(before);
  const double speedup = t_brute / t_binned;
  if (tokens != 1440) fail(o, "speed instance has " + std::to_string(tokens) + " tokens");
  if (!(speedup >= 5.0)) fail(o, "speedup " + fmt("%.2f", speedup));
  note(o, "50 instances up to " + std::to_string(max_tokens) + " tokens; speedup at T=1440: " + fmt("%.1f", speedup) +
              "x (" + fmt("%.2f", t_binned * 1e3) + " ms vs " + fmt("%.2f", t_brute * 1e3) + " ms)");
  return o;
}

// 5. The spatial photometric loss is minimal at the true depth scale.
Outcome self_supervision_signal() {
  Outcome o;
  const std::vector<double> scales{0.5, 0.8, 0.9, 1.0, 1.1, 1.25, 2.0};
  const CameraRig rig = make_ring_rig();
  const auto t0 = Clock::now();
  for (const char* name : {"plane", "boxtown"}) {
    const auto curve = probe_depth_scale(make_preset(name, rig), rig, scales);
    const auto best = std::min_element(curve.begin(), curve.end(),
                                       [](const ScaleLoss& a, const ScaleLoss& b) { return a.loss < b.loss; });
    if (best->scale != 1.0) fail(o, std::string(name) + " minimum at s=" + fmt("%g", best->scale));
    if (!(curve[3].loss < 0.02)) fail(o, std::string(name) + " loss at s=1 is " + fmt("%.4g", curve[3].loss));
    std::string row = std::string(name) + ":";
    for (const auto& c : curve) row += " " + fmt("%.4f", c.loss);
    note(o, row);
  }
  const double elapsed = seconds_since(t0);
  if (!(elapsed < 60.0)) fail(o, "runtime " + fmt("%.1f", elapsed) + " s");
  note(o, fmt("%.1f", elapsed) + " s");
  return o;
}

DepthMap row_depth(std::initializer_list<double> v) {
  Grid<double> g(static_cast<int>(v.size()), 1);
  int x = 0;
  for (double d : v) g(x++, 0) = d;
  return DepthMap::from_values(g);
}

// 6. Metric sanity.
Outcome metric_sanity() {
  Outcome o;
  const CameraRig rig = make_ring_rig();
  const auto gt = depths_of(render(make_preset("boxtown", rig)));
  const auto same = eigen_metrics(gt, gt);
  if (same.abs_rel != 0.0 || same.sq_rel != 0.0 || same.rmse != 0.0 || same.delta_1 != 100.0)
    fail(o, "pred=gt not (0,0,0,100)");
  std::vector<DepthMap> over;
  for (const auto& d : gt) over.push_back(d.scaled(1.25));
  const auto m = eigen_metrics(over, gt);
  if (!(std::abs(m.abs_rel - 0.25) <= 1e-12)) fail(o, "abs_rel at 1.25 is " + fmt("%.17g", m.abs_rel));
  if (m.delta_1 != 0.0) fail(o, "delta at 1.25 is " + fmt("%g", m.delta_1));
  const double dc = depth_consistency(gt, find_correspondences(gt, rig), rig);
  if (!(dc < 1e-6)) fail(o, "depth_cons " + fmt("%.3g", dc));
  const auto two = eigen_metrics(row_depth({3.0, 3.0}), row_depth({2.0, 4.0}));
  if (two.abs_rel != 0.375 || two.rmse != 1.0 || two.sq_rel != 0.375 || two.delta_1 != 0.0)
    fail(o, "two-pixel fixture");
  const auto mixed = eigen_metrics(row_depth({2.0, 5.0}), row_depth({2.0, 4.0}));
  if (mixed.abs_rel != 0.125 || mixed.rmse != std::sqrt(0.5) || mixed.delta_1 != 50.0) fail(o, "mixed fixture");
  note(o, "depth_cons(gt) = " + fmt("%.3g", dc) + " m, abs_rel(1.25 gt) = " + fmt("%.17g", m.abs_rel));
  return o;
}

// 7. Ablation structure on rendered tokens.
Outcome ablation_structure() {
  Outcome o;
  const CameraRig rig = make_ring_rig();
  const auto bundle = render(make_preset("boxtown", rig));
  std::vector<PointMap> points;
  std::vector<FeatureMap> feat;
  for (std::size_t v = 0; v < rig.size(); ++v) {
    points.push_back(backproject(bundle.views[v].depth, rig.cameras[v].intrinsics, rig.cameras[v].cam_to_ref, 32));
    feat.push_back(pooled_features(bundle.views[v].image, 32));
  }
  const auto pos = build_position_maps(points, Cylinder{rig.cylinder_center});

  AttentionParams id;
  id.weighting = Weighting::identity;
  const auto same = aggregate(feat, build_sparse_attention(pos, feat, id), false);
  if (!(same == feat)) fail(o, "identity attention changed features");

  AttentionParams full;
  AttentionParams geo;
  geo.weighting = Weighting::geometric;
  const auto a = build_sparse_attention(pos, feat, full);
  const auto b = build_sparse_attention(pos, feat, geo);
  std::size_t bad = 0;
  std::size_t reduced = 0;
  if (a.offsets != b.offsets) {
    fail(o, "stored pairs differ");
    return o;
  }
  for (std::size_t u = 0; u < a.tokens.size(); ++u) {
    const auto& tu = a.tokens[u];
    for (std::size_t k = 0; k < a.row(u).size(); ++k) {
      const auto& ea = a.row(u)[k];
      const auto& eb = b.row(u)[k];
      const auto& tv = a.tokens[ea.key];
      const double af =
          ea.key == u ? 1.0 : feature_similarity(feat[tu.view].pixel(tu.x, tu.y), feat[tv.view].pixel(tv.x, tv.y), true);
      if (ea.key != eb.key || eb.weight != eb.spatial || ea.weight != eb.weight * af) ++bad;
      if (ea.weight < eb.weight) ++reduced;
    }
  }
  if (bad) fail(o, std::to_string(bad) + " pairs break a = a_sp * a_f");
  if (reduced == 0) fail(o, "similarity never changed a weight");
  note(o, std::to_string(a.tokens.size()) + " tokens, " + std::to_string(a.nnz()) + " pairs, " +
              std::to_string(reduced) + " reduced by a_f");
  return o;
}

// 8. Warp geometry.
Outcome warp_correctness() {
  Outcome o;
  const double b = 0.4;
  const double dist = 7.0;
  const Intrinsics k{200.0, 200.0, 64.0, 48.0, 129, 97};
  Eigen::Matrix3d r;
  r << 0, 0, 1, -1, 0, 0, 0, -1, 0;
  CameraRig rig;
  rig.cameras.push_back({"left", k, Pose::from_rotation_translation(r, {0.0, 0.0, 1.5})});
  rig.cameras.push_back({"right", k, Pose::from_rotation_translation(r, {0.0, -b, 1.5})});
  SynthScene scene;
  scene.rig = rig;
  scene.primitives.push_back({Box{{dist, -20.0, -5.0}, {dist + 1.0, 20.0, 20.0}}, Texture{}});
  const DepthMap depth = render(scene).views[0].depth;
  double worst_disp = 0.0;
  for (int y = 0; y < k.height; ++y) {
    for (int x = 0; x < k.width; ++x) {
      if (!depth.is_valid(x, y)) {
        fail(o, "wall not hit");
        return o;
      }
      PixelDepth pd;
      const Eigen::Vector3d p = rig.cameras[0].cam_to_ref * (k.ray(x, y) * depth.values(x, y));
      if (!project_point_to_view(p, k, rig.cameras[1].cam_to_ref, pd)) continue;
      worst_disp = std::max(worst_disp, std::abs((x - pd.u) - k.fx * b / dist));
    }
  }
  if (!(worst_disp < 0.01)) fail(o, "disparity error " + fmt("%.3g", worst_disp));

  // Round trips on the default ring camera.
  const CameraRig ring = make_ring_rig();
  std::mt19937_64 rng(8008);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double worst_rt = 0.0;
  std::size_t samples = 0;
  for (std::size_t v = 0; v < 2; ++v) {
    const auto& cam = ring.cameras[v * 3];
    DepthMap d(cam.intrinsics.width, cam.intrinsics.height);
    for (int y = 0; y < d.height(); ++y)
      for (int x = 0; x < d.width(); ++x) d.set(x, y, std::exp(std::log(0.05) + u01(rng) * std::log(4000.0)));
    const auto pm = backproject(d, cam.intrinsics, cam.cam_to_ref);
    const auto proj = project_to_view(pm, cam.intrinsics, cam.cam_to_ref);
    for (int y = 0; y < d.height(); ++y) {
      for (int x = 0; x < d.width(); ++x) {
        if (!proj.valid(x, y)) {
          fail(o, "round trip lost a pixel");
          return o;
        }
        const auto& q = proj.pixels(x, y);
        worst_rt = std::max({worst_rt, std::abs(q.u - x), std::abs(q.v - y)});
        ++samples;
      }
    }
  }
  if (samples < 100000) fail(o, "only " + std::to_string(samples) + " samples");
  if (!(worst_rt < 1e-6)) fail(o, "round trip error " + fmt("%.3g", worst_rt) + " px");
  note(o, "disparity err " + fmt("%.3g", worst_disp) + " px, round trip err " + fmt("%.3g", worst_rt) + " px over " +
              std::to_string(samples) + " samples");
  return o;
}

// 9. I/O round trips and rejected fixtures.
Outcome io_round_trips() {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / ("cyldepth_accept_io_" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  CameraRig rig = make_ring_rig();
  rig.front = 4;
  io::write_rig(dir / "rig.json", rig);
  const CameraRig back = io::read_rig(dir / "rig.json");
  bool rig_ok = back.size() == rig.size() && back.front == rig.front && back.cylinder_center == rig.cylinder_center;
  for (std::size_t k = 0; rig_ok && k < rig.size(); ++k)
    rig_ok = back.cameras[k].name == rig.cameras[k].name && back.cameras[k].intrinsics == rig.cameras[k].intrinsics &&
             back.cameras[k].cam_to_ref == rig.cameras[k].cam_to_ref;
  if (!rig_ok) fail(o, "rig differs after round trip");

  std::mt19937_64 rng(9009);
  std::uniform_real_distribution<float> f(-50.0f, 50.0f);
  Raster depth(64, 48, 1);
  Raster rgb(64, 48, 3);
  for (double& v : depth.data()) v = f(rng);
  for (double& v : rgb.data()) v = f(rng);
  io::write_pfm(dir / "d.pfm", depth);
  io::write_pfm(dir / "c.pfm", rgb);
  if (!(io::read_pfm(dir / "d.pfm") == depth) || !(io::read_pfm(dir / "c.pfm") == rgb)) fail(o, "PFM differs");
  Raster img(64, 48, 3);
  std::uniform_int_distribution<int> byte(0, 255);
  for (double& v : img.data()) v = byte(rng) / 255.0;
  io::write_ppm(dir / "i.ppm", img);
  const Raster img_back = io::read_ppm(dir / "i.ppm");
  io::write_ppm(dir / "j.ppm", img_back);
  if (io::read_file(dir / "i.ppm") != io::read_file(dir / "j.ppm")) fail(o, "PPM bytes differ");
  for (std::size_t k = 0; k < img.data().size(); ++k)
    if (std::abs(img_back.data()[k] - img.data()[k]) > 1e-12) {
      fail(o, "PPM values differ");
      break;
    }

  const std::string pfm = io::encode_pfm(Raster(4, 3, 1, 1.0));
  const std::string ppm = io::encode_ppm(Raster(4, 3, 3, 0.5));
  auto patched = [](std::string s, const std::string& from, const std::string& to) {
    s.replace(s.find(from), from.size(), to);
    return s;
  };
  const std::vector<std::pair<std::string, std::function<void()>>> fixtures = {
      {"bad magic", [&] { io::decode_pfm(patched(pfm, "Pf", "PX")); }},
      {"big-endian", [&] { io::decode_pfm(patched(pfm, "-1.0", "1.0")); }},
      {"bad dims", [&] { io::decode_pfm(patched(pfm, "4 3", "4 -3")); }},
      {"bad scale", [&] { io::decode_pfm(patched(pfm, "-1.0", "-x")); }},
      {"truncated", [&] { io::decode_pfm(pfm.substr(0, pfm.size() - 1)); }},
      {"trailing", [&] { io::decode_pfm(pfm + "!"); }},
      {"ppm magic", [&] { io::decode_ppm(patched(ppm, "P6", "P5")); }},
      {"ppm maxval", [&] { io::decode_ppm(patched(ppm, "255", "1023")); }},
      {"ppm truncated", [&] { io::decode_ppm(ppm.substr(0, ppm.size() - 2)); }},
      {"rig two fronts", [&] { io::decode_rig(patched(io::encode_rig(rig), "\"front\": false", "\"front\": true")); }},
      {"rig unknown field", [&] { io::decode_rig(patched(io::encode_rig(rig), "\"fx\"", "\"zz\": 0, \"fx\"")); }},
  };
  std::size_t rejected = 0;
  for (const auto& [name, fn] : fixtures) {
    try {
      fn();
      fail(o, name + " accepted");
    } catch (const Error& e) {
      if (std::string(e.what()).empty()) fail(o, name + " without diagnostic");
      else ++rejected;
    }
  }
  fs::remove_all(dir);
  note(o, "rig, PFM (1 and 3 channels) and PPM round trips; " + std::to_string(rejected) + "/" +
              std::to_string(fixtures.size()) + " corrupted fixtures rejected");
  return o;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + CYLDEPTH_CLI + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 10. CLI pipeline determinism across thread counts.
Outcome cli_determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / ("cyldepth_accept_cli_" + std::to_string(std::random_device{}()));
  fs::create_directories(root);
  auto q = [](const fs::path& p) { return "\"" + p.string() + "\""; };
  for (const char* run : {"t1", "t8", "t8b"}) {
    const std::string threads = std::string(" --threads ") + (run[1] == '1' ? "1" : "8");
    const fs::path d = root / run;
    bool ok = run_cli(threads + " render --scene boxtown --feature-strides 16,32 --out " + q(d / "render")) == 0;
    ok = ok && run_cli(threads + " project --rig " + q(d / "render" / "rig.json") + " --depth " +
                       q(d / "render" / "depth") + " --stride 32 --out " + q(d / "project")) == 0;
    ok = ok && run_cli(threads + " attend --all-scales --normalize --rig " + q(d / "render" / "rig.json") +
                       " --depth " + q(d / "render" / "depth") + " --features " + q(d / "render" / "features") +
                       " --out " + q(d / "attend")) == 0;
    ok = ok && run_cli(threads + " eval --rig " + q(d / "render" / "rig.json") + " --pred " +
                       q(d / "render" / "depth") + " --gt " + q(d / "render" / "depth") + " --out " +
                       q(d / "report.txt")) == 0;
    if (!ok) {
      fail(o, std::string("pipeline failed for ") + run);
      fs::remove_all(root);
      return o;
    }
  }
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "t1")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), root / "t1");
    const std::string a = io::read_file(e.path());
    for (const char* other : {"t8", "t8b"}) {
      const fs::path p = root / other / rel;
      if (!fs::exists(p) || io::read_file(p) != a) fail(o, rel.string() + " differs in " + other);
    }
    ++files;
  }
  for (const char* other : {"t8", "t8b"}) {
    std::size_t n = 0;
    for (const auto& e : fs::recursive_directory_iterator(root / other)) n += e.is_regular_file() ? 1 : 0;
    if (n != files) fail(o, std::string("file count differs in ") + other);
  }
  fs::remove_all(root);
  note(o, std::to_string(files) + " files byte-identical across 1, 8 and 8 threads");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria = {
      {"cylinder surface law", cylinder_surface_law},
      {"cross-view coincidence", cross_view_coincidence},
      {"attention constants", attention_constants},
      {"binned attention equals brute force", oracle_equivalence},
      {"self-supervision signal", self_supervision_signal},
      {"metric sanity", metric_sanity},
      {"ablation structure", ablation_structure},
      {"warp correctness", warp_correctness},
      {"I/O round trips", io_round_trips},
      {"CLI determinism", cli_determinism},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
