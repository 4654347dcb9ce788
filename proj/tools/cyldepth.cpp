// Command-line front end. Every subcommand reads and writes plain files
// (PFM/PPM rasters, JSON rigs, key=value reports) named after the rig's
// cameras, so runs can be chained and diffed.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cyldepth/attention.hpp"
#include "cyldepth/cylinder.hpp"
#include "cyldepth/error.hpp"
#include "cyldepth/io.hpp"
#include "cyldepth/metrics.hpp"
#include "cyldepth/panorama.hpp"
#include "cyldepth/parallel.hpp"
#include "cyldepth/photometry.hpp"
#include "cyldepth/rig.hpp"
#include "cyldepth/synthworld.hpp"

namespace fs = std::filesystem;
using namespace cyldepth;

namespace {

// Remembers what this run created so a failure can take it back.
class Outputs {
 public:
  void make_dir(const fs::path& dir) {
    std::vector<fs::path> missing;
    for (fs::path p = dir; !p.empty() && !fs::exists(p); p = p.parent_path()) {
      missing.push_back(p);
      if (p == p.parent_path()) break;
    }
    fs::create_directories(dir);
    dirs_.insert(dirs_.end(), missing.rbegin(), missing.rend());
  }

  void write(const fs::path& path, const std::string& bytes) {
    if (path.has_parent_path()) make_dir(path.parent_path());
    files_.push_back(path);
    io::write_file_atomic(path, bytes);
  }

  void rollback() noexcept {
    std::error_code ec;
    for (auto it = files_.rbegin(); it != files_.rend(); ++it) fs::remove(*it, ec);
    for (auto it = dirs_.rbegin(); it != dirs_.rend(); ++it)
      if (fs::is_empty(*it, ec)) fs::remove(*it, ec);
  }

 private:
  std::vector<fs::path> files_;
  std::vector<fs::path> dirs_;
};

Outputs outputs;

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ParameterError(std::string("bad number '") + item + "' in " + what);
    }
  }
  if (values.empty()) throw ParameterError(std::string(what) + " is empty");
  return values;
}

Raster depth_raster(const DepthMap& d) {
  Raster r(d.width(), d.height(), 1);
  for (std::size_t i = 0; i < d.values.size(); ++i) r.data()[i] = d.valid[i] ? d.values[i] : 0.0;
  return r;
}

Raster mask_raster(const Mask& m) {
  Raster r(m.width(), m.height(), 1);
  for (std::size_t i = 0; i < m.size(); ++i) r.data()[i] = m[i] ? 1.0 : 0.0;
  return r;
}

Raster stack_planes(const FeatureMap& f) {
  Raster r(f.width(), f.height() * f.channels(), 1);
  for (int c = 0; c < f.channels(); ++c)
    for (int y = 0; y < f.height(); ++y)
      for (int x = 0; x < f.width(); ++x) r(x, c * f.height() + y) = f(x, y, c);
  return r;
}

std::vector<DepthMap> read_depths(const fs::path& dir, const CameraRig& rig) {
  std::vector<DepthMap> depths;
  for (const auto& cam : rig.cameras) {
    DepthMap d = io::read_depth(dir / (cam.name + ".pfm"));
    if (d.width() != cam.intrinsics.width || d.height() != cam.intrinsics.height)
      throw DimensionError("depth of camera '" + cam.name + "' is " + std::to_string(d.width()) + "x" +
                           std::to_string(d.height()) + ", intrinsics say " + std::to_string(cam.intrinsics.width) +
                           "x" + std::to_string(cam.intrinsics.height));
    depths.push_back(std::move(d));
  }
  return depths;
}

std::vector<ImageRaster> read_images(const fs::path& dir, const CameraRig& rig) {
  std::vector<ImageRaster> images;
  for (const auto& cam : rig.cameras) {
    fs::path path = dir / (cam.name + ".pfm");
    if (!fs::exists(path)) path = dir / (cam.name + ".ppm");
    if (!fs::exists(path)) throw IoError("no image for camera '" + cam.name + "' in '" + dir.string() + "'");
    ImageRaster img = io::read_raster(path);
    if (img.width() != cam.intrinsics.width || img.height() != cam.intrinsics.height)
      throw DimensionError("image of camera '" + cam.name + "' does not match its intrinsics");
    images.push_back(std::move(img));
  }
  return images;
}

// ------------------------------------------------------------ make-rig

struct MakeRigArgs {
  RingRigOptions ring;
  std::string out;
};

void run_make_rig(const MakeRigArgs& a) {
  const CameraRig rig = make_ring_rig(a.ring);
  for (const auto& w : rig.warnings) std::cerr << "warning: " << w << '\n';
  outputs.write(a.out, io::encode_rig(rig));
}

// ------------------------------------------------------------ render

struct RenderArgs {
  std::string scene;
  std::string rig;
  std::uint64_t seed = 7;
  std::string feature_strides = "32";
  std::string out;
};

void run_render(const RenderArgs& a) {
  std::optional<CameraRig> rig;
  if (!a.rig.empty()) rig = io::read_rig(a.rig);
  const SynthScene scene = io::load_scene(a.scene, rig ? &*rig : nullptr, a.seed);
  std::vector<int> strides;
  for (double s : parse_list(a.feature_strides, "--feature-strides")) {
    if (!(s >= 1.0) || s != std::floor(s)) throw ParameterError("feature strides must be positive integers");
    strides.push_back(static_cast<int>(s));
  }
  std::sort(strides.begin(), strides.end());

  const RenderBundle bundle = render(scene);
  const fs::path out(a.out);
  outputs.write(out / "rig.json", io::encode_rig(scene.rig));
  for (std::size_t v = 0; v < bundle.views.size(); ++v) {
    const std::string& name = scene.rig.cameras[v].name;
    const ViewRender& view = bundle.views[v];
    outputs.write(out / "depth" / (name + ".pfm"), io::encode_pfm(depth_raster(view.depth)));
    outputs.write(out / "image" / (name + ".pfm"), io::encode_pfm(view.image));
    outputs.write(out / "image" / (name + ".ppm"), io::encode_ppm(view.image));
    for (std::size_t k = 0; k < strides.size(); ++k) {
      const FeatureMap f = pooled_features(view.image, strides[k]);
      const std::string file = strides.size() == 1 ? name + ".pfm" : name + "_s" + std::to_string(k) + ".pfm";
      outputs.write(out / "features" / file, io::encode_pfm(stack_planes(f)));
    }
  }
}

// ------------------------------------------------------------ project

struct ProjectArgs {
  std::string rig;
  std::string depth;
  int stride = 1;
  std::string out;
};

void run_project(const ProjectArgs& a) {
  const CameraRig rig = io::read_rig(a.rig);
  const auto depths = read_depths(a.depth, rig);
  std::vector<PointMap> points;
  for (std::size_t v = 0; v < rig.size(); ++v)
    points.push_back(backproject(depths[v], rig.cameras[v].intrinsics, rig.cameras[v].cam_to_ref, a.stride));
  const auto maps = build_position_maps(points, Cylinder{rig.cylinder_center});
  for (std::size_t v = 0; v < rig.size(); ++v) {
    const PositionMap& m = maps[v];
    Raster r(m.width(), m.height(), 3);
    for (int y = 0; y < m.height(); ++y) {
      for (int x = 0; x < m.width(); ++x) {
        if (!m.valid(x, y)) continue;
        r(x, y, 0) = m.coords(x, y).theta;
        r(x, y, 1) = m.coords(x, y).h;
        r(x, y, 2) = 1.0;
      }
    }
    outputs.write(fs::path(a.out) / (rig.cameras[v].name + ".pfm"), io::encode_pfm(r));
  }
}

// ------------------------------------------------------------ attend

struct AttendArgs {
  std::string rig;
  std::string depth;
  std::string features;
  std::string sigma = "0.02,0.02";
  double tau = 1.2;
  bool normalize = false;
  bool no_similarity = false;
  bool identity = false;
  bool signed_similarity = false;
  bool all_scales = false;
  std::string out;
};

// Feature files of one scale for every camera, in rig order.
struct ScaleFiles {
  std::string suffix;  // "" or "_s<k>"
  std::vector<fs::path> paths;
};

std::vector<ScaleFiles> find_scales(const fs::path& dir, const CameraRig& rig) {
  std::vector<ScaleFiles> scales;
  const auto& first = rig.cameras.front().name;
  if (fs::exists(dir / (first + ".pfm"))) {
    scales.push_back({"", {}});
  } else {
    for (int k = 0; fs::exists(dir / (first + "_s" + std::to_string(k) + ".pfm")); ++k)
      scales.push_back({"_s" + std::to_string(k), {}});
  }
  if (scales.empty()) throw IoError("no feature files for camera '" + first + "' in '" + dir.string() + "'");
  for (auto& s : scales) {
    for (const auto& cam : rig.cameras) {
      const fs::path p = dir / (cam.name + s.suffix + ".pfm");
      if (!fs::exists(p)) throw IoError("missing feature file '" + p.string() + "'");
      s.paths.push_back(p);
    }
  }
  return scales;
}

std::vector<FeatureMap> attend_scale(const CameraRig& rig, const std::vector<DepthMap>& depths,
                                     const std::vector<fs::path>& paths, const AttentionParams& params,
                                     std::size_t& tokens, std::size_t& nnz) {
  const auto& intr0 = rig.cameras.front().intrinsics;
  const int feat_width = io::read_pfm(paths.front()).width();
  if (feat_width <= 0 || intr0.width % feat_width != 0)
    throw DimensionError("feature width " + std::to_string(feat_width) + " does not divide image width " +
                         std::to_string(intr0.width));
  const int stride = intr0.width / feat_width;
  std::vector<FeatureMap> features;
  std::vector<PointMap> points;
  for (std::size_t v = 0; v < rig.size(); ++v) {
    const auto& cam = rig.cameras[v];
    if (cam.intrinsics.height % stride != 0)
      throw DimensionError("stride " + std::to_string(stride) + " does not divide the height of '" + cam.name + "'");
    features.push_back(io::read_features(paths[v], cam.intrinsics.height / stride));
    points.push_back(backproject(depths[v], cam.intrinsics, cam.cam_to_ref, stride));
  }
  const auto positions = build_position_maps(points, Cylinder{rig.cylinder_center});
  const SparseAttention attn = build_sparse_attention(positions, features, params);
  tokens = attn.tokens.size();
  nnz = attn.nnz();
  return aggregate(features, attn, params.normalize);
}

void run_attend(const AttendArgs& a) {
  if (a.identity && a.no_similarity) throw ParameterError("--identity and --no-similarity are exclusive");
  const CameraRig rig = io::read_rig(a.rig);
  const auto depths = read_depths(a.depth, rig);
  const auto sigma_diag = parse_list(a.sigma, "--sigma");
  if (sigma_diag.size() != 2) throw ParameterError("--sigma takes two values: theta,h");
  AttentionParams params;
  params.sigma << sigma_diag[0], 0.0, 0.0, sigma_diag[1];
  params.tau = a.tau;
  params.normalize = a.normalize;
  params.clamp_similarity = !a.signed_similarity;
  params.weighting = a.identity ? Weighting::identity : a.no_similarity ? Weighting::geometric : Weighting::full;
  params.validate();

  const auto scales = find_scales(a.features, rig);
  // Without --all-scales only the coarsest scale (the last one) is attended;
  // finer scales are passed through.
  std::ostringstream summary;
  const fs::path out(a.out);
  for (std::size_t k = 0; k < scales.size(); ++k) {
    const auto& s = scales[k];
    const bool attend = a.all_scales || k + 1 == scales.size();
    if (!attend) {
      for (std::size_t v = 0; v < rig.size(); ++v)
        outputs.write(out / s.paths[v].filename(), io::read_file(s.paths[v]));
      continue;
    }
    std::size_t tokens = 0;
    std::size_t nnz = 0;
    const auto attended = attend_scale(rig, depths, s.paths, params, tokens, nnz);
    for (std::size_t v = 0; v < rig.size(); ++v)
      outputs.write(out / s.paths[v].filename(), io::encode_pfm(stack_planes(attended[v])));
    const std::string key = s.suffix.empty() ? "" : s.suffix.substr(1) + ".";
    summary << key << "tokens=" << tokens << '\n' << key << "pairs=" << nnz << '\n';
  }
  outputs.write(out / "attention.txt", summary.str());
}

// ------------------------------------------------------------ warp

struct WarpArgs {
  std::string rig;
  std::string depth;
  std::string images;
  std::string source_images;
  std::string mode = "spatial";
  std::string pose;
  double alpha = 0.85;
  std::string out;
};

void run_warp(const WarpArgs& a) {
  const CameraRig rig = io::read_rig(a.rig);
  const auto depths = read_depths(a.depth, rig);
  const auto targets = read_images(a.images, rig);
  const bool temporal = a.mode == "temporal" || a.mode == "spatiotemporal";
  if (!temporal && a.mode != "spatial") throw ParameterError("unknown warp mode '" + a.mode + "'");
  if (temporal && a.pose.empty()) throw ParameterError("--pose is required for mode '" + a.mode + "'");
  const auto sources = a.source_images.empty() ? targets : read_images(a.source_images, rig);
  const Pose front_motion = temporal ? io::read_pose(a.pose) : Pose();

  struct Job {
    std::size_t target;
    std::size_t source;
    Pose relpose;
    std::string name;
  };
  std::vector<Job> jobs;
  if (a.mode == "temporal") {
    for (std::size_t i = 0; i < rig.size(); ++i)
      jobs.push_back({i, i, compose_temporal_pose(front_motion, rig.cam_to_front(i)), rig.cameras[i].name});
  } else {
    for (const auto& [i, j] : adjacent_views(rig)) {
      Pose rel = rig.relative_pose(j, i);
      if (a.mode == "spatiotemporal") rel = compose_spatiotemporal_pose(compose_temporal_pose(front_motion, rig.cam_to_front(j)), rel);
      jobs.push_back({i, j, rel, rig.cameras[i].name + "_from_" + rig.cameras[j].name});
    }
  }
  if (jobs.empty()) throw NoOverlapError("the rig has no adjacent camera pairs");

  std::ostringstream report;
  double weighted = 0.0;
  std::size_t total = 0;
  const fs::path out(a.out);
  for (const auto& job : jobs) {
    const auto& ci = rig.cameras[job.target];
    const auto& cj = rig.cameras[job.source];
    const WarpResult w = warp_spatial(depths[job.target], sources[job.source], ci.intrinsics, cj.intrinsics, job.relpose);
    outputs.write(out / (job.name + ".pfm"), io::encode_pfm(w.image));
    outputs.write(out / (job.name + "_mask.pfm"), io::encode_pfm(mask_raster(w.valid)));
    std::size_t count = 0;
    for (std::size_t i = 0; i < w.valid.size(); ++i) count += w.valid[i] ? 1 : 0;
    report << "pixels." << job.name << '=' << count << '\n';
    if (count == 0) continue;
    const double loss = photometric_loss(w.image, targets[job.target], w.valid, a.alpha);
    report << "loss." << job.name << '=' << fmt6(loss) << '\n';
    weighted += loss * static_cast<double>(count);
    total += count;
  }
  if (total == 0) throw NoOverlapError("no warped pixel is valid");
  report << "pixels=" << total << '\n' << "loss=" << fmt6(weighted / static_cast<double>(total)) << '\n';
  outputs.write(out / "report.txt", report.str());
}

// ------------------------------------------------------------ eval

struct EvalArgs {
  std::string rig;
  std::string pred;
  std::string gt;
  double min_depth = 0.1;
  double max_depth = 200.0;
  double occlusion_tol = 0.05;
  std::string out;
};

void run_eval(const EvalArgs& a) {
  const CameraRig rig = io::read_rig(a.rig);
  const auto pred = read_depths(a.pred, rig);
  const auto gt = read_depths(a.gt, rig);
  if (!(a.min_depth >= 0.0 && a.max_depth > a.min_depth)) throw ParameterError("need 0 <= min-depth < max-depth");
  CorrespondenceOptions options;
  options.occlusion_tol = a.occlusion_tol;
  const std::string text = format_report(evaluate(pred, gt, rig, {a.min_depth, a.max_depth}, options));
  if (a.out.empty()) std::cout << text;
  else outputs.write(a.out, text);
}

// ------------------------------------------------------------ panorama

struct PanoramaArgs {
  std::string rig;
  std::string depth;
  std::string images;
  int width = 2048;
  int height = 0;
  std::string out;
};

void run_panorama(const PanoramaArgs& a) {
  const CameraRig rig = io::read_rig(a.rig);
  const auto depths = read_depths(a.depth, rig);
  const auto images = read_images(a.images, rig);
  const Panorama pano = render_panorama(rig, depths, images, {a.width, a.height});
  const fs::path out(a.out);
  const auto ext = out.extension().string();
  if (ext == ".pfm") outputs.write(out, io::encode_pfm(pano.image));
  else if (ext == ".ppm") outputs.write(out, io::encode_ppm(pano.image));
  else throw FormatError("panorama output must end in .pfm or .ppm");
}

// ------------------------------------------------------------ probe

struct ProbeArgs {
  std::string scene;
  std::string rig;
  std::uint64_t seed = 7;
  std::string scales = "0.5,0.8,0.9,1,1.1,1.25,2";
  std::string out;
};

void run_probe(const ProbeArgs& a) {
  std::optional<CameraRig> rig;
  if (!a.rig.empty()) rig = io::read_rig(a.rig);
  const SynthScene scene = io::load_scene(a.scene, rig ? &*rig : nullptr, a.seed);
  const auto curve = probe_depth_scale(scene, scene.rig, parse_list(a.scales, "--scales"));
  std::ostringstream table;
  table << "scale\tloss\n";
  for (const auto& p : curve) table << fmt6(p.scale) << '\t' << fmt6(p.loss) << '\n';
  if (a.out.empty()) std::cout << table.str();
  else outputs.write(a.out, table.str());
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cylindrical surround-view depth geometry tools"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: CYLDEPTH_THREADS or all cores)");

  MakeRigArgs mk;
  auto* c_mk = app.add_subcommand("make-rig", "Write an outward-facing ring rig");
  c_mk->add_option("--cameras", mk.ring.cameras, "Number of cameras")->capture_default_str();
  c_mk->add_option("--fov", mk.ring.fov_deg, "Horizontal field of view in degrees")->capture_default_str();
  c_mk->add_option("--radius", mk.ring.radius_m, "Ring radius in meters")->capture_default_str();
  c_mk->add_option("--height", mk.ring.height_m, "Mounting height in meters")->capture_default_str();
  c_mk->add_option("--width", mk.ring.width, "Image width in pixels")->capture_default_str();
  c_mk->add_option("--image-height", mk.ring.height, "Image height in pixels")->capture_default_str();
  c_mk->add_option("--out", mk.out, "Rig JSON path")->required();

  RenderArgs rn;
  auto* c_rn = app.add_subcommand("render", "Raycast a synthetic scene");
  c_rn->add_option("--scene", rn.scene, "Scene JSON file or preset name")->required();
  c_rn->add_option("--rig", rn.rig, "Rig JSON (default: 6-camera ring)");
  c_rn->add_option("--seed", rn.seed, "Seed for preset scenes")->capture_default_str();
  c_rn->add_option("--feature-strides", rn.feature_strides, "Comma-separated feature pooling strides")
      ->capture_default_str();
  c_rn->add_option("--out", rn.out, "Output directory")->required();

  ProjectArgs pj;
  auto* c_pj = app.add_subcommand("project", "Cylinder position maps (theta, h, valid)");
  c_pj->add_option("--rig", pj.rig, "Rig JSON")->required();
  c_pj->add_option("--depth", pj.depth, "Depth directory")->required();
  c_pj->add_option("--stride", pj.stride, "Back-projection stride")->capture_default_str();
  c_pj->add_option("--out", pj.out, "Output directory")->required();

  AttendArgs at;
  auto* c_at = app.add_subcommand("attend", "Geodesic spatial attention over all views");
  c_at->add_option("--rig", at.rig, "Rig JSON")->required();
  c_at->add_option("--depth", at.depth, "Depth directory")->required();
  c_at->add_option("--features", at.features, "Feature directory")->required();
  c_at->add_option("--sigma", at.sigma, "Covariance diagonal theta,h")->capture_default_str();
  c_at->add_option("--tau", at.tau, "Truncation threshold")->capture_default_str();
  c_at->add_flag("--normalize", at.normalize, "Divide by the sum of weights");
  c_at->add_flag("--no-similarity", at.no_similarity, "Geometric weights only");
  c_at->add_flag("--identity", at.identity, "Self weight only (features unchanged)");
  c_at->add_flag("--signed-similarity", at.signed_similarity, "Do not clamp the cosine similarity at 0");
  c_at->add_flag("--all-scales", at.all_scales, "Attend every feature scale, not only the coarsest");
  c_at->add_option("--out", at.out, "Output directory")->required();

  WarpArgs wp;
  auto* c_wp = app.add_subcommand("warp", "Inverse-warp images between views");
  c_wp->add_option("--rig", wp.rig, "Rig JSON")->required();
  c_wp->add_option("--depth", wp.depth, "Target depth directory")->required();
  c_wp->add_option("--images", wp.images, "Target image directory")->required();
  c_wp->add_option("--source-images", wp.source_images, "Source images (default: --images)");
  c_wp->add_option("--mode", wp.mode, "spatial, temporal or spatiotemporal")
      ->check(CLI::IsMember({"spatial", "temporal", "spatiotemporal"}))
      ->capture_default_str();
  c_wp->add_option("--pose", wp.pose, "Front-camera motion JSON (temporal modes)");
  c_wp->add_option("--alpha", wp.alpha, "SSIM weight of the photometric loss")->capture_default_str();
  c_wp->add_option("--out", wp.out, "Output directory")->required();

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "Depth metrics and cross-view consistency");
  c_ev->add_option("--rig", ev.rig, "Rig JSON")->required();
  c_ev->add_option("--pred", ev.pred, "Predicted depth directory")->required();
  c_ev->add_option("--gt", ev.gt, "Ground-truth depth directory")->required();
  c_ev->add_option("--min-depth", ev.min_depth, "Ground truth must exceed this")->capture_default_str();
  c_ev->add_option("--max-depth", ev.max_depth, "Ground truth cap")->capture_default_str();
  c_ev->add_option("--occlusion-tol", ev.occlusion_tol, "Relative depth tolerance")->capture_default_str();
  c_ev->add_option("--out", ev.out, "Report path (default: stdout)");

  PanoramaArgs pn;
  auto* c_pn = app.add_subcommand("panorama", "Unrolled cylinder view of all cameras");
  c_pn->add_option("--rig", pn.rig, "Rig JSON")->required();
  c_pn->add_option("--depth", pn.depth, "Depth directory")->required();
  c_pn->add_option("--images", pn.images, "Image directory")->required();
  c_pn->add_option("--width", pn.width, "Panorama width")->capture_default_str();
  c_pn->add_option("--height", pn.height, "Panorama height (0 = square bins)")->capture_default_str();
  c_pn->add_option("--out", pn.out, "Output .ppm or .pfm")->required();

  ProbeArgs pb;
  auto* c_pb = app.add_subcommand("probe", "Spatial photometric loss versus depth scale");
  c_pb->add_option("--scene", pb.scene, "Scene JSON file or preset name")->required();
  c_pb->add_option("--rig", pb.rig, "Rig JSON (default: 6-camera ring)");
  c_pb->add_option("--seed", pb.seed, "Seed for preset scenes")->capture_default_str();
  c_pb->add_option("--scales", pb.scales, "Comma-separated depth scales")->capture_default_str();
  c_pb->add_option("--out", pb.out, "Table path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: usage: " << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    if (threads > 0) set_thread_count(threads);
    if (c_mk->parsed()) run_make_rig(mk);
    else if (c_rn->parsed()) run_render(rn);
    else if (c_pj->parsed()) run_project(pj);
    else if (c_at->parsed()) run_attend(at);
    else if (c_wp->parsed()) run_warp(wp);
    else if (c_ev->parsed()) run_eval(ev);
    else if (c_pn->parsed()) run_panorama(pn);
    else if (c_pb->parsed()) run_probe(pb);
  } catch (const Error& e) {
    outputs.rollback();
    std::cerr << "error: " << e.kind() << ": " << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    outputs.rollback();
    std::cerr << "error: internal: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 0;
}
