#include "cyldepth/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "cyldepth/error.hpp"
#include "cyldepth/parallel.hpp"

namespace cyldepth {
namespace {

struct MetricSums {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double sq = 0.0;
  std::size_t within = 0;
  std::size_t count = 0;
};

void accumulate(MetricSums& s, const DepthMap& pred, const DepthMap& gt, const DepthRange& range, const Mask* mask) {
  if (pred.width() != gt.width() || pred.height() != gt.height())
    throw DimensionError("prediction and ground truth differ in size");
  if (mask && (mask->width() != gt.width() || mask->height() != gt.height()))
    throw DimensionError("evaluation mask does not match depth size");
  for (std::size_t i = 0; i < gt.values.size(); ++i) {
    if (!gt.valid[i] || !pred.valid[i]) continue;
    if (mask && !(*mask)[i]) continue;
    const double g = gt.values[i];
    if (!(g > range.min && g <= range.max)) continue;
    const double p = pred.values[i];
    const double diff = p - g;
    s.abs_rel += std::abs(diff) / g;
    s.sq_rel += diff * diff / g;
    s.sq += diff * diff;
    // max(p/g, g/p) < t  <=>  max(p, g) < t * min(p, g), without the
    // rounding of the divisions.
    if (std::max(p, g) < kDeltaThreshold * std::min(p, g)) ++s.within;
    ++s.count;
  }
}

EigenMetrics finish(const MetricSums& s) {
  if (s.count == 0) throw EmptyEvaluationError("no pixels with valid ground truth in the evaluation range");
  const double n = static_cast<double>(s.count);
  return {s.abs_rel / n, s.sq_rel / n, std::sqrt(s.sq / n), 100.0 * static_cast<double>(s.within) / n, s.count};
}

}  // namespace

EigenMetrics eigen_metrics(const DepthMap& pred, const DepthMap& gt, const DepthRange& range, const Mask* mask) {
  MetricSums s;
  accumulate(s, pred, gt, range, mask);
  return finish(s);
}

EigenMetrics eigen_metrics(const std::vector<DepthMap>& pred, const std::vector<DepthMap>& gt,
                           const DepthRange& range, const std::vector<Mask>* masks) {
  if (pred.size() != gt.size()) throw DimensionError("prediction and ground truth differ in view count");
  if (masks && masks->size() != gt.size()) throw DimensionError("one evaluation mask per view required");
  MetricSums s;
  for (std::size_t v = 0; v < gt.size(); ++v) accumulate(s, pred[v], gt[v], range, masks ? &(*masks)[v] : nullptr);
  return finish(s);
}

CorrespondenceSet find_correspondences(const std::vector<DepthMap>& gt_depths, const CameraRig& rig,
                                       const CorrespondenceOptions& options) {
  if (gt_depths.size() != rig.size()) throw DimensionError("one ground-truth depth map per camera required");
  for (std::size_t v = 0; v < rig.size(); ++v) {
    const auto& intr = rig.cameras[v].intrinsics;
    if (gt_depths[v].width() != intr.width || gt_depths[v].height() != intr.height)
      throw DimensionError("ground truth of camera '" + rig.cameras[v].name + "' does not match its intrinsics");
  }

  CorrespondenceSet all;
  for (const auto& [i, j] : adjacent_views(rig)) {
    const Camera& ci = rig.cameras[i];
    const Camera& cj = rig.cameras[j];
    const DepthMap& gi = gt_depths[i];
    const DepthMap& gj = gt_depths[j];
    const Pose ref_to_j = cj.cam_to_ref.inverse();
    std::vector<CorrespondenceSet> rows(static_cast<std::size_t>(gi.height()));
    parallel_for(rows.size(), [&](std::size_t row) {
      const int y = static_cast<int>(row);
      for (int x = 0; x < gi.width(); ++x) {
        if (!gi.is_valid(x, y)) continue;
        const Eigen::Vector3d p = ci.cam_to_ref * (ci.intrinsics.ray(x, y) * gi.values(x, y));
        const Eigen::Vector3d pj = ref_to_j * p;
        if (!(pj.z() > kMinProjectionDepth)) continue;
        const double vx = cj.intrinsics.fx * pj.x() / pj.z() + cj.intrinsics.cx;
        const double vy = cj.intrinsics.fy * pj.y() / pj.z() + cj.intrinsics.cy;
        const auto dj = sample_depth(gj, vx, vy);
        if (!dj) continue;
        if (std::abs(*dj - pj.z()) > options.occlusion_tol * pj.z()) continue;
        if (options.coincidence_tol > 0.0) {
          const Eigen::Vector3d q = cj.cam_to_ref * (cj.intrinsics.ray(vx, vy) * *dj);
          if (!((q - p).norm() <= options.coincidence_tol)) continue;
        }
        rows[row].push_back({i, x, y, j, vx, vy, p.norm(), pj.z()});
      }
    }, 4);
    for (auto& r : rows) all.insert(all.end(), r.begin(), r.end());
  }
  return all;
}

double depth_consistency(const std::vector<DepthMap>& pred_depths, const CorrespondenceSet& corr,
                         const CameraRig& rig) {
  if (corr.empty()) throw EmptyEvaluationError("no correspondences to evaluate");
  if (pred_depths.size() != rig.size()) throw DimensionError("one predicted depth map per camera required");
  std::vector<double> sq(corr.size(), 0.0);
  std::vector<std::uint8_t> used(corr.size(), 0);
  parallel_for(corr.size(), [&](std::size_t k) {
    const Correspondence& c = corr[k];
    if (c.view_i >= rig.size() || c.view_j >= rig.size())
      throw DimensionError("correspondence refers to a camera outside the rig");
    const DepthMap& pi = pred_depths[c.view_i];
    if (c.ux < 0 || c.uy < 0 || c.ux >= pi.width() || c.uy >= pi.height() || !pi.is_valid(c.ux, c.uy)) return;
    const auto dj = sample_depth(pred_depths[c.view_j], c.vx, c.vy);
    if (!dj) return;
    const Camera& ci = rig.cameras[c.view_i];
    const Camera& cj = rig.cameras[c.view_j];
    const double rho_i = (ci.cam_to_ref * (ci.intrinsics.ray(c.ux, c.uy) * pi.values(c.ux, c.uy))).norm();
    const double rho_j = (cj.cam_to_ref * (cj.intrinsics.ray(c.vx, c.vy) * *dj)).norm();
    sq[k] = (rho_i - rho_j) * (rho_i - rho_j);
    used[k] = 1;
  });
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < corr.size(); ++k) {
    if (!used[k]) continue;
    sum += sq[k];
    ++n;
  }
  if (n == 0) throw EmptyEvaluationError("no correspondence has valid predictions in both views");
  return std::sqrt(sum / static_cast<double>(n));
}

std::vector<Mask> overlap_mask(const CameraRig& rig, const std::vector<DepthMap>& gt_depths,
                               const CorrespondenceSet& corr) {
  if (gt_depths.size() != rig.size()) throw DimensionError("one ground-truth depth map per camera required");
  std::vector<Mask> masks;
  for (const auto& g : gt_depths) masks.emplace_back(g.width(), g.height(), 0);
  for (const auto& c : corr) masks.at(c.view_i)(c.ux, c.uy) = 1;
  return masks;
}

std::vector<Mask> overlap_mask(const CameraRig& rig, const std::vector<DepthMap>& gt_depths,
                               const CorrespondenceOptions& options) {
  return overlap_mask(rig, gt_depths, find_correspondences(gt_depths, rig, options));
}

MetricReport evaluate(const std::vector<DepthMap>& pred, const std::vector<DepthMap>& gt, const CameraRig& rig,
                      const DepthRange& range, const CorrespondenceOptions& options) {
  if (pred.size() != rig.size() || gt.size() != rig.size())
    throw DimensionError("one prediction and one ground truth per camera required");
  MetricReport report;
  report.all = eigen_metrics(pred, gt, range);
  for (std::size_t v = 0; v < rig.size(); ++v) {
    MetricSums s;
    accumulate(s, pred[v], gt[v], range, nullptr);
    if (s.count > 0) report.per_view.emplace_back(rig.cameras[v].name, finish(s));
  }
  const CorrespondenceSet corr = find_correspondences(gt, rig, options);
  report.pairs = corr.size();
  if (!corr.empty()) {
    const auto masks = overlap_mask(rig, gt, corr);
    try {
      report.overlap = eigen_metrics(pred, gt, range, &masks);
    } catch (const EmptyEvaluationError&) {
    }
    try {
      report.depth_cons = depth_consistency(pred, corr, rig);
    } catch (const EmptyEvaluationError&) {
    }
  }
  return report;
}

namespace {

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void put_metrics(std::ostringstream& os, const std::string& prefix, const EigenMetrics& m) {
  os << prefix << "abs_rel=" << fmt6(m.abs_rel) << '\n';
  os << prefix << "sq_rel=" << fmt6(m.sq_rel) << '\n';
  os << prefix << "rmse=" << fmt6(m.rmse) << '\n';
  os << prefix << "delta_1=" << fmt6(m.delta_1) << '\n';
  os << prefix << "pixels=" << m.pixels << '\n';
}

}  // namespace

std::string format_report(const MetricReport& report) {
  std::ostringstream os;
  put_metrics(os, "", report.all);
  os << "pairs=" << report.pairs << '\n';
  if (report.depth_cons) os << "depth_cons=" << fmt6(*report.depth_cons) << '\n';
  if (report.overlap) put_metrics(os, "overlap.", *report.overlap);
  for (const auto& [name, m] : report.per_view) put_metrics(os, "view." + name + ".", m);
  return os.str();
}

std::map<std::string, double> parse_report(const std::string& text) {
  std::map<std::string, double> values;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) throw FormatError("report line " + std::to_string(lineno) + " has no key");
    try {
      std::size_t used = 0;
      const double v = std::stod(line.substr(eq + 1), &used);
      if (used != line.size() - eq - 1) throw std::invalid_argument("trailing");
      values[line.substr(0, eq)] = v;
    } catch (const std::exception&) {
      throw FormatError("report line " + std::to_string(lineno) + " has a malformed value");
    }
  }
  return values;
}

}  // namespace cyldepth
