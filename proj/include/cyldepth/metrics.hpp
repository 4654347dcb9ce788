#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cyldepth/raster.hpp"
#include "cyldepth/rig.hpp"

namespace cyldepth {

inline constexpr double kDeltaThreshold = 1.25;

struct DepthRange {
  double min = 0.1;
  double max = 200.0;
};

struct EigenMetrics {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double delta_1 = 0.0;  ///< percent
  std::size_t pixels = 0;
};

/// Standard depth metrics on pixels with a valid prediction and
/// range.min < gt <= range.max (optionally restricted to `mask`). No median
/// scaling. Throws EmptyEvaluationError when nothing is evaluated.
EigenMetrics eigen_metrics(const DepthMap& pred, const DepthMap& gt, const DepthRange& range = {},
                           const Mask* mask = nullptr);
/// Pools the pixels of every view.
EigenMetrics eigen_metrics(const std::vector<DepthMap>& pred, const std::vector<DepthMap>& gt,
                           const DepthRange& range = {}, const std::vector<Mask>* masks = nullptr);

/// Integer pixel (ux, uy) of view_i corresponds to the continuous location
/// (vx, vy) of view_j.
struct Correspondence {
  std::size_t view_i = 0;
  int ux = 0;
  int uy = 0;
  std::size_t view_j = 0;
  double vx = 0.0;
  double vy = 0.0;
  /// Ground-truth distance of the shared 3D point from the reference origin.
  double reference_distance = 0.0;
  /// Ground-truth depth of the point along camera j's z-axis.
  double depth_j = 0.0;
};

using CorrespondenceSet = std::vector<Correspondence>;

struct CorrespondenceOptions {
  /// Relative depth difference above which the landing pixel is occluded.
  double occlusion_tol = 0.05;
  /// Maximum 3D distance (m) between the point lifted from view i and the
  /// point lifted from the sampled ground truth of view j. Non-positive
  /// disables the check.
  double coincidence_tol = 1e-6;
};

/// Pairs every gt-valid pixel of view i with its projection into each
/// adjacent view j, keeping only pairs whose landing location's ground truth
/// agrees with the projected depth.
CorrespondenceSet find_correspondences(const std::vector<DepthMap>& gt_depths, const CameraRig& rig,
                                       const CorrespondenceOptions& options = {});

/// RMSE between the distances to the reference origin of the two
/// predictions of each pair. Throws EmptyEvaluationError for an empty set.
double depth_consistency(const std::vector<DepthMap>& pred_depths, const CorrespondenceSet& corr,
                         const CameraRig& rig);

/// Pixels that take part in at least one correspondence, as source pixel.
std::vector<Mask> overlap_mask(const CameraRig& rig, const std::vector<DepthMap>& gt_depths,
                               const CorrespondenceOptions& options = {});
std::vector<Mask> overlap_mask(const CameraRig& rig, const std::vector<DepthMap>& gt_depths,
                               const CorrespondenceSet& corr);

struct MetricReport {
  EigenMetrics all;
  std::optional<EigenMetrics> overlap;
  std::optional<double> depth_cons;
  std::size_t pairs = 0;
  std::vector<std::pair<std::string, EigenMetrics>> per_view;
};

MetricReport evaluate(const std::vector<DepthMap>& pred, const std::vector<DepthMap>& gt, const CameraRig& rig,
                      const DepthRange& range = {}, const CorrespondenceOptions& options = {});

/// Flat `key=value` text, one metric per line, 6 significant digits.
std::string format_report(const MetricReport& report);
std::map<std::string, double> parse_report(const std::string& text);

}  // namespace cyldepth
