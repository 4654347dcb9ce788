#pragma once

#include <map>
#include <string>
#include <vector>

#include "cyldepth/raster.hpp"
#include "cyldepth/rig.hpp"

namespace cyldepth {

struct SynthScene;

inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

struct LossWeights {
  double lambda_sp = 0.03;
  double lambda_spt = 0.1;
  double lambda_sm = 0.1;
  double lambda_dccl = 1e-3;
  double lambda_mvrcl = 0.2;
  double alpha = 0.85;

  void validate() const;
};

/// Per-pixel SSIM over 3x3 box windows clipped to the image (and to `mask`
/// when given), averaged over channels. Pixels outside the mask are 0.
Grid<double> ssim(const ImageRaster& x, const ImageRaster& y, const Mask* mask = nullptr);

/// Mean over valid pixels of alpha (1 - SSIM) / 2 + (1 - alpha) L1, where L1
/// is the channel-mean absolute difference. Throws NoOverlapError for an
/// empty mask.
double photometric_loss(const ImageRaster& warped, const ImageRaster& target, const Mask& mask,
                        double alpha = 0.85);

/// Edge-aware smoothness of mean-normalized disparity with forward
/// differences. Every depth pixel must be valid.
double smoothness_loss(const DepthMap& depth, const ImageRaster& image);

/// Names accepted by total_loss.
inline constexpr const char* kLossTemporal = "temp";
inline constexpr const char* kLossSpatial = "sp";
inline constexpr const char* kLossSpatioTemporal = "spt";
inline constexpr const char* kLossSmoothness = "sm";
inline constexpr const char* kLossDccl = "dccl";
inline constexpr const char* kLossMvrcl = "mvrcl";

/// L_temp + lambda_sp L_sp + lambda_spt L_spt + lambda_sm L_sm
///   + lambda_dccl L_dccl + lambda_mvrcl L_mvrcl.
/// The DCCL and MVRCL terms are externally computed scalars.
double total_loss(const std::map<std::string, double>& parts, const LossWeights& w = {});

/// Spatial photometric loss pooled over every adjacent ordered view pair:
/// view j is warped into view i with depth i and the per-pixel terms of all
/// pairs are averaged together.
double spatial_photometric_loss(const std::vector<DepthMap>& depths, const std::vector<ImageRaster>& images,
                                const CameraRig& rig, double alpha = 0.85);

struct ScaleLoss {
  double scale = 1.0;
  double loss = 0.0;
};

/// Renders `scene` from `rig` and evaluates the spatial photometric loss
/// with depth = s * ground truth for each s.
std::vector<ScaleLoss> probe_depth_scale(const SynthScene& scene, const CameraRig& rig,
                                         const std::vector<double>& scales);

}  // namespace cyldepth
