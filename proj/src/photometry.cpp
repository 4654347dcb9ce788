#include "cyldepth/photometry.hpp"

#include <cmath>
#include <set>

#include "cyldepth/error.hpp"
#include "cyldepth/parallel.hpp"
#include "cyldepth/synthworld.hpp"

namespace cyldepth {
namespace {

struct PooledLoss {
  double sum = 0.0;
  std::size_t count = 0;
};

PooledLoss photometric_terms(const ImageRaster& warped, const ImageRaster& target, const Mask& mask, double alpha) {
  if (!warped.same_shape(target)) throw DimensionError("warped and target images differ in shape");
  if (mask.width() != target.width() || mask.height() != target.height())
    throw DimensionError("mask does not match image size");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in [0, 1]");

  const Grid<double> s = ssim(warped, target, &mask);
  Grid<double> per_pixel(target.width(), target.height(), 0.0);
  const int channels = target.channels();
  parallel_for(per_pixel.size(), [&](std::size_t i) {
    if (!mask[i]) return;
    const auto a = warped.pixel(i);
    const auto b = target.pixel(i);
    double l1 = 0.0;
    for (int c = 0; c < channels; ++c) l1 += std::abs(a[c] - b[c]);
    l1 /= channels;
    per_pixel[i] = alpha * (1.0 - s[i]) / 2.0 + (1.0 - alpha) * l1;
  });
  PooledLoss pooled;
  for (std::size_t i = 0; i < per_pixel.size(); ++i) {
    if (!mask[i]) continue;
    pooled.sum += per_pixel[i];
    ++pooled.count;
  }
  return pooled;
}

}  // namespace

void LossWeights::validate() const {
  for (double l : {lambda_sp, lambda_spt, lambda_sm, lambda_dccl, lambda_mvrcl})
    if (!(l >= 0.0) || !std::isfinite(l)) throw ParameterError("loss weights must be nonnegative");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in [0, 1]");
}

Grid<double> ssim(const ImageRaster& x, const ImageRaster& y, const Mask* mask) {
  if (!x.same_shape(y)) throw DimensionError("ssim inputs differ in shape");
  if (mask && (mask->width() != x.width() || mask->height() != x.height()))
    throw DimensionError("ssim mask does not match image size");
  const int w = x.width();
  const int h = x.height();
  const int channels = x.channels();
  Grid<double> out(w, h, 0.0);
  parallel_for(static_cast<std::size_t>(h), [&](std::size_t row) {
    const int py = static_cast<int>(row);
    for (int px = 0; px < w; ++px) {
      if (mask && !(*mask)(px, py)) continue;
      int nx[9];
      int ny[9];
      int n = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int qx = px + dx;
          const int qy = py + dy;
          if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
          if (mask && !(*mask)(qx, qy)) continue;
          nx[n] = qx;
          ny[n] = qy;
          ++n;
        }
      }
      double acc = 0.0;
      for (int c = 0; c < channels; ++c) {
        double mx = 0.0;
        double my = 0.0;
        for (int k = 0; k < n; ++k) {
          mx += x(nx[k], ny[k], c);
          my += y(nx[k], ny[k], c);
        }
        mx /= n;
        my /= n;
        double vx = 0.0;
        double vy = 0.0;
        double cxy = 0.0;
        for (int k = 0; k < n; ++k) {
          const double a = x(nx[k], ny[k], c) - mx;
          const double b = y(nx[k], ny[k], c) - my;
          vx += a * a;
          vy += b * b;
          cxy += a * b;
        }
        vx /= n;
        vy /= n;
        cxy /= n;
        const double num = (2.0 * (mx * my) + kSsimC1) * (2.0 * cxy + kSsimC2);
        const double den = (mx * mx + my * my + kSsimC1) * (vx + vy + kSsimC2);
        acc += num / den;
      }
      out(px, py) = acc / channels;
    }
  }, 4);
  return out;
}

double photometric_loss(const ImageRaster& warped, const ImageRaster& target, const Mask& mask, double alpha) {
  const PooledLoss pooled = photometric_terms(warped, target, mask, alpha);
  if (pooled.count == 0) throw NoOverlapError("photometric loss over an empty mask");
  return pooled.sum / static_cast<double>(pooled.count);
}

double smoothness_loss(const DepthMap& depth, const ImageRaster& image) {
  const int w = depth.width();
  const int h = depth.height();
  if (image.width() != w || image.height() != h) throw DimensionError("depth and image differ in size");
  if (w == 0 || h == 0) throw DimensionError("empty depth map");
  Grid<double> disp(w, h, 0.0);
  double mean = 0.0;
  for (std::size_t i = 0; i < disp.size(); ++i) {
    const double d = depth.values[i];
    if (!depth.valid[i] || !(d > 0.0) || !std::isfinite(d))
      throw ParameterError("smoothness loss needs a positive depth at every pixel");
    disp[i] = 1.0 / d;
    mean += disp[i];
  }
  mean /= static_cast<double>(disp.size());
  for (std::size_t i = 0; i < disp.size(); ++i) disp[i] /= mean;

  const int channels = image.channels();
  auto image_grad = [&](int x0, int y0, int x1, int y1) {
    double g = 0.0;
    for (int c = 0; c < channels; ++c) g += std::abs(image(x1, y1, c) - image(x0, y0, c));
    return g / channels;
  };
  double sx = 0.0;
  double sy = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x + 1 < w; ++x)
      sx += std::abs(disp(x + 1, y) - disp(x, y)) * std::exp(-image_grad(x, y, x + 1, y));
  }
  for (int y = 0; y + 1 < h; ++y) {
    for (int x = 0; x < w; ++x)
      sy += std::abs(disp(x, y + 1) - disp(x, y)) * std::exp(-image_grad(x, y, x, y + 1));
  }
  double loss = 0.0;
  if (w > 1) loss += sx / (static_cast<double>(w - 1) * h);
  if (h > 1) loss += sy / (static_cast<double>(h - 1) * w);
  return loss;
}

double total_loss(const std::map<std::string, double>& parts, const LossWeights& w) {
  w.validate();
  static const std::set<std::string> known = {kLossTemporal, kLossSpatial, kLossSpatioTemporal,
                                              kLossSmoothness, kLossDccl, kLossMvrcl};
  for (const auto& [name, value] : parts) {
    if (!known.count(name)) throw ParameterError("unknown loss term '" + name + "'");
    if (!std::isfinite(value)) throw ParameterError("loss term '" + name + "' is not finite");
  }
  const auto temporal = parts.find(kLossTemporal);
  if (temporal == parts.end()) throw ParameterError("total loss needs the temporal term");
  auto part = [&](const char* name) {
    const auto it = parts.find(name);
    return it == parts.end() ? 0.0 : it->second;
  };
  return temporal->second + w.lambda_sp * part(kLossSpatial) + w.lambda_spt * part(kLossSpatioTemporal) +
         w.lambda_sm * part(kLossSmoothness) + w.lambda_dccl * part(kLossDccl) +
         w.lambda_mvrcl * part(kLossMvrcl);
}

double spatial_photometric_loss(const std::vector<DepthMap>& depths, const std::vector<ImageRaster>& images,
                                const CameraRig& rig, double alpha) {
  if (depths.size() != rig.size() || images.size() != rig.size())
    throw DimensionError("one depth map and one image per camera required");
  PooledLoss total;
  for (const auto& [i, j] : adjacent_views(rig)) {
    const auto warp = warp_spatial(depths[i], images[j], rig.cameras[i].intrinsics, rig.cameras[j].intrinsics,
                                   rig.relative_pose(j, i));
    const PooledLoss pair = photometric_terms(warp.image, images[i], warp.valid, alpha);
    total.sum += pair.sum;
    total.count += pair.count;
  }
  if (total.count == 0) throw NoOverlapError("no overlapping pixels between any camera pair");
  return total.sum / static_cast<double>(total.count);
}

std::vector<ScaleLoss> probe_depth_scale(const SynthScene& scene, const CameraRig& rig,
                                         const std::vector<double>& scales) {
  for (double s : scales)
    if (!(s > 0.0) || !std::isfinite(s)) throw ParameterError("depth scales must be positive");
  SynthScene posed = scene;
  posed.rig = rig;
  const RenderBundle bundle = render(posed);
  std::vector<ImageRaster> images;
  for (const auto& v : bundle.views) images.push_back(v.image);

  std::vector<ScaleLoss> curve;
  for (double s : scales) {
    std::vector<DepthMap> depths;
    for (const auto& v : bundle.views) depths.push_back(v.depth.scaled(s));
    curve.push_back({s, spatial_photometric_loss(depths, images, rig)});
  }
  return curve;
}

}  // namespace cyldepth
