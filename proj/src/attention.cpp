#include "cyldepth/attention.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include <Eigen/LU>

#include "cyldepth/error.hpp"
#include "cyldepth/parallel.hpp"

namespace cyldepth {

void AttentionParams::validate() const {
  if (!sigma.allFinite() || sigma(0, 1) != sigma(1, 0))
    throw ParameterError("attention covariance must be finite and symmetric");
  if (!(sigma(0, 0) > 0.0 && sigma.determinant() > 0.0))
    throw ParameterError("attention covariance must be positive definite");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ParameterError("truncation threshold must be positive");
}

double mahalanobis_sq(const Eigen::Vector2d& delta, const Eigen::Matrix2d& sigma) {
  const double det = sigma.determinant();
  if (!(std::abs(det) > 0.0) || !std::isfinite(det)) throw ParameterError("covariance matrix is singular");
  return mahalanobis_sq_inv(delta, sigma.inverse());
}

double spatial_weight(double d_sq, double tau) {
  if (d_sq <= tau * tau) return std::exp(-0.5 * d_sq);
  return 0.0;
}

double feature_similarity(std::span<const double> fu, std::span<const double> fv, bool clamp) {
  if (fu.size() != fv.size()) throw DimensionError("feature vectors differ in length");
  double dot = 0.0;
  double nu = 0.0;
  double nv = 0.0;
  for (std::size_t k = 0; k < fu.size(); ++k) {
    dot += fu[k] * fv[k];
    nu += fu[k] * fu[k];
    nv += fv[k] * fv[k];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  const double cos = dot / (std::sqrt(nu) * std::sqrt(nv));
  return clamp ? std::clamp(cos, 0.0, 1.0) : cos;
}

TokenIndex::TokenIndex(const std::vector<PositionMap>& positions) {
  if (!positions.empty()) {
    width_ = positions.front().width();
    height_ = positions.front().height();
  }
  for (std::size_t v = 0; v < positions.size(); ++v) {
    const auto& pm = positions[v];
    if (pm.width() != width_ || pm.height() != height_)
      throw DimensionError("position maps differ in size across views");
    Grid<std::int64_t> ids(width_, height_, -1);
    for (int y = 0; y < height_; ++y) {
      for (int x = 0; x < width_; ++x) {
        if (!pm.valid(x, y)) continue;
        ids(x, y) = static_cast<std::int64_t>(tokens_.size());
        tokens_.push_back({static_cast<std::uint32_t>(v), x, y});
      }
    }
    ids_.push_back(std::move(ids));
  }
}

std::int64_t TokenIndex::id(std::size_t view, int x, int y) const {
  if (view >= ids_.size() || x < 0 || y < 0 || x >= width_ || y >= height_) return -1;
  return ids_[view](x, y);
}

namespace {

void check_inputs(const std::vector<PositionMap>& positions, const std::vector<FeatureMap>& features) {
  if (positions.size() != features.size()) throw DimensionError("positions and features differ in view count");
  int channels = -1;
  for (std::size_t v = 0; v < positions.size(); ++v) {
    const auto& f = features[v];
    if (f.width() != positions[v].width() || f.height() != positions[v].height())
      throw DimensionError("feature map " + std::to_string(v) + " does not match its position map");
    if (channels < 0) channels = f.channels();
    if (f.channels() != channels) throw DimensionError("feature maps differ in channel count");
    for (double x : f.data())
      if (!std::isfinite(x)) throw ParameterError("feature map " + std::to_string(v) + " has non-finite values");
  }
}

// Bucket grid over (theta, h). Cells are at least as large as the
// truncation ellipse's half-extents, so every partner of a query lies in
// the 3x3 cell block around it (modulo azimuth wrap).
class BinGrid {
 public:
  BinGrid(const AttentionParams& p) {
    // Slight enlargement keeps rounding in the bin computation from pushing
    // a borderline partner two cells away.
    constexpr double kSlack = 1.0 + 1e-9;
    const double dtheta = p.tau * std::sqrt(p.sigma(0, 0)) * kSlack;
    cell_h_ = p.tau * std::sqrt(p.sigma(1, 1)) * kSlack;
    theta_bins_ = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(2.0 * std::numbers::pi / dtheta)));
    cell_theta_ = 2.0 * std::numbers::pi / static_cast<double>(theta_bins_);
  }

  std::int64_t theta_bin(double theta) const {
    const auto b = static_cast<std::int64_t>(std::floor((theta + std::numbers::pi) / cell_theta_));
    return std::clamp<std::int64_t>(b, 0, theta_bins_ - 1);
  }
  std::int64_t h_bin(double h) const {
    constexpr double kLimit = 4.0e18;
    return static_cast<std::int64_t>(std::clamp(std::floor(h / cell_h_), -kLimit, kLimit));
  }
  std::int64_t theta_bins() const { return theta_bins_; }

  // Azimuth neighbors of a bin without duplicates.
  int theta_neighbors(std::int64_t b, std::int64_t out[3]) const {
    if (theta_bins_ <= 3) {
      for (std::int64_t k = 0; k < theta_bins_; ++k) out[k] = k;
      return static_cast<int>(theta_bins_);
    }
    out[0] = (b + theta_bins_ - 1) % theta_bins_;
    out[1] = b;
    out[2] = (b + 1) % theta_bins_;
    return 3;
  }

 private:
  double cell_theta_ = 0.0;
  double cell_h_ = 0.0;
  std::int64_t theta_bins_ = 1;
};

struct CellKey {
  std::int64_t h;
  std::int64_t theta;
  bool operator==(const CellKey&) const = default;
};
struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const noexcept {
    return std::hash<std::int64_t>{}(k.h * 0x9E3779B97F4A7C15LL ^ k.theta);
  }
};

}  // namespace

SparseAttention build_sparse_attention(const std::vector<PositionMap>& positions,
                                       const std::vector<FeatureMap>& features, const AttentionParams& params) {
  params.validate();
  check_inputs(positions, features);

  SparseAttention attn;
  attn.tokens = TokenIndex(positions);
  const auto& tokens = attn.tokens;
  const std::size_t n = tokens.size();

  std::vector<CylCoord> coords(n);
  std::vector<std::span<const double>> feats(n);
  for (std::size_t id = 0; id < n; ++id) {
    const Token& t = tokens[id];
    coords[id] = positions[t.view].coords(t.x, t.y);
    feats[id] = features[t.view].pixel(t.x, t.y);
  }

  std::vector<std::vector<AttentionEntry>> rows(n);
  if (params.weighting == Weighting::identity) {
    for (std::size_t u = 0; u < n; ++u) rows[u].push_back({static_cast<std::uint32_t>(u), 1.0, 1.0});
  } else {
    const BinGrid grid(params);
    std::unordered_map<CellKey, std::vector<std::uint32_t>, CellKeyHash> cells;
    for (std::size_t id = 0; id < n; ++id)
      cells[{grid.h_bin(coords[id].h), grid.theta_bin(coords[id].theta)}].push_back(static_cast<std::uint32_t>(id));

    const Eigen::Matrix2d sigma_inv = params.sigma.inverse();
    const bool use_similarity = params.weighting == Weighting::full;
    parallel_for(n, [&](std::size_t u) {
      auto& row = rows[u];
      const CylCoord& cu = coords[u];
      const std::int64_t hb = grid.h_bin(cu.h);
      std::int64_t tb[3];
      const int ntb = grid.theta_neighbors(grid.theta_bin(cu.theta), tb);
      for (std::int64_t dh = -1; dh <= 1; ++dh) {
        for (int k = 0; k < ntb; ++k) {
          const auto it = cells.find({hb + dh, tb[k]});
          if (it == cells.end()) continue;
          for (std::uint32_t v : it->second) {
            if (v == u) {
              row.push_back({v, 1.0, 1.0});
              continue;
            }
            const double d_sq = mahalanobis_sq_inv(geodesic_delta(cu, coords[v]), sigma_inv);
            const double sp = spatial_weight(d_sq, params.tau);
            if (!(sp > 0.0)) continue;
            const double af = use_similarity ? feature_similarity(feats[u], feats[v], params.clamp_similarity) : 1.0;
            row.push_back({v, sp, sp * af});
          }
        }
      }
      std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
    }, 64);
  }

  attn.offsets.resize(n + 1, 0);
  for (std::size_t u = 0; u < n; ++u) attn.offsets[u + 1] = attn.offsets[u] + rows[u].size();
  attn.entries.reserve(attn.offsets[n]);
  for (auto& row : rows) attn.entries.insert(attn.entries.end(), row.begin(), row.end());
  return attn;
}

std::vector<FeatureMap> aggregate(const std::vector<FeatureMap>& features, const SparseAttention& attn,
                                  bool normalize) {
  const auto& tokens = attn.tokens;
  if (features.size() != tokens.views()) throw ConsistencyError("feature view count does not match attention tokens");
  for (const auto& f : features) {
    if (f.width() != tokens.width() || f.height() != tokens.height())
      throw ConsistencyError("feature map size does not match attention tokens");
    if (f.channels() != features.front().channels()) throw ConsistencyError("feature maps differ in channel count");
  }
  if (attn.offsets.size() != tokens.size() + 1) throw ConsistencyError("attention rows do not match tokens");

  std::vector<FeatureMap> out = features;
  const int channels = features.empty() ? 0 : features.front().channels();
  parallel_for(tokens.size(), [&](std::size_t u) {
    const Token& tu = tokens[u];
    auto dst = out[tu.view].pixel(tu.x, tu.y);
    std::fill(dst.begin(), dst.end(), 0.0);
    double total = 0.0;
    for (const auto& e : attn.row(u)) {
      if (e.key >= tokens.size()) throw ConsistencyError("attention key outside the token range");
      const Token& tv = tokens[e.key];
      const auto src = features[tv.view].pixel(tv.x, tv.y);
      for (int c = 0; c < channels; ++c) dst[c] += e.weight * src[c];
      total += e.weight;
    }
    if (normalize && total != 0.0)
      for (int c = 0; c < channels; ++c) dst[c] /= total;
  }, 64);
  return out;
}

}  // namespace cyldepth
