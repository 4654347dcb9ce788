#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "cyldepth/cylinder.hpp"
#include "cyldepth/raster.hpp"

namespace cyldepth {

/// Which factors make up a_uv.
enum class Weighting {
  full,       ///< a_uv = a^sp_uv * a^f_uv
  geometric,  ///< a^f forced to 1
  identity,   ///< a_uv = 1 if u == v else 0
};

struct AttentionParams {
  Eigen::Matrix2d sigma = (Eigen::Matrix2d() << 0.02, 0.0, 0.0, 0.02).finished();
  double tau = 1.2;
  bool normalize = false;
  bool clamp_similarity = true;
  Weighting weighting = Weighting::full;

  /// Throws ParameterError unless sigma is symmetric positive definite and
  /// tau > 0.
  void validate() const;
};

/// delta^T sigma^-1 delta. Throws ParameterError for a singular sigma.
double mahalanobis_sq(const Eigen::Vector2d& delta, const Eigen::Matrix2d& sigma);

/// Same quadratic form with a precomputed inverse. All attention code goes
/// through this so that weights are bit-identical between code paths.
inline double mahalanobis_sq_inv(const Eigen::Vector2d& delta, const Eigen::Matrix2d& sigma_inv) {
  const double a = delta.x();
  const double b = delta.y();
  return a * (sigma_inv(0, 0) * a + sigma_inv(0, 1) * b) + b * (sigma_inv(1, 0) * a + sigma_inv(1, 1) * b);
}

/// Truncated Gaussian: exp(-d_sq / 2) when d_sq <= tau^2, else 0.
double spatial_weight(double d_sq, double tau);

/// Cosine similarity; a zero-norm vector gives 0. Clamped to [0, 1] when
/// `clamp` is set.
double feature_similarity(std::span<const double> fu, std::span<const double> fv, bool clamp);

struct Token {
  std::uint32_t view = 0;
  std::int32_t x = 0;
  std::int32_t y = 0;
};

/// Enumerates every valid position of every view, view-major then
/// row-major.
class TokenIndex {
 public:
  TokenIndex() = default;
  explicit TokenIndex(const std::vector<PositionMap>& positions);

  std::size_t size() const { return tokens_.size(); }
  const Token& operator[](std::size_t id) const { return tokens_[id]; }
  /// -1 when the pixel is not a token.
  std::int64_t id(std::size_t view, int x, int y) const;
  std::size_t views() const { return ids_.size(); }
  int width() const { return width_; }
  int height() const { return height_; }

 private:
  std::vector<Token> tokens_;
  std::vector<Grid<std::int64_t>> ids_;
  int width_ = 0;
  int height_ = 0;
};

struct AttentionEntry {
  std::uint32_t key = 0;
  double spatial = 0.0;  ///< a^sp_uv
  double weight = 0.0;   ///< a_uv
  bool operator==(const AttentionEntry&) const = default;
};

/// CSR storage of the truncated weights; row u lists keys in increasing id.
struct SparseAttention {
  TokenIndex tokens;
  std::vector<std::size_t> offsets;  // size tokens.size() + 1
  std::vector<AttentionEntry> entries;

  std::span<const AttentionEntry> row(std::size_t u) const {
    return {entries.data() + offsets[u], offsets[u + 1] - offsets[u]};
  }
  std::size_t nnz() const { return entries.size(); }
};

/// Builds the sparse attention with an azimuth-height bucket grid whose
/// cells cover the truncation ellipse's half-extents, so only the 3x3 cell
/// neighborhood (with azimuth wrap-around) is scanned.
SparseAttention build_sparse_attention(const std::vector<PositionMap>& positions,
                                       const std::vector<FeatureMap>& features,
                                       const AttentionParams& params);

/// f'_u = sum_v a_uv f_v, optionally divided by sum_v a_uv. Pixels that are
/// not tokens pass through unchanged.
std::vector<FeatureMap> aggregate(const std::vector<FeatureMap>& features, const SparseAttention& attn,
                                  bool normalize);

}  // namespace cyldepth
