#ifndef DEPTHTK_ATTENTION_HPP
#define DEPTHTK_ATTENTION_HPP

#include "depthtk/types.hpp"

#include <array>
#include <optional>
#include <vector>

namespace depthtk::attn {

struct SpatialAttentionConfig {
  double sigma = 1.0;                   // length scale in meters
  std::optional<double> radius;         // optional ball-query limit in pixels

  void validate() const {
    if (!(sigma > 0.0)) throw InvalidInputError("spatial attention: sigma must be positive");
    if (radius && !(*radius > 0.0)) {
      throw InvalidInputError("spatial attention: radius must be positive when set");
    }
  }
};

/// Attention weights between query and key positions. Spatial matrices are
/// symmetric with unit diagonal and weights in (0, 1]; temporal matrices
/// have rows that are probability vectors.
struct AttentionMatrix {
  enum class Kind { spatial, temporal };

  Kind kind = Kind::spatial;
  int query_width = 0;
  int query_height = 0;
  Eigen::MatrixXd weights;  // n_query x n_key

  int n_query() const { return static_cast<int>(weights.rows()); }
  int n_key() const { return static_cast<int>(weights.cols()); }
};

/// Pairwise weights exp(-|P_i - P_j| / sigma) between the back-projected 3D
/// points of a dense coarse depth map. With cfg.radius set, pairs farther
/// apart than the radius in pixel space get weight 0 (ball query).
AttentionMatrix spatial_attention(const DepthMap& coarse_depth, const Intrinsics& k,
                                  const SpatialAttentionConfig& cfg);

/// Softmax over feature dot products between one frame's queries and the
/// concatenated positions of the key frames.
AttentionMatrix temporal_attention(const FeatureMap& query, const std::vector<FeatureMap>& keys);

/// Weighted aggregation of value vectors. Spatial matrices are normalized by
/// their row sums so the output is a convex combination; temporal rows
/// already are.
FeatureMap apply_attention(const AttentionMatrix& a, const FeatureMap& values);

/// Concatenate feature maps along the position axis (for key/value stacking).
FeatureMap concat_features(const std::vector<FeatureMap>& maps);

/// The fused operator over a frame triplet: each frame is aggregated by its
/// own spatial attention, then each frame queries the other two frames'
/// spatially aggregated features through temporal attention, and the result
/// is added residually to the input features.
std::array<FeatureMap, 3> spatial_temporal_aggregate(const std::array<FeatureMap, 3>& features,
                                                     const std::array<DepthMap, 3>& coarse_depths,
                                                     const Intrinsics& k,
                                                     const SpatialAttentionConfig& cfg);

}  // namespace depthtk::attn

#endif  // DEPTHTK_ATTENTION_HPP
