#include "depthtk/attention.hpp"

#include "depthtk/geometry.hpp"

#include <cmath>

namespace depthtk::attn {

AttentionMatrix spatial_attention(const DepthMap& coarse_depth, const Intrinsics& k,
                                  const SpatialAttentionConfig& cfg) {
  cfg.validate();
  if (!coarse_depth.fully_valid()) {
    throw InvalidInputError("spatial_attention: coarse depth map must be dense");
  }
  const int w = coarse_depth.width();
  const int h = coarse_depth.height();
  const int n = w * h;

  Eigen::Matrix<double, Eigen::Dynamic, 3> points(n, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      points.row(static_cast<Eigen::Index>(y) * w + x) =
          geom::backproject(k, x, y, coarse_depth.values(y, x)).transpose();
    }
  }

  AttentionMatrix a;
  a.kind = AttentionMatrix::Kind::spatial;
  a.query_width = w;
  a.query_height = h;
  a.weights.setOnes(n, n);
  const double radius_sq = cfg.radius ? *cfg.radius * *cfg.radius : 0.0;
  for (int i = 0; i < n; ++i) {
    const int xi = i % w;
    const int yi = i / w;
    for (int j = 0; j < i; ++j) {
      double weight;
      if (cfg.radius) {
        const double dx = xi - j % w;
        const double dy = yi - j / w;
        if (dx * dx + dy * dy > radius_sq) {
          a.weights(i, j) = a.weights(j, i) = 0.0;
          continue;
        }
      }
      const double dist = (points.row(i) - points.row(j)).norm();
      weight = std::exp(-dist / cfg.sigma);
      a.weights(i, j) = a.weights(j, i) = weight;
    }
  }
  return a;
}

AttentionMatrix temporal_attention(const FeatureMap& query, const std::vector<FeatureMap>& keys) {
  if (keys.empty()) throw InvalidInputError("temporal_attention: key list must be non-empty");
  for (const FeatureMap& key : keys) {
    if (key.dim() != query.dim()) {
      throw InvalidInputError("temporal_attention: feature dimensions differ between query and keys");
    }
  }
  const FeatureMap stacked = concat_features(keys);

  AttentionMatrix a;
  a.kind = AttentionMatrix::Kind::temporal;
  a.query_width = query.width;
  a.query_height = query.height;
  a.weights = query.values.cast<double>() * stacked.values.cast<double>().transpose();
  for (Eigen::Index i = 0; i < a.weights.rows(); ++i) {
    auto row = a.weights.row(i);
    row = (row.array() - row.maxCoeff()).exp();
    row /= row.sum();
  }
  return a;
}

FeatureMap apply_attention(const AttentionMatrix& a, const FeatureMap& values) {
  if (a.n_key() != values.positions()) {
    throw InvalidInputError("apply_attention: key count does not match value positions");
  }
  Eigen::MatrixXd weights = a.weights;
  if (a.kind == AttentionMatrix::Kind::spatial) {
    for (Eigen::Index i = 0; i < weights.rows(); ++i) {
      const double sum = weights.row(i).sum();
      if (sum > 0.0) weights.row(i) /= sum;
    }
  }
  FeatureMap out;
  out.width = a.query_width;
  out.height = a.query_height;
  out.values = (weights * values.values.cast<double>()).cast<float>();
  return out;
}

FeatureMap concat_features(const std::vector<FeatureMap>& maps) {
  if (maps.empty()) throw InvalidInputError("concat_features: empty list");
  Eigen::Index total = 0;
  for (const FeatureMap& m : maps) {
    if (m.dim() != maps.front().dim()) {
      throw InvalidInputError("concat_features: feature dimensions differ");
    }
    total += m.positions();
  }
  FeatureMap out;
  out.width = static_cast<int>(total);
  out.height = 1;
  out.values.resize(total, maps.front().dim());
  Eigen::Index row = 0;
  for (const FeatureMap& m : maps) {
    out.values.middleRows(row, m.positions()) = m.values;
    row += m.positions();
  }
  return out;
}

std::array<FeatureMap, 3> spatial_temporal_aggregate(const std::array<FeatureMap, 3>& features,
                                                     const std::array<DepthMap, 3>& coarse_depths,
                                                     const Intrinsics& k,
                                                     const SpatialAttentionConfig& cfg) {
  for (int f = 0; f < 3; ++f) {
    if (features[static_cast<std::size_t>(f)].width != coarse_depths[static_cast<std::size_t>(f)].width() ||
        features[static_cast<std::size_t>(f)].height != coarse_depths[static_cast<std::size_t>(f)].height()) {
      throw InvalidInputError("spatial_temporal_aggregate: feature/depth resolution mismatch");
    }
    if (features[static_cast<std::size_t>(f)].positions() != features[0].positions() ||
        features[static_cast<std::size_t>(f)].dim() != features[0].dim()) {
      throw InvalidInputError("spatial_temporal_aggregate: triplet members differ in shape");
    }
  }

  std::array<FeatureMap, 3> spatially_aggregated;
  for (int f = 0; f < 3; ++f) {
    const AttentionMatrix sa = spatial_attention(coarse_depths[static_cast<std::size_t>(f)], k, cfg);
    spatially_aggregated[static_cast<std::size_t>(f)] =
        apply_attention(sa, features[static_cast<std::size_t>(f)]);
  }

  std::array<FeatureMap, 3> out;
  for (int f = 0; f < 3; ++f) {
    std::vector<FeatureMap> keys;
    for (int g = 0; g < 3; ++g) {
      if (g != f) keys.push_back(spatially_aggregated[static_cast<std::size_t>(g)]);
    }
    const AttentionMatrix ta = temporal_attention(spatially_aggregated[static_cast<std::size_t>(f)], keys);
    FeatureMap aggregated = apply_attention(ta, concat_features(keys));
    out[static_cast<std::size_t>(f)] = features[static_cast<std::size_t>(f)];
    out[static_cast<std::size_t>(f)].values += aggregated.values;  // residual connection
  }
  return out;
}

}  // namespace depthtk::attn
