#ifndef DEPTHTK_LOSSES_HPP
#define DEPTHTK_LOSSES_HPP

#include "depthtk/geometry.hpp"
#include "depthtk/types.hpp"

#include <string>
#include <vector>

namespace depthtk::loss {

struct PhotometricConfig {
  double alpha = 0.85;      // SSIM / L1 mixing weight
  int ssim_window = 3;      // odd, >= 3
  double c1 = 0.01 * 0.01;  // SSIM stabilizers
  double c2 = 0.03 * 0.03;

  void validate() const {
    if (alpha < 0.0 || alpha > 1.0) throw InvalidInputError("photometric: alpha must lie in [0, 1]");
    if (ssim_window < 3 || ssim_window % 2 == 0) {
      throw InvalidInputError("photometric: SSIM window must be odd and >= 3");
    }
  }
};

struct LossWeights {
  double lambda_s = 1e-3;
  double lambda_geo = 0.1;
  double lambda_m = 1.0;
};

/// A per-pixel loss map together with the mask it was reduced over; the
/// scalar is the mean of the map over mask-true pixels (0 when the mask is
/// empty).
struct LossResult {
  double scalar = 0.0;
  GridF map;
  MaskMap mask;
};

// ---------------------------------------------------------------------------
// Photometric building blocks
// ---------------------------------------------------------------------------

/// Windowed SSIM map in [-1, 1], channel-meaned, replicate padding at the
/// borders. Identical inputs give exactly 1 everywhere.
GridF ssim(const ImageGrid& x, const ImageGrid& y, const PhotometricConfig& cfg);

/// alpha * (1 - SSIM) / 2 + (1 - alpha) * channel-mean |x - y|.
GridF photometric_error(const ImageGrid& x, const ImageGrid& y, const PhotometricConfig& cfg);

// ---------------------------------------------------------------------------
// Masks
// ---------------------------------------------------------------------------

/// Keeps pixels whose round-trip photometric error is strictly below the
/// p-percentile of the error over round-trip-valid pixels. A degenerate
/// threshold that would blank the whole mask falls back to keeping every
/// valid pixel.
MaskMap cycle_mask(const ImageGrid& i_t, const ImageGrid& i_t_s_t, const MaskMap& roundtrip_valid,
                   const PhotometricConfig& cfg, double p = 0.7);

/// Per-source argmin masks (ties go to the lowest source index). The
/// baseline occlusion heuristic kept for comparison against cycle_mask.
std::vector<MaskMap> min_mask(const std::vector<GridF>& errors_per_source);

/// True where the best warped source explains the pixel strictly better than
/// the best unwarped source; false marks content co-moving with the camera.
/// Warp candidates that are invalid are excluded from the minimum; pixels
/// with no valid warp are masked out.
MaskMap auto_mask(const ImageGrid& i_t, const std::vector<ImageGrid>& sources,
                  const std::vector<ImageGrid>& warped, const std::vector<MaskMap>& warped_valid,
                  const PhotometricConfig& cfg);

/// True where max((D - T)/T, (T - D)/D) < threshold; large student/teacher
/// disagreement marks potentially moving objects.
MaskMap motion_mask(const DepthMap& d, const DepthMap& d_teacher, double threshold = 0.6);

// ---------------------------------------------------------------------------
// Loss terms
// ---------------------------------------------------------------------------

/// (1 - M_m) * |D - T|, reduced over the pixels outside the motion mask.
LossResult motion_loss(const DepthMap& d, const DepthMap& d_teacher, const MaskMap& m_motion);

/// Per-pixel minimum photometric error over the valid warped sources,
/// reduced over m_motion & m_auto & warp validity.
LossResult photometric_loss(const ImageGrid& i_t, const std::vector<ImageGrid>& warped,
                            const std::vector<MaskMap>& warped_valid, const MaskMap& m_motion,
                            const MaskMap& m_auto, const PhotometricConfig& cfg);

/// Edge-aware smoothness of the mean-normalized inverse depth with
/// forward differences; the image-gradient weights are channel-meaned.
LossResult smoothness_loss(const DepthMap& d, const ImageGrid& i_t);

/// 1 - min/max of the two depth readings, reduced over the conjunction of
/// pair validity and the three masks. Scale-invariant and symmetric.
LossResult geometric_loss(const geom::DepthPair& pair, const MaskMap& m_motion,
                          const MaskMap& m_auto, const MaskMap& m_cycle);

/// Mean |D_t - D_ref| over jointly valid pixels. Gradients flow to d_ref
/// only; d_t is treated as detached.
LossResult reference_loss(const DepthMap& d_t, const DepthMap& d_ref);

struct LossComponents {
  double photometric = 0.0;
  double smoothness = 0.0;
  double geometric = 0.0;
  double motion = 0.0;
  double reference = 0.0;
};

/// photometric + lambda_s * smoothness + lambda_geo * geometric +
/// lambda_m * motion + reference.
double total_loss(const LossComponents& parts, const LossWeights& w);

// ---------------------------------------------------------------------------
// Analytic gradients with respect to a depth map. Masks are constants with
// respect to differentiation; every function returns the gradient of the
// masked scalar, entry per depth pixel, and 0 at masked-out pixels.
// ---------------------------------------------------------------------------

enum class LossKind { geometric, photometric_l1, smoothness, motion, reference };

/// Parses one of "geometric", "photometric-l1", "smoothness", "motion",
/// "reference"; anything else is an invalid-input error.
LossKind loss_kind_from_name(const std::string& name);
std::string loss_kind_name(LossKind kind);

/// d/d(interpolated) of the masked mean of 1 - min/max(computed, interp).
GridD geometric_loss_gradient(const GridF& computed, const GridF& interpolated,
                              const MaskMap& mask);

/// d/d(d_ref) of reference_loss; the subgradient at ties is taken as 0.
GridD reference_loss_gradient(const DepthMap& d_t, const DepthMap& d_ref);

/// d/d(d) of motion_loss with the mask frozen.
GridD motion_loss_gradient(const DepthMap& d, const DepthMap& d_teacher, const MaskMap& m_motion);

/// d/d(d) of smoothness_loss, including the coupling through the mean
/// inverse depth used for normalization.
GridD smoothness_loss_gradient(const DepthMap& d, const ImageGrid& i_t);

/// d/d(tgt_depth) of the masked mean pure-L1 photometric error between i_t
/// and src backward-warped by tgt_depth, differentiating through projection
/// and bilinear sampling. `mask` is the frozen reduction domain.
GridD photometric_l1_gradient(const ImageGrid& i_t, const ImageGrid& src, const DepthMap& tgt_depth,
                              const Pose& pose_tgt_to_src, const Intrinsics& k, const MaskMap& mask);

}  // namespace depthtk::loss

#endif  // DEPTHTK_LOSSES_HPP
