#ifndef DEPTHTK_GEOMETRY_HPP
#define DEPTHTK_GEOMETRY_HPP

#include "depthtk/types.hpp"

#include <functional>
#include <vector>

namespace depthtk::geom {

// ---------------------------------------------------------------------------
// Pinhole camera
// ---------------------------------------------------------------------------

/// Lift pixel (u, v) with depth d to a camera-frame 3D point:
/// P = K^-1 * (d * (u, v, 1)). The z component equals d exactly.
Point3 backproject(const Intrinsics& k, double u, double v, double depth);

struct PixelDepth {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

/// Project a camera-frame point to pixel coordinates and its depth (= z).
/// Throws BehindCameraError for z <= 0.
PixelDepth project(const Intrinsics& k, const Point3& p);

/// Rigid motion: R * p + t.
Point3 transform(const Pose& pose, const Point3& p);

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

struct SampledGrid {
  GridF values;
  MaskMap valid;
};

struct SampledImage {
  ImageGrid values;
  MaskMap valid;
};

/// 4-neighbor bilinear interpolation of `grid` at (u(r,c), v(r,c)). A sample
/// is invalid when any pixel of its interpolation stencil is out of bounds
/// or, if `grid_valid` is given, marked invalid. Exactly integer coordinates
/// collapse the stencil, so grid corners sample exactly and validly.
SampledGrid bilinear_sample(const GridF& grid, const MaskMap* grid_valid, const GridD& u,
                            const GridD& v);

SampledImage bilinear_sample(const ImageGrid& image, const GridD& u, const GridD& v);

/// Depth variant: additionally requires the source entries to be valid.
SampledGrid bilinear_sample(const DepthMap& depth, const GridD& u, const GridD& v);

struct PointSample {
  double value = 0.0;
  bool valid = false;
};

/// Single-point bilinear sample.
PointSample bilinear_at(const GridF& grid, const MaskMap* grid_valid, double u, double v);

struct PointSampleGrad {
  double value = 0.0;
  double du = 0.0;
  double dv = 0.0;
  bool valid = false;
};

/// Single-point sample plus the in-cell derivatives of the interpolant with
/// respect to u and v. Undefined (kinked) exactly on cell boundaries.
PointSampleGrad bilinear_at_with_grad(const GridF& grid, double u, double v);

// ---------------------------------------------------------------------------
// Warping
// ---------------------------------------------------------------------------

struct WarpResult {
  ImageGrid image;
  MaskMap valid;
};

/// Backward warp: synthesize the source image in the target view. Each
/// target pixel is back-projected with tgt_depth, moved by pose_tgt_to_src,
/// projected, and bilinearly sampled from src. Pixels that leave the source
/// image, land behind the camera, or have invalid target depth are masked
/// out instead of raising.
WarpResult warp_backward(const ImageGrid& src, const DepthMap& tgt_depth,
                         const Pose& pose_tgt_to_src, const Intrinsics& k);

struct DepthPair {
  GridF computed;      // z of the target point expressed in the source frame
  GridF interpolated;  // bilinear sample of the source depth map there
  MaskMap valid;
};

/// The two depth readings compared by the cross-frame consistency loss.
DepthPair depth_consistency_pair(const DepthMap& tgt_depth, const DepthMap& src_depth,
                                 const Pose& pose_tgt_to_src, const Intrinsics& k);

// ---------------------------------------------------------------------------
// Shared numerics
// ---------------------------------------------------------------------------

/// Nearest-rank percentile: ascending order statistic at index
/// ceil(p * n) - 1, p in (0, 1]. No interpolation.
double percentile(std::vector<double> values, double p);

double median(std::vector<double> values);

/// Central finite difference (f(x+h) - f(x-h)) / (2h).
double central_difference(const std::function<double(double)>& f, double x, double step);

/// Central difference through float quantization: evaluates f at
/// float(x + step) and float(x - step) and divides by the realized spacing,
/// so the estimate is not polluted by rounding of the probe points.
double central_difference_f32(const std::function<double(float)>& f, float x, double step);

// ---------------------------------------------------------------------------
// Grid utilities
// ---------------------------------------------------------------------------

/// Area-mean downsampling by an integer factor; trailing rows/columns that
/// do not fill a full cell are dropped.
GridF downsample_mean(const GridF& grid, int factor);
ImageGrid downsample_mean(const ImageGrid& image, int factor);
DepthMap downsample_mean(const DepthMap& depth, int factor);  // requires dense input

/// Square-window morphology, used to carve boundary bands out of masks.
MaskMap erode(const MaskMap& mask, int radius);
MaskMap dilate(const MaskMap& mask, int radius);

}  // namespace depthtk::geom

#endif  // DEPTHTK_GEOMETRY_HPP
