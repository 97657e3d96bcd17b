#ifndef DEPTHTK_TCM_HPP
#define DEPTHTK_TCM_HPP

#include "depthtk/types.hpp"

#include <vector>

namespace depthtk::tcm {

struct Observation {
  double pred_in_ref = 0.0;  // median-scaled prediction, reference depth coordinate
  double gt_in_ref = 0.0;    // ground truth in the same coordinate
};

/// One reference pixel tracked through the frames where its correspondence
/// is observed. Tracks contribute only with >= 2 observations.
struct PixelTrack {
  int ref_u = 0;
  int ref_v = 0;
  std::vector<Observation> observations;
};

struct TcmReport {
  int k = 0;
  double abs_err = 0.0;
  double sq_err = 0.0;
  double rmse = 0.0;
  std::size_t n_tracks = 0;
  double outlier_fraction = 0.0;
};

struct MedianScaleResult {
  DepthMap scaled;
  double ratio = 0.0;
};

/// ratio = median(gt) / median(pred) over jointly valid pixels. One
/// sequence-level ratio (from the reference frame) is applied to every frame
/// of a window.
double median_scale_ratio(const DepthMap& pred, const DepthMap& gt);
MedianScaleResult median_scale(const DepthMap& pred, const DepthMap& gt);

/// Locate every reference pixel with valid GT depth in all other frames of
/// the window using GT depth and GT pose, sample the (median-scaled)
/// predicted and GT depth there, and express both back in the reference
/// frame's depth coordinate.
std::vector<PixelTrack> align_to_reference(const FrameSequence& window, int ref_index);

/// Per track: mean relative deviation |pred - gt| / gt over its
/// observations. The largest outlier_fraction of tracks is dropped, then
/// Abs Err / Sq Err / RMSE are aggregated over the per-observation
/// deviations of the kept tracks.
TcmReport tcm(const std::vector<PixelTrack>& tracks, double outlier_fraction = 0.2);

/// Slide k-frame windows (reference = middle) over a sequence with the given
/// stride and average the per-window reports.
TcmReport tcm_over_sequence(const FrameSequence& seq, int k, double outlier_fraction = 0.2,
                            int stride = 1);

}  // namespace depthtk::tcm

#endif  // DEPTHTK_TCM_HPP
