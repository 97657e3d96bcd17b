#include "depthtk/tcm.hpp"

#include "depthtk/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace depthtk::tcm {

double median_scale_ratio(const DepthMap& pred, const DepthMap& gt) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw InvalidInputError("median_scale: depth maps differ in shape");
  }
  std::vector<double> pred_vals, gt_vals;
  for (int y = 0; y < pred.height(); ++y) {
    for (int x = 0; x < pred.width(); ++x) {
      if (pred.valid(y, x) && gt.valid(y, x)) {
        pred_vals.push_back(pred.values(y, x));
        gt_vals.push_back(gt.values(y, x));
      }
    }
  }
  if (pred_vals.empty()) {
    throw EmptyDomainError("median_scale: no jointly valid pixels");
  }
  return geom::median(std::move(gt_vals)) / geom::median(std::move(pred_vals));
}

MedianScaleResult median_scale(const DepthMap& pred, const DepthMap& gt) {
  MedianScaleResult out;
  out.ratio = median_scale_ratio(pred, gt);
  out.scaled = pred;
  out.scaled.values *= static_cast<float>(out.ratio);
  return out;
}

std::vector<PixelTrack> align_to_reference(const FrameSequence& window, int ref_index) {
  if (window.size() < 2) {
    throw InvalidInputError("align_to_reference: window needs at least two frames");
  }
  if (ref_index < 0 || ref_index >= static_cast<int>(window.size())) {
    throw InvalidInputError("align_to_reference: reference index out of range");
  }
  const FrameSample& ref = window[static_cast<std::size_t>(ref_index)];
  const Intrinsics& k = ref.intrinsics;
  const int w = ref.gt_depth.width();
  const int h = ref.gt_depth.height();
  for (const FrameSample& f : window) {
    if (f.gt_depth.width() != w || f.gt_depth.height() != h) {
      throw InvalidInputError("align_to_reference: frames differ in resolution");
    }
  }

  // One scaling ratio for the whole window, computed on the reference frame.
  const double ratio = median_scale_ratio(ref.pred_depth, ref.gt_depth);

  // Relative poses reference -> frame f.
  std::vector<Pose> ref_to_frame;
  std::vector<Pose> frame_to_ref;
  ref_to_frame.reserve(window.size());
  for (const FrameSample& f : window) {
    const Pose rel = f.gt_pose.inverse() * ref.gt_pose;
    ref_to_frame.push_back(rel);
    frame_to_ref.push_back(rel.inverse());
  }

  std::vector<PixelTrack> tracks;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!ref.gt_depth.valid(y, x)) continue;
      PixelTrack track;
      track.ref_u = x;
      track.ref_v = y;
      for (std::size_t f = 0; f < window.size(); ++f) {
        const FrameSample& frame = window[f];
        if (static_cast<int>(f) == ref_index) {
          if (!frame.pred_depth.valid(y, x)) continue;
          Observation obs;
          obs.pred_in_ref = ratio * static_cast<double>(frame.pred_depth.values(y, x));
          obs.gt_in_ref = frame.gt_depth.values(y, x);
          track.observations.push_back(obs);
          continue;
        }
        const Point3 p_ref = geom::backproject(k, x, y, ref.gt_depth.values(y, x));
        const Point3 p_f = ref_to_frame[f] * p_ref;
        if (!(p_f.z() > 0.0)) continue;
        const double u = k.fx * p_f.x() / p_f.z() + k.cx;
        const double v = k.fy * p_f.y() / p_f.z() + k.cy;
        const geom::PointSample pred_s =
            geom::bilinear_at(frame.pred_depth.values, &frame.pred_depth.valid, u, v);
        const geom::PointSample gt_s =
            geom::bilinear_at(frame.gt_depth.values, &frame.gt_depth.valid, u, v);
        if (!pred_s.valid || !gt_s.valid || !(pred_s.value > 0.0) || !(gt_s.value > 0.0)) continue;
        // Express the sampled depths in the reference frame's coordinate:
        // back-project at the sampled location and take z after mapping back.
        const Point3 pred_pt = geom::backproject(k, u, v, ratio * pred_s.value);
        const Point3 gt_pt = geom::backproject(k, u, v, gt_s.value);
        const double pred_in_ref = (frame_to_ref[f] * pred_pt).z();
        const double gt_in_ref = (frame_to_ref[f] * gt_pt).z();
        if (!(pred_in_ref > 0.0) || !(gt_in_ref > 0.0)) continue;
        track.observations.push_back(Observation{pred_in_ref, gt_in_ref});
      }
      if (track.observations.size() >= 2) {
        tracks.push_back(std::move(track));
      }
    }
  }
  return tracks;
}

namespace {

double track_deviation(const PixelTrack& t) {
  double acc = 0.0;
  for (const Observation& o : t.observations) {
    acc += std::abs(o.pred_in_ref - o.gt_in_ref) / o.gt_in_ref;
  }
  return acc / static_cast<double>(t.observations.size());
}

}  // namespace

TcmReport tcm(const std::vector<PixelTrack>& tracks, double outlier_fraction) {
  if (tracks.empty()) throw EmptyDomainError("tcm: no tracks");
  if (outlier_fraction < 0.0 || outlier_fraction >= 1.0) {
    throw InvalidInputError("tcm: outlier fraction must lie in [0, 1)");
  }
  std::vector<std::size_t> order(tracks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<double> dev(tracks.size());
  for (std::size_t i = 0; i < tracks.size(); ++i) dev[i] = track_deviation(tracks[i]);
  std::sort(order.begin(), order.end(), [&dev](std::size_t a, std::size_t b) {
    if (dev[a] != dev[b]) return dev[a] < dev[b];
    return a < b;
  });
  const auto n_drop = static_cast<std::size_t>(
      std::floor(outlier_fraction * static_cast<double>(tracks.size()) + 1e-12));
  const std::size_t n_keep = tracks.size() - n_drop;
  if (n_keep == 0) throw EmptyDomainError("tcm: all tracks filtered out");

  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t n_obs = 0;
  int max_obs = 0;
  for (std::size_t i = 0; i < n_keep; ++i) {
    const PixelTrack& t = tracks[order[i]];
    max_obs = std::max(max_obs, static_cast<int>(t.observations.size()));
    for (const Observation& o : t.observations) {
      const double e = std::abs(o.pred_in_ref - o.gt_in_ref) / o.gt_in_ref;
      sum += e;
      sum_sq += e * e;
      ++n_obs;
    }
  }
  TcmReport report;
  report.k = max_obs;
  report.abs_err = sum / static_cast<double>(n_obs);
  report.sq_err = sum_sq / static_cast<double>(n_obs);
  report.rmse = std::sqrt(report.sq_err);
  report.n_tracks = n_keep;
  report.outlier_fraction = outlier_fraction;
  return report;
}

TcmReport tcm_over_sequence(const FrameSequence& seq, int k, double outlier_fraction, int stride) {
  if (k < 2) throw InvalidInputError("tcm: window length must be >= 2");
  if (static_cast<int>(seq.size()) < k) {
    throw InvalidInputError("tcm: sequence shorter than the window length");
  }
  if (stride < 1) throw InvalidInputError("tcm: stride must be >= 1");
  TcmReport total;
  total.k = k;
  total.outlier_fraction = outlier_fraction;
  int n_windows = 0;
  for (int start = 0; start + k <= static_cast<int>(seq.size()); start += stride) {
    // Alignment never touches images, so slice windows without copying them.
    FrameSequence window;
    window.reserve(static_cast<std::size_t>(k));
    for (int i = start; i < start + k; ++i) {
      const FrameSample& src = seq[static_cast<std::size_t>(i)];
      FrameSample lean;
      lean.pred_depth = src.pred_depth;
      lean.gt_depth = src.gt_depth;
      lean.gt_pose = src.gt_pose;
      lean.intrinsics = src.intrinsics;
      window.push_back(std::move(lean));
    }
    const std::vector<PixelTrack> tracks = align_to_reference(window, (k - 1) / 2);
    if (tracks.empty()) continue;
    const TcmReport r = tcm(tracks, outlier_fraction);
    total.abs_err += r.abs_err;
    total.sq_err += r.sq_err;
    total.rmse += r.rmse;
    total.n_tracks += r.n_tracks;
    ++n_windows;
  }
  if (n_windows == 0) throw EmptyDomainError("tcm: no window produced any track");
  total.abs_err /= n_windows;
  total.sq_err /= n_windows;
  total.rmse /= n_windows;
  return total;
}

}  // namespace depthtk::tcm
