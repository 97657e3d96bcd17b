#include "depthtk/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace depthtk::geom {

Point3 backproject(const Intrinsics& k, double u, double v, double depth) {
  if (!(depth > 0.0) || !std::isfinite(depth)) {
    throw InvalidInputError("backproject: depth must be positive and finite");
  }
  if (!std::isfinite(u) || !std::isfinite(v)) {
    throw InvalidInputError("backproject: pixel coordinates must be finite");
  }
  return Point3((u * depth - k.cx * depth) / k.fx, (v * depth - k.cy * depth) / k.fy, depth);
}

PixelDepth project(const Intrinsics& k, const Point3& p) {
  if (!(p.z() > 0.0)) {
    throw BehindCameraError("project: point has non-positive depth");
  }
  PixelDepth out;
  out.u = k.fx * p.x() / p.z() + k.cx;
  out.v = k.fy * p.y() / p.z() + k.cy;
  out.depth = p.z();
  return out;
}

Point3 transform(const Pose& pose, const Point3& p) { return pose * p; }

namespace {

struct Stencil {
  int x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  double ax = 0.0, ay = 0.0;  // fractional weights toward x1 / y1
  bool in_bounds = false;
};

inline Stencil make_stencil(double u, double v, int width, int height) {
  Stencil s;
  if (!std::isfinite(u) || !std::isfinite(v)) return s;
  const double fu = std::floor(u);
  const double fv = std::floor(v);
  s.x0 = static_cast<int>(fu);
  s.y0 = static_cast<int>(fv);
  s.ax = u - fu;
  s.ay = v - fv;
  s.x1 = (s.ax == 0.0) ? s.x0 : s.x0 + 1;
  s.y1 = (s.ay == 0.0) ? s.y0 : s.y0 + 1;
  s.in_bounds = s.x0 >= 0 && s.y0 >= 0 && s.x1 < width && s.y1 < height;
  return s;
}

inline double lerp2(const GridF& g, const Stencil& s) {
  const double top = (1.0 - s.ax) * g(s.y0, s.x0) + s.ax * g(s.y0, s.x1);
  const double bot = (1.0 - s.ax) * g(s.y1, s.x0) + s.ax * g(s.y1, s.x1);
  return (1.0 - s.ay) * top + s.ay * bot;
}

inline bool stencil_valid(const MaskMap& valid, const Stencil& s) {
  return valid(s.y0, s.x0) && valid(s.y0, s.x1) && valid(s.y1, s.x0) && valid(s.y1, s.x1);
}

}  // namespace

PointSample bilinear_at(const GridF& grid, const MaskMap* grid_valid, double u, double v) {
  PointSample out;
  const Stencil s = make_stencil(u, v, static_cast<int>(grid.cols()), static_cast<int>(grid.rows()));
  if (!s.in_bounds) return out;
  if (grid_valid != nullptr && !stencil_valid(*grid_valid, s)) return out;
  out.value = lerp2(grid, s);
  out.valid = true;
  return out;
}

PointSampleGrad bilinear_at_with_grad(const GridF& grid, double u, double v) {
  PointSampleGrad out;
  const Stencil s = make_stencil(u, v, static_cast<int>(grid.cols()), static_cast<int>(grid.rows()));
  if (!s.in_bounds) return out;
  const double g00 = grid(s.y0, s.x0);
  const double g01 = grid(s.y0, s.x1);
  const double g10 = grid(s.y1, s.x0);
  const double g11 = grid(s.y1, s.x1);
  out.value = (1.0 - s.ay) * ((1.0 - s.ax) * g00 + s.ax * g01) +
              s.ay * ((1.0 - s.ax) * g10 + s.ax * g11);
  out.du = (1.0 - s.ay) * (g01 - g00) + s.ay * (g11 - g10);
  out.dv = (1.0 - s.ax) * (g10 - g00) + s.ax * (g11 - g01);
  out.valid = true;
  return out;
}

SampledGrid bilinear_sample(const GridF& grid, const MaskMap* grid_valid, const GridD& u,
                            const GridD& v) {
  if (u.rows() != v.rows() || u.cols() != v.cols()) {
    throw InvalidInputError("bilinear_sample: u and v coordinate grids differ in shape");
  }
  SampledGrid out;
  out.values = GridF::Zero(u.rows(), u.cols());
  out.valid = MaskMap::Constant(u.rows(), u.cols(), false);
  for (Eigen::Index r = 0; r < u.rows(); ++r) {
    for (Eigen::Index c = 0; c < u.cols(); ++c) {
      const PointSample s = bilinear_at(grid, grid_valid, u(r, c), v(r, c));
      if (s.valid) {
        out.values(r, c) = static_cast<float>(s.value);
        out.valid(r, c) = true;
      }
    }
  }
  return out;
}

SampledImage bilinear_sample(const ImageGrid& image, const GridD& u, const GridD& v) {
  SampledImage out;
  out.values = ImageGrid::zeros(static_cast<int>(u.rows()), static_cast<int>(u.cols()),
                                image.channel_count());
  out.valid = MaskMap::Constant(u.rows(), u.cols(), true);
  for (int ch = 0; ch < image.channel_count(); ++ch) {
    SampledGrid plane = bilinear_sample(image.channels[static_cast<std::size_t>(ch)], nullptr, u, v);
    out.values.channels[static_cast<std::size_t>(ch)] = plane.values;
    out.valid = out.valid && plane.valid;
  }
  if (image.channel_count() == 0) {
    out.valid.setConstant(false);
  }
  return out;
}

SampledGrid bilinear_sample(const DepthMap& depth, const GridD& u, const GridD& v) {
  SampledGrid out = bilinear_sample(depth.values, &depth.valid, u, v);
  out.valid = out.valid && (out.values > 0.0f);
  return out;
}

namespace {

/// Shared correspondence pass: project every target pixel into the source
/// view. Writes pixel coordinates and source-frame depth; flags pixels whose
/// target depth is invalid or whose point lands behind the source camera.
void correspondence_grids(const DepthMap& tgt_depth, const Pose& pose_tgt_to_src,
                          const Intrinsics& k, GridD& u, GridD& v, GridD& src_z, MaskMap& front) {
  const int w = tgt_depth.width();
  const int h = tgt_depth.height();
  u = GridD::Constant(h, w, -1.0);
  v = GridD::Constant(h, w, -1.0);
  src_z = GridD::Zero(h, w);
  front = MaskMap::Constant(h, w, false);
  const Eigen::Matrix3d& rot = pose_tgt_to_src.rotation;
  const Eigen::Vector3d& t = pose_tgt_to_src.translation;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!tgt_depth.valid(y, x)) continue;
      const double d = tgt_depth.values(y, x);
      const Point3 ray((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
      const Point3 q = rot * (d * ray) + t;
      if (!(q.z() > 0.0)) continue;
      u(y, x) = k.fx * q.x() / q.z() + k.cx;
      v(y, x) = k.fy * q.y() / q.z() + k.cy;
      src_z(y, x) = q.z();
      front(y, x) = true;
    }
  }
}

}  // namespace

WarpResult warp_backward(const ImageGrid& src, const DepthMap& tgt_depth,
                         const Pose& pose_tgt_to_src, const Intrinsics& k) {
  GridD u, v, src_z;
  MaskMap front;
  correspondence_grids(tgt_depth, pose_tgt_to_src, k, u, v, src_z, front);
  SampledImage sampled = bilinear_sample(src, u, v);
  WarpResult out;
  out.image = std::move(sampled.values);
  out.valid = front && sampled.valid;
  for (auto& plane : out.image.channels) {
    plane = out.valid.select(plane, GridF::Zero(plane.rows(), plane.cols()));
  }
  return out;
}

DepthPair depth_consistency_pair(const DepthMap& tgt_depth, const DepthMap& src_depth,
                                 const Pose& pose_tgt_to_src, const Intrinsics& k) {
  if (tgt_depth.width() != src_depth.width() || tgt_depth.height() != src_depth.height()) {
    throw InvalidInputError("depth_consistency_pair: depth maps differ in resolution");
  }
  GridD u, v, src_z;
  MaskMap front;
  correspondence_grids(tgt_depth, pose_tgt_to_src, k, u, v, src_z, front);
  SampledGrid sampled = bilinear_sample(src_depth, u, v);
  DepthPair out;
  out.computed = src_z.cast<float>();
  out.interpolated = sampled.values;
  out.valid = front && sampled.valid;
  out.computed = out.valid.select(out.computed, GridF::Zero(out.computed.rows(), out.computed.cols()));
  out.interpolated =
      out.valid.select(out.interpolated, GridF::Zero(out.interpolated.rows(), out.interpolated.cols()));
  return out;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) {
    throw InvalidInputError("percentile: empty value list");
  }
  if (!(p > 0.0) || p > 1.0) {
    throw InvalidInputError("percentile: p must lie in (0, 1]");
  }
  const auto n = static_cast<double>(values.size());
  auto idx = static_cast<std::ptrdiff_t>(std::ceil(p * n)) - 1;
  idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(values.size()) - 1);
  std::nth_element(values.begin(), values.begin() + idx, values.end());
  return values[static_cast<std::size_t>(idx)];
}

double median(std::vector<double> values) { return percentile(std::move(values), 0.5); }

double central_difference(const std::function<double(double)>& f, double x, double step) {
  if (!(step > 0.0)) {
    throw InvalidInputError("central_difference: step must be positive");
  }
  return (f(x + step) - f(x - step)) / (2.0 * step);
}

double central_difference_f32(const std::function<double(float)>& f, float x, double step) {
  if (!(step > 0.0)) {
    throw InvalidInputError("central_difference_f32: step must be positive");
  }
  const float hi = static_cast<float>(static_cast<double>(x) + step);
  const float lo = static_cast<float>(static_cast<double>(x) - step);
  const double spacing = static_cast<double>(hi) - static_cast<double>(lo);
  if (spacing <= 0.0) {
    throw InvalidInputError("central_difference_f32: step vanished under float rounding");
  }
  return (f(hi) - f(lo)) / spacing;
}

GridF downsample_mean(const GridF& grid, int factor) {
  if (factor < 1) throw InvalidInputError("downsample_mean: factor must be >= 1");
  const int oh = static_cast<int>(grid.rows()) / factor;
  const int ow = static_cast<int>(grid.cols()) / factor;
  if (oh == 0 || ow == 0) throw InvalidInputError("downsample_mean: grid smaller than factor");
  GridF out(oh, ow);
  const double inv = 1.0 / (static_cast<double>(factor) * factor);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int dy = 0; dy < factor; ++dy) {
        for (int dx = 0; dx < factor; ++dx) {
          acc += grid(y * factor + dy, x * factor + dx);
        }
      }
      out(y, x) = static_cast<float>(acc * inv);
    }
  }
  return out;
}

ImageGrid downsample_mean(const ImageGrid& image, int factor) {
  ImageGrid out;
  out.channels.reserve(image.channels.size());
  for (const auto& plane : image.channels) {
    out.channels.push_back(downsample_mean(plane, factor));
  }
  return out;
}

DepthMap downsample_mean(const DepthMap& depth, int factor) {
  if (!depth.fully_valid()) {
    throw InvalidInputError("downsample_mean: depth map must be dense");
  }
  DepthMap out;
  out.values = downsample_mean(depth.values, factor);
  out.valid = MaskMap::Constant(out.values.rows(), out.values.cols(), true);
  return out;
}

namespace {

MaskMap morph(const MaskMap& mask, int radius, bool erode_mode) {
  if (radius < 0) throw InvalidInputError("morphology: radius must be >= 0");
  const int h = static_cast<int>(mask.rows());
  const int w = static_cast<int>(mask.cols());
  MaskMap out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool acc = erode_mode;
      for (int dy = -radius; dy <= radius && acc == erode_mode; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          const int yy = y + dy;
          const int xx = x + dx;
          // Out-of-bounds neighbors count as false.
          const bool v = yy >= 0 && yy < h && xx >= 0 && xx < w && mask(yy, xx);
          if (erode_mode && !v) {
            acc = false;
            break;
          }
          if (!erode_mode && v) {
            acc = true;
            break;
          }
        }
      }
      out(y, x) = acc;
    }
  }
  return out;
}

}  // namespace

MaskMap erode(const MaskMap& mask, int radius) { return morph(mask, radius, true); }

MaskMap dilate(const MaskMap& mask, int radius) { return morph(mask, radius, false); }

}  // namespace depthtk::geom
