#include "depthtk/gradcheck.hpp"

#include "depthtk/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <random>

namespace depthtk::gradcheck {

namespace {

using loss::LossKind;

double rel_error(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-12});
  return std::abs(a - b) / denom;
}

GridF random_grid(std::mt19937_64& rng, int size, double lo, double hi) {
  std::uniform_real_distribution<double> uni(lo, hi);
  GridF g(size, size);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      g(r, c) = static_cast<float>(uni(rng));
    }
  }
  return g;
}

ImageGrid random_image(std::mt19937_64& rng, int size, int channels) {
  ImageGrid img;
  for (int c = 0; c < channels; ++c) {
    img.channels.push_back(random_grid(rng, size, 0.05, 0.95));
  }
  return img;
}

/// Smooth random image: low-frequency cosine mixture, so bilinear samples
/// vary gently and L1 signs are stable under small warps.
ImageGrid smooth_random_image(std::mt19937_64& rng, int size, int channels) {
  std::uniform_real_distribution<double> phase(0.0, 6.28318530717958647692);
  std::uniform_real_distribution<double> freq(0.3, 0.9);
  ImageGrid img = ImageGrid::zeros(size, size, channels);
  for (int c = 0; c < channels; ++c) {
    const double fx = freq(rng), fy = freq(rng), px = phase(rng), py = phase(rng);
    const double fx2 = freq(rng), fy2 = freq(rng), p2 = phase(rng);
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) {
        const double v = 0.5 + 0.22 * std::cos(fx * x + px) * std::cos(fy * y + py) +
                         0.18 * std::sin(fx2 * x + fy2 * y + p2);
        img.channels[static_cast<std::size_t>(c)](y, x) =
            static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return img;
}

MaskMap random_mask(std::mt19937_64& rng, int size, double keep_prob) {
  std::bernoulli_distribution flip(keep_prob);
  MaskMap m(size, size);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      m(r, c) = flip(rng);
    }
  }
  return m;
}

DepthMap dense_depth(GridF values) {
  DepthMap d;
  d.valid = MaskMap::Constant(values.rows(), values.cols(), true);
  d.values = std::move(values);
  return d;
}

struct Problem {
  // Shared so the scalar closure stays valid when the Problem moves.
  std::shared_ptr<DepthMap> depth;
  std::function<double()> scalar;
  GridD analytic;
  MaskMap check;  // pixels safe to compare
};

Problem build_geometric(std::mt19937_64& rng, int size) {
  Problem p;
  GridF computed = random_grid(rng, size, 1.0, 3.0);
  // Keep |computed - interpolated| bounded away from the min/max tie.
  std::uniform_real_distribution<double> gap(0.10, 0.30);
  std::bernoulli_distribution flip(0.5);
  GridF interp(size, size);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      const double s = flip(rng) ? 1.0 : -1.0;
      interp(r, c) = static_cast<float>(computed(r, c) * (1.0 + s * gap(rng)));
    }
  }
  const MaskMap mask = random_mask(rng, size, 0.8);
  p.depth = std::make_shared<DepthMap>(dense_depth(interp));
  p.check = mask;
  p.scalar = [computed, mask, depth = p.depth]() {
    geom::DepthPair pair;
    pair.computed = computed;
    pair.interpolated = depth->values;
    pair.valid = MaskMap::Constant(computed.rows(), computed.cols(), true);
    const MaskMap all = MaskMap::Constant(computed.rows(), computed.cols(), true);
    return loss::geometric_loss(pair, mask, all, all).scalar;
  };
  p.analytic = loss::geometric_loss_gradient(computed, p.depth->values, mask);
  return p;
}

Problem build_reference(std::mt19937_64& rng, int size) {
  Problem p;
  GridF d_t = random_grid(rng, size, 1.0, 3.0);
  GridF d_ref(size, size);
  std::uniform_real_distribution<double> gap(0.05, 0.5);
  std::bernoulli_distribution flip(0.5);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      d_ref(r, c) = static_cast<float>(d_t(r, c) + (flip(rng) ? 1.0 : -1.0) * gap(rng));
    }
  }
  DepthMap target = dense_depth(d_t);
  p.depth = std::make_shared<DepthMap>(dense_depth(d_ref));
  p.check = MaskMap::Constant(size, size, true);
  p.scalar = [target, depth = p.depth]() { return loss::reference_loss(target, *depth).scalar; };
  p.analytic = loss::reference_loss_gradient(target, *p.depth);
  return p;
}

Problem build_motion(std::mt19937_64& rng, int size) {
  Problem p;
  GridF student = random_grid(rng, size, 1.0, 3.0);
  GridF teacher(size, size);
  std::uniform_real_distribution<double> gap(0.05, 0.9);
  std::bernoulli_distribution flip(0.5);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      teacher(r, c) = static_cast<float>(student(r, c) + (flip(rng) ? 1.0 : -1.0) * gap(rng));
    }
  }
  DepthMap teacher_map = dense_depth(teacher);
  p.depth = std::make_shared<DepthMap>(dense_depth(student));
  const MaskMap frozen = loss::motion_mask(*p.depth, teacher_map);
  p.check = MaskMap::Constant(size, size, true);
  p.scalar = [teacher_map, frozen, depth = p.depth]() {
    return loss::motion_loss(*depth, teacher_map, frozen).scalar;
  };
  p.analytic = loss::motion_loss_gradient(*p.depth, teacher_map, frozen);
  return p;
}

Problem build_smoothness(std::mt19937_64& rng, int size) {
  Problem p;
  const ImageGrid image = random_image(rng, size, 3);
  // Redraw until every forward difference of the normalized inverse depth is
  // comfortably away from its kink; deterministic given the seed.
  GridF depth_values;
  for (int attempt = 0; attempt < 256; ++attempt) {
    depth_values = random_grid(rng, size, 1.0, 2.0);
    GridD inv(size, size);
    for (int r = 0; r < size; ++r) {
      for (int c = 0; c < size; ++c) {
        inv(r, c) = 1.0 / depth_values(r, c);
      }
    }
    const GridD norm = inv / inv.mean();
    double min_diff = std::numeric_limits<double>::infinity();
    for (int r = 0; r < size; ++r) {
      for (int c = 0; c < size; ++c) {
        if (c + 1 < size) min_diff = std::min(min_diff, std::abs(norm(r, c + 1) - norm(r, c)));
        if (r + 1 < size) min_diff = std::min(min_diff, std::abs(norm(r + 1, c) - norm(r, c)));
      }
    }
    if (min_diff > 5e-3) break;
  }
  p.depth = std::make_shared<DepthMap>(dense_depth(depth_values));
  p.check = MaskMap::Constant(size, size, true);
  p.scalar = [image, depth = p.depth]() { return loss::smoothness_loss(*depth, image).scalar; };
  p.analytic = loss::smoothness_loss_gradient(*p.depth, image);
  return p;
}

Problem build_photometric_l1(std::mt19937_64& rng, int size) {
  Problem p;
  const ImageGrid target = smooth_random_image(rng, size, 3);
  const ImageGrid source = smooth_random_image(rng, size, 3);
  GridF depth_values = random_grid(rng, size, 2.0, 3.0);
  Intrinsics k;
  k.fx = k.fy = static_cast<double>(size);
  k.cx = 0.5 * (size - 1);
  k.cy = 0.5 * (size - 1);
  Pose pose;
  pose.translation = Point3(0.04, 0.03, 0.02);
  p.depth = std::make_shared<DepthMap>(dense_depth(depth_values));

  const geom::WarpResult warp = geom::warp_backward(source, *p.depth, pose, k);
  // Freeze a mask of pixels whose correspondence is strictly interior, away
  // from bilinear cell boundaries, and whose per-channel L1 signs cannot
  // flip under the probe step.
  MaskMap frozen = MaskMap::Constant(size, size, false);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      if (!warp.valid(y, x)) continue;
      const double d = p.depth->values(y, x);
      const Point3 ray((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
      const Point3 q = d * (pose.rotation * ray) + pose.translation;
      const double u = k.fx * q.x() / q.z() + k.cx;
      const double vv = k.fy * q.y() / q.z() + k.cy;
      const double fu = u - std::floor(u);
      const double fv = vv - std::floor(vv);
      bool ok = u >= 1.0 && u <= size - 2.0 && vv >= 1.0 && vv <= size - 2.0;
      ok = ok && fu > 0.08 && fu < 0.92 && fv > 0.08 && fv < 0.92;
      if (ok) {
        for (int ch = 0; ch < 3; ++ch) {
          const double diff = warp.image.channels[static_cast<std::size_t>(ch)](y, x) -
                              target.channels[static_cast<std::size_t>(ch)](y, x);
          if (std::abs(diff) < 1e-3) {
            ok = false;
            break;
          }
        }
      }
      if (ok) frozen(y, x) = true;
    }
  }
  p.check = frozen;
  // Double-precision replica of warp + channel-mean L1 over the frozen mask.
  // warp_backward narrows sampled values to float storage, which would put a
  // ~1e-7 staircase under the probe; every intermediate here stays double so
  // the finite-difference oracle is well conditioned.
  p.scalar = [target, source, pose, k, frozen, depth = p.depth]() {
    const int h = depth->height();
    const int w = depth->width();
    double acc = 0.0;
    std::size_t n = 0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!frozen(y, x)) continue;
        const double d = depth->values(y, x);
        const Point3 ray((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
        const Point3 q = d * (pose.rotation * ray) + pose.translation;
        const double u = k.fx * q.x() / q.z() + k.cx;
        const double v = k.fy * q.y() / q.z() + k.cy;
        double pix = 0.0;
        for (int ch = 0; ch < 3; ++ch) {
          const geom::PointSample s =
              geom::bilinear_at(source.channels[static_cast<std::size_t>(ch)], nullptr, u, v);
          pix += std::abs(s.value -
                          static_cast<double>(target.channels[static_cast<std::size_t>(ch)](y, x)));
        }
        acc += pix / 3.0;
        ++n;
      }
    }
    return n > 0 ? acc / static_cast<double>(n) : 0.0;
  };
  p.analytic = loss::photometric_l1_gradient(target, source, *p.depth, pose, k, frozen);
  return p;
}

}  // namespace

Report run(loss::LossKind kind, int size, std::uint64_t seed, double relative_step) {
  if (size < 3) throw InvalidInputError("gradcheck: size must be >= 3");
  if (!(relative_step > 0.0)) throw InvalidInputError("gradcheck: step must be positive");
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(kind) + 1);

  Problem problem;
  switch (kind) {
    case LossKind::geometric: problem = build_geometric(rng, size); break;
    case LossKind::reference: problem = build_reference(rng, size); break;
    case LossKind::motion: problem = build_motion(rng, size); break;
    case LossKind::smoothness: problem = build_smoothness(rng, size); break;
    case LossKind::photometric_l1: problem = build_photometric_l1(rng, size); break;
  }

  Report report;
  report.kind = kind;
  report.size = size;
  report.seed = seed;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      if (!problem.check(y, x)) {
        ++report.pixels_excluded;
        continue;
      }
      float& cell = problem.depth->values(y, x);
      const float saved = cell;
      const double step = relative_step * std::abs(static_cast<double>(saved));
      const double fd = geom::central_difference_f32(
          [&](float probe) {
            cell = probe;
            const double v = problem.scalar();
            return v;
          },
          saved, step);
      cell = saved;
      const double an = problem.analytic(y, x);
      report.max_rel_err = std::max(report.max_rel_err, rel_error(fd, an));
      report.max_abs_analytic = std::max(report.max_abs_analytic, std::abs(an));
      ++report.pixels_checked;
    }
  }
  return report;
}

}  // namespace depthtk::gradcheck
