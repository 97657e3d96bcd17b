#include "depthtk/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace depthtk::loss {

namespace {

void require_same_shape(const ImageGrid& x, const ImageGrid& y, const char* who) {
  if (!x.same_shape(y)) {
    throw InvalidInputError(std::string(who) + ": images differ in shape");
  }
  if (x.channel_count() == 0) {
    throw InvalidInputError(std::string(who) + ": images must have at least one channel");
  }
}

void require_same_shape(const DepthMap& a, const DepthMap& b, const char* who) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw InvalidInputError(std::string(who) + ": depth maps differ in shape");
  }
}

LossResult reduce_masked(GridF map, MaskMap mask) {
  LossResult out;
  double acc = 0.0;
  std::size_t n = 0;
  for (Eigen::Index r = 0; r < map.rows(); ++r) {
    for (Eigen::Index c = 0; c < map.cols(); ++c) {
      if (mask(r, c)) {
        acc += map(r, c);
        ++n;
      }
    }
  }
  out.scalar = n > 0 ? acc / static_cast<double>(n) : 0.0;
  out.map = std::move(map);
  out.mask = std::move(mask);
  return out;
}

inline double channel_mean_abs_diff(const ImageGrid& x, const ImageGrid& y, int r, int c) {
  double acc = 0.0;
  for (int ch = 0; ch < x.channel_count(); ++ch) {
    acc += std::abs(static_cast<double>(x.channels[static_cast<std::size_t>(ch)](r, c)) -
                    static_cast<double>(y.channels[static_cast<std::size_t>(ch)](r, c)));
  }
  return acc / x.channel_count();
}

}  // namespace

GridF ssim(const ImageGrid& x, const ImageGrid& y, const PhotometricConfig& cfg) {
  cfg.validate();
  require_same_shape(x, y, "ssim");
  const int w = x.width();
  const int h = x.height();
  const int half = cfg.ssim_window / 2;
  GridD acc = GridD::Zero(h, w);
  for (int ch = 0; ch < x.channel_count(); ++ch) {
    const GridF& xa = x.channels[static_cast<std::size_t>(ch)];
    const GridF& ya = y.channels[static_cast<std::size_t>(ch)];
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
        for (int dr = -half; dr <= half; ++dr) {
          const int rr = std::clamp(r + dr, 0, h - 1);  // replicate padding
          for (int dc = -half; dc <= half; ++dc) {
            const int cc = std::clamp(c + dc, 0, w - 1);
            const double xv = xa(rr, cc);
            const double yv = ya(rr, cc);
            sx += xv;
            sy += yv;
            sxx += xv * xv;
            syy += yv * yv;
            sxy += xv * yv;
          }
        }
        const double n = static_cast<double>(cfg.ssim_window) * cfg.ssim_window;
        const double mx = sx / n;
        const double my = sy / n;
        const double vx = sxx / n - mx * mx;
        const double vy = syy / n - my * my;
        const double cov = sxy / n - mx * my;
        const double num = (2.0 * mx * my + cfg.c1) * (2.0 * cov + cfg.c2);
        const double den = (mx * mx + my * my + cfg.c1) * (vx + vy + cfg.c2);
        acc(r, c) += num / den;
      }
    }
  }
  return (acc / x.channel_count()).cast<float>();
}

GridF photometric_error(const ImageGrid& x, const ImageGrid& y, const PhotometricConfig& cfg) {
  cfg.validate();
  require_same_shape(x, y, "photometric_error");
  const int w = x.width();
  const int h = x.height();
  GridD out = GridD::Zero(h, w);
  if (cfg.alpha > 0.0) {
    const GridF s = ssim(x, y, cfg);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        out(r, c) += cfg.alpha * (1.0 - static_cast<double>(s(r, c))) / 2.0;
      }
    }
  }
  if (cfg.alpha < 1.0) {
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        out(r, c) += (1.0 - cfg.alpha) * channel_mean_abs_diff(x, y, r, c);
      }
    }
  }
  return out.cast<float>();
}

MaskMap cycle_mask(const ImageGrid& i_t, const ImageGrid& i_t_s_t, const MaskMap& roundtrip_valid,
                   const PhotometricConfig& cfg, double p) {
  require_same_shape(i_t, i_t_s_t, "cycle_mask");
  if (roundtrip_valid.rows() != i_t.height() || roundtrip_valid.cols() != i_t.width()) {
    throw InvalidInputError("cycle_mask: validity mask differs in shape");
  }
  const GridF err = photometric_error(i_t, i_t_s_t, cfg);
  std::vector<double> pool;
  pool.reserve(static_cast<std::size_t>(err.size()));
  for (Eigen::Index r = 0; r < err.rows(); ++r) {
    for (Eigen::Index c = 0; c < err.cols(); ++c) {
      if (roundtrip_valid(r, c)) pool.push_back(err(r, c));
    }
  }
  if (pool.empty()) {
    throw EmptyDomainError("cycle_mask: no round-trip-valid pixels");
  }
  const double gamma = geom::percentile(pool, p);
  MaskMap mask = roundtrip_valid && (err < static_cast<float>(gamma));
  if (!mask.any()) {
    // Degenerate threshold (gamma at the minimum error, e.g. a perfect round
    // trip): keep pixels at the threshold instead of blanking the mask, so a
    // constant-error frame stays fully enabled while genuine outliers above
    // the minimum stay excluded.
    return roundtrip_valid && (err <= static_cast<float>(gamma));
  }
  return mask;
}

std::vector<MaskMap> min_mask(const std::vector<GridF>& errors_per_source) {
  if (errors_per_source.size() < 2) {
    throw InvalidInputError("min_mask: needs at least two sources");
  }
  const Eigen::Index h = errors_per_source[0].rows();
  const Eigen::Index w = errors_per_source[0].cols();
  for (const GridF& e : errors_per_source) {
    if (e.rows() != h || e.cols() != w) {
      throw InvalidInputError("min_mask: error maps differ in shape");
    }
  }
  std::vector<MaskMap> out(errors_per_source.size(), MaskMap::Constant(h, w, false));
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      std::size_t best = 0;
      for (std::size_t s = 1; s < errors_per_source.size(); ++s) {
        if (errors_per_source[s](r, c) < errors_per_source[best](r, c)) best = s;
      }
      out[best](r, c) = true;
    }
  }
  return out;
}

MaskMap auto_mask(const ImageGrid& i_t, const std::vector<ImageGrid>& sources,
                  const std::vector<ImageGrid>& warped, const std::vector<MaskMap>& warped_valid,
                  const PhotometricConfig& cfg) {
  if (sources.empty() || sources.size() != warped.size() || warped.size() != warped_valid.size()) {
    throw InvalidInputError("auto_mask: source/warped/validity lists must align and be non-empty");
  }
  std::vector<GridF> warped_err, unwarped_err;
  for (std::size_t s = 0; s < sources.size(); ++s) {
    warped_err.push_back(photometric_error(i_t, warped[s], cfg));
    unwarped_err.push_back(photometric_error(i_t, sources[s], cfg));
  }
  const int h = i_t.height();
  const int w = i_t.width();
  MaskMap mask = MaskMap::Constant(h, w, false);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double best_warped = std::numeric_limits<double>::infinity();
      bool any = false;
      double best_unwarped = std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < sources.size(); ++s) {
        if (warped_valid[s](r, c)) {
          best_warped = std::min(best_warped, static_cast<double>(warped_err[s](r, c)));
          any = true;
        }
        best_unwarped = std::min(best_unwarped, static_cast<double>(unwarped_err[s](r, c)));
      }
      mask(r, c) = any && best_warped < best_unwarped;
    }
  }
  return mask;
}

MaskMap motion_mask(const DepthMap& d, const DepthMap& d_teacher, double threshold) {
  require_same_shape(d, d_teacher, "motion_mask");
  const int h = d.height();
  const int w = d.width();
  MaskMap mask = MaskMap::Constant(h, w, false);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!d.valid(r, c) || !d_teacher.valid(r, c)) {
        throw InvalidInputError("motion_mask: both depth maps must be fully valid");
      }
      const double dv = d.values(r, c);
      const double tv = d_teacher.values(r, c);
      if (!(dv > 0.0) || !(tv > 0.0)) {
        throw InvalidInputError("motion_mask: depths must be positive");
      }
      const double rel = std::max((dv - tv) / tv, (tv - dv) / dv);
      mask(r, c) = rel < threshold;
    }
  }
  return mask;
}

LossResult motion_loss(const DepthMap& d, const DepthMap& d_teacher, const MaskMap& m_motion) {
  require_same_shape(d, d_teacher, "motion_loss");
  const int h = d.height();
  const int w = d.width();
  GridF map = GridF::Zero(h, w);
  MaskMap applied = MaskMap::Constant(h, w, false);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!m_motion(r, c)) {
        map(r, c) = std::abs(d.values(r, c) - d_teacher.values(r, c));
        applied(r, c) = true;
      }
    }
  }
  return reduce_masked(std::move(map), std::move(applied));
}

LossResult photometric_loss(const ImageGrid& i_t, const std::vector<ImageGrid>& warped,
                            const std::vector<MaskMap>& warped_valid, const MaskMap& m_motion,
                            const MaskMap& m_auto, const PhotometricConfig& cfg) {
  if (warped.empty() || warped.size() != warped_valid.size()) {
    throw InvalidInputError("photometric_loss: warped/validity lists must align and be non-empty");
  }
  std::vector<GridF> errs;
  for (const ImageGrid& wimg : warped) {
    errs.push_back(photometric_error(i_t, wimg, cfg));
  }
  const int h = i_t.height();
  const int w = i_t.width();
  GridF map = GridF::Zero(h, w);
  MaskMap mask = MaskMap::Constant(h, w, false);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double best = std::numeric_limits<double>::infinity();
      bool any = false;
      for (std::size_t s = 0; s < errs.size(); ++s) {
        if (warped_valid[s](r, c)) {
          best = std::min(best, static_cast<double>(errs[s](r, c)));
          any = true;
        }
      }
      if (any) {
        map(r, c) = static_cast<float>(best);
        mask(r, c) = m_motion(r, c) && m_auto(r, c);
      }
    }
  }
  return reduce_masked(std::move(map), std::move(mask));
}

namespace {

/// Mean-normalized inverse depth and the exp(-|grad I|) edge weights shared
/// by the smoothness loss and its gradient.
struct SmoothnessTerms {
  GridD norm_inv;   // inverse depth over its mean
  GridD weight_x;   // exp(-channel-mean |dI/dx|)
  GridD weight_y;
  double mean_inv = 0.0;
};

SmoothnessTerms smoothness_terms(const DepthMap& d, const ImageGrid& i_t) {
  if (!d.fully_valid()) {
    throw InvalidInputError("smoothness_loss: depth map must be fully valid");
  }
  if (i_t.width() != d.width() || i_t.height() != d.height()) {
    throw InvalidInputError("smoothness_loss: image and depth differ in shape");
  }
  const int h = d.height();
  const int w = d.width();
  SmoothnessTerms t;
  GridD inv(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double dv = d.values(r, c);
      if (!(dv > 0.0)) throw InvalidInputError("smoothness_loss: depths must be positive");
      inv(r, c) = 1.0 / dv;
    }
  }
  t.mean_inv = inv.mean();
  t.norm_inv = inv / t.mean_inv;
  t.weight_x = GridD::Ones(h, w);
  t.weight_y = GridD::Ones(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double gx = 0.0, gy = 0.0;
      for (int ch = 0; ch < i_t.channel_count(); ++ch) {
        const GridF& plane = i_t.channels[static_cast<std::size_t>(ch)];
        if (c + 1 < w) gx += std::abs(static_cast<double>(plane(r, c + 1)) - plane(r, c));
        if (r + 1 < h) gy += std::abs(static_cast<double>(plane(r + 1, c)) - plane(r, c));
      }
      t.weight_x(r, c) = std::exp(-gx / i_t.channel_count());
      t.weight_y(r, c) = std::exp(-gy / i_t.channel_count());
    }
  }
  return t;
}

}  // namespace

LossResult smoothness_loss(const DepthMap& d, const ImageGrid& i_t) {
  const SmoothnessTerms t = smoothness_terms(d, i_t);
  const int h = d.height();
  const int w = d.width();
  GridF map = GridF::Zero(h, w);
  // The scalar is accumulated in double before the map is narrowed so the
  // finite-difference oracle sees a smooth function of the depth entries.
  double acc = 0.0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double v = 0.0;
      if (c + 1 < w) v += std::abs(t.norm_inv(r, c + 1) - t.norm_inv(r, c)) * t.weight_x(r, c);
      if (r + 1 < h) v += std::abs(t.norm_inv(r + 1, c) - t.norm_inv(r, c)) * t.weight_y(r, c);
      map(r, c) = static_cast<float>(v);
      acc += v;
    }
  }
  LossResult out;
  out.scalar = acc / (static_cast<double>(h) * w);
  out.map = std::move(map);
  out.mask = MaskMap::Constant(h, w, true);
  return out;
}

LossResult geometric_loss(const geom::DepthPair& pair, const MaskMap& m_motion,
                          const MaskMap& m_auto, const MaskMap& m_cycle) {
  const Eigen::Index h = pair.computed.rows();
  const Eigen::Index w = pair.computed.cols();
  GridF map = GridF::Zero(h, w);
  MaskMap mask = MaskMap::Constant(h, w, false);
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      if (!pair.valid(r, c)) continue;
      const double a = pair.computed(r, c);
      const double b = pair.interpolated(r, c);
      if (!(a > 0.0) || !(b > 0.0)) continue;
      map(r, c) = static_cast<float>(1.0 - std::min(a, b) / std::max(a, b));
      mask(r, c) = m_motion(r, c) && m_auto(r, c) && m_cycle(r, c);
    }
  }
  return reduce_masked(std::move(map), std::move(mask));
}

LossResult reference_loss(const DepthMap& d_t, const DepthMap& d_ref) {
  require_same_shape(d_t, d_ref, "reference_loss");
  const int h = d_t.height();
  const int w = d_t.width();
  GridF map = GridF::Zero(h, w);
  MaskMap mask = MaskMap::Constant(h, w, false);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (d_t.valid(r, c) && d_ref.valid(r, c)) {
        map(r, c) = std::abs(d_t.values(r, c) - d_ref.values(r, c));
        mask(r, c) = true;
      }
    }
  }
  return reduce_masked(std::move(map), std::move(mask));
}

double total_loss(const LossComponents& parts, const LossWeights& w) {
  return parts.photometric + w.lambda_s * parts.smoothness + w.lambda_geo * parts.geometric +
         w.lambda_m * parts.motion + parts.reference;
}

// ---------------------------------------------------------------------------
// Gradients
// ---------------------------------------------------------------------------

LossKind loss_kind_from_name(const std::string& name) {
  if (name == "geometric") return LossKind::geometric;
  if (name == "photometric-l1") return LossKind::photometric_l1;
  if (name == "smoothness") return LossKind::smoothness;
  if (name == "motion") return LossKind::motion;
  if (name == "reference") return LossKind::reference;
  throw InvalidInputError("unknown loss '" + name +
                          "'; expected one of geometric, photometric-l1, smoothness, motion, reference");
}

std::string loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::geometric: return "geometric";
    case LossKind::photometric_l1: return "photometric-l1";
    case LossKind::smoothness: return "smoothness";
    case LossKind::motion: return "motion";
    case LossKind::reference: return "reference";
  }
  return "?";
}

GridD geometric_loss_gradient(const GridF& computed, const GridF& interpolated,
                              const MaskMap& mask) {
  const Eigen::Index h = computed.rows();
  const Eigen::Index w = computed.cols();
  GridD grad = GridD::Zero(h, w);
  std::size_t n = 0;
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      if (mask(r, c)) ++n;
    }
  }
  if (n == 0) return grad;
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      if (!mask(r, c)) continue;
      const double a = computed(r, c);
      const double b = interpolated(r, c);
      double dd = 0.0;
      if (b > a) {
        dd = a / (b * b);  // d/db of (1 - a/b)
      } else if (b < a) {
        dd = -1.0 / a;  // d/db of (1 - b/a)
      }
      grad(r, c) = dd / static_cast<double>(n);
    }
  }
  return grad;
}

GridD reference_loss_gradient(const DepthMap& d_t, const DepthMap& d_ref) {
  require_same_shape(d_t, d_ref, "reference_loss_gradient");
  const int h = d_t.height();
  const int w = d_t.width();
  GridD grad = GridD::Zero(h, w);
  std::size_t n = 0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (d_t.valid(r, c) && d_ref.valid(r, c)) ++n;
    }
  }
  if (n == 0) return grad;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!(d_t.valid(r, c) && d_ref.valid(r, c))) continue;
      const double diff = static_cast<double>(d_ref.values(r, c)) - d_t.values(r, c);
      const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      grad(r, c) = sign / static_cast<double>(n);
    }
  }
  return grad;
}

GridD motion_loss_gradient(const DepthMap& d, const DepthMap& d_teacher, const MaskMap& m_motion) {
  require_same_shape(d, d_teacher, "motion_loss_gradient");
  const int h = d.height();
  const int w = d.width();
  GridD grad = GridD::Zero(h, w);
  std::size_t n = 0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!m_motion(r, c)) ++n;
    }
  }
  if (n == 0) return grad;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (m_motion(r, c)) continue;
      const double diff = static_cast<double>(d.values(r, c)) - d_teacher.values(r, c);
      const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      grad(r, c) = sign / static_cast<double>(n);
    }
  }
  return grad;
}

GridD smoothness_loss_gradient(const DepthMap& d, const ImageGrid& i_t) {
  const SmoothnessTerms t = smoothness_terms(d, i_t);
  const int h = d.height();
  const int w = d.width();
  const double n_pix = static_cast<double>(h) * w;

  // A(q) = dL/d(norm_inv(q)) assembled from every |difference| term that
  // touches q, then chained through the mean normalization.
  GridD a = GridD::Zero(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (c + 1 < w) {
        const double diff = t.norm_inv(r, c + 1) - t.norm_inv(r, c);
        const double s = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        const double coef = s * t.weight_x(r, c) / n_pix;
        a(r, c + 1) += coef;
        a(r, c) -= coef;
      }
      if (r + 1 < h) {
        const double diff = t.norm_inv(r + 1, c) - t.norm_inv(r, c);
        const double s = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        const double coef = s * t.weight_y(r, c) / n_pix;
        a(r + 1, c) += coef;
        a(r, c) -= coef;
      }
    }
  }

  // norm_inv(q) = g(q) / m with m = mean(g); d(norm_inv(q))/d(g(k)) is
  // delta(q,k)/m - g(q)/(m^2 N).
  double a_dot_g = 0.0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      a_dot_g += a(r, c) / static_cast<double>(d.values(r, c));
    }
  }
  GridD grad(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double dv = d.values(r, c);
      const double dl_dg = a(r, c) / t.mean_inv - a_dot_g / (t.mean_inv * t.mean_inv * n_pix);
      grad(r, c) = dl_dg * (-1.0 / (dv * dv));
    }
  }
  return grad;
}

GridD photometric_l1_gradient(const ImageGrid& i_t, const ImageGrid& src, const DepthMap& tgt_depth,
                              const Pose& pose_tgt_to_src, const Intrinsics& k, const MaskMap& mask) {
  require_same_shape(i_t, src, "photometric_l1_gradient");
  const int h = tgt_depth.height();
  const int w = tgt_depth.width();
  GridD grad = GridD::Zero(h, w);
  std::size_t n = 0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (mask(r, c)) ++n;
    }
  }
  if (n == 0) return grad;
  const Eigen::Matrix3d& rot = pose_tgt_to_src.rotation;
  const Eigen::Vector3d& tr = pose_tgt_to_src.translation;
  const int channels = i_t.channel_count();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask(y, x)) continue;
      const double depth = tgt_depth.values(y, x);
      const Point3 ray((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
      const Point3 dir = rot * ray;                 // dq/dd
      const Point3 q = depth * dir + tr;
      if (!(q.z() > 0.0)) continue;
      const double zz = q.z() * q.z();
      const double du_dd = k.fx * (dir.x() * q.z() - q.x() * dir.z()) / zz;
      const double dv_dd = k.fy * (dir.y() * q.z() - q.y() * dir.z()) / zz;
      const double u = k.fx * q.x() / q.z() + k.cx;
      const double v = k.fy * q.y() / q.z() + k.cy;
      double acc = 0.0;
      for (int ch = 0; ch < channels; ++ch) {
        const geom::PointSampleGrad s =
            geom::bilinear_at_with_grad(src.channels[static_cast<std::size_t>(ch)], u, v);
        if (!s.valid) continue;
        const double diff = s.value - i_t.channels[static_cast<std::size_t>(ch)](y, x);
        const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        acc += sign * (s.du * du_dd + s.dv * dv_dd);
      }
      grad(y, x) = acc / (static_cast<double>(channels) * static_cast<double>(n));
    }
  }
  return grad;
}

}  // namespace depthtk::loss
