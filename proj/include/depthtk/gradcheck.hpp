#ifndef DEPTHTK_GRADCHECK_HPP
#define DEPTHTK_GRADCHECK_HPP

#include "depthtk/losses.hpp"
#include "depthtk/types.hpp"

#include <cstdint>

namespace depthtk::gradcheck {

struct Report {
  loss::LossKind kind = loss::LossKind::reference;
  int size = 0;
  std::uint64_t seed = 0;
  double max_rel_err = 0.0;
  double max_abs_analytic = 0.0;
  int pixels_checked = 0;
  int pixels_excluded = 0;  // too close to a kink / cell boundary
};

/// Builds deterministic random inputs for a loss, freezes its masks, and
/// compares the analytic depth gradient against central finite differences
/// computed through the production loss path. Pixels within a safety margin
/// of a non-smooth point (abs kinks, min/max ties, bilinear cell edges) are
/// excluded by construction.
Report run(loss::LossKind kind, int size, std::uint64_t seed, double relative_step = 1e-3);

}  // namespace depthtk::gradcheck

#endif  // DEPTHTK_GRADCHECK_HPP
