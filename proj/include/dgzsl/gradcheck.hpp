#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "dgzsl/matrix.hpp"

namespace dgzsl {

/// Deterministic objective over a list of parameter tensors. When `grads`
/// is non-null the closure must also fill it with the analytic gradient,
/// one matrix per parameter tensor.
using CheckedObjective =
    std::function<double(std::span<const Matrix> params, std::vector<Matrix>* grads)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_tensor = 0;
  std::size_t worst_entry = 0;
  std::size_t entries_checked = 0;
  bool saw_nan = false;
};

/// Compares the analytic gradient against central differences
/// (f(p+eps) - f(p-eps)) / 2eps on every parameter entry.
///
/// Relative error is |analytic - numeric| / max(|analytic|, |numeric|, 1e-4);
/// the floor keeps entries whose true gradient is zero (dead ReLU units)
/// from dividing roundoff by zero. NaNs count as an infinite error.
GradCheckReport grad_check(const CheckedObjective& objective, std::vector<Matrix> params,
                           double epsilon = 1e-5);

}  // namespace dgzsl
