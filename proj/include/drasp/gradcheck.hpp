#pragma once

#include <functional>

#include "drasp/autograd.hpp"

namespace drasp {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  Tensor analytic;
  Tensor numeric;
};

/// Compares the reverse-mode gradient of a scalar function against central
/// differences. Per coordinate the error is
///   |analytic - numeric| / (|analytic| + |numeric| + 1e-12)
/// and the maximum over coordinates is reported.
GradCheckResult grad_check_detailed(const std::function<Var(const Var&)>& f, const Tensor& x, double h = 1e-5);

double grad_check(const std::function<Var(const Var&)>& f, const Tensor& x, double h = 1e-5);

/// Same comparison for an existing leaf that `f` closes over. The leaf is
/// perturbed in place and restored before returning.
GradCheckResult grad_check_leaf(const std::function<Var()>& f, Var leaf, double h = 1e-5);

}  // namespace drasp
