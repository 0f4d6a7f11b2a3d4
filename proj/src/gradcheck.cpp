#include "drasp/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace drasp {

namespace {

double scalar_value(const Var& out) {
  if (out.value().size() != 1) throw std::invalid_argument("grad_check: function must return a scalar");
  return out.value()[0];
}

GradCheckResult compare(Tensor analytic, Tensor numeric) {
  GradCheckResult result;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i];
    const double n = numeric[i];
    const double err = std::abs(a - n) / (std::abs(a) + std::abs(n) + 1e-12);
    if (err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_index = i;
    }
  }
  result.analytic = std::move(analytic);
  result.numeric = std::move(numeric);
  return result;
}

}  // namespace

GradCheckResult grad_check_detailed(const std::function<Var(const Var&)>& f, const Tensor& x, double h) {
  Var input = Var::leaf(x);
  backward(f(input));
  Tensor analytic = input.grad();

  Tensor numeric = Tensor::zeros(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = scalar_value(f(Var::constant(probe)));
    probe[i] = x[i] - h;
    const double down = scalar_value(f(Var::constant(probe)));
    probe[i] = x[i];
    numeric[i] = (up - down) / (2.0 * h);
  }
  return compare(std::move(analytic), std::move(numeric));
}

double grad_check(const std::function<Var(const Var&)>& f, const Tensor& x, double h) {
  return grad_check_detailed(f, x, h).max_relative_error;
}

GradCheckResult grad_check_leaf(const std::function<Var()>& f, Var leaf, double h) {
  if (!leaf.requires_grad() || leaf.node()->inputs.size() != 0) {
    throw std::invalid_argument("grad_check_leaf: expected a trainable leaf");
  }
  leaf.zero_grad();
  backward(f());
  Tensor analytic = leaf.grad();
  leaf.zero_grad();

  const Tensor original = leaf.value();
  Tensor numeric = Tensor::zeros(original.shape());
  for (std::size_t i = 0; i < original.size(); ++i) {
    leaf.mutable_value()[i] = original[i] + h;
    const double up = scalar_value(f());
    leaf.mutable_value()[i] = original[i] - h;
    const double down = scalar_value(f());
    leaf.mutable_value()[i] = original[i];
    numeric[i] = (up - down) / (2.0 * h);
  }
  return compare(std::move(analytic), std::move(numeric));
}

}  // namespace drasp
