#include "pgat/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "pgat/errors.hpp"

namespace pgat {

Tensor finite_difference_gradient(const ScalarFn& f, const Tensor& x, Real h) {
  if (!(h > Real(0))) throw ConfigError("finite_difference_gradient: step h must be positive");
  Tensor probe = x;
  Tensor grad = Tensor::zeros_like(x);
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const Real orig = probe[i];
    probe[i] = orig + h;
    const Real up = f(probe);
    probe[i] = orig - h;
    const Real down = f(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (Real(2) * h);
  }
  return grad;
}

Real relative_error(const Tensor& a, const Tensor& b, Real floor) {
  require_same_shape(a, b, "relative_error");
  Real scale = floor;
  for (Real v : b.data()) scale = std::max(scale, std::abs(v));
  return max_abs_diff(a, b) / scale;
}

}  // namespace pgat
