#pragma once

#include <functional>

#include "pgat/tensor.hpp"

namespace pgat {

using ScalarFn = std::function<Real(const Tensor&)>;

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate.
Tensor finite_difference_gradient(const ScalarFn& f, const Tensor& x, Real h);

/// max_i |a_i - b_i| / max(max_i |b_i|, floor). Scale-relative error used by the gradient oracles.
Real relative_error(const Tensor& a, const Tensor& b, Real floor = Real(1e-8));

}  // namespace pgat
