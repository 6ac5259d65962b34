#include "pgat/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pgat/errors.hpp"
#include "pgat/ops.hpp"

namespace pgat {

Tensor Labels::one_hot() const {
  Tensor t({classes.size(), num_classes});
  for (std::size_t n = 0; n < classes.size(); ++n) {
    if (classes[n] < 0 || static_cast<std::size_t>(classes[n]) >= num_classes) {
      throw IndexError("label " + std::to_string(classes[n]) + " outside [0," + std::to_string(num_classes) + ")");
    }
    t[n * num_classes + static_cast<std::size_t>(classes[n])] = Real(1);
  }
  return t;
}

Labels Labels::subset(std::size_t begin, std::size_t end) const {
  return Labels{{classes.begin() + static_cast<std::ptrdiff_t>(begin), classes.begin() + static_cast<std::ptrdiff_t>(end)},
                num_classes};
}

void AttackConfig::validate() const {
  if (!(epsilon >= 0) || !std::isfinite(epsilon)) throw ConfigError("attack: epsilon must be >= 0");
  if (!(alpha > 0) || !std::isfinite(alpha)) throw ConfigError("attack: alpha must be > 0");
  if (steps < 1) throw ConfigError("attack: steps must be >= 1");
  if (!(input_min < input_max)) throw ConfigError("attack: input range is empty");
}

Real ClassifierObjective::loss(const Tensor& x, const Labels& y) const {
  Graph g;
  auto params = model_.bind(g, false);
  return ops::softmax_cross_entropy(model_.forward(g.input(x), params), y.one_hot()).value().item();
}

Tensor ClassifierObjective::input_gradient(const Tensor& x, const Labels& y) const {
  Graph g;
  auto params = model_.bind(g, false);
  Var xv = g.input(x, true);
  Var loss = ops::softmax_cross_entropy(model_.forward(xv, params), y.one_hot());
  g.backward(loss);
  return g.grad(xv);
}

Tensor sign(const Tensor& g) {
  Tensor s = Tensor::zeros_like(g);
  for (std::size_t i = 0; i < g.numel(); ++i) s[i] = g[i] > 0 ? Real(1) : (g[i] < 0 ? Real(-1) : Real(0));
  return s;
}

Tensor project_linf(Tensor delta, Real epsilon) {
  if (!(epsilon >= 0)) throw ConfigError("project_linf: epsilon must be >= 0");
  for (Real& v : delta.data()) v = std::clamp(v, -epsilon, epsilon);
  return delta;
}

Tensor random_init(const Shape& shape, Real epsilon, Rng& rng) {
  if (!(epsilon >= 0)) throw ConfigError("random_init: epsilon must be >= 0");
  Tensor t(shape);
  for (Real& v : t.data()) v = static_cast<Real>(rng.uniform(-epsilon, epsilon));
  // uniform(-e, e) is -e + 2e*u, which can round past e for u close to 1.
  return project_linf(std::move(t), epsilon);
}

Tensor admissible(const Tensor& x, Tensor delta, const AttackConfig& cfg) {
  require_same_shape(x, delta, "perturbation");
  const Real eps = cfg.epsilon;
  const Real lo = cfg.input_min, hi = cfg.input_max;
  constexpr Real inf = std::numeric_limits<Real>::infinity();
  for (std::size_t i = 0; i < delta.numel(); ++i) {
    Real d = std::clamp(delta[i], -eps, eps);
    const Real xi = x[i];
    // Inputs outside the valid range cannot be repaired within the ball.
    if (cfg.clamp_input && xi >= lo && xi <= hi) {
      if (xi + d > hi) {
        d = std::clamp(hi - xi, -eps, eps);
        while (xi + d > hi) d = std::nextafter(d, -inf);
      }
      if (xi + d < lo) {
        d = std::clamp(lo - xi, -eps, eps);
        while (xi + d < lo) d = std::nextafter(d, inf);
      }
    }
    delta[i] = d;
  }
  return delta;
}

Tensor fgsm_step(const AttackObjective& objective, const Tensor& x, const Labels& y, const Tensor& init,
                 const AttackConfig& cfg) {
  cfg.validate();
  if (x.shape() != init.shape()) {
    throw DimensionError("fgsm_step: x " + shape_string(x.shape()) + " vs init " + shape_string(init.shape()));
  }
  Tensor start = admissible(x, init, cfg);
  Tensor step = sign(objective.input_gradient(x + start, y));
  step *= cfg.alpha;
  return admissible(x, project_linf(start + step, cfg.epsilon), cfg);
}

Tensor initial_perturbation(const Tensor& x, const AttackConfig& cfg, Rng* rng, const Tensor* provided) {
  switch (cfg.init) {
    case InitMode::kZero: return Tensor::zeros_like(x);
    case InitMode::kRandomUniform:
      if (rng == nullptr) throw UsageError("random_uniform init needs an rng");
      return admissible(x, random_init(x.shape(), cfg.epsilon, *rng), cfg);
    case InitMode::kProvided:
      if (provided == nullptr) throw UsageError("init=provided needs an initialization tensor");
      if (provided->shape() != x.shape()) {
        throw DimensionError("provided init " + shape_string(provided->shape()) + " vs x " + shape_string(x.shape()));
      }
      return admissible(x, *provided, cfg);
  }
  throw UsageError("unknown init mode");
}

Tensor pgd_attack(const AttackObjective& objective, const Tensor& x, const Labels& y, const AttackConfig& cfg,
                  Rng* rng, const Tensor* provided) {
  cfg.validate();
  Tensor delta = initial_perturbation(x, cfg, rng, provided);
  for (int t = 0; t < cfg.steps; ++t) delta = fgsm_step(objective, x, y, delta, cfg);
  return delta;
}

}  // namespace pgat
