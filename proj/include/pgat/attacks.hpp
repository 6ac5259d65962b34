#pragma once

#include <vector>

#include "pgat/model.hpp"
#include "pgat/rng.hpp"
#include "pgat/tensor.hpp"

namespace pgat {

/// Class labels for a batch. Converted to one-hot rows for the loss.
struct Labels {
  std::vector<int> classes;
  std::size_t num_classes = 0;

  std::size_t size() const { return classes.size(); }
  Tensor one_hot() const;
  Labels subset(std::size_t begin, std::size_t end) const;
};

enum class InitMode { kZero, kRandomUniform, kProvided };

/// L-inf attack hyper-parameters. epsilon and alpha are in input units ([0,1] pixels).
struct AttackConfig {
  Real epsilon = Real(8.0 / 255.0);
  Real alpha = Real(2.0 / 255.0);
  int steps = 1;
  InitMode init = InitMode::kZero;
  bool clamp_input = false;
  Real input_min = Real(0);
  Real input_max = Real(1);

  void validate() const;
};

/// The loss an attack ascends. Implementations must not mutate any state.
class AttackObjective {
 public:
  virtual ~AttackObjective() = default;
  virtual Real loss(const Tensor& x, const Labels& y) const = 0;
  virtual Tensor input_gradient(const Tensor& x, const Labels& y) const = 0;
};

/// Mean softmax cross-entropy of a classifier.
class ClassifierObjective final : public AttackObjective {
 public:
  explicit ClassifierObjective(const Model& model) : model_(model) {}
  Real loss(const Tensor& x, const Labels& y) const override;
  Tensor input_gradient(const Tensor& x, const Labels& y) const override;

 private:
  const Model& model_;
};

/// Elementwise sign with sign(0) = 0.
Tensor sign(const Tensor& g);

/// Elementwise clamp to [-epsilon, epsilon].
Tensor project_linf(Tensor delta, Real epsilon);

/// iid U(-epsilon, epsilon).
Tensor random_init(const Shape& shape, Real epsilon, Rng& rng);

/// Makes delta admissible: |delta| <= epsilon and, with clamp_input, x + delta
/// within [input_min, input_max] when evaluated in floating point.
Tensor admissible(const Tensor& x, Tensor delta, const AttackConfig& cfg);

/// One signed-gradient step from `init`:
///   Pi[init + alpha * sign(grad_x L(x + init, y))]
/// The init is made admissible first, so it is what the gradient is evaluated at.
Tensor fgsm_step(const AttackObjective& objective, const Tensor& x, const Labels& y, const Tensor& init,
                 const AttackConfig& cfg);

/// cfg.steps iterations of fgsm_step starting from cfg.init. `rng` is needed for
/// kRandomUniform and `provided` for kProvided.
Tensor pgd_attack(const AttackObjective& objective, const Tensor& x, const Labels& y, const AttackConfig& cfg,
                  Rng* rng = nullptr, const Tensor* provided = nullptr);

/// Starting perturbation for cfg.init (admissible).
Tensor initial_perturbation(const Tensor& x, const AttackConfig& cfg, Rng* rng, const Tensor* provided);

}  // namespace pgat
