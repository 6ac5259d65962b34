#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pgat/attacks.hpp"
#include "pgat/checkpoint.hpp"
#include "pgat/data.hpp"
#include "pgat/model.hpp"
#include "pgat/optim.hpp"
#include "pgat/priors.hpp"

namespace pgat {

enum class Variant { kFgsmAt, kFgsmRs, kPgdAt, kFgsmBp, kFgsmEp, kFgsmMep };

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);

/// What the regularizer compares: raw logits or softmax probabilities.
enum class RegDistance { kLogits, kProbabilities };

/// Which perturbation the regularizer pulls toward. kAdversarial replaces the
/// prior-guided init by the adversarial perturbation itself, which zeroes the
/// penalty; it exists to check that the penalty path is otherwise inert.
enum class RegTarget { kPrior, kAdversarial };

struct TrainConfig {
  Variant variant = Variant::kFgsmMep;
  int pgd_steps = 10;
  InitMode pgd_init = InitMode::kRandomUniform;
  /// Init of the first batch for the batch prior.
  InitMode bp_first_init = InitMode::kRandomUniform;

  bool use_regularizer = false;
  Real lambda = Real(10);
  RegDistance reg_distance = RegDistance::kLogits;
  RegTarget reg_target = RegTarget::kPrior;

  Real epsilon = Real(8.0 / 255.0);
  /// Training attack step; unset means the variant default (1.25 eps for
  /// fgsm_rs, eps otherwise; pgd_at uses eps/4).
  std::optional<Real> alpha;
  Real mu = Real(0.3);

  std::size_t epochs = 30;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;

  SgdConfig sgd;
  /// Unset means scaled_milestones(epochs).
  std::optional<std::vector<std::size_t>> milestones;

  bool clamp_input = true;
  bool augment = false;
  std::size_t augment_pad = 4;

  AttackConfig eval_attack{Real(8.0 / 255.0), Real(2.0 / 255.0), 10, InitMode::kRandomUniform, true};
  /// Evaluate on the first n test samples (0 = all).
  std::size_t eval_samples = 0;
  std::size_t eval_batch_size = 250;

  Real co_low = Real(0.02);
  Real co_high = Real(0.10);

  Real attack_alpha() const;
  AttackConfig train_attack() const;
  SgdConfig sgd_config() const;
  void validate() const;
};

struct RunRecord {
  std::size_t epoch = 0;
  Real clean_acc = 0;
  Real robust_acc_pgd10 = 0;
  /// Fraction of training AEs misclassified among samples the model classified
  /// correctly before the attack.
  Real asr_train = 0;
  /// Fraction of all training AEs misclassified.
  Real asr_train_all = 0;
  Real mean_delta_l2 = 0;
  Real loss = 0;
  Real lr = 0;
  std::int64_t wall_ms = 0;
};

struct LossTerms {
  Var loss;
  Var adv_logits;
};

/// CE(f(x+adv), y) + lambda * mean_n ||f(x+adv)_n - f(x+pgi)_n||^2, with both
/// branches differentiable. lambda == 0 skips the second branch.
LossTerms regularized_loss(const Model& model, std::span<const Var> params, const Tensor& x, const Labels& y,
                           const Tensor& adv, const Tensor& pgi, Real lambda,
                           RegDistance distance = RegDistance::kLogits);

/// Prior buffers for the configured variant (monostate for the baselines).
PriorState make_prior(const TrainConfig& cfg, std::size_t samples, const Shape& sample_shape);

/// One pass over `train` in the (seed, epoch) order. Fills the training fields
/// of the record; clean/robust accuracy are left for evaluate().
RunRecord train_epoch(Model& model, const Dataset& train, const TrainConfig& cfg, PriorState& priors, Sgd& optim,
                      std::size_t epoch);

struct EvalResult {
  Real clean_acc = 0;
  Real robust_acc = 0;
  std::size_t samples = 0;
};

/// Clean accuracy and accuracy under pgd_attack (init taken from `attack`).
EvalResult evaluate(const Model& model, const Dataset& data, const AttackConfig& attack, std::uint64_t seed,
                    std::size_t batch_size = 250);

/// First epoch whose robust accuracy drops below `low` after some earlier epoch exceeded `high`.
std::optional<std::size_t> detect_catastrophic_overfitting(std::span<const RunRecord> history, Real low = Real(0.02),
                                                           Real high = Real(0.10));

struct CheckpointChoice {
  std::size_t best = 0;
  std::size_t last = 0;
};

/// best = argmax robust accuracy (earliest on ties), last = final epoch.
CheckpointChoice checkpoint_policy(std::span<const RunRecord> history);

/// Full training loop: per epoch train_epoch + evaluate on the test set.
class Trainer {
 public:
  Trainer(TrainConfig cfg, Model model, const Dataset& train, const Dataset& test);
  /// Resumes from a checkpoint taken at an epoch boundary.
  Trainer(TrainConfig cfg, Checkpoint ckpt, const Dataset& train, const Dataset& test);

  /// Runs the next epoch; false once cfg.epochs have been completed.
  bool has_next() const { return epoch_ < cfg_.epochs; }
  RunRecord run_epoch();

  const Model& model() const { return model_; }
  const PriorState& priors() const { return priors_; }
  const std::vector<RunRecord>& history() const { return history_; }
  std::size_t epoch() const { return epoch_; }
  const TrainConfig& config() const { return cfg_; }

  Checkpoint checkpoint() const;

 private:
  TrainConfig cfg_;
  Model model_;
  Sgd optim_;
  PriorState priors_;
  const Dataset& train_;
  Dataset eval_;
  std::vector<RunRecord> history_;
  std::size_t epoch_ = 0;
};

}  // namespace pgat
