#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "pgat/attacks.hpp"

namespace pgat {

/// Fixed number of perturbation slots stored at 32-bit precision.
///
/// Values are rounded toward zero on store so a perturbation inside the
/// epsilon ball (and inside the valid input range) stays inside it.
class PerturbationStore {
 public:
  PerturbationStore() = default;
  PerturbationStore(std::size_t slots, Shape sample_shape);
  PerturbationStore(Shape sample_shape, std::vector<float> data);

  std::size_t slots() const { return slot_size_ ? data_.size() / slot_size_ : 0; }
  const Shape& sample_shape() const { return sample_shape_; }
  std::size_t slot_size() const { return slot_size_; }

  /// Rows for `ids`, shaped [ids.size(), sample_shape...].
  Tensor gather(std::span<const std::size_t> ids) const;
  /// Writes row i of `values` to slot ids[i]; for repeated ids the last row wins.
  void scatter(std::span<const std::size_t> ids, const Tensor& values);

  /// Replaces the whole store with `values` ([n, sample_shape...]).
  void assign(const Tensor& values);
  Tensor to_tensor() const;

  std::span<const float> raw() const { return data_; }
  Real max_abs() const;

  static float round_toward_zero(Real v);

 private:
  void check_ids(std::span<const std::size_t> ids) const;

  Shape sample_shape_;
  std::size_t slot_size_ = 0;
  std::vector<float> data_;
};

/// Output of one prior-guided round: the FGSM perturbation and the
/// initialization it was generated from.
struct RoundResult {
  Tensor adv;
  Tensor pgi;
  /// sign(grad) at x + pgi; filled by the momentum prior only.
  Tensor signed_grad;
};

/// Perturbations of the previous batch, used as the next batch's init
/// regardless of which samples it holds.
class BatchPrior {
 public:
  explicit BatchPrior(Shape sample_shape) : store_(0, std::move(sample_shape)) {}
  explicit BatchPrior(PerturbationStore store) : store_(std::move(store)) {}

  const PerturbationStore& store() const { return store_; }

  /// First batch: init follows cfg.init (zero or random uniform). A smaller
  /// batch uses the leading stored rows; a larger one pads with U(-eps, eps).
  RoundResult round(const AttackObjective& objective, const Tensor& x, const Labels& y, const AttackConfig& cfg,
                    Rng& rng);

 private:
  PerturbationStore store_;
};

/// One perturbation per training sample, carried from epoch to epoch.
class EpochPrior {
 public:
  /// Slots start as U(-epsilon, epsilon).
  EpochPrior(std::size_t samples, Shape sample_shape, Real epsilon, Rng& rng);
  explicit EpochPrior(PerturbationStore store) : store_(std::move(store)) {}

  const PerturbationStore& store() const { return store_; }

  RoundResult round(const AttackObjective& objective, const Tensor& x, const Labels& y,
                    std::span<const std::size_t> ids, const AttackConfig& cfg);

 private:
  PerturbationStore store_;
};

/// Per-sample projected perturbation eta and signed-gradient momentum g:
///   g_c   = sign(grad_x L(x + eta))
///   g'    = mu * g + g_c
///   adv   = Pi[eta + alpha * g_c]
///   eta'  = Pi[eta + alpha * sign(g')]
/// Only (eta', g') are carried forward; `adv` is used for the weight update.
class MomentumEpochPrior {
 public:
  /// eta starts as U(-epsilon, epsilon), g as zero.
  MomentumEpochPrior(std::size_t samples, Shape sample_shape, Real epsilon, Real mu, Rng& rng);
  MomentumEpochPrior(PerturbationStore eta, std::vector<double> momentum, Real mu);

  const PerturbationStore& eta() const { return eta_; }
  /// Raw (unsigned) momentum, 64-bit, slot-major.
  std::span<const double> momentum() const { return momentum_; }
  Real mu() const { return mu_; }

  RoundResult round(const AttackObjective& objective, const Tensor& x, const Labels& y,
                    std::span<const std::size_t> ids, const AttackConfig& cfg);

 private:
  PerturbationStore eta_;
  std::vector<double> momentum_;
  Real mu_;
};

using PriorState = std::variant<std::monostate, BatchPrior, EpochPrior, MomentumEpochPrior>;

}  // namespace pgat
