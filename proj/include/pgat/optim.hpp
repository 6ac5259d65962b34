#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pgat/model.hpp"

namespace pgat {

struct SgdConfig {
  Real lr = Real(0.1);
  Real momentum = Real(0.9);
  Real weight_decay = Real(5e-4);
  /// Multiplier applied at each milestone.
  Real gamma = Real(0.1);
  /// 0-based epochs at which the multiplier kicks in.
  std::vector<std::size_t> milestones;

  void validate() const;
};

/// Milestones at 100/110 and 105/110 of `epochs`, rounded to the nearest epoch.
/// For 110 epochs this is {100, 105}.
std::vector<std::size_t> scaled_milestones(std::size_t epochs);

/// SGD with heavy-ball momentum and L2 weight decay on every parameter:
///   v <- m*v + (g + wd*w);  w <- w - lr*v
class Sgd {
 public:
  Sgd(SgdConfig config, const Model& model);
  Sgd(SgdConfig config, std::vector<Tensor> velocity);

  const SgdConfig& config() const { return config_; }

  /// Learning rate in effect during 0-based `epoch`.
  Real lr_at(std::size_t epoch) const;
  void set_epoch(std::size_t epoch) { epoch_ = epoch; }
  std::size_t epoch() const { return epoch_; }

  /// Throws NumericError naming the parameter if any gradient is NaN/Inf.
  void step(Model& model, std::span<const Tensor> grads);

  const std::vector<Tensor>& velocity() const { return velocity_; }

 private:
  SgdConfig config_;
  std::vector<Tensor> velocity_;
  std::size_t epoch_ = 0;
};

}  // namespace pgat
