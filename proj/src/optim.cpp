#include "pgat/optim.hpp"

#include <cmath>
#include <string>

#include "pgat/errors.hpp"

namespace pgat {

void SgdConfig::validate() const {
  if (!(lr > 0) || !std::isfinite(lr)) throw ConfigError("sgd: lr must be positive");
  if (!(momentum >= 0 && momentum < 1)) throw ConfigError("sgd: momentum must be in [0,1)");
  if (!(weight_decay >= 0)) throw ConfigError("sgd: weight_decay must be >= 0");
  if (!(gamma > 0)) throw ConfigError("sgd: gamma must be positive");
}

std::vector<std::size_t> scaled_milestones(std::size_t epochs) {
  return {(epochs * 100 + 55) / 110, (epochs * 105 + 55) / 110};
}

Sgd::Sgd(SgdConfig config, const Model& model) : config_(std::move(config)) {
  config_.validate();
  for (const auto& p : model.params()) velocity_.push_back(Tensor::zeros_like(p));
}

Sgd::Sgd(SgdConfig config, std::vector<Tensor> velocity) : config_(std::move(config)), velocity_(std::move(velocity)) {
  config_.validate();
}

Real Sgd::lr_at(std::size_t epoch) const {
  Real lr = config_.lr;
  for (std::size_t m : config_.milestones)
    if (epoch >= m) lr *= config_.gamma;
  return lr;
}

void Sgd::step(Model& model, std::span<const Tensor> grads) {
  auto params = model.params();
  if (grads.size() != params.size() || velocity_.size() != params.size()) {
    throw DimensionError("sgd: " + std::to_string(grads.size()) + " gradients for " + std::to_string(params.size()) +
                         " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(params[i], grads[i], "sgd");
    if (!grads[i].all_finite()) {
      throw NumericError("non-finite gradient for parameter " + model.param_names()[i]);
    }
  }
  const Real lr = lr_at(epoch_);
  const Real m = config_.momentum, wd = config_.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].data();
    auto v = velocity_[i].data();
    auto g = grads[i].data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      v[j] = m * v[j] + (g[j] + wd * w[j]);
      w[j] -= lr * v[j];
    }
  }
}

}  // namespace pgat
