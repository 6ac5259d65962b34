#include "pgat/priors.hpp"

#include <algorithm>
#include <cmath>

#include "pgat/errors.hpp"

namespace pgat {

PerturbationStore::PerturbationStore(std::size_t slots, Shape sample_shape)
    : sample_shape_(std::move(sample_shape)), slot_size_(shape_numel(sample_shape_)), data_(slots * slot_size_, 0.0f) {}

PerturbationStore::PerturbationStore(Shape sample_shape, std::vector<float> data)
    : sample_shape_(std::move(sample_shape)), slot_size_(shape_numel(sample_shape_)), data_(std::move(data)) {
  if (slot_size_ == 0 || data_.size() % slot_size_ != 0) {
    throw DimensionError("perturbation store: " + std::to_string(data_.size()) + " values for sample shape " +
                         shape_string(sample_shape_));
  }
}

float PerturbationStore::round_toward_zero(Real v) {
  float f = static_cast<float>(v);
  if (std::abs(static_cast<Real>(f)) > std::abs(v)) f = std::nextafter(f, 0.0f);
  return f;
}

void PerturbationStore::check_ids(std::span<const std::size_t> ids) const {
  const std::size_t n = slots();
  for (std::size_t id : ids) {
    if (id >= n) throw IndexError("sample id " + std::to_string(id) + " outside buffer of " + std::to_string(n));
  }
}

Tensor PerturbationStore::gather(std::span<const std::size_t> ids) const {
  check_ids(ids);
  Shape s = sample_shape_;
  s.insert(s.begin(), ids.size());
  Tensor out(std::move(s));
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const float* src = data_.data() + ids[r] * slot_size_;
    Real* dst = out.data().data() + r * slot_size_;
    for (std::size_t j = 0; j < slot_size_; ++j) dst[j] = static_cast<Real>(src[j]);
  }
  return out;
}

void PerturbationStore::scatter(std::span<const std::size_t> ids, const Tensor& values) {
  check_ids(ids);
  if (values.rank() == 0 || values.dim(0) != ids.size() || values.sample_size() != slot_size_) {
    throw DimensionError("perturbation store: values " + shape_string(values.shape()) + " for " +
                         std::to_string(ids.size()) + " ids of shape " + shape_string(sample_shape_));
  }
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const Real* src = values.data().data() + r * slot_size_;
    float* dst = data_.data() + ids[r] * slot_size_;
    for (std::size_t j = 0; j < slot_size_; ++j) dst[j] = round_toward_zero(src[j]);
  }
}

void PerturbationStore::assign(const Tensor& values) {
  if (values.rank() == 0 || values.sample_size() != slot_size_) {
    throw DimensionError("perturbation store: cannot assign " + shape_string(values.shape()) + " to slots of " +
                         shape_string(sample_shape_));
  }
  data_.resize(values.numel());
  for (std::size_t i = 0; i < values.numel(); ++i) data_[i] = round_toward_zero(values[i]);
}

Tensor PerturbationStore::to_tensor() const {
  Shape s = sample_shape_;
  s.insert(s.begin(), slots());
  std::vector<Real> v(data_.begin(), data_.end());
  return Tensor(std::move(s), std::move(v));
}

Real PerturbationStore::max_abs() const {
  Real m = 0;
  for (float v : data_) m = std::max(m, static_cast<Real>(std::abs(v)));
  return m;
}

namespace {

void check_batch(const Tensor& x, const Labels& y, std::size_t ids) {
  if (x.rank() == 0 || x.dim(0) != y.size() || x.dim(0) != ids) {
    throw DimensionError("prior round: batch " + shape_string(x.shape()) + " with " + std::to_string(y.size()) +
                         " labels and " + std::to_string(ids) + " ids");
  }
}

}  // namespace

RoundResult BatchPrior::round(const AttackObjective& objective, const Tensor& x, const Labels& y,
                              const AttackConfig& cfg, Rng& rng) {
  cfg.validate();
  check_batch(x, y, x.rank() ? x.dim(0) : 0);
  if (x.sample_size() != store_.slot_size()) {
    throw DimensionError("batch prior: samples " + shape_string(x.shape()) + " vs stored " +
                         shape_string(store_.sample_shape()));
  }
  const std::size_t batch = x.dim(0);
  const std::size_t stored = store_.slots();

  Tensor init;
  if (stored == 0) {
    AttackConfig first = cfg;
    if (first.init == InitMode::kProvided) first.init = InitMode::kZero;
    init = initial_perturbation(x, first, &rng, nullptr);
  } else {
    init = store_.to_tensor();
    if (stored > batch) {
      init = init.slice_rows(0, batch);
    } else if (stored < batch) {
      Shape pad_shape = x.shape();
      pad_shape[0] = batch - stored;
      Tensor pad = random_init(pad_shape, cfg.epsilon, rng);
      std::vector<Real> joined(init.data().begin(), init.data().end());
      joined.insert(joined.end(), pad.data().begin(), pad.data().end());
      init = Tensor(x.shape(), std::move(joined));
    }
    init = init.reshaped(x.shape());
  }

  RoundResult r;
  r.pgi = admissible(x, std::move(init), cfg);
  r.adv = fgsm_step(objective, x, y, r.pgi, cfg);
  store_.assign(r.adv);
  return r;
}

EpochPrior::EpochPrior(std::size_t samples, Shape sample_shape, Real epsilon, Rng& rng)
    : store_(samples, sample_shape) {
  Shape full = sample_shape;
  full.insert(full.begin(), samples);
  store_.assign(random_init(full, epsilon, rng));
}

RoundResult EpochPrior::round(const AttackObjective& objective, const Tensor& x, const Labels& y,
                              std::span<const std::size_t> ids, const AttackConfig& cfg) {
  cfg.validate();
  check_batch(x, y, ids.size());
  RoundResult r;
  r.pgi = admissible(x, store_.gather(ids).reshaped(x.shape()), cfg);
  r.adv = fgsm_step(objective, x, y, r.pgi, cfg);
  store_.scatter(ids, r.adv);
  return r;
}

MomentumEpochPrior::MomentumEpochPrior(std::size_t samples, Shape sample_shape, Real epsilon, Real mu, Rng& rng)
    : eta_(samples, sample_shape), momentum_(samples * shape_numel(sample_shape), 0.0), mu_(mu) {
  if (!(mu >= 0 && mu < 1)) throw ConfigError("momentum prior: mu must be in [0,1)");
  Shape full = sample_shape;
  full.insert(full.begin(), samples);
  eta_.assign(random_init(full, epsilon, rng));
}

MomentumEpochPrior::MomentumEpochPrior(PerturbationStore eta, std::vector<double> momentum, Real mu)
    : eta_(std::move(eta)), momentum_(std::move(momentum)), mu_(mu) {
  if (!(mu >= 0 && mu < 1)) throw ConfigError("momentum prior: mu must be in [0,1)");
  if (momentum_.size() != eta_.slots() * eta_.slot_size()) {
    throw DimensionError("momentum prior: momentum size does not match eta buffer");
  }
}

RoundResult MomentumEpochPrior::round(const AttackObjective& objective, const Tensor& x, const Labels& y,
                                      std::span<const std::size_t> ids, const AttackConfig& cfg) {
  cfg.validate();
  check_batch(x, y, ids.size());
  const std::size_t d = eta_.slot_size();
  if (x.sample_size() != d) {
    throw DimensionError("momentum prior: samples " + shape_string(x.shape()) + " vs stored " +
                         shape_string(eta_.sample_shape()));
  }

  RoundResult r;
  r.pgi = admissible(x, eta_.gather(ids).reshaped(x.shape()), cfg);
  r.signed_grad = sign(objective.input_gradient(x + r.pgi, y));

  Tensor adv = r.pgi;
  Tensor next_eta = r.pgi;
  for (std::size_t n = 0; n < ids.size(); ++n) {
    double* g = momentum_.data() + ids[n] * d;
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t i = n * d + j;
      const Real gc = r.signed_grad[i];
      g[j] = static_cast<double>(mu_) * g[j] + static_cast<double>(gc);
      const Real dir = g[j] > 0 ? Real(1) : (g[j] < 0 ? Real(-1) : Real(0));
      adv[i] += cfg.alpha * gc;
      next_eta[i] += cfg.alpha * dir;
    }
  }
  r.adv = admissible(x, project_linf(std::move(adv), cfg.epsilon), cfg);
  eta_.scatter(ids, admissible(x, project_linf(std::move(next_eta), cfg.epsilon), cfg));
  return r;
}

}  // namespace pgat
