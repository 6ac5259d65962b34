#include "pgat/trainer.hpp"

#include <chrono>
#include <cmath>

#include "pgat/errors.hpp"
#include "pgat/ops.hpp"

namespace pgat {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kFgsmAt: return "fgsm_at";
    case Variant::kFgsmRs: return "fgsm_rs";
    case Variant::kPgdAt: return "pgd_at";
    case Variant::kFgsmBp: return "fgsm_bp";
    case Variant::kFgsmEp: return "fgsm_ep";
    case Variant::kFgsmMep: return "fgsm_mep";
  }
  throw ConfigError("unknown variant");
}

Variant parse_variant(const std::string& name) {
  for (Variant v : {Variant::kFgsmAt, Variant::kFgsmRs, Variant::kPgdAt, Variant::kFgsmBp, Variant::kFgsmEp,
                    Variant::kFgsmMep}) {
    if (variant_name(v) == name) return v;
  }
  throw ConfigError("unknown variant '" + name + "' (expected fgsm_at, fgsm_rs, pgd_at, fgsm_bp, fgsm_ep, fgsm_mep)");
}

Real TrainConfig::attack_alpha() const {
  if (alpha) return *alpha;
  switch (variant) {
    case Variant::kFgsmRs: return Real(1.25) * epsilon;
    case Variant::kPgdAt: return epsilon / Real(4);
    default: return epsilon;
  }
}

AttackConfig TrainConfig::train_attack() const {
  AttackConfig a;
  a.epsilon = epsilon;
  a.alpha = attack_alpha();
  a.steps = variant == Variant::kPgdAt ? pgd_steps : 1;
  switch (variant) {
    case Variant::kFgsmAt: a.init = InitMode::kZero; break;
    case Variant::kFgsmRs: a.init = InitMode::kRandomUniform; break;
    case Variant::kPgdAt: a.init = pgd_init; break;
    case Variant::kFgsmBp: a.init = bp_first_init; break;
    case Variant::kFgsmEp:
    case Variant::kFgsmMep: a.init = InitMode::kProvided; break;
  }
  a.clamp_input = clamp_input;
  return a;
}

SgdConfig TrainConfig::sgd_config() const {
  SgdConfig s = sgd;
  s.milestones = milestones ? *milestones : scaled_milestones(epochs);
  return s;
}

void TrainConfig::validate() const {
  if (!(epsilon >= 0)) throw ConfigError("epsilon must be >= 0");
  if (alpha && !(*alpha > 0)) throw ConfigError("alpha must be > 0");
  if (!(attack_alpha() > 0)) throw ConfigError("attack step size is zero (epsilon = 0 with default alpha)");
  if (!(mu >= 0 && mu < 1)) throw ConfigError("mu must be in [0,1)");
  if (lambda < 0) throw ConfigError("lambda must be >= 0");
  if (use_regularizer && !(lambda > 0)) throw ConfigError("use_regularizer needs lambda > 0");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (pgd_steps < 1) throw ConfigError("pgd_steps must be >= 1");
  if (pgd_init == InitMode::kProvided || bp_first_init == InitMode::kProvided) {
    throw ConfigError("init must be zero or random_uniform");
  }
  if (!(co_low < co_high)) throw ConfigError("co_low must be below co_high");
  if (eval_batch_size == 0) throw ConfigError("eval_batch_size must be positive");
  eval_attack.validate();
  sgd.validate();
}

LossTerms regularized_loss(const Model& model, std::span<const Var> params, const Tensor& x, const Labels& y,
                           const Tensor& adv, const Tensor& pgi, Real lambda, RegDistance distance) {
  if (lambda < 0) throw ConfigError("regularized_loss: lambda must be >= 0");
  require_same_shape(x, adv, "regularized_loss adv");
  require_same_shape(x, pgi, "regularized_loss pgi");
  if (params.empty()) throw UsageError("regularized_loss: no bound parameters");
  Graph& g = *params[0].graph;
  Var adv_logits = model.forward(g.input(x + adv), params);
  Var loss = ops::softmax_cross_entropy(adv_logits, y.one_hot());
  if (lambda > 0) {
    Var pgi_logits = model.forward(g.input(x + pgi), params);
    Var a = adv_logits, b = pgi_logits;
    if (distance == RegDistance::kProbabilities) {
      a = ops::softmax(a);
      b = ops::softmax(b);
    }
    loss = ops::add(loss, ops::scale(ops::mean_squared_distance(a, b), lambda));
  }
  return {loss, adv_logits};
}

PriorState make_prior(const TrainConfig& cfg, std::size_t samples, const Shape& sample_shape) {
  Rng rng = Rng::derive(cfg.seed, {stream::kPrior});
  switch (cfg.variant) {
    case Variant::kFgsmBp: return BatchPrior(sample_shape);
    case Variant::kFgsmEp: return EpochPrior(samples, sample_shape, cfg.epsilon, rng);
    case Variant::kFgsmMep: return MomentumEpochPrior(samples, sample_shape, cfg.epsilon, cfg.mu, rng);
    default: return std::monostate{};
  }
}

namespace {

template <class T>
T& expect_prior(PriorState& p, Variant v) {
  if (auto* s = std::get_if<T>(&p)) return *s;
  throw UsageError("prior buffers do not match variant " + variant_name(v));
}

RoundResult generate(const TrainConfig& cfg, const AttackConfig& attack, const ClassifierObjective& objective,
                     const Tensor& x, const Labels& y, std::span<const std::size_t> ids, PriorState& priors,
                     Rng& rng) {
  switch (cfg.variant) {
    case Variant::kFgsmAt:
    case Variant::kFgsmRs:
    case Variant::kPgdAt: {
      if (!std::holds_alternative<std::monostate>(priors)) {
        throw UsageError("variant " + variant_name(cfg.variant) + " takes no prior buffers");
      }
      RoundResult r;
      r.pgi = initial_perturbation(x, attack, &rng, nullptr);
      r.adv = r.pgi;
      for (int t = 0; t < attack.steps; ++t) r.adv = fgsm_step(objective, x, y, r.adv, attack);
      return r;
    }
    case Variant::kFgsmBp: return expect_prior<BatchPrior>(priors, cfg.variant).round(objective, x, y, attack, rng);
    case Variant::kFgsmEp:
      return expect_prior<EpochPrior>(priors, cfg.variant).round(objective, x, y, ids, attack);
    case Variant::kFgsmMep:
      return expect_prior<MomentumEpochPrior>(priors, cfg.variant).round(objective, x, y, ids, attack);
  }
  throw UsageError("unhandled variant");
}

}  // namespace

RunRecord train_epoch(Model& model, const Dataset& train, const TrainConfig& cfg, PriorState& priors, Sgd& optim,
                      std::size_t epoch) {
  cfg.validate();
  const AttackConfig attack = cfg.train_attack();
  optim.set_epoch(epoch);

  RunRecord rec;
  rec.epoch = epoch;
  rec.lr = optim.lr_at(epoch);

  std::size_t seen = 0, clean_correct = 0, fooled_of_correct = 0, fooled = 0;
  double loss_sum = 0, l2_sum = 0;

  BatchIterator it(train.size(), cfg.batch_size, cfg.seed, epoch);
  std::size_t batch_index = 0;
  for (auto ids = it.next(); !ids.empty(); ids = it.next(), ++batch_index) {
    Tensor x = train.gather_images(ids);
    const Labels y = train.gather_labels(ids);
    if (cfg.augment && x.rank() == 4) {
      Rng aug = Rng::derive(cfg.seed, {stream::kAugment, epoch, batch_index});
      x = augment_flip_crop(x, cfg.augment_pad, aug);
    }
    Rng rng = Rng::derive(cfg.seed, {stream::kAttack, epoch, batch_index});

    const ClassifierObjective objective(model);
    RoundResult r = generate(cfg, attack, objective, x, y, ids, priors, rng);
    const std::vector<int> clean_pred = argmax_rows(model.logits(x));

    const Tensor& pgi = cfg.reg_target == RegTarget::kAdversarial ? r.adv : r.pgi;
    Graph g;
    const auto params = model.bind(g, true);
    const LossTerms terms = regularized_loss(model, params, x, y, r.adv, pgi,
                                             cfg.use_regularizer ? cfg.lambda : Real(0), cfg.reg_distance);
    const Real loss = terms.loss.value().item();
    if (!std::isfinite(loss)) {
      throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                         std::to_string(batch_index));
    }
    const std::vector<int> adv_pred = argmax_rows(terms.adv_logits.value());
    g.backward(terms.loss);
    std::vector<Tensor> grads;
    grads.reserve(params.size());
    for (const Var& p : params) grads.push_back(g.grad(p));
    optim.step(model, grads);

    const std::size_t d = r.adv.sample_size();
    for (std::size_t n = 0; n < ids.size(); ++n) {
      const bool ok = clean_pred[n] == y.classes[n];
      const bool fool = adv_pred[n] != y.classes[n];
      clean_correct += ok;
      fooled_of_correct += ok && fool;
      fooled += fool;
      l2_sum += l2_norm(r.adv.data().subspan(n * d, d));
    }
    loss_sum += static_cast<double>(loss) * static_cast<double>(ids.size());
    seen += ids.size();
  }

  if (seen > 0) {
    rec.loss = static_cast<Real>(loss_sum / static_cast<double>(seen));
    rec.mean_delta_l2 = static_cast<Real>(l2_sum / static_cast<double>(seen));
    rec.asr_train_all = static_cast<Real>(fooled) / static_cast<Real>(seen);
    rec.asr_train = clean_correct ? static_cast<Real>(fooled_of_correct) / static_cast<Real>(clean_correct) : Real(0);
  }
  return rec;
}

EvalResult evaluate(const Model& model, const Dataset& data, const AttackConfig& attack, std::uint64_t seed,
                    std::size_t batch_size) {
  attack.validate();
  if (batch_size == 0) throw ConfigError("evaluate: batch_size must be positive");
  const ClassifierObjective objective(model);
  Rng rng = Rng::derive(seed, {stream::kEval});
  std::size_t clean = 0, robust = 0;
  std::vector<std::size_t> ids;
  for (std::size_t begin = 0; begin < data.size(); begin += batch_size) {
    const std::size_t end = std::min(data.size(), begin + batch_size);
    ids.resize(end - begin);
    for (std::size_t i = begin; i < end; ++i) ids[i - begin] = i;
    const Tensor x = data.gather_images(ids);
    const Labels y = data.gather_labels(ids);
    const auto clean_pred = argmax_rows(model.logits(x));
    const Tensor delta = pgd_attack(objective, x, y, attack, &rng);
    const auto adv_pred = argmax_rows(model.logits(x + delta));
    for (std::size_t n = 0; n < ids.size(); ++n) {
      clean += clean_pred[n] == y.classes[n];
      robust += adv_pred[n] == y.classes[n];
    }
  }
  EvalResult r;
  r.samples = data.size();
  if (r.samples) {
    r.clean_acc = static_cast<Real>(clean) / static_cast<Real>(r.samples);
    r.robust_acc = static_cast<Real>(robust) / static_cast<Real>(r.samples);
  }
  return r;
}

std::optional<std::size_t> detect_catastrophic_overfitting(std::span<const RunRecord> history, Real low, Real high) {
  Real best_before = -1;
  for (std::size_t e = 0; e < history.size(); ++e) {
    if (e > 0 && best_before > high && history[e].robust_acc_pgd10 < low) return e;
    best_before = std::max(best_before, history[e].robust_acc_pgd10);
  }
  return std::nullopt;
}

CheckpointChoice checkpoint_policy(std::span<const RunRecord> history) {
  if (history.empty()) throw UsageError("checkpoint_policy: empty history");
  CheckpointChoice c;
  for (std::size_t e = 1; e < history.size(); ++e)
    if (history[e].robust_acc_pgd10 > history[c.best].robust_acc_pgd10) c.best = e;
  c.last = history.size() - 1;
  return c;
}

Trainer::Trainer(TrainConfig cfg, Model model, const Dataset& train, const Dataset& test)
    : cfg_(std::move(cfg)),
      model_(std::move(model)),
      optim_(cfg_.sgd_config(), model_),
      priors_(make_prior(cfg_, train.size(), train.sample_shape())),
      train_(train),
      eval_(cfg_.eval_samples ? test.head(cfg_.eval_samples) : test) {
  cfg_.validate();
}

Trainer::Trainer(TrainConfig cfg, Checkpoint ckpt, const Dataset& train, const Dataset& test)
    : cfg_(std::move(cfg)),
      model_(std::move(ckpt.model)),
      optim_(cfg_.sgd_config(), model_),
      train_(train),
      eval_(cfg_.eval_samples ? test.head(cfg_.eval_samples) : test) {
  cfg_.validate();
  if (!ckpt.state) throw UsageError("checkpoint has no training state to resume from");
  TrainingState& s = *ckpt.state;
  optim_ = Sgd(s.sgd, std::move(s.velocity));
  priors_ = std::move(s.priors);
  epoch_ = s.next_epoch;
}

RunRecord Trainer::run_epoch() {
  if (!has_next()) throw UsageError("all epochs already run");
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec = train_epoch(model_, train_, cfg_, priors_, optim_, epoch_);
  const EvalResult ev = evaluate(model_, eval_, cfg_.eval_attack, Rng::derive(cfg_.seed, {epoch_}).next_u64(),
                                 cfg_.eval_batch_size);
  rec.clean_acc = ev.clean_acc;
  rec.robust_acc_pgd10 = ev.robust_acc;
  rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
  history_.push_back(rec);
  ++epoch_;
  return rec;
}

Checkpoint Trainer::checkpoint() const {
  TrainingState s;
  s.next_epoch = epoch_;
  s.sgd = optim_.config();
  s.velocity = optim_.velocity();
  s.priors = priors_;
  return Checkpoint{model_, std::move(s)};
}

}  // namespace pgat
