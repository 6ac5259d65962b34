#include "pgat/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "pgat/errors.hpp"

namespace pgat {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

double parse_double_token(const std::string& s) {
  double v = 0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw ConfigError("expected a number, got '" + s + "'");
  return v;
}

// Accepts plain numbers and fractions such as 8/255.
Real parse_real(const std::string& s) {
  const auto slash = s.find('/');
  if (slash == std::string::npos) return static_cast<Real>(parse_double_token(s));
  const double num = parse_double_token(trim(s.substr(0, slash)));
  const double den = parse_double_token(trim(s.substr(slash + 1)));
  if (den == 0) throw ConfigError("division by zero in '" + s + "'");
  return static_cast<Real>(num / den);
}

std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw ConfigError("expected a non-negative integer, got '" + s + "'");
  return v;
}

int parse_int(const std::string& s) {
  int v = 0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw ConfigError("expected an integer, got '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("expected true or false, got '" + s + "'");
}

std::string fmt_real(Real v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, static_cast<double>(v));
  return std::string(buf, p);
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

std::string fmt_list(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

InitMode parse_init(const std::string& s) {
  if (s == "zero") return InitMode::kZero;
  if (s == "random_uniform") return InitMode::kRandomUniform;
  throw ConfigError("expected zero or random_uniform, got '" + s + "'");
}

std::string fmt_init(InitMode m) {
  switch (m) {
    case InitMode::kZero: return "zero";
    case InitMode::kRandomUniform: return "random_uniform";
    case InitMode::kProvided: return "provided";
  }
  return "?";
}

struct Key {
  const char* name;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

const std::vector<Key>& keys() {
  using C = ExperimentConfig;
  using S = const std::string&;
  static const std::vector<Key> table = {
      {"variant", [](const C& c) { return variant_name(c.train.variant); },
       [](C& c, S v) { c.train.variant = parse_variant(v); }},
      {"model", [](const C& c) { return c.model; }, [](C& c, S v) { c.model = v; }},
      {"epsilon", [](const C& c) { return fmt_real(c.train.epsilon); },
       [](C& c, S v) { c.train.epsilon = parse_real(v); }},
      {"alpha", [](const C& c) { return c.train.alpha ? fmt_real(*c.train.alpha) : std::string("auto"); },
       [](C& c, S v) {
         if (v == "auto") c.train.alpha.reset();
         else c.train.alpha = parse_real(v);
       }},
      {"mu", [](const C& c) { return fmt_real(c.train.mu); }, [](C& c, S v) { c.train.mu = parse_real(v); }},
      {"pgd_steps", [](const C& c) { return std::to_string(c.train.pgd_steps); },
       [](C& c, S v) { c.train.pgd_steps = parse_int(v); }},
      {"pgd_init", [](const C& c) { return fmt_init(c.train.pgd_init); },
       [](C& c, S v) { c.train.pgd_init = parse_init(v); }},
      {"bp_first_init", [](const C& c) { return fmt_init(c.train.bp_first_init); },
       [](C& c, S v) { c.train.bp_first_init = parse_init(v); }},
      {"use_regularizer", [](const C& c) { return fmt_bool(c.train.use_regularizer); },
       [](C& c, S v) { c.train.use_regularizer = parse_bool(v); }},
      {"lambda", [](const C& c) { return fmt_real(c.train.lambda); },
       [](C& c, S v) { c.train.lambda = parse_real(v); }},
      {"reg_distance",
       [](const C& c) {
         return std::string(c.train.reg_distance == RegDistance::kLogits ? "logits" : "probabilities");
       },
       [](C& c, S v) {
         if (v == "logits") c.train.reg_distance = RegDistance::kLogits;
         else if (v == "probabilities") c.train.reg_distance = RegDistance::kProbabilities;
         else throw ConfigError("expected logits or probabilities, got '" + v + "'");
       }},
      {"reg_target",
       [](const C& c) { return std::string(c.train.reg_target == RegTarget::kPrior ? "prior" : "adversarial"); },
       [](C& c, S v) {
         if (v == "prior") c.train.reg_target = RegTarget::kPrior;
         else if (v == "adversarial") c.train.reg_target = RegTarget::kAdversarial;
         else throw ConfigError("expected prior or adversarial, got '" + v + "'");
       }},
      {"epochs", [](const C& c) { return std::to_string(c.train.epochs); },
       [](C& c, S v) { c.train.epochs = parse_u64(v); }},
      {"batch_size", [](const C& c) { return std::to_string(c.train.batch_size); },
       [](C& c, S v) { c.train.batch_size = parse_u64(v); }},
      {"seed", [](const C& c) { return std::to_string(c.train.seed); }, [](C& c, S v) { c.train.seed = parse_u64(v); }},
      {"lr", [](const C& c) { return fmt_real(c.train.sgd.lr); }, [](C& c, S v) { c.train.sgd.lr = parse_real(v); }},
      {"momentum", [](const C& c) { return fmt_real(c.train.sgd.momentum); },
       [](C& c, S v) { c.train.sgd.momentum = parse_real(v); }},
      {"weight_decay", [](const C& c) { return fmt_real(c.train.sgd.weight_decay); },
       [](C& c, S v) { c.train.sgd.weight_decay = parse_real(v); }},
      {"lr_gamma", [](const C& c) { return fmt_real(c.train.sgd.gamma); },
       [](C& c, S v) { c.train.sgd.gamma = parse_real(v); }},
      {"milestones",
       [](const C& c) {
         if (!c.train.milestones) return std::string("auto");
         std::vector<std::string> parts;
         for (auto m : *c.train.milestones) parts.push_back(std::to_string(m));
         return parts.empty() ? std::string("none") : fmt_list(parts);
       },
       [](C& c, S v) {
         if (v == "auto") {
           c.train.milestones.reset();
           return;
         }
         std::vector<std::size_t> ms;
         if (v != "none")
           for (const auto& p : split(v, ',')) ms.push_back(parse_u64(p));
         c.train.milestones = ms;
       }},
      {"clamp_input", [](const C& c) { return fmt_bool(c.train.clamp_input); },
       [](C& c, S v) { c.train.clamp_input = parse_bool(v); }},
      {"augment", [](const C& c) { return fmt_bool(c.train.augment); },
       [](C& c, S v) { c.train.augment = parse_bool(v); }},
      {"augment_pad", [](const C& c) { return std::to_string(c.train.augment_pad); },
       [](C& c, S v) { c.train.augment_pad = parse_u64(v); }},
      {"eval_epsilon", [](const C& c) { return fmt_real(c.train.eval_attack.epsilon); },
       [](C& c, S v) { c.train.eval_attack.epsilon = parse_real(v); }},
      {"eval_alpha", [](const C& c) { return fmt_real(c.train.eval_attack.alpha); },
       [](C& c, S v) { c.train.eval_attack.alpha = parse_real(v); }},
      {"eval_steps", [](const C& c) { return std::to_string(c.train.eval_attack.steps); },
       [](C& c, S v) { c.train.eval_attack.steps = parse_int(v); }},
      {"eval_init", [](const C& c) { return fmt_init(c.train.eval_attack.init); },
       [](C& c, S v) { c.train.eval_attack.init = parse_init(v); }},
      {"eval_samples", [](const C& c) { return std::to_string(c.train.eval_samples); },
       [](C& c, S v) { c.train.eval_samples = parse_u64(v); }},
      {"eval_batch_size", [](const C& c) { return std::to_string(c.train.eval_batch_size); },
       [](C& c, S v) { c.train.eval_batch_size = parse_u64(v); }},
      {"co_low", [](const C& c) { return fmt_real(c.train.co_low); }, [](C& c, S v) { c.train.co_low = parse_real(v); }},
      {"co_high", [](const C& c) { return fmt_real(c.train.co_high); },
       [](C& c, S v) { c.train.co_high = parse_real(v); }},
      {"dataset", [](const C& c) { return dataset_kind_name(c.dataset); },
       [](C& c, S v) {
         if (v == "mnist_idx") c.dataset = DatasetKind::kMnistIdx;
         else if (v == "cifar") c.dataset = DatasetKind::kCifar;
         else if (v == "synth") c.dataset = DatasetKind::kSynth;
         else throw ConfigError("expected mnist_idx, cifar or synth, got '" + v + "'");
       }},
      {"train_images", [](const C& c) { return c.train_images; }, [](C& c, S v) { c.train_images = v; }},
      {"train_labels", [](const C& c) { return c.train_labels; }, [](C& c, S v) { c.train_labels = v; }},
      {"test_images", [](const C& c) { return c.test_images; }, [](C& c, S v) { c.test_images = v; }},
      {"test_labels", [](const C& c) { return c.test_labels; }, [](C& c, S v) { c.test_labels = v; }},
      {"cifar_train", [](const C& c) { return fmt_list(c.cifar_train); },
       [](C& c, S v) { c.cifar_train = split(v, ','); }},
      {"cifar_test", [](const C& c) { return fmt_list(c.cifar_test); }, [](C& c, S v) { c.cifar_test = split(v, ','); }},
      {"train_limit", [](const C& c) { return std::to_string(c.train_limit); },
       [](C& c, S v) { c.train_limit = parse_u64(v); }},
      {"test_limit", [](const C& c) { return std::to_string(c.test_limit); },
       [](C& c, S v) { c.test_limit = parse_u64(v); }},
      {"synth_train", [](const C& c) { return std::to_string(c.synth_train); },
       [](C& c, S v) { c.synth_train = parse_u64(v); }},
      {"synth_test", [](const C& c) { return std::to_string(c.synth_test); },
       [](C& c, S v) { c.synth_test = parse_u64(v); }},
      {"synth_dim", [](const C& c) { return std::to_string(c.synth_dim); },
       [](C& c, S v) { c.synth_dim = parse_u64(v); }},
      {"synth_classes", [](const C& c) { return std::to_string(c.synth_classes); },
       [](C& c, S v) { c.synth_classes = parse_u64(v); }},
      {"synth_spread", [](const C& c) { return fmt_real(c.synth_spread); },
       [](C& c, S v) { c.synth_spread = parse_real(v); }},
      {"out", [](const C& c) { return c.out; }, [](C& c, S v) { c.out = v; }},
      {"checkpoint_every", [](const C& c) { return std::to_string(c.checkpoint_every); },
       [](C& c, S v) { c.checkpoint_every = parse_u64(v); }},
  };
  return table;
}

const Key* find_key(const std::string& name) {
  for (const auto& k : keys())
    if (name == k.name) return &k;
  return nullptr;
}

}  // namespace

std::string dataset_kind_name(DatasetKind k) {
  switch (k) {
    case DatasetKind::kMnistIdx: return "mnist_idx";
    case DatasetKind::kCifar: return "cifar";
    case DatasetKind::kSynth: return "synth";
  }
  return "?";
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const Key* k = find_key(key);
  if (!k) throw ConfigError("unknown key '" + key + "'");
  k->set(cfg, value);
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    try {
      set_config_value(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  try {
    cfg.train.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string format_config(const ExperimentConfig& cfg) {
  std::string s;
  for (const auto& k : keys()) s += std::string(k.name) + " = " + k.get(cfg) + "\n";
  return s;
}

std::pair<Dataset, Dataset> load_datasets(const ExperimentConfig& cfg) {
  auto limit = [](std::size_t n) { return n ? std::optional<std::size_t>(n) : std::nullopt; };
  switch (cfg.dataset) {
    case DatasetKind::kMnistIdx:
      return {load_idx(cfg.train_images, cfg.train_labels, limit(cfg.train_limit)),
              load_idx(cfg.test_images, cfg.test_labels, limit(cfg.test_limit))};
    case DatasetKind::kCifar:
      if (cfg.cifar_train.empty() || cfg.cifar_test.empty()) {
        throw ConfigError("dataset = cifar needs cifar_train and cifar_test");
      }
      return {load_cifar_binary(cfg.cifar_train, limit(cfg.train_limit)),
              load_cifar_binary(cfg.cifar_test, limit(cfg.test_limit))};
    case DatasetKind::kSynth: {
      if (cfg.synth_train == 0 || cfg.synth_test == 0) throw ConfigError("synth_train and synth_test must be positive");
      const Dataset all = synth_blobs(cfg.synth_train + cfg.synth_test, cfg.synth_dim, cfg.synth_classes,
                                      cfg.synth_spread, cfg.train.seed);
      std::vector<std::size_t> ids(cfg.synth_test);
      for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = cfg.synth_train + i;
      Dataset test;
      test.images = all.gather_images(ids);
      test.labels = all.gather_labels(ids).classes;
      test.num_classes = all.num_classes;
      return {all.head(cfg.synth_train), std::move(test)};
    }
  }
  throw ConfigError("unknown dataset kind");
}

}  // namespace pgat
