#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "pgat/checkpoint.hpp"
#include "pgat/config.hpp"
#include "pgat/errors.hpp"
#include "pgat/runner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

pgat::ExperimentConfig resolve(const std::string& config_path, const std::optional<std::uint64_t>& seed,
                               const std::string& out) {
  pgat::ExperimentConfig cfg = config_path.empty() ? pgat::ExperimentConfig{} : pgat::load_config(config_path);
  if (seed) cfg.train.seed = *seed;
  if (!out.empty()) cfg.out = out;
  cfg.train.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fast adversarial training with prior-guided initialization"};
  app.require_subcommand(1);

  std::string config_path, out, checkpoint_path, attacks = "pgd10,pgd20,pgd50,fgsm", jsonl_path, csv_path;
  std::optional<std::uint64_t> seed;
  bool print_config = false, quiet = false;

  auto* train = app.add_subcommand("train", "Train a model and write metrics, checkpoints and a summary");
  train->add_option("--config", config_path, "Config file (key = value lines)");
  train->add_option("--seed", seed, "Override the config seed");
  train->add_option("--out", out, "Override the output directory");
  train->add_flag("--print-config", print_config, "Print the effective config and exit");
  train->add_flag("--quiet", quiet, "No per-epoch progress on stderr");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint under one or more attacks");
  eval->add_option("--config", config_path, "Config file (dataset and eval attack keys)");
  eval->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  eval->add_option("--attacks", attacks, "Comma-separated list of pgdN / fgsm");
  eval->add_option("--seed", seed, "Override the config seed");
  eval->add_flag("--print-config", print_config, "Print the effective config and exit");

  auto* curves = app.add_subcommand("export-curves", "Convert metrics.jsonl to CSV");
  curves->add_option("jsonl", jsonl_path, "metrics.jsonl")->required();
  curves->add_option("-o,--output", csv_path, "Output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train || *eval) {
      const pgat::ExperimentConfig cfg = resolve(config_path, seed, *train ? out : std::string());
      if (print_config) {
        std::cout << pgat::format_config(cfg);
        return kExitOk;
      }
      if (*train) {
        const auto outcome = pgat::run_train(cfg, quiet ? nullptr : &std::cerr);
        if (outcome.numeric_failure) {
          std::cerr << "error: " << outcome.message << "\n";
          return kExitNumeric;
        }
        if (outcome.co_epoch) std::cerr << "catastrophic overfitting detected at epoch " << *outcome.co_epoch << "\n";
        return kExitOk;
      }
      const pgat::Checkpoint ckpt = pgat::load_checkpoint(checkpoint_path);
      std::vector<std::string> specs;
      std::stringstream ss(attacks);
      for (std::string s; std::getline(ss, s, ',');)
        if (!s.empty()) specs.push_back(s);
      std::cout << pgat::format_eval_table(pgat::run_eval(cfg, ckpt, specs));
      return kExitOk;
    }
    std::ifstream in(jsonl_path, std::ios::binary);
    if (!in) throw pgat::IoError("cannot open " + jsonl_path);
    const std::string csv = pgat::export_curves(in);
    if (csv_path.empty()) {
      std::cout << csv;
    } else {
      std::ofstream f(csv_path, std::ios::binary);
      if (!f || !(f << csv)) throw pgat::IoError("cannot write " + csv_path);
    }
    return kExitOk;
  } catch (const pgat::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const pgat::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const pgat::DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const pgat::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const pgat::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitIo;
  } catch (const pgat::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
