#include "pgat/runner.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "pgat/errors.hpp"

namespace pgat {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string metrics_line(const RunRecord& r) {
  ordered_json j;
  j["schema"] = kMetricsSchema;
  j["epoch"] = r.epoch;
  j["clean_acc"] = static_cast<double>(r.clean_acc);
  j["robust_acc_pgd10"] = static_cast<double>(r.robust_acc_pgd10);
  j["asr_train"] = static_cast<double>(r.asr_train);
  j["asr_train_all"] = static_cast<double>(r.asr_train_all);
  j["mean_delta_l2"] = static_cast<double>(r.mean_delta_l2);
  j["loss"] = static_cast<double>(r.loss);
  j["lr"] = static_cast<double>(r.lr);
  return j.dump();
}

namespace {

std::ofstream open_out(const fs::path& p, std::ios::openmode mode = std::ios::trunc) {
  std::ofstream f(p, std::ios::binary | std::ios::out | mode);
  if (!f) throw IoError("cannot write " + p.string());
  return f;
}

void write_text(const fs::path& p, const std::string& text) {
  auto f = open_out(p);
  f << text;
  if (!f) throw IoError("write failed: " + p.string());
}

std::string summary_json(const ExperimentConfig& cfg, const TrainOutcome& o) {
  ordered_json j;
  j["schema"] = kSummarySchema;
  j["variant"] = variant_name(cfg.train.variant);
  j["seed"] = cfg.train.seed;
  j["epochs_requested"] = cfg.train.epochs;
  j["epochs_completed"] = o.history.size();
  j["status"] = o.numeric_failure ? "numeric_error" : "ok";
  if (!o.message.empty()) j["message"] = o.message;
  if (o.history.empty()) {
    j["best_epoch"] = nullptr;
    j["last_epoch"] = nullptr;
  } else {
    const CheckpointChoice c = checkpoint_policy(o.history);
    j["best_epoch"] = c.best;
    j["last_epoch"] = c.last;
    j["best_robust_acc_pgd10"] = static_cast<double>(o.history[c.best].robust_acc_pgd10);
    j["final_robust_acc_pgd10"] = static_cast<double>(o.history.back().robust_acc_pgd10);
    j["final_clean_acc"] = static_cast<double>(o.history.back().clean_acc);
    Real max_asr = 0;
    for (const auto& r : o.history) max_asr = std::max(max_asr, r.asr_train);
    j["max_asr_train"] = static_cast<double>(max_asr);
  }
  j["catastrophic_overfitting"] = o.co_epoch.has_value();
  j["co_epoch"] = o.co_epoch ? ordered_json(*o.co_epoch) : ordered_json(nullptr);
  return j.dump(2) + "\n";
}

}  // namespace

TrainOutcome run_train(const ExperimentConfig& cfg, std::ostream* progress) {
  cfg.train.validate();
  const fs::path out(cfg.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
  write_text(out / "config.txt", format_config(cfg));

  auto [train, test] = load_datasets(cfg);
  const ModelDescriptor desc = ModelDescriptor::parse(cfg.model, train.sample_shape(), train.num_classes);
  Trainer trainer(cfg.train, init_model(desc, cfg.train.seed), train, test);

  auto metrics = open_out(out / "metrics.jsonl");
  auto timings = open_out(out / "timings.jsonl");
  TrainOutcome outcome;
  Real best = -1;
  try {
    while (trainer.has_next()) {
      const RunRecord rec = trainer.run_epoch();
      metrics << metrics_line(rec) << '\n' << std::flush;
      timings << ordered_json{{"epoch", rec.epoch}, {"wall_ms", rec.wall_ms}}.dump() << '\n' << std::flush;
      outcome.history.push_back(rec);
      const Checkpoint ck = trainer.checkpoint();
      save_checkpoint((out / "checkpoint_last.bin").string(), ck);
      if (rec.robust_acc_pgd10 > best) {
        best = rec.robust_acc_pgd10;
        save_checkpoint((out / "checkpoint_best.bin").string(), ck);
      }
      if (cfg.checkpoint_every && (rec.epoch + 1) % cfg.checkpoint_every == 0) {
        save_checkpoint((out / ("checkpoint_epoch" + std::to_string(rec.epoch) + ".bin")).string(), ck);
      }
      if (progress) {
        *progress << "epoch " << rec.epoch << " loss " << rec.loss << " clean " << rec.clean_acc << " pgd10 "
                  << rec.robust_acc_pgd10 << " asr " << rec.asr_train << " (" << rec.wall_ms << " ms)\n";
      }
    }
  } catch (const NumericError& e) {
    outcome.numeric_failure = true;
    outcome.message = e.what();
  }
  outcome.co_epoch = detect_catastrophic_overfitting(outcome.history, cfg.train.co_low, cfg.train.co_high);
  write_text(out / "summary.json", summary_json(cfg, outcome));
  return outcome;
}

AttackConfig parse_attack_spec(const std::string& spec, const TrainConfig& cfg) {
  AttackConfig a = cfg.eval_attack;
  a.clamp_input = cfg.clamp_input;
  if (spec == "fgsm") {
    a.steps = 1;
    a.alpha = a.epsilon;
    a.init = InitMode::kZero;
  } else if (spec.rfind("pgd", 0) == 0 && spec.size() > 3 &&
             spec.find_first_not_of("0123456789", 3) == std::string::npos) {
    a.steps = std::stoi(spec.substr(3));
    if (a.steps < 1) throw ConfigError("attack '" + spec + "' needs at least one step");
  } else {
    throw ConfigError("unknown attack '" + spec + "' (expected pgdN or fgsm)");
  }
  if (a.epsilon == 0) a.alpha = std::max(a.alpha, Real(1e-12));
  a.validate();
  return a;
}

std::vector<EvalRow> run_eval(const ExperimentConfig& cfg, const Checkpoint& ckpt,
                              const std::vector<std::string>& attacks) {
  auto datasets = load_datasets(cfg);
  Dataset test = cfg.train.eval_samples ? datasets.second.head(cfg.train.eval_samples) : datasets.second;
  std::vector<EvalRow> rows;
  for (const auto& spec : attacks) {
    EvalRow row{spec, parse_attack_spec(spec, cfg.train), {}};
    row.result = evaluate(ckpt.model, test, row.config, cfg.train.seed, cfg.train.eval_batch_size);
    rows.push_back(row);
  }
  return rows;
}

std::string format_eval_table(const std::vector<EvalRow>& rows) {
  std::ostringstream s;
  s.precision(17);
  s << "attack\tepsilon\talpha\tsteps\tsamples\tclean_acc\trobust_acc\n";
  for (const auto& r : rows) {
    s << r.attack << '\t' << r.config.epsilon << '\t' << r.config.alpha << '\t' << r.config.steps << '\t'
      << r.result.samples << '\t' << r.result.clean_acc << '\t' << r.result.robust_acc << '\n';
  }
  return s.str();
}

std::string export_curves(std::istream& jsonl) {
  static const char* const kColumns[] = {"epoch", "asr_train", "robust_acc_pgd10", "clean_acc", "mean_delta_l2"};
  std::string csv = "epoch,asr_train,robust_acc_pgd10,clean_acc,mean_delta_l2\n";
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(jsonl, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const ordered_json::parse_error& e) {
      throw FormatError("line " + std::to_string(lineno) + ": invalid JSON: " + e.what());
    }
    if (!j.is_object()) throw FormatError("line " + std::to_string(lineno) + ": expected a JSON object");
    std::string row;
    for (const char* col : kColumns) {
      auto it = j.find(col);
      if (it == j.end() || !it->is_number()) {
        throw FormatError("line " + std::to_string(lineno) + ": missing numeric field '" + col + "'");
      }
      row += (row.empty() ? "" : ",") + it->dump();
    }
    csv += row + "\n";
  }
  return csv;
}

}  // namespace pgat
