#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pgat/config.hpp"
#include "pgat/trainer.hpp"

namespace pgat {

inline constexpr const char* kMetricsSchema = "pgat.metrics/1";
inline constexpr const char* kSummarySchema = "pgat.summary/1";

/// One metrics.jsonl line (no trailing newline). Wall time is excluded so that
/// equal seeds give byte-identical logs; it goes to timings.jsonl instead.
std::string metrics_line(const RunRecord& r);

struct TrainOutcome {
  std::vector<RunRecord> history;
  std::optional<std::size_t> co_epoch;
  bool numeric_failure = false;
  std::string message;
};

/// Trains per `cfg` and writes into cfg.out:
///   config.txt, metrics.jsonl, timings.jsonl, checkpoint_best.bin,
///   checkpoint_last.bin, summary.json.
/// A NumericError stops training; logs written so far stay and the summary
/// records the failure.
TrainOutcome run_train(const ExperimentConfig& cfg, std::ostream* progress = nullptr);

/// "pgd10", "pgd20", "pgd50" (any pgdN) or "fgsm" against cfg's eval epsilon.
AttackConfig parse_attack_spec(const std::string& spec, const TrainConfig& cfg);

struct EvalRow {
  std::string attack;
  AttackConfig config;
  EvalResult result;
};

std::vector<EvalRow> run_eval(const ExperimentConfig& cfg, const Checkpoint& ckpt,
                              const std::vector<std::string>& attacks);

/// Tab-separated table with a header row.
std::string format_eval_table(const std::vector<EvalRow>& rows);

/// CSV with columns epoch, asr_train, robust_acc_pgd10, clean_acc, mean_delta_l2,
/// numbers copied verbatim from the JSONL. Throws FormatError naming the line.
std::string export_curves(std::istream& jsonl);

}  // namespace pgat
