#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pgat/data.hpp"
#include "pgat/trainer.hpp"

namespace pgat {

enum class DatasetKind { kMnistIdx, kCifar, kSynth };

/// Everything a `train` or `eval` invocation needs. Text form is one
/// `key = value` per line; see README for the key list.
struct ExperimentConfig {
  TrainConfig train;
  std::string model = "smallcnn";

  DatasetKind dataset = DatasetKind::kMnistIdx;
  std::string train_images = "data/mnist5k/train-images-idx3-ubyte.gz";
  std::string train_labels = "data/mnist5k/train-labels-idx1-ubyte.gz";
  std::string test_images = "data/mnist5k/t10k-images-idx3-ubyte.gz";
  std::string test_labels = "data/mnist5k/t10k-labels-idx1-ubyte.gz";
  std::vector<std::string> cifar_train;
  std::vector<std::string> cifar_test;
  /// 0 = no limit.
  std::size_t train_limit = 0;
  std::size_t test_limit = 0;

  std::size_t synth_train = 512;
  std::size_t synth_test = 256;
  std::size_t synth_dim = 16;
  std::size_t synth_classes = 4;
  Real synth_spread = Real(0.05);

  std::string out = "runs/default";
  /// Also write checkpoint_epoch<N>.bin every N epochs (0 = never).
  std::size_t checkpoint_every = 0;
};

std::string dataset_kind_name(DatasetKind k);

/// Parses the config text. Unknown keys, duplicate keys and bad values raise
/// ConfigError naming `origin` and the line number.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::string& path);

/// Every key with its effective value, in a form parse_config reads back to an
/// identical config.
std::string format_config(const ExperimentConfig& cfg);

/// Applies one `key = value` assignment.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Train and test splits per the dataset keys.
std::pair<Dataset, Dataset> load_datasets(const ExperimentConfig& cfg);

}  // namespace pgat
