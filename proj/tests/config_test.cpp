#include <gtest/gtest.h>

#include "pgat/config.hpp"
#include "pgat/errors.hpp"

namespace pgat {
namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text, "t.cfg");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, DefaultsRoundTrip) {
  const std::string printed = format_config(ExperimentConfig{});
  EXPECT_EQ(format_config(parse_config(printed)), printed);
}

TEST(Config, NonDefaultRoundTrip) {
  const ExperimentConfig c = parse_config(
      "variant = fgsm_rs\nepsilon = 8/255\nalpha = 0.05\nmilestones = 3,7\nuse_regularizer = true\n"
      "lambda = 2.5\nreg_distance = probabilities\ncifar_train = a.bin, b.bin\ndataset = cifar\nseed = 42\n");
  EXPECT_EQ(c.train.variant, Variant::kFgsmRs);
  EXPECT_EQ(c.train.epsilon, Real(8.0 / 255.0));
  EXPECT_EQ(*c.train.alpha, Real(0.05));
  EXPECT_EQ(*c.train.milestones, std::vector<std::size_t>({3, 7}));
  EXPECT_EQ(c.cifar_train, std::vector<std::string>({"a.bin", "b.bin"}));
  const std::string printed = format_config(c);
  EXPECT_EQ(format_config(parse_config(printed)), printed);
}

TEST(Config, CommentsAndBlankLines) {
  const ExperimentConfig c = parse_config("# header\n\n  epochs = 5   # trailing\n\n");
  EXPECT_EQ(c.train.epochs, 5u);
}

TEST(Config, UnknownKeyNamesLine) {
  const std::string msg = error_of("epochs = 3\n\nlearning_rate = 0.1\n");
  EXPECT_NE(msg.find("t.cfg:3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("learning_rate"), std::string::npos);
}

TEST(Config, BadLines) {
  EXPECT_NE(error_of("epochs 3\n").find("t.cfg:1"), std::string::npos);
  EXPECT_NE(error_of("epochs = 3\nepochs = 4\n").find("duplicate"), std::string::npos);
  EXPECT_NE(error_of("epochs = -1\n").find("t.cfg:1"), std::string::npos);
  EXPECT_NE(error_of("epsilon = 1/0\n").find("division"), std::string::npos);
  EXPECT_NE(error_of("variant = free_at\n").find("variant"), std::string::npos);
  EXPECT_NE(error_of("use_regularizer = true\nlambda = 0\n").find("lambda"), std::string::npos);
}

TEST(Config, MilestonesNone) {
  const ExperimentConfig c = parse_config("milestones = none\n");
  EXPECT_TRUE(c.train.milestones->empty());
  EXPECT_EQ(format_config(parse_config(format_config(c))), format_config(c));
}

TEST(Config, SynthSplits) {
  ExperimentConfig c = parse_config("dataset = synth\nsynth_train = 40\nsynth_test = 10\nsynth_dim = 5\n");
  auto [train, test] = load_datasets(c);
  EXPECT_EQ(train.size(), 40u);
  EXPECT_EQ(test.size(), 10u);
  EXPECT_EQ(train.sample_shape(), Shape({5}));
}

TEST(Config, MissingFileIsIoError) { EXPECT_THROW(load_config("/nonexistent.cfg"), IoError); }

}  // namespace
}  // namespace pgat
