#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dexpg/demo/demokit.hpp"
#include "dexpg/pg/train.hpp"

namespace dexpg {

struct DemoOptions {
  int count = 20;
  ExpertKnobs knobs;
  bool wide_init = false;
  std::uint64_t seed = 7;
  std::string path;  // load instead of recording when set
};

struct AnalysisOptions {
  std::vector<double> noise_levels{0, 5, 10, 15, 20};  // percent
  std::vector<double> init_angles{-45, -30, -15, 0, 15, 30, 45};  // degrees
  int rollouts = 10;
  int fourier_k = 5;
  int random_rollouts = 20;
  int train_iterations = 40;  // fixed budget for actuation training
  bool train = true;
  std::vector<Actuation> schemes{Actuation::kPositionTarget, Actuation::kPositionTargetDelta,
                                 Actuation::kTorque, Actuation::kTorqueDelta};
  std::vector<RewardVariant> rewards{RewardVariant::kR1, RewardVariant::kR2, RewardVariant::kR3};
  std::vector<RandomizationVariant> variants{RandomizationVariant::kA, RandomizationVariant::kB,
                                             RandomizationVariant::kC};
  Range heldout_low{0.7, 0.9};
  Range heldout_high{1.1, 1.3};
  Range train_band{0.7, 1.3};  // gain and friction range for variants B and C
  std::string policy;  // checkpoint for robustness; trained when empty
};

struct ExperimentConfig {
  std::string id = "experiment";
  EnvConfig env;
  TrainConfig train;
  bool eval_wide_init = false;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::filesystem::path output_dir = "runs/experiment";
  DemoOptions demos;
  AnalysisOptions analysis;
  std::optional<double> best_return;  // normalization anchor; derived when unset
  int baseline_episodes = 50;         // random-policy episodes for score 0
};

// Strict `section.key = value` format. Blank lines and lines starting with
// '#' are ignored; unknown keys, duplicate keys and malformed values raise
// ConfigError naming the line.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

// Applies one `section.key=value` override (command-line --set).
void apply_override(ExperimentConfig& config, const std::string& assignment);

// Every accepted `section.key`, sorted.
std::vector<std::string> config_keys();

// Canonical text form; parse_config(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& config);

}  // namespace dexpg
