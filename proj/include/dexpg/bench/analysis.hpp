#pragma once

#include <string>
#include <vector>

#include "dexpg/bench/experiment.hpp"

namespace dexpg {

enum class RobustnessAxis { kInitAngle, kObsActionNoise };

struct RobustnessRow {
  double value = 0.0;  // degrees or percent
  double success_rate = 0.0;
  double mean_return = 0.0;
};

// Per-dimension spans used to scale "x% noise": joints and actions by their
// limits, object angles by their reachable range.
DenseVec observation_ranges(const EnvConfig& config);

// Rollout j of every cell resets from derive_seed(seed, j), so the 0 deg and
// 0% cells coincide with evaluate_policy(env, policy, n_rollouts, seed).
std::vector<RobustnessRow> robustness_sweep(const GaussianPolicy& policy, const EnvConfig& env,
                                            RobustnessAxis axis, const std::vector<double>& grid,
                                            int n_rollouts, std::uint64_t seed);
std::string format_robustness(RobustnessAxis axis, const std::vector<RobustnessRow>& rows);

// Sum over hand joints of vibration_metric on a random-policy rollout.
double rollout_vibration(const EnvConfig& env, int k, std::uint64_t seed);

struct ActuationRow {
  Actuation scheme = Actuation::kPositionTarget;
  double raw_vibration = 0.0;   // median over random-rollout seeds
  double vibration_score = 0.0; // 1 / (1 + raw); higher means smoother
  double trained_return = 0.0;  // median final evaluation return; NaN when untrained
  std::vector<double> vibration_samples;
  std::vector<double> return_samples;
};

// Trains each scheme for analysis.train_iterations updates without early
// stopping when analysis.train is set.
std::vector<ActuationRow> actuation_analysis(const ExperimentConfig& config);
std::string format_actuation(const std::vector<ActuationRow>& rows);

struct VariantRun {
  std::string variant;
  std::uint64_t seed = 0;
  SeedSummary summary;
  std::vector<CurvePoint> curve;
};

// Trains under each reward variant; success is always the angle predicate.
std::vector<VariantRun> reward_ablation(const ExperimentConfig& config);

struct RandomizationRow {
  RandomizationVariant variant = RandomizationVariant::kA;
  std::uint64_t seed = 0;
  double nominal_success = 0.0;  // evaluation at nominal dynamics
  double heldout_success = 0.0;  // evaluation on the held-out band
  double heldout_return = 0.0;
  int iterations_to_success = -1;
};

// Draws a scale uniformly from heldout_low U heldout_high.
double sample_heldout(const AnalysisOptions& analysis, Rng& rng);

// Held-out evaluation: rollout j uses stream derive_seed(seed, kHeldoutStream, j),
// disjoint from every training and standard evaluation stream.
Evaluation evaluate_heldout(const EnvConfig& env, const GaussianPolicy& policy, const AnalysisOptions& analysis,
                            int rollouts, std::uint64_t seed);

std::vector<RandomizationRow> randomization_study(const ExperimentConfig& config);
std::string format_randomization(const std::vector<RandomizationRow>& rows);

std::string format_variant_runs(const std::vector<VariantRun>& runs);
// One row per variant: median, q1, q3 of censored iterations-to-success.
std::string format_variant_stats(const std::vector<VariantRun>& runs);

}  // namespace dexpg
