#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "dexpg/env/env.hpp"
#include "dexpg/pg/npg.hpp"

namespace dexpg {

enum class Algo { kScratchNpg, kDapg };

struct TrainConfig {
  Algo algo = Algo::kScratchNpg;
  PolicyConfig policy;
  BaselineConfig baseline;
  NpgConfig npg;
  DapgConfig dapg;
  double gae_lambda = 0.97;
  bool normalize_advantages = true;
  int eval_rollouts = 10;
  bool stop_on_success = true;
  double success_threshold = 1.0;  // evaluation success rate that counts as solved
  std::uint64_t seed = 0;
};

struct UpdateReport {
  int iteration = 0;
  long long env_steps = 0;      // sampled training steps so far
  double batch_return = 0.0;    // mean return of the stochastic training batch
  double mean_return = 0.0;     // mean return of the deterministic evaluation
  double success_rate = 0.0;    // over the evaluation rollouts
  double grad_norm = 0.0;
  double step_norm = 0.0;
  double kl = 0.0;              // mean KL(old || new) on the batch states
  double demo_weight = 0.0;
  double wallclock_s = 0.0;     // real compute time
  bool skipped = false;         // update rejected for degenerate curvature
};

struct TrainResult {
  GaussianPolicy policy;
  std::vector<UpdateReport> curve;
  int iterations_to_success = -1;  // first iteration at the success threshold; -1 if never
};

using IterationCallback = std::function<void(const UpdateReport&, const GaussianPolicy&)>;

// Samples N trajectories from the stochastic policy; trajectory i draws its
// reset and its actions from its own derived stream.
std::vector<Trajectory> collect_trajectories(EnvModel& env, const GaussianPolicy& policy, int count,
                                             std::uint64_t seed, std::uint64_t iteration);

struct Evaluation {
  double success_rate = 0.0;
  double mean_return = 0.0;
  std::vector<Trajectory> trajectories;
};

// Rollouts of the mean action. Rollout j resets from derive_seed(seed, j).
Evaluation evaluate_policy(EnvModel& env, const GaussianPolicy& policy, int rollouts,
                           std::uint64_t seed);

std::uint64_t eval_seed(std::uint64_t seed, int iteration);

// Scratch NPG or DAPG. The evaluation environment may differ from the
// training one (wide-init or randomized evaluation).
TrainResult train(const EnvConfig& train_env, const EnvConfig& eval_env, const TrainConfig& config,
                  const DemoSet* demos = nullptr, const IterationCallback& on_iteration = {});

}  // namespace dexpg
