#pragma once

#include <vector>

#include "dexpg/env/types.hpp"
#include "dexpg/numkit/mlp.hpp"

namespace dexpg {

struct BaselineConfig {
  std::vector<int> hidden{32, 32};
  int epochs = 20;
  double step_size = 0.01;  // Adam
};

// V(s) = offset + scale * net(s). offset/scale track the regression targets
// so the network itself works on unit-scale outputs.
struct ValueBaseline {
  MlpParams net;
  double offset = 0.0;
  double scale = 1.0;
  BaselineConfig config;

  ValueBaseline() = default;
  ValueBaseline(int obs_dim, const BaselineConfig& config, Rng& rng);

  double value(const DenseVec& obs) const;
  DenseVec values(const DenseMat& obs) const;  // one state per column
};

// Discounted returns-to-go, concatenated over trajectories.
DenseVec discounted_returns(const std::vector<Trajectory>& trajectories, double gamma);

// Full-batch regression of V onto discounted returns-to-go. A step that
// raises the training error is rejected and the step size halved, so the
// error never increases. Returns the fitted copy.
ValueBaseline fit_baseline(ValueBaseline baseline, const std::vector<Trajectory>& trajectories,
                           double gamma);

struct AdvantageEstimate {
  std::vector<std::vector<double>> values;  // aligned with each trajectory's steps
  double gae_lambda = 0.97;
  bool normalized = false;

  std::vector<double> flattened() const;
};

// GAE(lambda) over delta_t = r_t + gamma V(s_{t+1}) - V(s_t), V = 0 after
// the final step.
AdvantageEstimate compute_advantages(const std::vector<Trajectory>& trajectories,
                                     const ValueBaseline& baseline, double gamma,
                                     double gae_lambda, bool normalize);

// Same recursion with explicit per-trajectory state values V(s_0..s_{T-1}).
AdvantageEstimate gae_from_values(const std::vector<Trajectory>& trajectories,
                                  const std::vector<std::vector<double>>& state_values,
                                  double gamma, double gae_lambda, bool normalize);

}  // namespace dexpg
