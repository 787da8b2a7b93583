#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "dexpg/numkit/mlp.hpp"

namespace dexpg {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

struct PolicyConfig {
  std::vector<int> hidden{64, 64};
  double init_log_std = -0.5;
  double output_scale = 0.01;  // final mean layer init relative to Glorot
};

struct ActionSample {
  DenseVec action;
  double log_prob = 0.0;
};

// Diagonal Gaussian with an MLP mean and a state-independent log std.
// Flat parameters: [mean network | log_std].
class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(int obs_dim, int action_dim, const PolicyConfig& config, Rng& rng);
  GaussianPolicy(MlpParams mean, DenseVec log_std);

  int obs_dim() const { return mean_.input_size(); }
  int action_dim() const { return mean_.output_size(); }
  Eigen::Index param_count() const { return mean_.param_count() + log_std_.size(); }

  const MlpParams& mean_net() const { return mean_; }
  MlpParams& mean_net() { return mean_; }
  const DenseVec& log_std() const { return log_std_; }
  void set_log_std(const DenseVec& log_std);

  DenseVec flat() const;
  // Writes `theta` back; log_std entries are clamped to their bounds.
  void set_flat(const DenseVec& theta);

  DenseVec mean(const DenseVec& obs) const;
  DenseMat mean_batch(const DenseMat& obs) const;
  ActionSample sample(const DenseVec& obs, Rng& rng) const;
  double log_prob(const DenseVec& obs, const DenseVec& action) const;
  // d log pi(a|s) / d theta, flat layout.
  DenseVec log_prob_grad(const DenseVec& obs, const DenseVec& action) const;

  // sum_i w_i * d log pi(a_i|s_i) / d theta, one sample per column.
  DenseVec weighted_log_prob_grad(const DenseMat& obs, const DenseMat& actions,
                                  std::span<const double> weights) const;

  bool operator==(const GaussianPolicy& o) const {
    return mean_.layer_sizes == o.mean_.layer_sizes && mean_.flat == o.mean_.flat &&
           log_std_ == o.log_std_;
  }

 private:
  MlpParams mean_;
  DenseVec log_std_;
};

double gaussian_log_density(const DenseVec& mean, const DenseVec& log_std, const DenseVec& x);

// Mean over states of KL(old || new) between the two action distributions.
double mean_kl(const GaussianPolicy& old_policy, const GaussianPolicy& new_policy,
               const DenseMat& obs);

// Sampled Fisher information of the policy on a fixed state batch:
//   F v = (1/N) sum_i g_i (g_i^T v) + damping v,
// where g_i is the score at (s_i, a_i) and a_i ~ pi(.|s_i) is drawn once at
// construction. The policy must outlive the operator.
class FisherOperator {
 public:
  FisherOperator(const GaussianPolicy& policy, DenseMat obs, Rng& rng, double damping);

  DenseVec operator()(const DenseVec& v) const;

  const DenseMat& obs() const { return obs_; }
  // Resampled actions, one column per state.
  DenseMat actions() const;
  double damping() const { return damping_; }

 private:
  const GaussianPolicy* policy_;
  DenseMat obs_;
  DenseMat z_;  // standardized noise of the resampled actions
  double damping_;
  MlpTape tape_;
};

DenseVec fisher_vector_product(const GaussianPolicy& policy, const std::vector<DenseVec>& states,
                               const DenseVec& v, double damping, Rng& rng);

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void save_policy(const GaussianPolicy& policy, const std::filesystem::path& path);
GaussianPolicy load_policy(const std::filesystem::path& path);

// Stacks vectors as matrix columns.
DenseMat stack_columns(const std::vector<DenseVec>& columns);

}  // namespace dexpg
