#pragma once

#include <stdexcept>
#include <vector>

#include "dexpg/demo/demoset.hpp"
#include "dexpg/numkit/cg.hpp"
#include "dexpg/policy/gaussian.hpp"
#include "dexpg/policy/value.hpp"

namespace dexpg {

struct NpgConfig {
  double delta = 0.05;  // normalized step size
  int cg_iterations = 10;
  double cg_damping = 1e-4;
  double cg_tolerance = 1e-10;  // relative residual at which CG stops early
  int trajectories = 40;  // N per iteration
  int max_iterations = 150;  // K
};

struct BcConfig {
  int epochs = 100;
  double step_size = 0.05;
  int batch_size = 64;
  double momentum = 0.9;
  std::uint64_t seed = 0;  // minibatch order
};

struct DapgConfig {
  double lambda0 = 0.1;
  double lambda1 = 0.95;
  BcConfig bc;
};

class DegenerateCurvatureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One column per visited state, in trajectory order.
struct StepBatch {
  DenseMat obs;
  DenseMat actions;
  std::vector<double> weights;
};

StepBatch flatten_steps(const std::vector<Trajectory>& trajectories);

// g = (1/M) sum_t grad log pi(a_t|s_t) A_t over all M steps.
DenseVec reinforce_gradient(const GaussianPolicy& policy, const std::vector<Trajectory>& trajectories,
                            const AdvantageEstimate& advantages);

struct NpgStep {
  DenseVec direction;  // x ~ F^{-1} g
  double alpha = 0.0;
  double g_dot_x = 0.0;
  int cg_iterations = 0;
  DenseVec step;  // alpha x
};

// theta <- theta + alpha x with alpha = sqrt(2 delta / (g^T x + 1e-12)).
// Throws DegenerateCurvatureError when g^T x <= 0 (g != 0), leaving the policy
// untouched.
NpgStep npg_update(GaussianPolicy& policy, const DenseVec& g, const LinearOperator& fvp,
                   const NpgConfig& config);

// Regresses the policy mean onto demo actions (log_std is not trained).
// Returns the parameters with the lowest full-data MSE seen, so the final
// error never exceeds the initial one.
GaussianPolicy behavior_cloning(GaussianPolicy policy, const DemoSet& demos, const BcConfig& config);
double demo_mse(const GaussianPolicy& policy, const DemoSet& demos);

double dapg_weight(double lambda0, double lambda1, int k, double max_advantage);

// Demo-augmented gradient, each sum averaged over its own step count. With lambda0 = 0 the
// demo term is skipped and the result is reinforce_gradient bit for bit.
DenseVec dapg_gradient(const GaussianPolicy& policy, const std::vector<Trajectory>& trajectories,
                       const AdvantageEstimate& advantages, const DemoSet& demos, int k,
                       const DapgConfig& config, double* weight_used = nullptr);

}  // namespace dexpg
