#include "dexpg/pg/npg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace dexpg {

std::size_t DemoSet::total_steps() const {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.length();
  return n;
}

StepBatch flatten_steps(const std::vector<Trajectory>& trajs) {
  std::size_t total = 0;
  for (const auto& t : trajs) total += t.length();
  StepBatch b;
  if (total == 0) return b;
  const auto cols = static_cast<Eigen::Index>(total);
  b.obs.resize(trajs.front().observations.front().size(), cols);
  b.actions.resize(trajs.front().actions.front().size(), cols);
  Eigen::Index i = 0;
  for (const auto& t : trajs) {
    for (std::size_t k = 0; k < t.length(); ++k, ++i) {
      b.obs.col(i) = t.observations[k];
      b.actions.col(i) = t.actions[k];
    }
  }
  return b;
}

DenseVec reinforce_gradient(const GaussianPolicy& policy, const std::vector<Trajectory>& trajs,
                            const AdvantageEstimate& adv) {
  StepBatch b = flatten_steps(trajs);
  if (b.obs.cols() == 0) throw std::invalid_argument("reinforce_gradient needs a nonempty batch");
  b.weights = adv.flattened();
  require_dims(static_cast<Eigen::Index>(b.weights.size()) == b.obs.cols(),
               "advantages are not aligned with the trajectories");
  const double inv_m = 1.0 / static_cast<double>(b.obs.cols());
  for (double& w : b.weights) w *= inv_m;
  return policy.weighted_log_prob_grad(b.obs, b.actions, b.weights);
}

NpgStep npg_update(GaussianPolicy& policy, const DenseVec& g, const LinearOperator& fvp,
                   const NpgConfig& config) {
  require_dims(g.size() == policy.param_count(), "gradient length must equal parameter count");
  if (!g.allFinite()) throw NumericalError("policy gradient is not finite");
  NpgStep s;
  if (g.isZero(0.0)) {
    s.direction = s.step = DenseVec::Zero(g.size());
    return s;
  }
  const CgResult cg = conjugate_gradient(fvp, g, config.cg_iterations, config.cg_tolerance);
  s.direction = cg.x;
  s.cg_iterations = cg.iterations;
  s.g_dot_x = g.dot(cg.x);
  if (!(s.g_dot_x > 0.0)) {
    throw DegenerateCurvatureError("natural gradient has nonpositive curvature g^T x = " +
                                   std::to_string(s.g_dot_x));
  }
  s.alpha = std::sqrt(2.0 * config.delta / (s.g_dot_x + 1e-12));
  s.step = s.alpha * s.direction;
  policy.set_flat(policy.flat() + s.step);
  return s;
}

double demo_mse(const GaussianPolicy& policy, const DemoSet& demos) {
  const StepBatch b = flatten_steps(demos.trajectories);
  if (b.obs.cols() == 0) throw std::invalid_argument("demo set is empty");
  return (policy.mean_batch(b.obs) - b.actions).squaredNorm() / static_cast<double>(b.obs.cols());
}

GaussianPolicy behavior_cloning(GaussianPolicy policy, const DemoSet& demos, const BcConfig& cfg) {
  const StepBatch all = flatten_steps(demos.trajectories);
  if (all.obs.cols() == 0) throw std::invalid_argument("behavior cloning needs demonstrations");
  require_dims(all.obs.rows() == policy.obs_dim() && all.actions.rows() == policy.action_dim(),
               "demonstration dimensions do not match the policy");
  if (cfg.epochs <= 0) return policy;

  const Eigen::Index n = all.obs.cols();
  const Eigen::Index batch = std::clamp<Eigen::Index>(cfg.batch_size, 1, n);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(cfg.seed, 0xbc));

  MlpParams& net = policy.mean_net();
  MlpParams best = net;
  double best_mse = demo_mse(policy, demos);
  DenseVec velocity = DenseVec::Zero(net.param_count());
  DenseMat obs(all.obs.rows(), batch);
  DenseMat act(all.actions.rows(), batch);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with our own draws keeps the order portable.
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(uniform(rng, 0.0, 1.0) * static_cast<double>(i + 1));
      std::swap(order[i], order[std::min(j, i)]);
    }
    for (Eigen::Index start = 0; start + batch <= n; start += batch) {
      for (Eigen::Index c = 0; c < batch; ++c) {
        obs.col(c) = all.obs.col(order[static_cast<std::size_t>(start + c)]);
        act.col(c) = all.actions.col(order[static_cast<std::size_t>(start + c)]);
      }
      const MlpTape tape(net, obs);
      const DenseVec grad = tape.vjp((2.0 / static_cast<double>(batch)) * (tape.output() - act));
      velocity = cfg.momentum * velocity - cfg.step_size * grad;
      net.flat += velocity;
    }
    const double mse = demo_mse(policy, demos);
    if (mse < best_mse) {
      best_mse = mse;
      best = net;
    }
  }
  net = best;
  return policy;
}

double dapg_weight(double lambda0, double lambda1, int k, double max_advantage) {
  return lambda0 * std::pow(lambda1, k) * max_advantage;
}

DenseVec dapg_gradient(const GaussianPolicy& policy, const std::vector<Trajectory>& trajs,
                       const AdvantageEstimate& adv, const DemoSet& demos, int k,
                       const DapgConfig& config, double* weight_used) {
  DenseVec g = reinforce_gradient(policy, trajs, adv);
  if (weight_used != nullptr) *weight_used = 0.0;
  if (config.lambda0 == 0.0) return g;
  if (demos.trajectories.empty()) throw std::invalid_argument("dapg needs demonstrations");

  double max_adv = -std::numeric_limits<double>::infinity();
  for (const auto& a : adv.values)
    for (double x : a) max_adv = std::max(max_adv, x);
  const double w = dapg_weight(config.lambda0, config.lambda1, k, max_adv);
  if (weight_used != nullptr) *weight_used = w;

  StepBatch d = flatten_steps(demos.trajectories);
  require_dims(d.obs.rows() == policy.obs_dim() && d.actions.rows() == policy.action_dim(),
               "demonstration dimensions do not match the policy");
  d.weights.assign(static_cast<std::size_t>(d.obs.cols()), w / static_cast<double>(d.obs.cols()));
  g += policy.weighted_log_prob_grad(d.obs, d.actions, d.weights);
  return g;
}

}  // namespace dexpg
