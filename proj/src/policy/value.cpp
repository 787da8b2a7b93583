#include "dexpg/policy/value.hpp"

#include <cmath>
#include <stdexcept>

#include "dexpg/policy/gaussian.hpp"

namespace dexpg {

ValueBaseline::ValueBaseline(int obs_dim, const BaselineConfig& cfg, Rng& rng) : config(cfg) {
  std::vector<int> sizes{obs_dim};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(1);
  net = MlpParams::glorot(sizes, rng);
}

double ValueBaseline::value(const DenseVec& obs) const {
  return offset + scale * mlp_forward(net, obs)[0];
}

DenseVec ValueBaseline::values(const DenseMat& obs) const {
  return (offset + scale * MlpTape(net, obs).output().row(0).array()).transpose();
}

DenseVec discounted_returns(const std::vector<Trajectory>& trajs, double gamma) {
  std::size_t total = 0;
  for (const auto& t : trajs) total += t.length();
  DenseVec out(static_cast<Eigen::Index>(total));
  Eigen::Index base = 0;
  for (const auto& t : trajs) {
    double acc = 0.0;
    for (std::size_t k = t.length(); k-- > 0;) {
      acc = t.rewards[k] + gamma * acc;
      out[base + static_cast<Eigen::Index>(k)] = acc;
    }
    base += static_cast<Eigen::Index>(t.length());
  }
  return out;
}

namespace {

DenseMat step_observations(const std::vector<Trajectory>& trajs) {
  std::size_t total = 0;
  for (const auto& t : trajs) total += t.length();
  if (total == 0) return {};
  DenseMat obs(trajs.front().observations.front().size(), static_cast<Eigen::Index>(total));
  Eigen::Index i = 0;
  for (const auto& t : trajs)
    for (std::size_t k = 0; k < t.length(); ++k) obs.col(i++) = t.observations[k];
  return obs;
}

}  // namespace

ValueBaseline fit_baseline(ValueBaseline b, const std::vector<Trajectory>& trajs, double gamma) {
  const DenseMat obs = step_observations(trajs);
  if (obs.cols() == 0 || b.config.epochs <= 0) return b;
  const DenseVec returns = discounted_returns(trajs, gamma);
  const double n = static_cast<double>(returns.size());

  // Re-anchor the output transform on the new targets without changing
  // current predictions.
  const double mean = returns.mean();
  const double sd = std::sqrt((returns.array() - mean).square().mean());
  const double new_scale = std::max(sd, 1e-6);
  const int last = b.net.num_layers() - 1;
  b.net.weight(last) *= b.scale / new_scale;
  b.net.bias(last)[0] = (b.net.bias(last)[0] * b.scale + b.offset - mean) / new_scale;
  b.offset = mean;
  b.scale = new_scale;
  const Eigen::RowVectorXd target = ((returns.array() - mean) / new_scale).matrix().transpose();

  auto loss_and_grad = [&](const MlpParams& p, DenseVec* grad) {
    MlpTape tape(p, obs);
    const Eigen::RowVectorXd err = tape.output().row(0) - target;
    if (grad != nullptr) *grad = tape.vjp((2.0 / n) * err);
    return err.squaredNorm() / n;
  };

  // Adam with rejection of loss-increasing steps.
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  DenseVec m = DenseVec::Zero(b.net.param_count());
  DenseVec v = DenseVec::Zero(b.net.param_count());
  double lr = b.config.step_size;
  DenseVec grad;
  double loss = loss_and_grad(b.net, &grad);
  for (int epoch = 1; epoch <= b.config.epochs; ++epoch) {
    m = kBeta1 * m + (1.0 - kBeta1) * grad;
    v = kBeta2 * v + (1.0 - kBeta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(kBeta1, epoch);
    const double c2 = 1.0 - std::pow(kBeta2, epoch);
    MlpParams trial = b.net;
    trial.flat -= lr * ((m / c1).array() / ((v / c2).array().sqrt() + kEps)).matrix();
    DenseVec trial_grad;
    const double trial_loss = loss_and_grad(trial, &trial_grad);
    if (std::isfinite(trial_loss) && trial_loss <= loss) {
      b.net = std::move(trial);
      loss = trial_loss;
      grad = std::move(trial_grad);
    } else {
      lr *= 0.5;
    }
  }
  return b;
}

std::vector<double> AdvantageEstimate::flattened() const {
  std::vector<double> out;
  for (const auto& v : values) out.insert(out.end(), v.begin(), v.end());
  return out;
}

AdvantageEstimate gae_from_values(const std::vector<Trajectory>& trajs,
                                  const std::vector<std::vector<double>>& state_values,
                                  double gamma, double lambda, bool normalize) {
  if (!(gamma >= 0.0 && gamma <= 1.0 && lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("gamma and gae lambda must lie in [0, 1]");
  }
  require_dims(state_values.size() == trajs.size(), "one value list per trajectory expected");
  AdvantageEstimate est;
  est.gae_lambda = lambda;
  est.normalized = normalize;
  est.values.resize(trajs.size());
  std::size_t total = 0;
  for (std::size_t j = 0; j < trajs.size(); ++j) {
    const auto& t = trajs[j];
    const auto& v = state_values[j];
    require_dims(v.size() == t.length(), "state values must align with trajectory steps");
    auto& adv = est.values[j];
    adv.assign(t.length(), 0.0);
    double acc = 0.0;
    for (std::size_t k = t.length(); k-- > 0;) {
      const double next = k + 1 < t.length() ? v[k + 1] : 0.0;
      acc = t.rewards[k] + gamma * next - v[k] + gamma * lambda * acc;
      adv[k] = acc;
    }
    total += t.length();
  }
  if (normalize && total > 0) {
    double mean = 0.0;
    for (const auto& a : est.values)
      for (double x : a) mean += x;
    mean /= static_cast<double>(total);
    double var = 0.0;
    for (const auto& a : est.values)
      for (double x : a) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / static_cast<double>(total));
    const double inv = sd > 1e-12 ? 1.0 / sd : 1.0;
    for (auto& a : est.values)
      for (double& x : a) x = (x - mean) * inv;
  }
  return est;
}

AdvantageEstimate compute_advantages(const std::vector<Trajectory>& trajs,
                                     const ValueBaseline& baseline, double gamma, double lambda,
                                     bool normalize) {
  std::vector<std::vector<double>> vals(trajs.size());
  for (std::size_t j = 0; j < trajs.size(); ++j) {
    const auto& t = trajs[j];
    if (t.length() == 0) continue;
    DenseMat obs(t.observations.front().size(), static_cast<Eigen::Index>(t.length()));
    for (std::size_t k = 0; k < t.length(); ++k) obs.col(static_cast<Eigen::Index>(k)) = t.observations[k];
    const DenseVec v = baseline.values(obs);
    vals[j].assign(v.data(), v.data() + v.size());
  }
  return gae_from_values(trajs, vals, gamma, lambda, normalize);
}

}  // namespace dexpg
