#include "dexpg/bench/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "dexpg/numkit/spectral.hpp"

namespace dexpg {

namespace {

constexpr std::uint64_t kNoiseStream = 0x4015e;
constexpr std::uint64_t kVibrationStream = 0x71b;
constexpr std::uint64_t kHeldoutStream = 0x4e1d0;

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

ExperimentConfig scratch_variant(const ExperimentConfig& c) {
  ExperimentConfig out = c;
  out.train.algo = Algo::kScratchNpg;
  return out;
}

}  // namespace

DenseVec observation_ranges(const EnvConfig& config) {
  const EnvModel env(config);
  const MdpSpec& s = env.spec();
  const Physics& p = config.physics;
  DenseVec r(s.obs_dim);
  for (int i = 0; i < s.joint_count; ++i) r[i] = 2.0 * p.joint_limit;
  double angle_span = 0.0;
  double second_span = 0.0;
  switch (config.task) {
    case Task::kValve: angle_span = second_span = 2.0 * std::numbers::pi; break;
    case Task::kBox: angle_span = second_span = p.box_hi - p.box_lo; break;
    case Task::kDoor:
      angle_span = std::numbers::pi / 2.0;
      second_span = p.arm_hi - p.arm_lo;
      break;
  }
  r[s.joint_count] = angle_span;
  r[s.joint_count + 1] = second_span;
  for (int i = s.joint_count + 2; i < s.obs_dim; ++i) r[i] = 2.0;
  return r;
}

std::vector<RobustnessRow> robustness_sweep(const GaussianPolicy& policy, const EnvConfig& config,
                                            RobustnessAxis axis, const std::vector<double>& grid,
                                            int n_rollouts, std::uint64_t seed) {
  if (grid.empty()) throw ConfigError("robustness grid is empty");
  if (n_rollouts < 1) throw ConfigError("robustness sweep needs at least one rollout");
  if (axis == RobustnessAxis::kInitAngle && config.task == Task::kDoor)
    throw ConfigError("initial-angle sweep applies to valve and box only");
  EnvModel env(config);
  const DenseVec ranges = observation_ranges(config);
  const int a_dim = env.spec().action_dim;
  std::vector<RobustnessRow> rows;
  for (double value : grid) {
    if (axis == RobustnessAxis::kObsActionNoise && value < 0.0) throw ConfigError("noise level must be nonnegative");
    RobustnessRow row;
    row.value = value;
    int wins = 0;
    double total = 0.0;
    for (int j = 0; j < n_rollouts; ++j) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(j)));
      env.reset(rng);
      Trajectory t;
      if (axis == RobustnessAxis::kInitAngle) {
        PhysicalState s = env.state();
        s.object_angle = value * std::numbers::pi / 180.0;
        env.set_state(s);
        t = rollout_from_current(env, [&](const DenseVec& obs) { return policy.mean(obs); });
      } else if (value == 0.0) {
        t = rollout_from_current(env, [&](const DenseVec& obs) { return policy.mean(obs); });
      } else {
        Rng noise(derive_seed(seed, kNoiseStream, static_cast<std::uint64_t>(j)));
        const double frac = value / 100.0;
        t = rollout_from_current(env, [&](const DenseVec& obs) {
          DenseVec noisy = obs;
          for (Eigen::Index i = 0; i < noisy.size(); ++i) noisy[i] += frac * ranges[i] * uniform(noise, -1.0, 1.0);
          DenseVec a = policy.mean(noisy);
          for (int i = 0; i < a_dim; ++i) a[i] += frac * 2.0 * uniform(noise, -1.0, 1.0);
          return a;
        });
      }
      if (success(config.task, t)) ++wins;
      total += t.total_reward();
    }
    row.success_rate = static_cast<double>(wins) / n_rollouts;
    row.mean_return = total / n_rollouts;
    rows.push_back(row);
  }
  return rows;
}

std::string format_robustness(RobustnessAxis axis, const std::vector<RobustnessRow>& rows) {
  std::string out = axis == RobustnessAxis::kInitAngle ? "init_angle_deg" : "noise_percent";
  out += ",success_rate,mean_return\n";
  for (const auto& r : rows) out += num(r.value) + ',' + num(r.success_rate) + ',' + num(r.mean_return) + '\n';
  return out;
}

double rollout_vibration(const EnvConfig& config, int k, std::uint64_t seed) {
  EnvModel env(config);
  Rng rng(seed);
  const Trajectory t = random_policy_rollout(env, config.horizon, rng);
  double total = 0.0;
  std::vector<double> trace(t.observations.size());
  for (int joint = 0; joint < env.spec().joint_count; ++joint) {
    for (std::size_t i = 0; i < t.observations.size(); ++i) trace[i] = t.observations[i][joint];
    total += vibration_metric(trace, k);
  }
  return total;
}

std::vector<ActuationRow> actuation_analysis(const ExperimentConfig& config) {
  const AnalysisOptions& a = config.analysis;
  if (a.schemes.empty()) throw ConfigError("actuation analysis needs at least one scheme");
  if (a.random_rollouts < 1) throw ConfigError("analysis.random_rollouts must be at least 1");
  std::vector<ActuationRow> rows;
  for (Actuation scheme : a.schemes) {
    ActuationRow row;
    row.scheme = scheme;
    ExperimentConfig c = scratch_variant(config);
    c.env.actuation = scheme;
    for (int i = 0; i < a.random_rollouts; ++i)
      row.vibration_samples.push_back(
          rollout_vibration(c.env, a.fourier_k, derive_seed(kVibrationStream, static_cast<std::uint64_t>(i))));
    row.raw_vibration = median(row.vibration_samples);
    row.vibration_score = 1.0 / (1.0 + row.raw_vibration);
    row.trained_return = std::nan("");
    if (a.train) {
      c.train.stop_on_success = false;
      c.train.npg.max_iterations = a.train_iterations;
      for (std::uint64_t seed : c.seeds)
        row.return_samples.push_back(run_cell(c, seed, Anchors{0.0, 1.0}, nullptr).curve.back().mean_return);
      row.trained_return = median(row.return_samples);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_actuation(const std::vector<ActuationRow>& rows) {
  std::string out = "scheme,raw_vibration,vibration_score,trained_return\n";
  for (const auto& r : rows)
    out += std::string(to_string(r.scheme)) + ',' + num(r.raw_vibration) + ',' + num(r.vibration_score) + ',' +
           (std::isnan(r.trained_return) ? std::string("") : num(r.trained_return)) + '\n';
  return out;
}

std::vector<VariantRun> reward_ablation(const ExperimentConfig& config) {
  if (config.env.task == Task::kDoor) throw ConfigError("reward ablation applies to valve and box only");
  std::vector<VariantRun> runs;
  for (RewardVariant v : config.analysis.rewards) {
    ExperimentConfig c = scratch_variant(config);
    c.env.reward = v;
    const Anchors anchors = compute_anchors(c);
    for (std::uint64_t seed : c.seeds) {
      VariantRun run;
      run.variant = std::string(to_string(v));
      run.seed = seed;
      run.curve = run_cell(c, seed, anchors, nullptr).curve;
      run.summary = summarize_curve(run.curve, c.train.npg.max_iterations, c.train.success_threshold);
      runs.push_back(std::move(run));
    }
  }
  return runs;
}

double sample_heldout(const AnalysisOptions& a, Rng& rng) {
  const double low = a.heldout_low.hi - a.heldout_low.lo;
  const double high = a.heldout_high.hi - a.heldout_high.lo;
  if (low < 0.0 || high < 0.0 || low + high <= 0.0) throw ConfigError("held-out band is empty");
  const double u = uniform(rng, 0.0, low + high);
  return u < low ? a.heldout_low.lo + u : a.heldout_high.lo + (u - low);
}

Evaluation evaluate_heldout(const EnvConfig& config, const GaussianPolicy& policy, const AnalysisOptions& a,
                            int rollouts, std::uint64_t seed) {
  EnvConfig nominal = config;
  nominal.randomization.variant = RandomizationVariant::kA;
  EnvModel env(nominal);
  Evaluation ev;
  int wins = 0;
  double total = 0.0;
  for (int j = 0; j < rollouts; ++j) {
    Rng rng(derive_seed(seed, kHeldoutStream, static_cast<std::uint64_t>(j)));
    const double gain = sample_heldout(a, rng);
    const double friction = sample_heldout(a, rng);
    const double angle = nominal.wide_init ? uniform(rng, -std::numbers::pi / 4, std::numbers::pi / 4) : 0.0;
    env.reset_to(angle, gain, friction);
    Trajectory t = rollout_from_current(env, [&](const DenseVec& obs) { return policy.mean(obs); });
    if (success(nominal.task, t)) ++wins;
    total += t.total_reward();
    ev.trajectories.push_back(std::move(t));
  }
  if (rollouts > 0) {
    ev.success_rate = static_cast<double>(wins) / rollouts;
    ev.mean_return = total / rollouts;
  }
  return ev;
}

std::vector<RandomizationRow> randomization_study(const ExperimentConfig& config) {
  if (config.env.task != Task::kValve) throw ConfigError("randomization study applies to the valve task");
  std::vector<RandomizationRow> rows;
  for (RandomizationVariant v : config.analysis.variants) {
    ExperimentConfig c = scratch_variant(config);
    c.env.randomization.variant = v;
    if (v != RandomizationVariant::kA) {
      c.env.randomization.gain = config.analysis.train_band;
      c.env.randomization.friction = config.analysis.train_band;
    }
    EnvConfig nominal = evaluation_env(c);
    nominal.randomization.variant = RandomizationVariant::kA;
    EnvModel nominal_env(nominal);
    for (std::uint64_t seed : c.seeds) {
      const CellResult cell = run_cell(c, seed, Anchors{0.0, 1.0}, nullptr);
      RandomizationRow row;
      row.variant = v;
      row.seed = seed;
      row.iterations_to_success = cell.train.iterations_to_success;
      // Same stream as the final training evaluation, so variant A reproduces it.
      row.nominal_success = evaluate_policy(nominal_env, cell.train.policy, c.train.eval_rollouts,
                                            eval_seed(seed, cell.train.curve.back().iteration))
                                .success_rate;
      const Evaluation held = evaluate_heldout(nominal, cell.train.policy, c.analysis, c.analysis.rollouts, seed);
      row.heldout_success = held.success_rate;
      row.heldout_return = held.mean_return;
      rows.push_back(row);
    }
  }
  return rows;
}

std::string format_randomization(const std::vector<RandomizationRow>& rows) {
  std::string out = "variant,seed,iterations_to_success,nominal_success,heldout_success,heldout_return\n";
  for (const auto& r : rows)
    out += std::string(to_string(r.variant)) + ',' + std::to_string(r.seed) + ',' +
           std::to_string(r.iterations_to_success) + ',' + num(r.nominal_success) + ',' + num(r.heldout_success) +
           ',' + num(r.heldout_return) + '\n';
  return out;
}

std::string format_variant_runs(const std::vector<VariantRun>& runs) {
  std::string out = "variant,seed,iterations_to_success,censored_iterations,final_success,final_return\n";
  for (const auto& r : runs)
    out += r.variant + ',' + std::to_string(r.seed) + ',' + std::to_string(r.summary.iterations_to_success) + ',' +
           std::to_string(r.summary.censored_iterations) + ',' + num(r.summary.final_success) + ',' +
           num(r.summary.final_return) + '\n';
  return out;
}

std::string format_variant_stats(const std::vector<VariantRun>& runs) {
  std::string out = "variant,median_iterations,q1,q3,converged,n\n";
  std::vector<std::string> order;
  for (const auto& r : runs)
    if (std::find(order.begin(), order.end(), r.variant) == order.end()) order.push_back(r.variant);
  for (const auto& v : order) {
    std::vector<double> its;
    int converged = 0;
    for (const auto& r : runs) {
      if (r.variant != v) continue;
      its.push_back(r.summary.censored_iterations);
      if (r.summary.iterations_to_success >= 0) ++converged;
    }
    out += v + ',' + num(quantile(its, 0.5)) + ',' + num(quantile(its, 0.25)) + ',' + num(quantile(its, 0.75)) + ',' +
           std::to_string(converged) + ',' + std::to_string(its.size()) + '\n';
  }
  return out;
}

}  // namespace dexpg
