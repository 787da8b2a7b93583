#include "dexpg/pg/train.hpp"

#include <chrono>
#include <cmath>

namespace dexpg {

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kRolloutStream = 2;
constexpr std::uint64_t kEvalStream = 3;
constexpr std::uint64_t kFisherStream = 4;
constexpr std::uint64_t kBaselineStream = 5;

}  // namespace

std::vector<Trajectory> collect_trajectories(EnvModel& env, const GaussianPolicy& policy, int count,
                                             std::uint64_t seed, std::uint64_t iteration) {
  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, kRolloutStream, iteration, static_cast<std::uint64_t>(i)));
    env.reset(rng);
    Trajectory t;
    t.initial_state = env.state().flatten();
    t.observations.push_back(env.observation());
    for (int step = 0; step < env.spec().horizon; ++step) {
      ActionSample s = policy.sample(t.observations.back(), rng);
      StepResult r = env.step(s.action);
      t.actions.push_back(std::move(s.action));
      t.log_probs.push_back(s.log_prob);
      t.rewards.push_back(r.reward);
      t.observations.push_back(std::move(r.observation));
      if (r.done) break;
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::uint64_t eval_seed(std::uint64_t seed, int iteration) {
  return derive_seed(seed, kEvalStream, static_cast<std::uint64_t>(iteration));
}

Evaluation evaluate_policy(EnvModel& env, const GaussianPolicy& policy, int rollouts,
                           std::uint64_t seed) {
  Evaluation ev;
  int wins = 0;
  double total = 0.0;
  for (int j = 0; j < rollouts; ++j) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(j)));
    env.reset(rng);
    Trajectory t = rollout_from_current(env, [&](const DenseVec& obs) { return policy.mean(obs); });
    if (success(env.config().task, t)) ++wins;
    total += t.total_reward();
    ev.trajectories.push_back(std::move(t));
  }
  if (rollouts > 0) {
    ev.success_rate = static_cast<double>(wins) / rollouts;
    ev.mean_return = total / rollouts;
  }
  return ev;
}

TrainResult train(const EnvConfig& train_env, const EnvConfig& eval_env, const TrainConfig& cfg,
                  const DemoSet* demos, const IterationCallback& on_iteration) {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - t0).count(); };

  const bool dapg = cfg.algo == Algo::kDapg;
  if (dapg && (demos == nullptr || demos->trajectories.empty())) {
    throw std::invalid_argument("DAPG training requires demonstrations");
  }
  EnvModel env(train_env);
  EnvModel eval(eval_env);
  const MdpSpec& spec = env.spec();
  require_dims(eval.spec().obs_dim == spec.obs_dim && eval.spec().action_dim == spec.action_dim,
               "evaluation environment has different dimensions");

  Rng init_rng(derive_seed(cfg.seed, kInitStream));
  TrainResult res;
  res.policy = GaussianPolicy(spec.obs_dim, spec.action_dim, cfg.policy, init_rng);
  Rng baseline_rng(derive_seed(cfg.seed, kBaselineStream));
  ValueBaseline baseline(spec.obs_dim, cfg.baseline, baseline_rng);

  if (dapg) {
    BcConfig bc = cfg.dapg.bc;
    bc.seed = derive_seed(cfg.seed, bc.seed);
    res.policy = behavior_cloning(std::move(res.policy), *demos, bc);
  }

  auto evaluate = [&](UpdateReport& r) {
    const Evaluation ev = evaluate_policy(eval, res.policy, cfg.eval_rollouts, eval_seed(cfg.seed, r.iteration));
    r.success_rate = ev.success_rate;
    r.mean_return = ev.mean_return;
    r.wallclock_s = elapsed();
    res.curve.push_back(r);
    if (on_iteration) on_iteration(r, res.policy);
    if (res.iterations_to_success < 0 && ev.success_rate >= cfg.success_threshold) res.iterations_to_success = r.iteration;
  };

  UpdateReport first;
  evaluate(first);
  long long env_steps = 0;
  for (int k = 1; k <= cfg.npg.max_iterations; ++k) {
    if (cfg.stop_on_success && res.iterations_to_success >= 0) break;
    UpdateReport r;
    r.iteration = k;
    const auto batch = collect_trajectories(env, res.policy, cfg.npg.trajectories, cfg.seed,
                                            static_cast<std::uint64_t>(k));
    double ret = 0.0;
    for (const auto& t : batch) {
      env_steps += static_cast<long long>(t.length());
      ret += t.total_reward();
    }
    r.env_steps = env_steps;
    r.batch_return = ret / static_cast<double>(batch.size());

    // Advantages use the baseline fitted on earlier batches; then refit.
    const AdvantageEstimate adv = compute_advantages(batch, baseline, spec.gamma, cfg.gae_lambda,
                                                     cfg.normalize_advantages);
    baseline = fit_baseline(std::move(baseline), batch, spec.gamma);

    // DAPG's schedule counts updates from zero.
    const DenseVec g = dapg ? dapg_gradient(res.policy, batch, adv, *demos, k - 1, cfg.dapg, &r.demo_weight)
                            : reinforce_gradient(res.policy, batch, adv);
    r.grad_norm = g.norm();

    const GaussianPolicy old = res.policy;
    const StepBatch steps = flatten_steps(batch);
    Rng fisher_rng(derive_seed(cfg.seed, kFisherStream, static_cast<std::uint64_t>(k)));
    const FisherOperator fisher(old, steps.obs, fisher_rng, cfg.npg.cg_damping);
    try {
      const NpgStep s = npg_update(res.policy, g, std::cref(fisher), cfg.npg);
      r.step_norm = s.step.norm();
      r.kl = mean_kl(old, res.policy, steps.obs);
    } catch (const DegenerateCurvatureError&) {
      r.skipped = true;
    }
    evaluate(r);
  }
  return res;
}

}  // namespace dexpg
