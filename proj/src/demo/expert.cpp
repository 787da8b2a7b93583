#include <algorithm>
#include <cmath>
#include <numbers>

#include "dexpg/demo/demokit.hpp"

namespace dexpg {

namespace {

// Gait shape in joint radians.
constexpr double kSweep = 0.3;       // yaw stroke half-amplitude
constexpr double kPress = -0.15;     // pitch while pressing on a paddle
constexpr double kLift = 1.0;        // pitch on the return stroke
constexpr double kLiftClear = 0.3;   // pitch above which the tip clears the paddles
constexpr double kTurnaround = 0.06; // yaw error that ends a stroke
constexpr double kHoldBand = 0.25;   // remaining turn at which the fingers stop
constexpr double kYawRate = 0.25;    // max yaw target change per step at slowdown 1

}  // namespace

DenseVec expert_command(const EnvConfig& config, const DenseVec& obs, double slowdown) {
  if (config.task == Task::kDoor) throw std::invalid_argument("the door task has no scripted expert");
  if (!(slowdown >= 1.0)) throw std::invalid_argument("expert slowdown must be >= 1");
  const int joints = 2 * config.fingers;
  require_dims(obs.size() == 2 * joints + 2, "observation does not match the expert's task");
  const double limit = config.physics.joint_limit;
  const double err = obs[joints + 1];
  const double rate = kYawRate / slowdown;

  DenseVec a(joints);
  for (int f = 0; f < config.fingers; ++f) {
    const double q1 = obs[2 * f];
    const double last_yaw = obs[joints + 2 + 2 * f] * limit;
    const bool pressing = obs[joints + 3 + 2 * f] <= 0.0;
    // Braking: straight fingers rest their tips on the hub where every paddle
    // meets them.
    double yaw = q1;
    double pitch = 0.0;
    if (err <= -kHoldBand) {
      // Pressed strokes sweep yaw downward to turn the object forward. The
      // expert never turns back after an overshoot.
      const double end = pressing ? -kSweep : kSweep;
      const bool stroke_done = std::abs(q1 - end) < kTurnaround;
      pitch = pressing != stroke_done ? kPress : kLift;
      // Yaw waits for the pitch joint so a stroke never drags the object
      // backward while the tip is still down.
      const double q2 = obs[2 * f + 1];
      const bool settled = pressing ? q2 < kLiftClear - 0.1 : q2 > kLiftClear;
      yaw = last_yaw;
      if (settled && !stroke_done) yaw += std::clamp(end - last_yaw, -rate, rate);
    }
    a[2 * f] = std::clamp(yaw / limit, -1.0, 1.0);
    a[2 * f + 1] = pitch / limit;
  }
  return a;
}

Trajectory scripted_expert(EnvModel& env, const ExpertKnobs& knobs, Rng& rng) {
  if (!(knobs.action_noise >= 0.0)) throw std::invalid_argument("expert noise must be >= 0");
  const EnvConfig& cfg = env.config();
  Trajectory t = rollout_from_current(env, [&](const DenseVec& obs) {
    DenseVec a = expert_command(cfg, obs, knobs.slowdown);
    if (knobs.action_noise > 0.0) {
      for (auto& x : a) x += uniform(rng, -knobs.action_noise, knobs.action_noise);
    }
    return a;
  });
  if (!knobs.allow_failed && !success(cfg.task, t)) {
    throw ExpertFailure("scripted expert episode missed the success criterion", 1);
  }
  return t;
}

DemoSet collect_demos(const EnvConfig& config, int n, bool wide_init, const ExpertKnobs& knobs,
                      std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("need at least one demonstration");
  EnvConfig cfg = config;
  cfg.wide_init = wide_init;
  EnvModel env(cfg);
  DemoSet set;
  set.meta.task = cfg.task;
  set.meta.obs_dim = env.spec().obs_dim;
  set.meta.action_dim = env.spec().action_dim;
  set.meta.config_hash = config_hash(cfg);
  set.meta.seed = seed;
  set.meta.wide_init = wide_init;
  set.meta.allow_failed = knobs.allow_failed;
  int rejected = 0;
  for (std::uint64_t attempt = 0; static_cast<int>(set.trajectories.size()) < n; ++attempt) {
    Rng rng(derive_seed(seed, 0xde40, attempt));
    env.reset(rng);
    try {
      set.trajectories.push_back(scripted_expert(env, knobs, rng));
    } catch (const ExpertFailure&) {
      if (++rejected > 10 * n) {
        throw ExpertFailure("scripted expert failed " + std::to_string(rejected) + " times for " +
                                std::to_string(n) + " demonstrations",
                            rejected);
      }
    }
  }
  return set;
}

}  // namespace dexpg
