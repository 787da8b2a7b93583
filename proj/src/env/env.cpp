#include "dexpg/env/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace dexpg {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kGoalTolerance = kPi / 9.0;   // 20 degrees
constexpr double kDoorSuccess = kPi / 6.0;     // 30 degrees
constexpr double kDoorOpen = kPi / 2.0;
constexpr double kDoorClosed = 0.0;

bool is_rotor(Task t) { return t == Task::kValve || t == Task::kBox; }

int paddle_count(const EnvConfig& c) { return c.task == Task::kBox ? 2 : c.fingers; }

// Distance from point p to the segment from the origin to `length` along `angle`.
double distance_to_paddle(double px, double py, double angle, double length) {
  const double ux = std::cos(angle);
  const double uy = std::sin(angle);
  const double t = std::clamp(px * ux + py * uy, 0.0, length);
  return std::hypot(px - t * ux, py - t * uy);
}

// Finger j sits where it sees the paddles j/F of a paddle period later than
// finger 0, so between them the reachable windows tile the whole period.
// Among the equivalent angles the one nearest the even spacing 2 pi j / F
// is used.
double finger_base_angle(int finger, int fingers, int paddles, double phase) {
  const double period = 2.0 * kPi / paddles;
  const double offset = period * finger / fingers;
  const double even = 2.0 * kPi * finger / fingers;
  const double m = std::round((even - offset) / period);
  return offset + m * period + phase;
}

}  // namespace

EnvModel::EnvModel(EnvConfig config) : config_(std::move(config)) {
  if (config_.fingers != 3 && config_.fingers != 4) {
    throw ConfigError("fingers must be 3 or 4, got " + std::to_string(config_.fingers));
  }
  if (config_.horizon < 1) throw ConfigError("horizon must be at least 1");
  if (!(config_.dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(config_.gamma > 0.0 && config_.gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
  const auto& r = config_.randomization;
  if (r.gain.lo > r.gain.hi || r.friction.lo > r.friction.hi || r.gain.lo <= 0.0 ||
      r.friction.lo < 0.0) {
    throw ConfigError("randomization ranges must be ordered and positive");
  }

  spec_.task = config_.task;
  spec_.joint_count = 2 * config_.fingers;
  spec_.action_dim = spec_.joint_count + (config_.task == Task::kDoor ? 1 : 0);
  spec_.object_obs_count = 2;
  spec_.obs_dim = spec_.joint_count + spec_.object_obs_count + spec_.action_dim;
  spec_.state_dim = 2 * spec_.joint_count + 2 * spec_.action_dim + 10;
  spec_.horizon = config_.horizon;
  spec_.gamma = config_.gamma;
  spec_.initial_state = config_.wide_init && is_rotor(config_.task)
                            ? "uniform_object_angle[-pi/4,pi/4]"
                            : "fixed_neutral";
  reset_to(0.0);
}

DenseVec EnvModel::reset_to(double object_angle, double gain_scale, double friction_scale) {
  const int j = spec_.joint_count;
  const int a = spec_.action_dim;
  state_ = PhysicalState{};
  state_.q.assign(j, 0.0);
  state_.qd.assign(j, 0.0);
  state_.command.assign(a, 0.0);
  state_.last_action.assign(a, 0.0);
  state_.gain_scale = gain_scale;
  state_.friction_scale = friction_scale;
  if (is_rotor(config_.task)) {
    state_.object_angle = object_angle;
    state_.goal = kPi;
  } else {
    state_.object_angle = kDoorClosed;
    state_.goal = kDoorOpen;
    // arm rests mid-rail, where a zero position command holds it
    state_.arm_x = 0.5 * (config_.physics.arm_lo + config_.physics.arm_hi);
  }
  return observation();
}

DenseVec EnvModel::reset(Rng& rng) {
  double angle = 0.0;
  if (config_.wide_init && is_rotor(config_.task)) angle = uniform(rng, -kPi / 4.0, kPi / 4.0);
  double gain = 1.0;
  double friction = 1.0;
  if (config_.randomization.variant != RandomizationVariant::kA) {
    gain = uniform(rng, config_.randomization.gain.lo, config_.randomization.gain.hi);
    friction = uniform(rng, config_.randomization.friction.lo, config_.randomization.friction.hi);
  }
  return reset_to(angle, gain, friction);
}

void EnvModel::set_state(const PhysicalState& state) {
  require_dims(static_cast<int>(state.q.size()) == spec_.joint_count &&
                   static_cast<int>(state.qd.size()) == spec_.joint_count &&
                   static_cast<int>(state.command.size()) == spec_.action_dim &&
                   static_cast<int>(state.last_action.size()) == spec_.action_dim,
               "physical state does not match the environment dimensions");
  state_ = state;
}

DenseVec EnvModel::observation() const {
  const int j = spec_.joint_count;
  DenseVec obs(spec_.obs_dim);
  for (int i = 0; i < j; ++i) obs[i] = state_.q[i];
  if (is_rotor(config_.task)) {
    obs[j] = state_.object_angle;
    obs[j + 1] = state_.object_angle - state_.goal;
  } else {
    obs[j] = state_.object_angle;
    obs[j + 1] = state_.arm_x - config_.physics.door_handle_x;
  }
  for (int i = 0; i < spec_.action_dim; ++i) obs[j + 2 + i] = state_.last_action[i];
  return obs;
}

EnvModel::Fingertip EnvModel::fingertip(int finger) const {
  const Physics& p = config_.physics;
  const double q1 = state_.q[2 * finger];
  const double q2 = state_.q[2 * finger + 1];
  const double d1 = state_.qd[2 * finger];
  const double d2 = state_.qd[2 * finger + 1];
  // Yaw joint q1 swings the finger plane; pitch joint q2 folds the distal link
  // out of the object plane.
  const double ext = p.link1 + p.link2 * std::cos(q2);
  const double dext = -p.link2 * std::sin(q2) * d2;
  Fingertip tip;
  tip.z = std::max(0.0, p.link2 * std::sin(q2));
  double yaw = 0.0;
  double bx = 0.0;
  double by = 0.0;
  double bvx = 0.0;
  if (is_rotor(config_.task)) {
    const double phi = finger_base_angle(finger, config_.fingers, paddle_count(config_), p.finger_phase);
    bx = p.finger_base_radius * std::cos(phi);
    by = p.finger_base_radius * std::sin(phi);
    yaw = phi + kPi + q1;
  } else {
    bx = state_.arm_x;
    by = (finger - 0.5 * (config_.fingers - 1)) * p.finger_spacing;
    bvx = state_.arm_velocity;
    yaw = q1;
  }
  const double ux = std::cos(yaw);
  const double uy = std::sin(yaw);
  tip.x = bx + ext * ux;
  tip.y = by + ext * uy;
  tip.vx = bvx + dext * ux - ext * d1 * uy;
  tip.vy = dext * uy + ext * d1 * ux;
  return tip;
}

void EnvModel::integrate_joints(const DenseVec& action) {
  const Physics& p = config_.physics;
  const double dt = config_.dt;
  const bool delta = config_.actuation == Actuation::kPositionTargetDelta ||
                     config_.actuation == Actuation::kTorqueDelta;
  const bool position = config_.actuation == Actuation::kPositionTarget ||
                        config_.actuation == Actuation::kPositionTargetDelta;
  const double kp = p.kp * state_.gain_scale;
  const double kd = p.kd * state_.gain_scale;

  // Every channel (hand joints, then the arm for the door) is a damped double
  // integrator m qdd = tau - c qd; the arm runs in normalized coordinates.
  const double arm_mid = 0.5 * (p.arm_lo + p.arm_hi);
  const double arm_half = 0.5 * (p.arm_hi - p.arm_lo);
  for (int i = 0; i < spec_.action_dim; ++i) {
    const double a = std::clamp(action[i], -1.0, 1.0);
    double& u = state_.command[i];
    u = delta ? std::clamp(u + p.delta_rate * a * dt, -1.0, 1.0) : a;
    state_.last_action[i] = a;

    const bool arm = i >= spec_.joint_count;
    const double scale = arm ? 1.0 : p.joint_limit;
    double q = arm ? (state_.arm_x - arm_mid) / arm_half * scale : state_.q[i];
    double qd = arm ? state_.arm_velocity / arm_half * scale : state_.qd[i];

    double tau = 0.0;
    if (position) {
      tau = std::clamp(kp * (u * scale - q) - kd * qd, -p.torque_limit, p.torque_limit);
    } else {
      tau = p.torque_limit * u;
    }
    qd += dt * (tau - p.joint_damping * qd) / p.joint_mass;
    q += dt * qd;
    if (q > scale) {
      q = scale;
      qd = std::min(qd, 0.0);
    } else if (q < -scale) {
      q = -scale;
      qd = std::max(qd, 0.0);
    }

    if (arm) {
      state_.arm_x = arm_mid + q / scale * arm_half;
      state_.arm_velocity = qd / scale * arm_half;
    } else {
      state_.q[i] = q;
      state_.qd[i] = qd;
    }
  }
}

void EnvModel::step_rotor() {
  const Physics& p = config_.physics;
  const double dt = config_.dt;
  const int paddles = paddle_count(config_);
  const double mu = p.coupling * state_.friction_scale;

  // Implicit update of the object rate under
  //   wdot = sum_engaged mu (v_tan - w r) - damping w.
  double numerator = state_.object_velocity;
  double denominator = 1.0 + dt * p.object_damping;
  for (int f = 0; f < config_.fingers; ++f) {
    const Fingertip tip = fingertip(f);
    double nearest = 1e9;
    for (int k = 0; k < paddles; ++k) {
      const double angle = state_.object_angle + 2.0 * kPi * k / paddles;
      nearest = std::min(nearest, distance_to_paddle(tip.x, tip.y, angle, p.object_radius));
    }
    const double r = std::hypot(tip.x, tip.y);
    if (std::hypot(nearest, tip.z) < p.contact_distance && r > 1e-9) {
      const double v_tan = (tip.x * tip.vy - tip.y * tip.vx) / r;
      numerator += dt * mu * v_tan;
      denominator += dt * mu * r;
    }
  }
  state_.object_velocity = numerator / denominator;
  state_.object_angle += dt * state_.object_velocity;
  if (config_.task == Task::kBox) {
    if (state_.object_angle > p.box_hi) {
      state_.object_angle = p.box_hi;
      state_.object_velocity = std::min(state_.object_velocity, 0.0);
    } else if (state_.object_angle < p.box_lo) {
      state_.object_angle = p.box_lo;
      state_.object_velocity = std::max(state_.object_velocity, 0.0);
    }
  }
}

void EnvModel::step_door() {
  const Physics& p = config_.physics;
  if (!state_.latched) {
    int gripping = 0;
    for (int f = 0; f < config_.fingers; ++f) {
      const Fingertip tip = fingertip(f);
      if (std::hypot(tip.x - p.door_handle_x, tip.y, tip.z) < p.grasp_distance) ++gripping;
    }
    if (gripping >= 2) {
      state_.latched = true;
      state_.latch_x = state_.arm_x;
    }
  }
  const double before = state_.object_angle;
  if (state_.latched) {
    state_.object_angle = std::clamp(p.door_gain * (state_.latch_x - state_.arm_x), 0.0, kDoorOpen);
  }
  state_.object_velocity = (state_.object_angle - before) / config_.dt;
}

StepResult EnvModel::step(const DenseVec& action) {
  require_dims(action.size() == spec_.action_dim,
               "action has " + std::to_string(action.size()) + " entries, expected " +
                   std::to_string(spec_.action_dim));
  if (!action.allFinite()) throw ActionError("action contains non-finite entries");

  integrate_joints(action);
  if (is_rotor(config_.task)) {
    step_rotor();
  } else {
    step_door();
  }
  ++state_.step;

  StepResult out;
  out.observation = observation();
  out.reward = reward_fn(config_.task, config_.reward, state_, config_.abs_door_term,
                         config_.physics.door_handle_x);
  out.done = state_.step >= config_.horizon;
  out.info.goal_error = goal_error(config_.task, state_);
  if (is_rotor(config_.task)) {
    const int paddles = paddle_count(config_);
    for (int f = 0; f < config_.fingers; ++f) {
      const Fingertip tip = fingertip(f);
      double nearest = 1e9;
      for (int k = 0; k < paddles; ++k) {
        nearest = std::min(nearest, distance_to_paddle(tip.x, tip.y,
                                                       state_.object_angle + 2.0 * kPi * k / paddles,
                                                       config_.physics.object_radius));
      }
      if (std::hypot(nearest, tip.z) < config_.physics.contact_distance) ++out.info.contacts;
    }
  }
  return out;
}

double goal_error(Task task, const PhysicalState& state) {
  if (task == Task::kDoor) return state.object_angle - kDoorClosed;
  return state.object_angle - state.goal;
}

double reward_fn(Task task, RewardVariant variant, const PhysicalState& state, bool abs_door_term,
                 double door_x) {
  if (task == Task::kDoor) {
    const double dtheta = goal_error(task, state);
    const double reach = state.arm_x - door_x;
    return -dtheta * dtheta - (abs_door_term ? std::abs(reach) : reach);
  }
  const double err = std::abs(goal_error(task, state));
  double r = -err;
  if (variant == RewardVariant::kR1) return r;
  r += (err < 0.1 ? 10.0 : 0.0) + (err < 0.05 ? 50.0 : 0.0);
  if (variant == RewardVariant::kR3) {
    double speed2 = 0.0;
    for (double v : state.qd) speed2 += v * v;
    r -= std::sqrt(speed2);
  }
  return r;
}

int goal_obs_index(Task task, int obs_dim) {
  // rotor: obs = 2J + 2 -> d-theta at J + 1; door: obs = 2J + 3 -> angle at J
  if (task == Task::kDoor) return (obs_dim - 3) / 2;
  return (obs_dim - 2) / 2 + 1;
}

bool success(Task task, const Trajectory& traj) {
  const std::size_t steps = traj.length();
  if (steps == 0 || traj.observations.size() < steps + 1) return false;
  const int idx = goal_obs_index(task, static_cast<int>(traj.observations.front().size()));
  if (task == Task::kDoor) {
    for (std::size_t t = 1; t <= steps; ++t)
      if (traj.observations[t][idx] > kDoorSuccess) return true;
    return false;
  }
  std::size_t in_range = 0;
  for (std::size_t t = 1; t <= steps; ++t)
    if (std::abs(traj.observations[t][idx]) < kGoalTolerance) ++in_range;
  return 5 * in_range >= steps;
}

Trajectory rollout_from_current(EnvModel& env, const ActionFn& act) {
  Trajectory traj;
  traj.initial_state = env.state().flatten();
  traj.observations.push_back(env.observation());
  const int remaining = env.spec().horizon - env.state().step;
  for (int t = 0; t < remaining; ++t) {
    DenseVec a = act(traj.observations.back());
    StepResult r = env.step(a);
    traj.actions.push_back(std::move(a));
    traj.rewards.push_back(r.reward);
    traj.observations.push_back(std::move(r.observation));
    if (r.done) break;
  }
  return traj;
}

Trajectory random_policy_rollout(EnvModel& env, int steps, Rng& rng) {
  env.reset(rng);
  const int a_dim = env.spec().action_dim;
  const double log_density = -a_dim * std::log(2.0);
  Trajectory traj;
  traj.initial_state = env.state().flatten();
  traj.observations.push_back(env.observation());
  for (int t = 0; t < steps; ++t) {
    DenseVec a(a_dim);
    for (auto& v : a) v = uniform(rng, -1.0, 1.0);
    StepResult r = env.step(a);
    traj.actions.push_back(std::move(a));
    traj.rewards.push_back(r.reward);
    traj.log_probs.push_back(log_density);
    traj.observations.push_back(std::move(r.observation));
  }
  return traj;
}

double random_policy_baseline(const EnvConfig& config, int episodes, std::uint64_t seed) {
  EnvModel env(config);
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    Rng rng(derive_seed(seed, 0x7a11d0, e));
    total += random_policy_rollout(env, config.horizon, rng).total_reward();
  }
  return episodes > 0 ? total / episodes : 0.0;
}

}  // namespace dexpg
