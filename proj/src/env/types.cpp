#include "dexpg/env/types.hpp"

#include <cstdio>
#include <numeric>
#include <string>

namespace dexpg {

std::string_view to_string(Task t) {
  switch (t) {
    case Task::kValve: return "valve";
    case Task::kBox: return "box";
    case Task::kDoor: return "door";
  }
  return "?";
}

std::string_view to_string(Actuation a) {
  switch (a) {
    case Actuation::kPositionTarget: return "position";
    case Actuation::kPositionTargetDelta: return "position_delta";
    case Actuation::kTorque: return "torque";
    case Actuation::kTorqueDelta: return "torque_delta";
  }
  return "?";
}

std::string_view to_string(RandomizationVariant v) {
  switch (v) {
    case RandomizationVariant::kA: return "A";
    case RandomizationVariant::kB: return "B";
    case RandomizationVariant::kC: return "C";
  }
  return "?";
}

std::string_view to_string(RewardVariant v) {
  switch (v) {
    case RewardVariant::kR1: return "r1";
    case RewardVariant::kR2: return "r2";
    case RewardVariant::kR3: return "r3";
  }
  return "?";
}

Task parse_task(std::string_view s) {
  if (s == "valve") return Task::kValve;
  if (s == "box") return Task::kBox;
  if (s == "door") return Task::kDoor;
  throw ConfigError("unknown task '" + std::string(s) + "' (expected valve, box or door)");
}

Actuation parse_actuation(std::string_view s) {
  if (s == "position") return Actuation::kPositionTarget;
  if (s == "position_delta") return Actuation::kPositionTargetDelta;
  if (s == "torque") return Actuation::kTorque;
  if (s == "torque_delta") return Actuation::kTorqueDelta;
  throw ConfigError("unknown actuation '" + std::string(s) + "'");
}

RandomizationVariant parse_randomization(std::string_view s) {
  if (s == "A") return RandomizationVariant::kA;
  if (s == "B") return RandomizationVariant::kB;
  if (s == "C") return RandomizationVariant::kC;
  throw ConfigError("unknown randomization variant '" + std::string(s) + "'");
}

RewardVariant parse_reward(std::string_view s) {
  if (s == "r1") return RewardVariant::kR1;
  if (s == "r2") return RewardVariant::kR2;
  if (s == "r3") return RewardVariant::kR3;
  throw ConfigError("unknown reward variant '" + std::string(s) + "'");
}

namespace {

struct Fnv {
  std::uint64_t h = 1469598103934665603ULL;
  void add(std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;
    h *= 1099511628211ULL;
  }
  void add(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    add(std::string_view(buf));
  }
  void add(long long v) { add(std::to_string(v)); }
};

}  // namespace

std::uint64_t config_hash(const EnvConfig& c) {
  Fnv f;
  f.add(to_string(c.task));
  f.add(static_cast<long long>(c.fingers));
  f.add(to_string(c.actuation));
  f.add(to_string(c.randomization.variant));
  for (double v : {c.randomization.gain.lo, c.randomization.gain.hi, c.randomization.friction.lo,
                   c.randomization.friction.hi})
    f.add(v);
  f.add(to_string(c.reward));
  f.add(static_cast<long long>(c.abs_door_term));
  f.add(static_cast<long long>(c.horizon));
  f.add(c.dt);
  f.add(c.gamma);
  const Physics& p = c.physics;
  for (double v : {p.joint_mass, p.joint_damping, p.kp, p.kd, p.torque_limit, p.delta_rate,
                   p.joint_limit, p.link1, p.link2, p.finger_base_radius, p.finger_phase, p.object_radius,
                   p.contact_distance, p.coupling, p.object_damping, p.box_lo, p.box_hi, p.arm_lo,
                   p.arm_hi, p.door_handle_x, p.finger_spacing, p.grasp_distance, p.door_gain})
    f.add(v);
  // wide_init and seed change only the initial-state draw, not the MDP, and
  // are recorded separately in demo metadata.
  return f.h;
}

DenseVec PhysicalState::flatten() const {
  const std::size_t n = q.size() + qd.size() + command.size() + last_action.size() + 10;
  DenseVec out(static_cast<Eigen::Index>(n));
  Eigen::Index i = 0;
  for (double v : q) out[i++] = v;
  for (double v : qd) out[i++] = v;
  for (double v : command) out[i++] = v;
  out[i++] = object_angle;
  out[i++] = object_velocity;
  out[i++] = goal;
  out[i++] = arm_x;
  out[i++] = arm_velocity;
  out[i++] = latched ? 1.0 : 0.0;
  out[i++] = latch_x;
  for (double v : last_action) out[i++] = v;
  out[i++] = static_cast<double>(step);
  out[i++] = gain_scale;
  out[i++] = friction_scale;
  return out;
}

PhysicalState PhysicalState::unflatten(const DenseVec& flat, int joints, int action_dim) {
  require_dims(flat.size() == 2 * joints + 2 * action_dim + 10,
               "flattened state has " + std::to_string(flat.size()) + " entries, expected " +
                   std::to_string(2 * joints + 2 * action_dim + 10));
  PhysicalState s;
  Eigen::Index i = 0;
  auto take = [&](int n) {
    std::vector<double> v(flat.data() + i, flat.data() + i + n);
    i += n;
    return v;
  };
  s.q = take(joints);
  s.qd = take(joints);
  s.command = take(action_dim);
  s.object_angle = flat[i++];
  s.object_velocity = flat[i++];
  s.goal = flat[i++];
  s.arm_x = flat[i++];
  s.arm_velocity = flat[i++];
  s.latched = flat[i++] != 0.0;
  s.latch_x = flat[i++];
  s.last_action = take(action_dim);
  s.step = static_cast<int>(flat[i++]);
  s.gain_scale = flat[i++];
  s.friction_scale = flat[i++];
  return s;
}

double Trajectory::total_reward() const { return std::accumulate(rewards.begin(), rewards.end(), 0.0); }

}  // namespace dexpg
