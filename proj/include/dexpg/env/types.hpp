#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dexpg/numkit/linalg.hpp"

namespace dexpg {

enum class Task { kValve, kBox, kDoor };
enum class Actuation { kPositionTarget, kPositionTargetDelta, kTorque, kTorqueDelta };
// A: nominal dynamics. B: per-episode PD gain and friction draws. C: B plus the
// previous action in the observation, which every layout here already has.
enum class RandomizationVariant { kA, kB, kC };
enum class RewardVariant { kR1, kR2, kR3 };

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ActionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string_view to_string(Task t);
std::string_view to_string(Actuation a);
std::string_view to_string(RandomizationVariant v);
std::string_view to_string(RewardVariant v);
Task parse_task(std::string_view s);
Actuation parse_actuation(std::string_view s);
RandomizationVariant parse_randomization(std::string_view s);
RewardVariant parse_reward(std::string_view s);

struct Range {
  double lo = 1.0;
  double hi = 1.0;
};

struct RandomizationConfig {
  RandomizationVariant variant = RandomizationVariant::kA;
  Range gain{0.7, 1.3};      // multiplies kp and kd
  Range friction{0.7, 1.3};  // multiplies the contact coupling
};

// Invented desk-scale physics. Units: meters, radians, seconds.
struct Physics {
  double joint_mass = 1.0;
  double joint_damping = 2.0;
  double kp = 10.0;
  double kd = 1.0;
  double torque_limit = 10.0;   // shared by torque commands and the PD output
  double delta_rate = 2.0;      // command units per second for delta schemes
  double joint_limit = 1.5707963267948966;

  double link1 = 0.15;
  double link2 = 0.10;
  double finger_base_radius = 0.28;
  double finger_phase = 0.0;    // finger base angle offset from the paddles at rest
  double object_radius = 0.06;
  double contact_distance = 0.025;
  double coupling = 250.0;      // mu, contact viscous coupling
  double object_damping = 4.0;

  double box_lo = -0.7853981633974483;
  double box_hi = 3.9269908169872414;

  double arm_lo = 0.0;
  double arm_hi = 0.4;
  double door_handle_x = 0.55;
  double finger_spacing = 0.03;
  double grasp_distance = 0.03;
  double door_gain = 4.0;       // rad of door opening per meter of pull
};

struct EnvConfig {
  Task task = Task::kValve;
  int fingers = 3;
  Actuation actuation = Actuation::kPositionTarget;
  RandomizationConfig randomization;
  RewardVariant reward = RewardVariant::kR2;
  bool wide_init = false;
  bool abs_door_term = false;
  int horizon = 100;
  double dt = 0.05;
  double gamma = 0.995;
  std::uint64_t seed = 0;
  Physics physics;
};

// Stable 64-bit digest of every field that changes episode content.
std::uint64_t config_hash(const EnvConfig& config);

struct MdpSpec {
  Task task = Task::kValve;
  int joint_count = 0;      // hand joints
  int object_obs_count = 2;
  int state_dim = 0;        // length of a flattened PhysicalState
  int obs_dim = 0;
  int action_dim = 0;
  int horizon = 0;
  double gamma = 0.0;
  std::string initial_state;  // name of the rho_0 sampler
};

// Full simulator state. Flattened order: q, qd, command, object angle,
// object velocity, goal, arm x, arm velocity, latch flag,
// latch x, last action, step, gain scale, friction scale.
struct PhysicalState {
  std::vector<double> q;
  std::vector<double> qd;
  std::vector<double> command;  // per action channel, in [-1, 1]
  double object_angle = 0.0;
  double object_velocity = 0.0;
  double goal = 0.0;
  double arm_x = 0.0;
  double arm_velocity = 0.0;
  bool latched = false;
  double latch_x = 0.0;
  std::vector<double> last_action;
  int step = 0;
  double gain_scale = 1.0;
  double friction_scale = 1.0;

  DenseVec flatten() const;
  static PhysicalState unflatten(const DenseVec& flat, int joints, int action_dim);

  bool operator==(const PhysicalState&) const = default;
};

struct Trajectory {
  // observations has one more entry than actions: the final entry is the
  // observation after the last step.
  std::vector<DenseVec> observations;
  std::vector<DenseVec> actions;  // as produced by the policy, before clamping
  std::vector<double> rewards;
  std::vector<double> log_probs;
  DenseVec initial_state;  // flattened PhysicalState at reset

  std::size_t length() const { return actions.size(); }
  double total_reward() const;
};

}  // namespace dexpg
