#pragma once

#include <functional>

#include "dexpg/env/types.hpp"

namespace dexpg {

struct StepInfo {
  double goal_error = 0.0;  // d-theta after the step
  int contacts = 0;         // fingertips engaged with the object
};

struct StepResult {
  DenseVec observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

// One task MDP. Single-owner and mutable; independent instances share nothing.
//
// Observation layout (fingers F, hand joints J = 2F, action dim A):
//   valve/box: [q (J) | object angle | d-theta | last action (A = J)]
//   door:      [q (J) | door angle   | x_arm - x_door | last action (A = J + 1)]
class EnvModel {
 public:
  explicit EnvModel(EnvConfig config);

  const EnvConfig& config() const { return config_; }
  const MdpSpec& spec() const { return spec_; }
  const PhysicalState& state() const { return state_; }

  // Samples from rho_0 (and, for variants B/C, fresh dynamics scales).
  DenseVec reset(Rng& rng);
  // Reset to a specific initial object angle; dynamics scales stay nominal
  // unless given.
  DenseVec reset_to(double object_angle, double gain_scale = 1.0, double friction_scale = 1.0);
  void set_state(const PhysicalState& state);

  StepResult step(const DenseVec& action);
  DenseVec observation() const;

  // Fingertip position (x, y) and height above the object plane.
  struct Fingertip {
    double x = 0.0, y = 0.0, z = 0.0;
    double vx = 0.0, vy = 0.0;
  };
  Fingertip fingertip(int finger) const;

 private:
  void integrate_joints(const DenseVec& action);
  void step_rotor();
  void step_door();

  EnvConfig config_;
  MdpSpec spec_;
  PhysicalState state_;
};

// Goal error d-theta for a state (door: theta_door - theta_closed).
double goal_error(Task task, const PhysicalState& state);

// door_x is the handle position x_door (door task only).
double reward_fn(Task task, RewardVariant variant, const PhysicalState& state,
                 bool abs_door_term = false, double door_x = 0.55);

// valve/box: |d-theta| < 20 deg on at least 20% of steps.
// door: d-theta > 30 deg at some step.
bool success(Task task, const Trajectory& trajectory);

// Index of d-theta (valve/box) or door angle (door) in an observation.
int goal_obs_index(Task task, int obs_dim);

using ActionFn = std::function<DenseVec(const DenseVec& observation)>;

// Runs one full episode from the current state of `env` (call reset first).
Trajectory rollout_from_current(EnvModel& env, const ActionFn& act);

Trajectory random_policy_rollout(EnvModel& env, int steps, Rng& rng);

// Mean undiscounted return of `episodes` random-policy episodes; the score-0
// anchor for normalization.
double random_policy_baseline(const EnvConfig& config, int episodes, std::uint64_t seed);

}  // namespace dexpg
