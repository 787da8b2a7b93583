#pragma once

#include <filesystem>
#include <stdexcept>

#include "dexpg/demo/demoset.hpp"
#include "dexpg/env/env.hpp"

namespace dexpg {

struct ExpertKnobs {
  double slowdown = 2.0;      // >= 1; joint targets move 1/slowdown as fast
  double action_noise = 0.05; // half-width of additive uniform noise
  bool allow_failed = false;
};

class ExpertFailure : public std::runtime_error {
 public:
  ExpertFailure(const std::string& what, int attempts)
      : std::runtime_error(what), attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

// Noise-free finger-gait command for an observation. Each finger alternates
// a pressed sweep against the object with a lifted return stroke; the stroke
// phase is read back from the previous action, so the expert is a pure
// function of the observation.
DenseVec expert_command(const EnvConfig& config, const DenseVec& obs, double slowdown);

// One expert episode from the current state of `env` (reset it first).
// Throws ExpertFailure when the episode misses the success predicate and
// failures are not allowed.
Trajectory scripted_expert(EnvModel& env, const ExpertKnobs& knobs, Rng& rng);

// Collects n successful expert episodes; gives up after 10n rejections.
DemoSet collect_demos(const EnvConfig& config, int n, bool wide_init, const ExpertKnobs& knobs,
                      std::uint64_t seed);

// Load errors are distinct so callers can tell them apart.
class DemoFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class DemoVersionError : public DemoFormatError {
 public:
  using DemoFormatError::DemoFormatError;
};
class DemoTruncatedError : public DemoFormatError {
 public:
  using DemoFormatError::DemoFormatError;
};
class DemoMismatchError : public DemoFormatError {
 public:
  using DemoFormatError::DemoFormatError;
};

void save_demos(const DemoSet& set, const std::filesystem::path& path);
DemoSet load_demos(const std::filesystem::path& path);
// Also checks task, dimensions and config hash against `expected`.
DemoSet load_demos(const std::filesystem::path& path, const EnvConfig& expected);

struct ReplayReport {
  bool exact = true;
  std::size_t trajectory = 0;  // first mismatching trajectory
  std::size_t step = 0;        // first mismatching step, from 1 (0: initial observation)
};

// Steps a fresh environment from each stored initial state with the stored
// actions and compares observations and rewards bit for bit.
ReplayReport replay_demos(const DemoSet& set, const EnvConfig& config);

}  // namespace dexpg
