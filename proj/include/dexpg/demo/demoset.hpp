#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dexpg/env/types.hpp"

namespace dexpg {

struct DemoMetadata {
  Task task = Task::kValve;
  int obs_dim = 0;
  int action_dim = 0;
  std::uint64_t config_hash = 0;
  std::string expert = "finger_gait";
  std::uint64_t seed = 0;
  bool wide_init = false;
  bool allow_failed = false;

  bool operator==(const DemoMetadata&) const = default;
};

struct DemoSet {
  DemoMetadata meta;
  std::vector<Trajectory> trajectories;

  std::size_t count() const { return trajectories.size(); }
  std::size_t total_steps() const;
};

}  // namespace dexpg
