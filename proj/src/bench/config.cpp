#include "dexpg/bench/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace dexpg {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& v) {
  double x = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("expected a number, got '" + v + "'");
  return x;
}

long long to_int(const std::string& v) {
  long long x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("expected an integer, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError("empty entry in list '" + v + "'");
    out.push_back(item);
  }
  return out;
}

template <class T, class F>
std::vector<T> map_list(const std::string& v, F f) {
  std::vector<T> out;
  for (const auto& s : split_list(v)) out.push_back(f(s));
  return out;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <class T, class F>
std::string join(const std::vector<T>& xs, F f) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += f(xs[i]);
  }
  return out;
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

// Shorthands for the common field kinds.
template <class M>
Field dbl(M m) {
  return {[m](ExperimentConfig& c, const std::string& v) { m(c) = to_double(v); },
          [m](const ExperimentConfig& c) { return fmt(m(const_cast<ExperimentConfig&>(c))); }};
}
template <class M>
Field integer(M m) {
  return {[m](ExperimentConfig& c, const std::string& v) {
            m(c) = static_cast<std::remove_reference_t<decltype(m(c))>>(to_int(v));
          },
          [m](const ExperimentConfig& c) { return std::to_string(m(const_cast<ExperimentConfig&>(c))); }};
}
template <class M>
Field boolean(M m) {
  return {[m](ExperimentConfig& c, const std::string& v) { m(c) = to_bool(v); },
          [m](const ExperimentConfig& c) {
            return std::string(m(const_cast<ExperimentConfig&>(c)) ? "true" : "false");
          }};
}

const std::map<std::string, Field>& fields() {
  using C = ExperimentConfig;
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> f;
    f["experiment.id"] = {[](C& c, const std::string& v) { c.id = v; }, [](const C& c) { return c.id; }};
    f["experiment.algo"] = {
        [](C& c, const std::string& v) {
          if (v == "npg") c.train.algo = Algo::kScratchNpg;
          else if (v == "dapg") c.train.algo = Algo::kDapg;
          else throw ConfigError("unknown algo '" + v + "' (expected npg or dapg)");
        },
        [](const C& c) { return std::string(c.train.algo == Algo::kDapg ? "dapg" : "npg"); }};
    f["experiment.seeds"] = {
        [](C& c, const std::string& v) {
          c.seeds = map_list<std::uint64_t>(v, [](const std::string& s) {
            const long long x = to_int(s);
            if (x < 0) throw ConfigError("seeds must be nonnegative");
            return static_cast<std::uint64_t>(x);
          });
        },
        [](const C& c) { return join(c.seeds, [](std::uint64_t s) { return std::to_string(s); }); }};
    f["experiment.output_dir"] = {[](C& c, const std::string& v) { c.output_dir = v; },
                                  [](const C& c) { return c.output_dir.string(); }};
    f["experiment.best_return"] = {
        [](C& c, const std::string& v) {
          if (v == "auto") c.best_return.reset();
          else c.best_return = to_double(v);
        },
        [](const C& c) { return c.best_return ? fmt(*c.best_return) : std::string("auto"); }};
    f["experiment.baseline_episodes"] = integer([](C& c) -> int& { return c.baseline_episodes; });

    f["env.task"] = {[](C& c, const std::string& v) { c.env.task = parse_task(v); },
                     [](const C& c) { return std::string(to_string(c.env.task)); }};
    f["env.fingers"] = integer([](C& c) -> int& { return c.env.fingers; });
    f["env.actuation"] = {[](C& c, const std::string& v) { c.env.actuation = parse_actuation(v); },
                          [](const C& c) { return std::string(to_string(c.env.actuation)); }};
    f["env.randomization"] = {
        [](C& c, const std::string& v) { c.env.randomization.variant = parse_randomization(v); },
        [](const C& c) { return std::string(to_string(c.env.randomization.variant)); }};
    f["env.gain_lo"] = dbl([](C& c) -> double& { return c.env.randomization.gain.lo; });
    f["env.gain_hi"] = dbl([](C& c) -> double& { return c.env.randomization.gain.hi; });
    f["env.friction_lo"] = dbl([](C& c) -> double& { return c.env.randomization.friction.lo; });
    f["env.friction_hi"] = dbl([](C& c) -> double& { return c.env.randomization.friction.hi; });
    f["env.reward"] = {[](C& c, const std::string& v) { c.env.reward = parse_reward(v); },
                       [](const C& c) { return std::string(to_string(c.env.reward)); }};
    f["env.wide_init"] = boolean([](C& c) -> bool& { return c.env.wide_init; });
    f["env.eval_wide_init"] = boolean([](C& c) -> bool& { return c.eval_wide_init; });
    f["env.abs_door_term"] = boolean([](C& c) -> bool& { return c.env.abs_door_term; });
    f["env.horizon"] = integer([](C& c) -> int& { return c.env.horizon; });
    f["env.dt"] = dbl([](C& c) -> double& { return c.env.dt; });
    f["env.gamma"] = dbl([](C& c) -> double& { return c.env.gamma; });

#define DEXPG_PHYS(name) f["physics." #name] = dbl([](C& c) -> double& { return c.env.physics.name; })
    DEXPG_PHYS(joint_mass);
    DEXPG_PHYS(joint_damping);
    DEXPG_PHYS(kp);
    DEXPG_PHYS(kd);
    DEXPG_PHYS(torque_limit);
    DEXPG_PHYS(delta_rate);
    DEXPG_PHYS(joint_limit);
    DEXPG_PHYS(link1);
    DEXPG_PHYS(link2);
    DEXPG_PHYS(finger_base_radius);
    DEXPG_PHYS(finger_phase);
    DEXPG_PHYS(object_radius);
    DEXPG_PHYS(contact_distance);
    DEXPG_PHYS(coupling);
    DEXPG_PHYS(object_damping);
    DEXPG_PHYS(box_lo);
    DEXPG_PHYS(box_hi);
    DEXPG_PHYS(arm_lo);
    DEXPG_PHYS(arm_hi);
    DEXPG_PHYS(door_handle_x);
    DEXPG_PHYS(finger_spacing);
    DEXPG_PHYS(grasp_distance);
    DEXPG_PHYS(door_gain);
#undef DEXPG_PHYS

    f["npg.delta"] = dbl([](C& c) -> double& { return c.train.npg.delta; });
    f["npg.cg_iterations"] = integer([](C& c) -> int& { return c.train.npg.cg_iterations; });
    f["npg.cg_damping"] = dbl([](C& c) -> double& { return c.train.npg.cg_damping; });
    f["npg.cg_tolerance"] = dbl([](C& c) -> double& { return c.train.npg.cg_tolerance; });
    f["npg.trajectories"] = integer([](C& c) -> int& { return c.train.npg.trajectories; });
    f["npg.max_iterations"] = integer([](C& c) -> int& { return c.train.npg.max_iterations; });
    f["npg.eval_rollouts"] = integer([](C& c) -> int& { return c.train.eval_rollouts; });
    f["npg.stop_on_success"] = boolean([](C& c) -> bool& { return c.train.stop_on_success; });
    f["npg.success_threshold"] = dbl([](C& c) -> double& { return c.train.success_threshold; });
    f["npg.gae_lambda"] = dbl([](C& c) -> double& { return c.train.gae_lambda; });
    f["npg.normalize_advantages"] = boolean([](C& c) -> bool& { return c.train.normalize_advantages; });

    f["dapg.lambda0"] = dbl([](C& c) -> double& { return c.train.dapg.lambda0; });
    f["dapg.lambda1"] = dbl([](C& c) -> double& { return c.train.dapg.lambda1; });
    f["dapg.bc_epochs"] = integer([](C& c) -> int& { return c.train.dapg.bc.epochs; });
    f["dapg.bc_step_size"] = dbl([](C& c) -> double& { return c.train.dapg.bc.step_size; });
    f["dapg.bc_batch_size"] = integer([](C& c) -> int& { return c.train.dapg.bc.batch_size; });

    f["policy.hidden"] = {
        [](C& c, const std::string& v) {
          c.train.policy.hidden = map_list<int>(v, [](const std::string& s) { return static_cast<int>(to_int(s)); });
        },
        [](const C& c) { return join(c.train.policy.hidden, [](int h) { return std::to_string(h); }); }};
    f["policy.init_log_std"] = dbl([](C& c) -> double& { return c.train.policy.init_log_std; });
    f["policy.output_scale"] = dbl([](C& c) -> double& { return c.train.policy.output_scale; });
    f["baseline.hidden"] = {
        [](C& c, const std::string& v) {
          c.train.baseline.hidden = map_list<int>(v, [](const std::string& s) { return static_cast<int>(to_int(s)); });
        },
        [](const C& c) { return join(c.train.baseline.hidden, [](int h) { return std::to_string(h); }); }};
    f["baseline.epochs"] = integer([](C& c) -> int& { return c.train.baseline.epochs; });
    f["baseline.step_size"] = dbl([](C& c) -> double& { return c.train.baseline.step_size; });

    f["demos.count"] = integer([](C& c) -> int& { return c.demos.count; });
    f["demos.slowdown"] = dbl([](C& c) -> double& { return c.demos.knobs.slowdown; });
    f["demos.noise"] = dbl([](C& c) -> double& { return c.demos.knobs.action_noise; });
    f["demos.allow_failed"] = boolean([](C& c) -> bool& { return c.demos.knobs.allow_failed; });
    f["demos.wide_init"] = boolean([](C& c) -> bool& { return c.demos.wide_init; });
    f["demos.seed"] = integer([](C& c) -> std::uint64_t& { return c.demos.seed; });
    f["demos.path"] = {[](C& c, const std::string& v) { c.demos.path = v; },
                       [](const C& c) { return c.demos.path; }};

    f["analysis.noise_levels"] = {
        [](C& c, const std::string& v) { c.analysis.noise_levels = map_list<double>(v, to_double); },
        [](const C& c) { return join(c.analysis.noise_levels, fmt); }};
    f["analysis.init_angles"] = {
        [](C& c, const std::string& v) { c.analysis.init_angles = map_list<double>(v, to_double); },
        [](const C& c) { return join(c.analysis.init_angles, fmt); }};
    f["analysis.rollouts"] = integer([](C& c) -> int& { return c.analysis.rollouts; });
    f["analysis.fourier_k"] = integer([](C& c) -> int& { return c.analysis.fourier_k; });
    f["analysis.random_rollouts"] = integer([](C& c) -> int& { return c.analysis.random_rollouts; });
    f["analysis.train_iterations"] = integer([](C& c) -> int& { return c.analysis.train_iterations; });
    f["analysis.train"] = boolean([](C& c) -> bool& { return c.analysis.train; });
    f["analysis.schemes"] = {
        [](C& c, const std::string& v) {
          c.analysis.schemes = map_list<Actuation>(v, [](const std::string& s) { return parse_actuation(s); });
        },
        [](const C& c) { return join(c.analysis.schemes, [](Actuation a) { return std::string(to_string(a)); }); }};
    f["analysis.rewards"] = {
        [](C& c, const std::string& v) {
          c.analysis.rewards = map_list<RewardVariant>(v, [](const std::string& s) { return parse_reward(s); });
        },
        [](const C& c) { return join(c.analysis.rewards, [](RewardVariant r) { return std::string(to_string(r)); }); }};
    f["analysis.variants"] = {
        [](C& c, const std::string& v) {
          c.analysis.variants = map_list<RandomizationVariant>(v, [](const std::string& s) { return parse_randomization(s); });
        },
        [](const C& c) {
          return join(c.analysis.variants, [](RandomizationVariant r) { return std::string(to_string(r)); });
        }};
    f["analysis.heldout_low_lo"] = dbl([](C& c) -> double& { return c.analysis.heldout_low.lo; });
    f["analysis.heldout_low_hi"] = dbl([](C& c) -> double& { return c.analysis.heldout_low.hi; });
    f["analysis.heldout_high_lo"] = dbl([](C& c) -> double& { return c.analysis.heldout_high.lo; });
    f["analysis.heldout_high_hi"] = dbl([](C& c) -> double& { return c.analysis.heldout_high.hi; });
    f["analysis.train_band_lo"] = dbl([](C& c) -> double& { return c.analysis.train_band.lo; });
    f["analysis.train_band_hi"] = dbl([](C& c) -> double& { return c.analysis.train_band.hi; });
    f["analysis.policy"] = {[](C& c, const std::string& v) { c.analysis.policy = v; },
                            [](const C& c) { return c.analysis.policy; }};
    return f;
  }();
  return table;
}

void validate(const ExperimentConfig& c) {
  if (c.seeds.empty()) throw ConfigError("experiment.seeds must not be empty");
  if (c.train.npg.delta <= 0.0) throw ConfigError("npg.delta must be positive");
  if (c.train.npg.cg_iterations < 1) throw ConfigError("npg.cg_iterations must be at least 1");
  if (c.train.npg.trajectories < 1) throw ConfigError("npg.trajectories must be at least 1");
  if (c.train.npg.max_iterations < 0) throw ConfigError("npg.max_iterations must be nonnegative");
  if (c.train.dapg.lambda1 <= 0.0 || c.train.dapg.lambda1 > 1.0) throw ConfigError("dapg.lambda1 must lie in (0, 1]");
  if (c.train.success_threshold <= 0.0 || c.train.success_threshold > 1.0)
    throw ConfigError("npg.success_threshold must lie in (0, 1]");
  if (c.demos.count < 1) throw ConfigError("demos.count must be at least 1");
  if (c.demos.knobs.slowdown < 1.0) throw ConfigError("demos.slowdown must be at least 1");
  if (c.demos.knobs.action_noise < 0.0) throw ConfigError("demos.noise must be nonnegative");
  if (c.analysis.fourier_k < 1) throw ConfigError("analysis.fourier_k must be at least 1");
  for (int h : c.train.policy.hidden)
    if (h < 1) throw ConfigError("policy.hidden sizes must be positive");
  EnvModel probe(c.env);  // validates the environment block
}

void assign(ExperimentConfig& c, const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("unknown key '" + key + "'");
  it->second.set(c, value);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  ExperimentConfig c;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  for (int line_no = 1; std::getline(in, raw); ++line_no) {
    const std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const std::string where = origin + ":" + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'section.key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.find('.') == std::string::npos) throw ConfigError(where + "key '" + key + "' has no section");
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    try {
      assign(c, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

void apply_override(ExperimentConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
  assign(c, trim(std::string_view(assignment).substr(0, eq)), trim(std::string_view(assignment).substr(eq + 1)));
  validate(c);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& entry : fields()) keys.push_back(entry.first);
  return keys;
}

std::string to_text(const ExperimentConfig& c) {
  std::string out;
  for (const auto& [key, field] : fields()) out += key + " = " + field.get(c) + "\n";
  return out;
}

}  // namespace dexpg
