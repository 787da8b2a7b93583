#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "dexpg/demo/demokit.hpp"

namespace dexpg {

namespace {

constexpr std::uint64_t kMaxTrajectories = 1u << 20;

void put_u64(std::ostream& out, std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap64(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f64(std::ostream& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }

void put_vec(std::ostream& out, const DenseVec& v) {
  for (double x : v) put_f64(out, x);
}

// Reads from an in-memory image so truncation is detected before any
// allocation sized by file contents.
class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }

  std::string line() {
    const auto end = bytes_.find('\n', pos_);
    if (end == std::string::npos) throw DemoTruncatedError("demo file ends inside its header");
    std::string out = bytes_.substr(pos_, end - pos_);
    pos_ = end + 1;
    return out;
  }

  std::uint64_t u64() {
    if (remaining() < 8) throw DemoTruncatedError("demo file is truncated");
    std::uint64_t v = 0;
    std::memcpy(&v, bytes_.data() + pos_, 8);
    pos_ += 8;
    if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap64(v);
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  DenseVec vec(int n) {
    DenseVec v(n);
    for (auto& x : v) x = f64();
    return v;
  }

 private:
  std::string bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_demos(const DemoSet& set, const std::filesystem::path& path) {
  const auto& m = set.meta;
  int state_dim = set.trajectories.empty() ? 0 : static_cast<int>(set.trajectories.front().initial_state.size());
  for (const auto& t : set.trajectories) {
    require_dims(t.initial_state.size() == state_dim && t.observations.size() == t.length() + 1,
                 "demo trajectories are inconsistent");
    for (std::size_t k = 0; k < t.length(); ++k) {
      require_dims(t.actions[k].size() == m.action_dim && t.observations[k].size() == m.obs_dim,
                   "demo trajectory dimensions disagree with the metadata");
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "DEXDEMO v1 " << to_string(m.task) << ' ' << m.obs_dim << ' ' << m.action_dim << ' '
      << set.count() << ' ' << m.config_hash << '\n';
  out << "meta expert=" << m.expert << " seed=" << m.seed << " wide_init=" << int(m.wide_init)
      << " allow_failed=" << int(m.allow_failed) << " state_dim=" << state_dim << '\n';
  for (const auto& t : set.trajectories) {
    put_u64(out, t.length());
    put_vec(out, t.initial_state);
    put_vec(out, t.observations.front());
    for (std::size_t k = 0; k < t.length(); ++k) {
      put_vec(out, t.actions[k]);
      put_vec(out, t.observations[k + 1]);
      put_f64(out, t.rewards[k]);
    }
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

DemoSet load_demos(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open demo file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  Reader r(buf.str());

  std::istringstream header(r.line());
  std::string magic, version, task;
  header >> magic >> version;
  if (magic != "DEXDEMO") throw DemoFormatError(path.string() + " is not a demo file");
  if (version != "v1") throw DemoVersionError("unsupported demo file version '" + version + "'");
  DemoSet set;
  std::uint64_t count = 0;
  header >> task >> set.meta.obs_dim >> set.meta.action_dim >> count >> set.meta.config_hash;
  if (!header || set.meta.obs_dim < 1 || set.meta.action_dim < 1 || count > kMaxTrajectories) {
    throw DemoFormatError("malformed demo header");
  }
  try {
    set.meta.task = parse_task(task);
  } catch (const ConfigError& e) {
    throw DemoFormatError(e.what());
  }

  std::istringstream meta(r.line());
  int state_dim = -1;
  std::string field;
  while (meta >> field) {
    if (field == "meta") continue;
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw DemoFormatError("malformed demo metadata field " + field);
    const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
    try {
      if (key == "expert") set.meta.expert = value;
      else if (key == "seed") set.meta.seed = std::stoull(value);
      else if (key == "wide_init") set.meta.wide_init = value == "1";
      else if (key == "allow_failed") set.meta.allow_failed = value == "1";
      else if (key == "state_dim") state_dim = std::stoi(value);
      else throw DemoFormatError("unknown demo metadata key " + key);
    } catch (const std::logic_error&) {
      throw DemoFormatError("malformed demo metadata value " + field);
    }
  }
  if (state_dim < 0) throw DemoFormatError("demo metadata lacks state_dim");

  const int obs = set.meta.obs_dim, act = set.meta.action_dim;
  const std::uint64_t step_bytes = 8u * static_cast<std::uint64_t>(act + obs + 1);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t steps = r.u64();
    const std::uint64_t need = 8u * static_cast<std::uint64_t>(state_dim + obs);
    if (steps > (r.remaining() - std::min<std::uint64_t>(need, r.remaining())) / step_bytes) {
      throw DemoTruncatedError("demo trajectory " + std::to_string(i) + " claims " +
                               std::to_string(steps) + " steps beyond the end of the file");
    }
    Trajectory t;
    t.initial_state = r.vec(state_dim);
    t.observations.push_back(r.vec(obs));
    for (std::uint64_t k = 0; k < steps; ++k) {
      t.actions.push_back(r.vec(act));
      t.observations.push_back(r.vec(obs));
      t.rewards.push_back(r.f64());
    }
    set.trajectories.push_back(std::move(t));
  }
  if (r.remaining() != 0) throw DemoFormatError("demo file has trailing bytes");
  return set;
}

DemoSet load_demos(const std::filesystem::path& path, const EnvConfig& expected) {
  DemoSet set = load_demos(path);
  const EnvModel env(expected);
  if (set.meta.task != expected.task || set.meta.obs_dim != env.spec().obs_dim ||
      set.meta.action_dim != env.spec().action_dim) {
    throw DemoMismatchError("demo file holds " + std::string(to_string(set.meta.task)) + " data (" +
                            std::to_string(set.meta.obs_dim) + "/" + std::to_string(set.meta.action_dim) +
                            "), expected " + std::string(to_string(expected.task)) + " (" +
                            std::to_string(env.spec().obs_dim) + "/" + std::to_string(env.spec().action_dim) + ")");
  }
  EnvConfig cfg = expected;
  cfg.wide_init = set.meta.wide_init;
  if (set.meta.config_hash != config_hash(cfg)) {
    throw DemoMismatchError("demo file was recorded under a different environment configuration");
  }
  return set;
}

ReplayReport replay_demos(const DemoSet& set, const EnvConfig& config) {
  EnvModel env(config);
  ReplayReport rep;
  for (std::size_t i = 0; i < set.trajectories.size(); ++i) {
    const Trajectory& t = set.trajectories[i];
    env.set_state(PhysicalState::unflatten(t.initial_state, env.spec().joint_count, env.spec().action_dim));
    auto fail = [&](std::size_t step) {
      rep.exact = false;
      rep.trajectory = i;
      rep.step = step;
      return rep;
    };
    if (env.observation() != t.observations.front()) return fail(0);
    for (std::size_t k = 0; k < t.length(); ++k) {
      const StepResult r = env.step(t.actions[k]);
      if (r.observation != t.observations[k + 1] || r.reward != t.rewards[k]) return fail(k + 1);
    }
  }
  return rep;
}

}  // namespace dexpg
