#include "dexpg/bench/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace dexpg {

namespace {

constexpr std::uint64_t kRandomAnchorSeed = 0x5c0fe;
constexpr std::uint64_t kBestAnchorSeed = 0xbe57;

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

template <class T>
T field(const std::string& s, const std::string& line) {
  T v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw RunError("malformed CSV field '" + s + "' in: " + line);
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

// Data rows of a CSV with the expected header.
std::vector<std::vector<std::string>> csv_rows(const std::string& text, const std::string& header,
                                               std::size_t columns) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != header) throw RunError("unexpected CSV header: " + line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != columns) throw RunError("wrong column count in: " + line);
    rows.push_back(std::move(cells));
  }
  return rows;
}

const char* kCurveHeader = "seed,iteration,env_steps,mean_return,normalized_score,success_rate,kl,wallclock_s";
const char* kSummaryHeader =
    "seed,iterations_to_success,censored_iterations,iteration0_success,final_success,final_return,final_score";

}  // namespace

double normalize_score(double value, const Anchors& a) {
  return (value - a.random_return) / (a.best_return - a.random_return);
}

std::vector<CurvePoint> normalize_scores(std::vector<CurvePoint> curve, double random_baseline,
                                         double best_score) {
  if (best_score == random_baseline) throw ConfigError("normalization anchors coincide");
  const Anchors a{random_baseline, best_score};
  for (auto& p : curve) p.normalized_score = normalize_score(p.mean_return, a);
  return curve;
}

std::string format_curve(const std::vector<CurvePoint>& curve) {
  std::string out = std::string(kCurveHeader) + "\n";
  for (const auto& p : curve) {
    out += std::to_string(p.seed) + ',' + std::to_string(p.iteration) + ',' + std::to_string(p.env_steps) + ',' +
           num(p.mean_return) + ',' + num(p.normalized_score) + ',' + num(p.success_rate) + ',' + num(p.kl) + ',' +
           num(p.wallclock_s) + '\n';
  }
  return out;
}

std::vector<CurvePoint> parse_curve(const std::string& text) {
  std::vector<CurvePoint> curve;
  for (const auto& c : csv_rows(text, kCurveHeader, 8)) {
    const std::string line = c[0] + "," + c[1];
    CurvePoint p;
    p.seed = field<std::uint64_t>(c[0], line);
    p.iteration = field<int>(c[1], line);
    p.env_steps = field<long long>(c[2], line);
    p.mean_return = field<double>(c[3], line);
    p.normalized_score = field<double>(c[4], line);
    p.success_rate = field<double>(c[5], line);
    p.kl = field<double>(c[6], line);
    p.wallclock_s = field<double>(c[7], line);
    curve.push_back(p);
  }
  return curve;
}

double reference_best_return(const EnvConfig& eval_env, int episodes) {
  if (eval_env.task == Task::kDoor) {
    // No door expert: bound each step by the best reachable reward.
    const Physics& p = eval_env.physics;
    double reach;
    if (eval_env.abs_door_term)
      reach = p.door_handle_x > p.arm_hi ? p.door_handle_x - p.arm_hi
                                         : (p.door_handle_x < p.arm_lo ? p.arm_lo - p.door_handle_x : 0.0);
    else
      reach = p.arm_lo - p.door_handle_x;
    return -reach * eval_env.horizon;
  }
  EnvModel env(eval_env);
  ExpertKnobs knobs;
  knobs.slowdown = 1.0;
  knobs.action_noise = 0.0;
  knobs.allow_failed = true;
  double total = 0.0;
  for (int j = 0; j < episodes; ++j) {
    Rng rng(derive_seed(kBestAnchorSeed, static_cast<std::uint64_t>(j)));
    env.reset(rng);
    total += scripted_expert(env, knobs, rng).total_reward();
  }
  return episodes > 0 ? total / episodes : 0.0;
}

Anchors compute_anchors(const ExperimentConfig& c) {
  const EnvConfig eval = evaluation_env(c);
  Anchors a;
  a.random_return = random_policy_baseline(eval, c.baseline_episodes, kRandomAnchorSeed);
  a.best_return = c.best_return ? *c.best_return : reference_best_return(eval, c.baseline_episodes);
  if (a.best_return == a.random_return) throw ConfigError("best return equals the random baseline");
  return a;
}

SeedSummary summarize_curve(const std::vector<CurvePoint>& curve, int max_iterations, double threshold) {
  if (curve.empty()) throw RunError("empty learning curve");
  SeedSummary s;
  s.seed = curve.front().seed;
  for (const auto& p : curve) {
    if (p.success_rate >= threshold) {
      s.iterations_to_success = p.iteration;
      break;
    }
  }
  s.censored_iterations = s.iterations_to_success >= 0 ? s.iterations_to_success : max_iterations + 1;
  s.iteration0_success = curve.front().success_rate;
  s.final_success = curve.back().success_rate;
  s.final_return = curve.back().mean_return;
  s.final_score = curve.back().normalized_score;
  return s;
}

double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

std::string format_summary(const std::vector<SeedSummary>& rows) {
  std::string out = std::string(kSummaryHeader) + "\n";
  for (const auto& s : rows)
    out += std::to_string(s.seed) + ',' + std::to_string(s.iterations_to_success) + ',' +
           std::to_string(s.censored_iterations) + ',' + num(s.iteration0_success) + ',' + num(s.final_success) + ',' +
           num(s.final_return) + ',' + num(s.final_score) + '\n';
  return out;
}

std::vector<SeedSummary> parse_summary(const std::string& text) {
  std::vector<SeedSummary> rows;
  for (const auto& c : csv_rows(text, kSummaryHeader, 7)) {
    const std::string line = c[0];
    SeedSummary s;
    s.seed = field<std::uint64_t>(c[0], line);
    s.iterations_to_success = field<int>(c[1], line);
    s.censored_iterations = field<int>(c[2], line);
    s.iteration0_success = field<double>(c[3], line);
    s.final_success = field<double>(c[4], line);
    s.final_return = field<double>(c[5], line);
    s.final_score = field<double>(c[6], line);
    rows.push_back(s);
  }
  return rows;
}

std::string format_stats(const std::vector<SeedSummary>& rows) {
  std::string out = "metric,median,q1,q3,n\n";
  if (rows.empty()) return out;
  auto add = [&](const char* name, auto get) {
    std::vector<double> v;
    for (const auto& s : rows) v.push_back(get(s));
    out += std::string(name) + ',' + num(quantile(v, 0.5)) + ',' + num(quantile(v, 0.25)) + ',' +
           num(quantile(v, 0.75)) + ',' + std::to_string(v.size()) + '\n';
  };
  add("censored_iterations", [](const SeedSummary& s) { return double(s.censored_iterations); });
  add("iteration0_success", [](const SeedSummary& s) { return s.iteration0_success; });
  add("final_success", [](const SeedSummary& s) { return s.final_success; });
  add("final_return", [](const SeedSummary& s) { return s.final_return; });
  add("final_score", [](const SeedSummary& s) { return s.final_score; });
  return out;
}

EnvConfig training_env(const ExperimentConfig& c) { return c.env; }

EnvConfig evaluation_env(const ExperimentConfig& c) {
  EnvConfig e = c.env;
  e.wide_init = c.eval_wide_init;
  return e;
}

DemoSet experiment_demos(const ExperimentConfig& c) {
  if (!c.demos.path.empty()) return load_demos(c.demos.path, training_env(c));
  return collect_demos(training_env(c), c.demos.count, c.demos.wide_init, c.demos.knobs, c.demos.seed);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RunError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw RunError("cannot write " + tmp);
    out << text;
    if (!out.flush()) throw RunError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

CellResult run_cell(const ExperimentConfig& c, std::uint64_t seed, const Anchors& anchors, const DemoSet* demos,
                    std::ostream* log, const std::filesystem::path& best_checkpoint) {
  TrainConfig t = c.train;
  t.seed = seed;
  if (t.algo == Algo::kDapg && demos == nullptr) throw ConfigError("DAPG needs demonstrations");
  double best = -INFINITY;
  auto on_iter = [&](const UpdateReport& r, const GaussianPolicy& policy) {
    if (log)
      *log << "seed " << seed << " iter " << r.iteration << " return " << num(r.mean_return) << " success "
           << num(r.success_rate) << " kl " << num(r.kl) << (r.skipped ? " skipped" : "") << '\n'
           << std::flush;
    if (!best_checkpoint.empty() && r.mean_return > best) {
      best = r.mean_return;
      save_policy(policy, best_checkpoint);
    }
  };
  CellResult out{train(training_env(c), evaluation_env(c), t, t.algo == Algo::kDapg ? demos : nullptr, on_iter), {}};
  for (const auto& r : out.train.curve) {
    CurvePoint p;
    p.seed = seed;
    p.iteration = r.iteration;
    p.env_steps = r.env_steps;
    p.mean_return = r.mean_return;
    p.normalized_score = normalize_score(r.mean_return, anchors);
    p.success_rate = r.success_rate;
    p.kl = r.kl;
    p.wallclock_s = static_cast<double>(r.env_steps) * c.env.dt;
    out.curve.push_back(p);
  }
  return out;
}

RunOutput run_experiment(const ExperimentConfig& c, const RunOptions& opt) {
  namespace fs = std::filesystem;
  RunOutput out;
  out.directory = c.output_dir;
  const fs::path dir = c.output_dir;
  const std::string canonical = to_text(c);
  if (fs::exists(dir / "config.txt")) {
    if (!opt.resume) throw RunError(dir.string() + " already holds a run; pass --resume to continue it");
    if (read_text(dir / "config.txt") != canonical)
      throw ConfigError("config differs from the one recorded in " + (dir / "config.txt").string());
  }
  fs::create_directories(dir);
  write_text(dir / "config.txt", canonical);

  out.anchors = compute_anchors(c);
  write_text(dir / "anchors.csv",
             "random_return,best_return\n" + num(out.anchors.random_return) + ',' + num(out.anchors.best_return) + '\n');

  std::optional<DemoSet> demos;
  if (c.train.algo == Algo::kDapg) {
    demos = experiment_demos(c);
    save_demos(*demos, dir / "demos.dexdemo");
  }

  std::ofstream timing(dir / "timing.log", std::ios::app);
  for (std::uint64_t seed : c.seeds) {
    const std::string tag = "seed" + std::to_string(seed);
    const fs::path curve_path = dir / ("curve_" + tag + ".csv");
    if (opt.resume && fs::exists(curve_path)) {
      if (opt.log) *opt.log << "seed " << seed << " complete, skipping\n";
      continue;
    }
    CellResult cell = run_cell(c, seed, out.anchors, demos ? &*demos : nullptr, opt.log,
                               dir / ("policy_" + tag + "_best.bin"));
    save_policy(cell.train.policy, dir / ("policy_" + tag + ".bin"));
    for (const auto& r : cell.train.curve) timing << seed << ' ' << r.iteration << ' ' << r.wallclock_s << '\n';
    write_text(curve_path, format_curve(cell.curve));
  }

  // The summary is rebuilt from the curve files so it always agrees with them.
  for (std::uint64_t seed : c.seeds) {
    const auto curve = parse_curve(read_text(dir / ("curve_seed" + std::to_string(seed) + ".csv")));
    out.summary.push_back(summarize_curve(curve, c.train.npg.max_iterations, c.train.success_threshold));
  }
  write_text(dir / "summary.csv", format_summary(out.summary));
  write_text(dir / "stats.csv", format_stats(out.summary));
  return out;
}

}  // namespace dexpg
