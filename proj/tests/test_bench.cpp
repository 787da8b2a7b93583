#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "dexpg/bench/analysis.hpp"

using namespace dexpg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) { fs::remove_all(path); }
  ~TempDir() { fs::remove_all(path); }
};

ExperimentConfig tiny(const fs::path& out) {
  ExperimentConfig c;
  c.id = "tiny";
  c.env.horizon = 20;
  c.seeds = {0, 1};
  c.output_dir = out;
  c.train.policy.hidden = {8};
  c.train.baseline.hidden = {8};
  c.train.npg.trajectories = 2;
  c.train.npg.max_iterations = 2;
  c.train.eval_rollouts = 2;
  c.baseline_episodes = 3;
  return c;
}

// Plain sorted-sample quantile for cross-checking.
double lerp_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * (v.size() - 1);
  const std::size_t i = static_cast<std::size_t>(pos);
  if (i + 1 >= v.size()) return v.back();
  return v[i] * (1 - (pos - i)) + v[i + 1] * (pos - i);
}

}  // namespace

TEST_CASE("config parsing is strict") {
  const ExperimentConfig c = parse_config(
      "# comment\n\nexperiment.id = valve_npg\nexperiment.seeds = 3, 4\nenv.task = box\n"
      "env.actuation = torque\nnpg.delta = 0.02\npolicy.hidden = 16,16\nexperiment.algo = dapg\n");
  CHECK(c.id == "valve_npg");
  CHECK(c.seeds == std::vector<std::uint64_t>{3, 4});
  CHECK(c.env.task == Task::kBox);
  CHECK(c.env.actuation == Actuation::kTorque);
  CHECK(c.train.npg.delta == 0.02);
  CHECK(c.train.policy.hidden == std::vector<int>{16, 16});
  CHECK(c.train.algo == Algo::kDapg);

  CHECK_THROWS_AS(parse_config("npg.detla = 0.1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("npg.delta = 0.1\nnpg.delta = 0.2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("npg.delta = fast\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("npg.delta 0.1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("delta = 0.1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("env.fingers = 5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("npg.delta = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("experiment.seeds = 1,,2\n"), ConfigError);
  try {
    parse_config("experiment.id = x\nbogus.key = 1\n", "my.cfg");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("my.cfg:2") != std::string::npos);
  }
}

TEST_CASE("canonical text round-trips and overrides apply") {
  ExperimentConfig c;
  apply_override(c, "npg.delta=0.03");
  apply_override(c, "analysis.noise_levels = 0,2.5");
  apply_override(c, "experiment.best_return=12.5");
  CHECK(c.train.npg.delta == 0.03);
  CHECK(c.analysis.noise_levels == std::vector<double>{0, 2.5});
  const std::string text = to_text(c);
  CHECK(to_text(parse_config(text)) == text);
  CHECK(*parse_config(text).best_return == 12.5);
  CHECK(to_text(parse_config("")) == to_text(ExperimentConfig{}));
  CHECK_THROWS_AS(apply_override(c, "npg.delta"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "nope.x=1"), ConfigError);
  CHECK(config_keys().size() > 60);
}

TEST_CASE("score normalization") {
  std::vector<CurvePoint> curve(3);
  curve[0].mean_return = -10;
  curve[1].mean_return = 30;
  curve[2].mean_return = 10;
  const auto n = normalize_scores(curve, -10, 30);
  CHECK(n[0].normalized_score == 0.0);
  CHECK(n[1].normalized_score == 1.0);
  CHECK(n[2].normalized_score == doctest::Approx(0.5));
  const auto twice = normalize_scores(n, -10, 30);
  for (std::size_t i = 0; i < 3; ++i) CHECK(twice[i].normalized_score == n[i].normalized_score);
  CHECK_THROWS_AS(normalize_scores(curve, 5, 5), ConfigError);
}

TEST_CASE("quantiles and curve summaries") {
  const std::vector<double> v{5, 1, 4, 2, 3, 9};
  for (double p : {0.0, 0.25, 0.5, 0.75, 1.0}) CHECK(quantile(v, p) == doctest::Approx(lerp_quantile(v, p)));
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 2, 3}) == 2.5);
  CHECK_THROWS(median({}));

  std::vector<CurvePoint> c(4);
  for (int i = 0; i < 4; ++i) {
    c[i].seed = 7;
    c[i].iteration = i;
    c[i].success_rate = i == 2 ? 1.0 : 0.5;
  }
  SeedSummary s = summarize_curve(c, 10);
  CHECK(s.iterations_to_success == 2);
  CHECK(s.censored_iterations == 2);
  CHECK(s.iteration0_success == 0.5);
  c[2].success_rate = 0.9;
  s = summarize_curve(c, 10);
  CHECK(s.iterations_to_success == -1);
  CHECK(s.censored_iterations == 11);
  CHECK(parse_curve(format_curve(c)).size() == 4);
  CHECK(format_curve(parse_curve(format_curve(c))) == format_curve(c));
  CHECK(format_summary(parse_summary(format_summary({s}))) == format_summary({s}));
}

TEST_CASE("run_experiment writes reproducible artifacts") {
  TempDir a("dexpg_bench_a"), b("dexpg_bench_b");
  const ExperimentConfig ca = tiny(a.path);
  const RunOutput out = run_experiment(ca);
  CHECK(out.summary.size() == 2);
  for (const char* f : {"config.txt", "anchors.csv", "curve_seed0.csv", "curve_seed1.csv", "policy_seed0.bin",
                        "policy_seed0_best.bin", "summary.csv", "stats.csv", "timing.log"})
    CHECK(fs::exists(a.path / f));
  const auto curve = parse_curve(read_text(a.path / "curve_seed1.csv"));
  REQUIRE(curve.size() == 3);
  for (std::size_t i = 1; i < curve.size(); ++i) {
    CHECK(curve[i].env_steps > curve[i - 1].env_steps);
    CHECK(curve[i].wallclock_s == doctest::Approx(curve[i].env_steps * ca.env.dt));
    CHECK(curve[i].seed == 1);
  }

  // same config elsewhere: byte-identical CSVs
  ExperimentConfig cb = ca;
  cb.output_dir = b.path;
  run_experiment(cb);
  for (const char* f : {"curve_seed0.csv", "curve_seed1.csv", "summary.csv", "stats.csv", "anchors.csv"})
    CHECK(read_text(a.path / f) == read_text(b.path / f));

  // stats agree with an independent recomputation from the curve files
  std::vector<double> finals;
  for (int s = 0; s < 2; ++s)
    finals.push_back(parse_curve(read_text(a.path / ("curve_seed" + std::to_string(s) + ".csv"))).back().mean_return);
  const auto rows = parse_summary(read_text(a.path / "summary.csv"));
  CHECK(rows[0].final_return == finals[0]);
  CHECK(read_text(a.path / "stats.csv") == format_stats(rows));
  CHECK(lerp_quantile(finals, 0.5) == doctest::Approx(median(finals)).epsilon(1e-15));

  CHECK_THROWS_AS(run_experiment(ca), RunError);
  // resume reruns the missing seed and reproduces it
  const std::string seed1 = read_text(a.path / "curve_seed1.csv");
  fs::remove(a.path / "curve_seed1.csv");
  run_experiment(ca, RunOptions{true, nullptr});
  CHECK(read_text(a.path / "curve_seed1.csv") == seed1);
  ExperimentConfig changed = ca;
  changed.train.npg.delta = 0.02;
  CHECK_THROWS_AS(run_experiment(changed, RunOptions{true, nullptr}), ConfigError);
}

TEST_CASE("DAPG run records demos and its BC-only first point") {
  TempDir d("dexpg_bench_dapg");
  ExperimentConfig c = tiny(d.path);
  c.env.horizon = 100;
  c.seeds = {0};
  c.train.algo = Algo::kDapg;
  c.train.npg.max_iterations = 1;
  c.demos.count = 2;
  const RunOutput out = run_experiment(c);
  CHECK(fs::exists(d.path / "demos.dexdemo"));
  CHECK(load_demos(d.path / "demos.dexdemo", c.env).count() == 2);
  const auto curve = parse_curve(read_text(d.path / "curve_seed0.csv"));
  CHECK(curve.front().iteration == 0);
  CHECK(out.summary[0].iteration0_success == curve.front().success_rate);
}

TEST_CASE("robustness null perturbations equal the standard evaluation") {
  Rng rng(2);
  EnvConfig env;
  env.wide_init = true;
  const GaussianPolicy p(14, 6, PolicyConfig{}, rng);
  EnvModel model(env);
  const Evaluation ev = evaluate_policy(model, p, 4, 99);
  const auto noise = robustness_sweep(p, env, RobustnessAxis::kObsActionNoise, {0, 10}, 4, 99);
  CHECK(noise[0].mean_return == ev.mean_return);
  CHECK(noise[0].success_rate == ev.success_rate);
  CHECK(noise[1].mean_return != ev.mean_return);
  env.wide_init = false;
  EnvModel fixed(env);
  const Evaluation ev0 = evaluate_policy(fixed, p, 4, 99);
  const auto angle = robustness_sweep(p, env, RobustnessAxis::kInitAngle, {-15, 0, 15}, 4, 99);
  CHECK(angle[1].mean_return == ev0.mean_return);
  CHECK(angle[0].mean_return != ev0.mean_return);
  CHECK_THROWS_AS(robustness_sweep(p, env, RobustnessAxis::kInitAngle, {}, 4, 99), ConfigError);
  EnvConfig door;
  door.task = Task::kDoor;
  const GaussianPolicy pd(15, 7, PolicyConfig{}, rng);
  CHECK_THROWS_AS(robustness_sweep(pd, door, RobustnessAxis::kInitAngle, {0}, 1, 1), ConfigError);
  const DenseVec r = observation_ranges(env);
  CHECK(r.size() == 14);
  CHECK(r[0] == doctest::Approx(std::acos(-1.0)));
  CHECK(r[13] == 2.0);
}

TEST_CASE("actuation vibration metric") {
  EnvConfig env;
  CHECK(rollout_vibration(env, 5, 3) == rollout_vibration(env, 5, 3));
  ExperimentConfig c;
  c.analysis.train = false;
  const auto rows = actuation_analysis(c);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    CHECK(r.vibration_samples.size() == 20);
    CHECK(r.vibration_score == doctest::Approx(1.0 / (1.0 + r.raw_vibration)));
    CHECK(std::isnan(r.trained_return));
  }
  CHECK(actuation_analysis(c)[2].raw_vibration == rows[2].raw_vibration);
  CHECK(format_actuation(rows).rfind("scheme,raw_vibration", 0) == 0);
}

TEST_CASE("held-out dynamics band") {
  AnalysisOptions a;
  Rng rng(1);
  bool low = false, high = false;
  for (int i = 0; i < 2000; ++i) {
    const double s = sample_heldout(a, rng);
    const bool in_low = s >= 0.7 && s <= 0.9, in_high = s >= 1.1 && s <= 1.3;
    CHECK((in_low || in_high));
    low |= in_low;
    high |= in_high;
  }
  CHECK((low && high));
  a.heldout_low = {0.9, 0.7};
  CHECK_THROWS_AS(sample_heldout(a, rng), ConfigError);
}

TEST_CASE("study preconditions and small end-to-end studies") {
  TempDir d("dexpg_bench_studies");
  ExperimentConfig c = tiny(d.path);
  c.seeds = {0};
  c.train.npg.max_iterations = 1;
  c.analysis.rollouts = 3;
  c.env.task = Task::kDoor;
  CHECK_THROWS_AS(reward_ablation(c), ConfigError);
  CHECK_THROWS_AS(randomization_study(c), ConfigError);
  c.env.task = Task::kBox;
  CHECK_THROWS_AS(randomization_study(c), ConfigError);

  c.env.task = Task::kValve;
  const auto runs = reward_ablation(c);
  REQUIRE(runs.size() == 3);
  CHECK(runs[0].variant == "r1");
  CHECK(runs[2].variant == "r3");
  CHECK(format_variant_stats(runs).find("r2,") != std::string::npos);

  const auto rows = randomization_study(c);
  REQUIRE(rows.size() == 3);
  // variant A at nominal dynamics repeats the final training evaluation
  ExperimentConfig a = c;
  const CellResult cell = run_cell(a, 0, Anchors{0, 1}, nullptr);
  CHECK(rows[0].nominal_success == cell.curve.back().success_rate);
}
