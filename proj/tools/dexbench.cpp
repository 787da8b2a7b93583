// Command-line driver for experiments, demos and analyses.
#include <filesystem>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "dexpg/bench/analysis.hpp"

namespace fs = std::filesystem;
using namespace dexpg;

namespace {

constexpr int kConfigExit = 2;
constexpr int kRuntimeExit = 3;

// Shared --config / --set / --<section.key> handling.
struct ConfigFlags {
  std::string path;
  std::vector<std::string> sets;
  std::map<std::string, std::string> direct;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", path, "experiment config file (section.key = value)");
    app->add_option("--set", sets, "override, as section.key=value (repeatable)");
    for (const auto& key : config_keys()) app->add_option("--" + key, direct[key], "config key " + key);
  }

  ExperimentConfig load() const {
    ExperimentConfig c = path.empty() ? ExperimentConfig{} : load_config(path);
    for (const auto& [key, value] : direct)
      if (!value.empty()) apply_override(c, key + "=" + value);
    for (const auto& s : sets) apply_override(c, s);
    return c;
  }
};

void write_csv(const fs::path& dir, const std::string& name, const std::string& text) {
  fs::create_directories(dir);
  write_text(dir / name, text);
  std::cout << text;
  std::cerr << "wrote " << (dir / name).string() << '\n';
}

GaussianPolicy policy_for_analysis(const ExperimentConfig& c, std::ostream* log) {
  if (!c.analysis.policy.empty()) return load_policy(c.analysis.policy);
  std::optional<DemoSet> demos;
  if (c.train.algo == Algo::kDapg) demos = experiment_demos(c);
  return run_cell(c, c.seeds.front(), compute_anchors(c), demos ? &*demos : nullptr, log).train.policy;
}

int report(const std::vector<std::string>& dirs, const std::string& out) {
  // Renormalizes every run against the best DAPG return found among them.
  struct Run {
    fs::path dir;
    ExperimentConfig config;
    Anchors anchors;
    std::vector<CurvePoint> curve;
  };
  std::vector<Run> runs;
  double best_dapg = -INFINITY;
  double best_any = -INFINITY;
  for (const auto& d : dirs) {
    Run r{d, load_config(fs::path(d) / "config.txt"), {}, {}};
    std::istringstream anchors(read_text(fs::path(d) / "anchors.csv"));
    std::string line;
    std::getline(anchors, line);
    std::getline(anchors, line);
    const auto comma = line.find(',');
    r.anchors.random_return = std::stod(line.substr(0, comma));
    r.anchors.best_return = std::stod(line.substr(comma + 1));
    for (auto seed : r.config.seeds) {
      const auto part = parse_curve(read_text(fs::path(d) / ("curve_seed" + std::to_string(seed) + ".csv")));
      r.curve.insert(r.curve.end(), part.begin(), part.end());
    }
    for (const auto& p : r.curve) {
      best_any = std::max(best_any, p.mean_return);
      if (r.config.train.algo == Algo::kDapg) best_dapg = std::max(best_dapg, p.mean_return);
    }
    runs.push_back(std::move(r));
  }
  const double best = std::isfinite(best_dapg) ? best_dapg : best_any;
  std::string table = "run,algo,task,seeds,median_iterations,q1,q3,iteration0_success,final_success\n";
  std::string curves = "run,seed,iteration,env_steps,mean_return,normalized_score,success_rate\n";
  for (const auto& r : runs) {
    const auto summary = parse_summary(read_text(r.dir / "summary.csv"));
    std::vector<double> its, it0, fin;
    for (const auto& s : summary) {
      its.push_back(s.censored_iterations);
      it0.push_back(s.iteration0_success);
      fin.push_back(s.final_success);
    }
    table += r.config.id + ',' + (r.config.train.algo == Algo::kDapg ? "dapg" : "npg") + ',' +
             std::string(to_string(r.config.env.task)) + ',' + std::to_string(summary.size()) + ',' +
             std::to_string(median(its)) + ',' + std::to_string(quantile(its, 0.25)) + ',' +
             std::to_string(quantile(its, 0.75)) + ',' + std::to_string(median(it0)) + ',' +
             std::to_string(median(fin)) + '\n';
    for (const auto& p : normalize_scores(r.curve, r.anchors.random_return, best))
      curves += r.config.id + ',' + std::to_string(p.seed) + ',' + std::to_string(p.iteration) + ',' +
                std::to_string(p.env_steps) + ',' + std::to_string(p.mean_return) + ',' +
                std::to_string(p.normalized_score) + ',' + std::to_string(p.success_rate) + '\n';
  }
  std::cout << table;
  if (!out.empty()) {
    fs::create_directories(out);
    write_text(fs::path(out) / "report.csv", table);
    write_text(fs::path(out) / "curves_normalized.csv", curves);
    std::cerr << "wrote " << out << "/report.csv and curves_normalized.csv\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dexbench: natural policy gradient and DAPG on simulated dexterous-hand tasks"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "suppress per-iteration progress");

  ConfigFlags train_flags;
  bool resume = false;
  auto* train_cmd = app.add_subcommand("train", "run an experiment (all seeds) into its output directory");
  train_flags.attach(train_cmd);
  train_cmd->add_flag("--resume", resume, "continue an existing run directory");

  ConfigFlags eval_flags;
  std::string eval_policy;
  std::uint64_t eval_seed_value = 0;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a saved policy with deterministic rollouts");
  eval_flags.attach(eval_cmd);
  eval_cmd->add_option("--policy", eval_policy, "policy checkpoint")->required();
  eval_cmd->add_option("--eval-seed", eval_seed_value, "evaluation stream seed");

  auto* demos_cmd = app.add_subcommand("demos", "record or verify demonstration files");
  demos_cmd->require_subcommand(1);
  ConfigFlags record_flags, verify_flags;
  std::string record_out, verify_in;
  auto* record_cmd = demos_cmd->add_subcommand("record", "record scripted-expert demonstrations");
  record_flags.attach(record_cmd);
  record_cmd->add_option("-o,--out", record_out, "output file")->required();
  auto* verify_cmd = demos_cmd->add_subcommand("verify", "check a demo file against a config and replay it");
  verify_flags.attach(verify_cmd);
  verify_cmd->add_option("-i,--in", verify_in, "demo file")->required();

  auto* analyze_cmd = app.add_subcommand("analyze", "robustness, actuation, reward and randomization studies");
  analyze_cmd->require_subcommand(1);
  ConfigFlags rob_flags, act_flags, rew_flags, rand_flags;
  auto* rob_cmd = analyze_cmd->add_subcommand("robustness", "success vs initial angle and vs injected noise");
  rob_flags.attach(rob_cmd);
  auto* act_cmd = analyze_cmd->add_subcommand("actuation", "vibration and trained return per actuation scheme");
  act_flags.attach(act_cmd);
  auto* rew_cmd = analyze_cmd->add_subcommand("rewards", "iterations to success per reward variant");
  rew_flags.attach(rew_cmd);
  auto* rand_cmd = analyze_cmd->add_subcommand("randomization", "held-out dynamics success per variant");
  rand_flags.attach(rand_cmd);

  std::vector<std::string> report_dirs;
  std::string report_out;
  auto* report_cmd = app.add_subcommand("report", "tabulate run directories with shared score anchors");
  report_cmd->add_option("runs", report_dirs, "run directories")->required()->check(CLI::ExistingDirectory);
  report_cmd->add_option("-o,--out", report_out, "directory for report.csv and curves_normalized.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  std::ostream* log = quiet ? nullptr : &std::cerr;
  try {
    if (*train_cmd) {
      const ExperimentConfig c = train_flags.load();
      const RunOutput out = run_experiment(c, RunOptions{resume, log});
      std::cout << read_text(out.directory / "summary.csv");
    } else if (*eval_cmd) {
      const ExperimentConfig c = eval_flags.load();
      const GaussianPolicy policy = load_policy(eval_policy);
      EnvModel env(evaluation_env(c));
      if (policy.obs_dim() != env.spec().obs_dim || policy.action_dim() != env.spec().action_dim)
        throw ConfigError("policy dimensions do not match the environment");
      const Evaluation ev = evaluate_policy(env, policy, c.train.eval_rollouts, eval_seed_value);
      std::cout << "success_rate,mean_return\n" << ev.success_rate << ',' << ev.mean_return << '\n';
    } else if (*record_cmd) {
      const ExperimentConfig c = record_flags.load();
      const DemoSet set = collect_demos(training_env(c), c.demos.count, c.demos.wide_init, c.demos.knobs, c.demos.seed);
      save_demos(set, record_out);
      std::cerr << "recorded " << set.count() << " demos (" << set.total_steps() << " steps) to " << record_out << '\n';
    } else if (*verify_cmd) {
      const ExperimentConfig c = verify_flags.load();
      const DemoSet set = load_demos(verify_in, training_env(c));
      EnvConfig replay_env = training_env(c);
      replay_env.wide_init = set.meta.wide_init;
      const ReplayReport r = replay_demos(set, replay_env);
      if (!r.exact) {
        std::cerr << "replay mismatch at trajectory " << r.trajectory << " step " << r.step << '\n';
        return kRuntimeExit;
      }
      std::cout << "ok: " << set.count() << " demos replay exactly\n";
    } else if (*rob_cmd) {
      const ExperimentConfig c = rob_flags.load();
      const GaussianPolicy policy = policy_for_analysis(c, log);
      const EnvConfig env = evaluation_env(c);
      const int n = c.analysis.rollouts;
      write_csv(c.output_dir, "robustness_init_angle.csv",
                format_robustness(RobustnessAxis::kInitAngle,
                                  robustness_sweep(policy, env, RobustnessAxis::kInitAngle, c.analysis.init_angles, n,
                                                   c.seeds.front())));
      write_csv(c.output_dir, "robustness_noise.csv",
                format_robustness(RobustnessAxis::kObsActionNoise,
                                  robustness_sweep(policy, env, RobustnessAxis::kObsActionNoise,
                                                   c.analysis.noise_levels, n, c.seeds.front())));
    } else if (*act_cmd) {
      const ExperimentConfig c = act_flags.load();
      write_csv(c.output_dir, "actuation.csv", format_actuation(actuation_analysis(c)));
    } else if (*rew_cmd) {
      const ExperimentConfig c = rew_flags.load();
      const auto runs = reward_ablation(c);
      std::string curves = "variant," + format_curve({}).substr(0, format_curve({}).size() - 1) + "\n";
      for (const auto& r : runs) {
        const std::string body = format_curve(r.curve);
        std::istringstream in(body);
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) curves += r.variant + ',' + line + '\n';
      }
      fs::create_directories(c.output_dir);
      write_text(c.output_dir / "reward_curves.csv", curves);
      write_csv(c.output_dir, "reward_runs.csv", format_variant_runs(runs));
      write_csv(c.output_dir, "reward_stats.csv", format_variant_stats(runs));
    } else if (*rand_cmd) {
      const ExperimentConfig c = rand_flags.load();
      write_csv(c.output_dir, "randomization.csv", format_randomization(randomization_study(c)));
    } else if (*report_cmd) {
      return report(report_dirs, report_out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeExit;
  }
  return 0;
}
