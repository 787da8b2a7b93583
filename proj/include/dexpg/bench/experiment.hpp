#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dexpg/bench/config.hpp"

namespace dexpg {

class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CurvePoint {
  std::uint64_t seed = 0;
  int iteration = 0;
  long long env_steps = 0;
  double mean_return = 0.0;
  double normalized_score = 0.0;
  double success_rate = 0.0;
  double kl = 0.0;
  double wallclock_s = 0.0;  // simulated seconds: env_steps * dt
};

struct Anchors {
  double random_return = 0.0;
  double best_return = 1.0;
};

double normalize_score(double value, const Anchors& anchors);
// Rewrites normalized_score from mean_return. Throws ConfigError when the
// anchors coincide.
std::vector<CurvePoint> normalize_scores(std::vector<CurvePoint> curve, double random_baseline,
                                         double best_score);

std::string format_curve(const std::vector<CurvePoint>& curve);
std::vector<CurvePoint> parse_curve(const std::string& text);

// Mean return of the noise-free expert at full speed (valve/box) or of a
// per-step reward bound (door), on the evaluation reset distribution.
double reference_best_return(const EnvConfig& eval_env, int episodes);
Anchors compute_anchors(const ExperimentConfig& config);

struct SeedSummary {
  std::uint64_t seed = 0;
  int iterations_to_success = -1;  // -1 when never reached
  int censored_iterations = 0;     // K + 1 when never reached
  double iteration0_success = 0.0;
  double final_success = 0.0;
  double final_return = 0.0;
  double final_score = 0.0;
};

SeedSummary summarize_curve(const std::vector<CurvePoint>& curve, int max_iterations,
                            double success_threshold = 1.0);

// Type-7 quantile (linear interpolation between order statistics).
double quantile(std::vector<double> values, double p);
double median(std::vector<double> values);

std::string format_summary(const std::vector<SeedSummary>& rows);
std::vector<SeedSummary> parse_summary(const std::string& text);
// median, q1 and q3 of each summary column.
std::string format_stats(const std::vector<SeedSummary>& rows);

// Environment configs actually used for training and evaluation.
EnvConfig training_env(const ExperimentConfig& config);
EnvConfig evaluation_env(const ExperimentConfig& config);

// Loads demos from config.demos.path or records them with the scripted expert.
DemoSet experiment_demos(const ExperimentConfig& config);

struct RunOptions {
  bool resume = false;
  std::ostream* log = nullptr;  // per-iteration progress lines
};

struct RunOutput {
  std::filesystem::path directory;
  Anchors anchors;
  std::vector<SeedSummary> summary;
};

// Artifacts in config.output_dir:
//   config.txt              canonical config
//   anchors.csv             normalization anchors
//   curve_seed<S>.csv       learning curve per seed
//   policy_seed<S>.bin      final policy;  policy_seed<S>_best.bin  best evaluation so far
//   summary.csv, stats.csv  per-seed results and their median / IQR
//   timing.log              real compute time (not reproducible, kept apart)
// An existing run directory is reused only with options.resume; seeds whose
// curve file is complete are kept, the rest rerun from scratch.
RunOutput run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

// Trains one (config, seed) cell in memory without touching the filesystem.
struct CellResult {
  TrainResult train;
  std::vector<CurvePoint> curve;
};
CellResult run_cell(const ExperimentConfig& config, std::uint64_t seed, const Anchors& anchors,
                    const DemoSet* demos, std::ostream* log = nullptr,
                    const std::filesystem::path& best_checkpoint = {});

std::string read_text(const std::filesystem::path& path);
// Writes through a temporary file and a rename so readers never see a partial file.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace dexpg
