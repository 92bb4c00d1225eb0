#pragma once

// Experiment orchestration: loading, seed batches, curve files, summaries,
// TLTL/FSPA cross-validation and trajectory rendering.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tlmarl/learning.hpp"

namespace tlmarl {

/// Scenario, automaton and formula loaded together.
struct Problem {
  std::shared_ptr<const Scenario> scenario;
  std::shared_ptr<const Fspa> fspa;
  Formula formula;
  Game game() const { return Game(scenario, fspa); }
};

/// Loads both files; `formula_text` overrides the scenario's formula when
/// non-empty.
Problem load_problem(const std::string& scenario_path, const std::string& fspa_path,
                     const std::string& formula_text = {});

enum class RewardArm { Rho, RhoJ, None, Custom };

std::string to_string(RewardArm arm);
RewardArm arm_from_string(const std::string& s);
/// Weights of an arm; `custom` is returned for RewardArm::Custom.
RewardMix arm_mix(RewardArm arm, const RewardMix& custom = {});

// ---------------------------------------------------------------------------
// Curves

struct CurveRow {
  int episode = 0;
  double normalized_reward = 0.0;
  bool success = false;
  int episode_length = 0;
};

inline constexpr const char* kCurveHeader = "episode,normalized_reward,success,episode_length";

void write_curve_csv(std::ostream& out, const std::vector<EpisodeMetrics>& metrics);
std::vector<CurveRow> read_curve_csv(std::istream& in);

/// Trailing moving average with a window of `window` points (shorter at the
/// start).
std::vector<double> moving_average(const std::vector<double>& xs, int window);

// ---------------------------------------------------------------------------
// Seed runs

struct SeedResult {
  std::uint64_t seed = 0;
  bool converged = false;        // greedy joint policy satisfies the formula
  bool minimal_route = false;    // ... in the fewest feasible steps
  int greedy_length = 0;
  double sampled_success = 0.0;  // stochastic rollouts after training
  double wall_seconds = 0.0;
  std::string error;             // non-empty if the run failed
  std::vector<EpisodeMetrics> metrics;
  Policies policies;
  EpisodeTrace greedy_trace;
};

/// Number of stochastic rollouts behind SeedResult::sampled_success.
inline constexpr int kSampledRollouts = 100;

/// Trains one seed and judges the result. `minimum_steps` < 0 skips the
/// minimal-route check.
SeedResult run_seed(const Problem& problem, TrainConfig config, std::uint64_t seed, int minimum_steps);

struct ExperimentSpec {
  std::string scenario_path;
  std::string fspa_path;
  std::string formula_text;
  RewardArm arm = RewardArm::RhoJ;
  RewardMix custom_mix;
  TrainConfig config;
  std::vector<std::uint64_t> seeds;
  int jobs = 1;
  std::filesystem::path output_dir;
  bool write_checkpoints = true;
};

struct ArmSummary {
  std::string arm;
  std::string learner;
  int runs = 0;
  int converged = 0;
  int minimal = 0;
  int failed = 0;
  double convergence_rate = 0.0;  // converged / runs
  double mean_wall_seconds = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<bool> flags;
  std::vector<int> greedy_lengths;
};

/// Runs every seed of the spec, up to `jobs` at a time, and writes
/// <output_dir>/<arm>/seed_<k>.csv, seed_<k>.policy.json, seed_<k>.trace.jsonl,
/// summary.json and curves.svg. Results are kept in memory only if
/// `keep` is non-null.
ArmSummary run_batch(const ExperimentSpec& spec, std::vector<SeedResult>* keep = nullptr);

/// Subdirectory name of an arm/learner pair.
std::string arm_directory(RewardArm arm, LearnerKind learner);

nlohmann::json summary_to_json(const ArmSummary& s, const ExperimentSpec& spec);
ArmSummary summary_from_json(const nlohmann::json& j);

/// Default output root: $TLMARL_OUT if set, else "runs".
std::filesystem::path default_output_root();

// ---------------------------------------------------------------------------
// Learning-curve statistics

struct CurveStats {
  std::vector<double> mean;      // per-episode mean over runs of the smoothed curve
  std::vector<double> variance;  // per-episode inter-run variance
  double area = 0.0;             // mean of `mean`
  double mean_variance = 0.0;    // mean of `variance`
  int plateau_episode = -1;      // first episode where `mean` reaches the plateau level
};

/// Smooths each run with `window`, then averages across runs. The plateau
/// level is `plateau_fraction` of the final smoothed mean.
CurveStats curve_stats(const std::vector<std::vector<double>>& runs, int window,
                       double plateau_fraction = 0.9);

// ---------------------------------------------------------------------------
// Cross-validation

struct Counterexample {
  std::vector<TeamState> trajectory;
  bool accepted = false;
  double robustness = 0.0;
};

struct ConsistencyReport {
  int samples = 0;
  int accepted = 0;
  std::vector<Counterexample> counterexamples;
};

/// Samples `samples` trajectories of length 1..`max_length` from the initial
/// state (half by uniform joint actions, half by noisy request-visiting
/// walks) and compares FSPA acceptance with robustness > 0. At most `keep`
/// counterexamples carry their trajectory.
ConsistencyReport check_consistency(const Problem& problem, int samples, int max_length, std::uint64_t seed,
                                    std::size_t keep = 5);

/// Whether the automaton run over x_1..x_T (x_0 is not read) ends in F.
bool fspa_accepts(const Scenario& scenario, const Fspa& fspa, const std::vector<TeamState>& trajectory);

std::string describe_trajectory(const Scenario& scenario, const std::vector<TeamState>& trajectory);

// ---------------------------------------------------------------------------
// Rendering

/// Grid picture of request sites, starts and agent paths.
std::string render_ascii(const Scenario& scenario, const EpisodeTrace& trace);
std::string render_svg(const Scenario& scenario, const EpisodeTrace& trace);

struct Series {
  std::string label;
  std::vector<double> mean;
  std::vector<double> spread;  // half-width of the band; may be empty
};

std::string render_curves_svg(const std::vector<Series>& series, const std::string& title);

}  // namespace tlmarl
