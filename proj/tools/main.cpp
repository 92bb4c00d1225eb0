// tlmarl: command-line front end.
//
//   tlmarl validate --scenario S --fspa F [--formula TEXT]
//   tlmarl train    --scenario S --fspa F [--arm rho+J] [--seed 1] ...
//   tlmarl batch    --scenario S --fspa F --arm none --seeds 1-50 --jobs 8 ...
//   tlmarl evaluate --scenario S --fspa F --checkpoint P [--episodes 1]
//   tlmarl energy   --scenario S --fspa F
//
// Exit status: 0 on success, 1 when validation finds an inconsistency or a
// seed run fails, 2 on usage or load errors.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <thread>

#include "tlmarl/harness.hpp"

using namespace tlmarl;

namespace {

struct Paths {
  std::string scenario;
  std::string fspa;
  std::string formula;
};

void add_paths(CLI::App* cmd, Paths& p, bool need_formula_flag = true) {
  cmd->add_option("--scenario", p.scenario, "scenario JSON")->required()->check(CLI::ExistingFile);
  cmd->add_option("--fspa", p.fspa, "automaton JSON")->required()->check(CLI::ExistingFile);
  if (need_formula_flag) cmd->add_option("--formula", p.formula, "TLTL formula (overrides the scenario's)");
}

struct TrainFlags {
  TrainConfig config;
  std::string arm = "rho+J";
  std::string learner = "policy-graph";
  std::string encoding = "compass";
  double lambda_rho = 1.0;
  double lambda_j = 1.0;
  std::string out;
  bool no_checkpoints = false;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  auto& c = f.config;
  cmd->add_option("--arm", f.arm, "reward arm: rho, rho+J, none, custom")->capture_default_str();
  cmd->add_option("--learner", f.learner, "policy-graph or q-memoryless")->capture_default_str();
  cmd->add_option("--encoding", f.encoding, "action encoding: compass or vertex")->capture_default_str();
  cmd->add_option("--episodes", c.episodes, "training episodes")->capture_default_str();
  cmd->add_option("--horizon", c.horizon, "episode horizon (0: scenario's)")->capture_default_str();
  cmd->add_option("--gamma", c.gamma, "discount factor")->capture_default_str();
  cmd->add_option("--alpha", c.alpha, "learning rate")->capture_default_str();
  cmd->add_option("--theta", c.temperature, "softmax temperature")->capture_default_str();
  cmd->add_option("--nodes,-N", c.nodes, "policy-graph internal states")->capture_default_str();
  cmd->add_option("--lambda-rho", f.lambda_rho, "weight of r_rho (custom arm)")->capture_default_str();
  cmd->add_option("--lambda-J", f.lambda_j, "weight of r_J (custom arm)")->capture_default_str();
  cmd->add_option("--trace-decay", c.trace_decay, "eligibility-trace decay in (0, 1]")->capture_default_str();
  cmd->add_option("--trap-penalty", c.trap_penalty, "r_J magnitude on entering a trap")->capture_default_str();
  cmd->add_option("--q-alpha", c.q_alpha, "Q-learning step size")->capture_default_str();
  cmd->add_option("--out,-o", f.out, "output root (default $TLMARL_OUT or ./runs)");
  cmd->add_flag("--no-checkpoints", f.no_checkpoints, "skip policy and trace files");
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    const auto dash = part.find('-');
    if (dash == std::string::npos) {
      seeds.push_back(std::stoull(part));
    } else {
      const auto lo = std::stoull(part.substr(0, dash));
      const auto hi = std::stoull(part.substr(dash + 1));
      if (hi < lo) throw std::invalid_argument("empty seed range '" + part + "'");
      for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    }
  }
  if (seeds.empty()) throw std::invalid_argument("no seeds given");
  return seeds;
}

ExperimentSpec make_spec(const Paths& p, const TrainFlags& f, std::vector<std::uint64_t> seeds, int jobs) {
  ExperimentSpec spec;
  spec.scenario_path = p.scenario;
  spec.fspa_path = p.fspa;
  spec.formula_text = p.formula;
  spec.arm = arm_from_string(f.arm);
  spec.custom_mix = {f.lambda_rho, f.lambda_j};
  spec.config = f.config;
  spec.config.learner = learner_from_string(f.learner);
  spec.config.encoding = action_encoding_from_string(f.encoding);
  spec.seeds = std::move(seeds);
  spec.jobs = jobs;
  spec.output_dir = f.out.empty() ? default_output_root() : std::filesystem::path(f.out);
  spec.write_checkpoints = !f.no_checkpoints;
  return spec;
}

int report_batch(const ExperimentSpec& spec, const ArmSummary& s) {
  nlohmann::json j = summary_to_json(s, spec);
  j["directory"] = (spec.output_dir / arm_directory(spec.arm, spec.config.learner)).string();
  std::cout << j.dump(1) << '\n';
  return s.failed ? 1 : 0;
}

std::string energy_text(double j) {
  if (j == kInfiniteEnergy) return "inf";
  std::ostringstream out;
  out << j;
  return out.str();
}

int cmd_validate(const Paths& p, int samples, int max_length, std::uint64_t seed) {
  const Problem problem = load_problem(p.scenario, p.fspa, p.formula);
  nlohmann::json out;
  out["scenario"] = p.scenario;
  out["fspa"] = p.fspa;
  out["formula"] = problem.scenario->formula_text();
  out["warnings"] = problem.fspa->warnings();

  const ConsistencyReport report = check_consistency(problem, samples, max_length, seed);
  out["samples"] = report.samples;
  out["accepted"] = report.accepted;
  out["counterexamples"] = report.counterexamples.size();
  nlohmann::json witnesses = nlohmann::json::array();
  for (const auto& ce : report.counterexamples) {
    if (ce.trajectory.empty()) continue;
    nlohmann::json w;
    w["fspa_accepts"] = ce.accepted;
    w["robustness"] = ce.robustness;
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& x : ce.trajectory) {
      nlohmann::json done = nlohmann::json::array();
      for (std::size_t r = 0; r < problem.scenario->requests().size(); ++r) {
        if (x.completed.contains(static_cast<int>(r))) done.push_back(problem.scenario->requests()[r].id);
      }
      steps.push_back({{"positions", x.positions}, {"completed", done}});
    }
    w["trajectory"] = steps;
    witnesses.push_back(std::move(w));
  }
  out["witnesses"] = witnesses;
  const bool ok = report.counterexamples.empty();
  out["status"] = ok ? "consistent" : "inconsistent";
  std::cout << out.dump(1) << '\n';
  return ok ? 0 : 1;
}

int cmd_evaluate(const Paths& p, const std::string& checkpoint, int episodes, bool stochastic,
                 std::uint64_t seed, const std::string& out_dir, bool quiet) {
  const Problem problem = load_problem(p.scenario, p.fspa, p.formula);
  std::ifstream in(checkpoint);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + checkpoint + "'");
  const Policies policies = Policies::from_json(nlohmann::json::parse(in));
  const Game game = problem.game();
  const EvaluationReport report = evaluate(game, problem.formula, policies, episodes, !stochastic, seed);

  const std::filesystem::path dir = 
      out_dir.empty() ? std::filesystem::path(checkpoint).parent_path() : std::filesystem::path(out_dir);
  if (!dir.empty()) std::filesystem::create_directories(dir);
  const std::string stem = std::filesystem::path(checkpoint).stem().stem().string();

  nlohmann::json summary;
  summary["episodes"] = report.episodes;
  summary["successes"] = report.successes;
  summary["satisfied"] = report.satisfied;
  summary["inconsistent"] = report.inconsistent;
  summary["lengths"] = report.lengths;
  nlohmann::json rollouts = nlohmann::json::array();
  for (int e = 0; e < report.episodes; ++e) {
    const auto& trace = report.traces[e];
    const auto base = dir / (stem + ".eval_" + std::to_string(e));
    {
      std::ofstream t(base.string() + ".trace.jsonl");
      write_trace_jsonl(t, game, trace);
      std::ofstream svg(base.string() + ".svg");
      svg << render_svg(*problem.scenario, trace);
    }
    const auto traj = team_trajectory(trace);
    const auto acts = joint_actions(trace);
    nlohmann::json plans = nlohmann::json::array();
    for (const auto& plan : extract_ms_plans(*problem.scenario, traj, acts)) {
      nlohmann::json steps = nlohmann::json::array();
      for (const auto& z : plan) {
        steps.push_back({{"vertex", z.vertex},
                         {"service", z.service ? nlohmann::json(problem.scenario->requests()[*z.service].id)
                                               : nlohmann::json(nullptr)}});
      }
      plans.push_back(steps);
    }
    const bool sat = satisfies(problem.scenario->signal(traj), problem.formula);
    double reward = 0.0;
    for (const auto& step : trace) reward += step.outcome.base_reward;
    rollouts.push_back({{"episode", e},
                        {"length", static_cast<int>(trace.size())},
                        {"satisfied", sat},
                        {"success", trace.back().outcome.success},
                        {"base_reward", reward},
                        {"ms_plans", plans},
                        {"trace", base.string() + ".trace.jsonl"}});
    if (!quiet) {
      std::cerr << "episode " << e << ": " << trace.size() << " steps, "
                << (sat ? "satisfies" : "does NOT satisfy") << " the formula\n"
                << render_ascii(*problem.scenario, trace);
    }
  }
  summary["rollouts"] = rollouts;
  std::cout << summary.dump(1) << '\n';
  // An unsatisfying rollout is reported, not an error.
  return report.inconsistent ? 1 : 0;
}

int cmd_energy(const Paths& p) {
  const Problem problem = load_problem(p.scenario, p.fspa, p.formula);
  const Fspa& fspa = *problem.fspa;
  std::cout << std::left << std::setw(10) << "state" << std::setw(10) << "J" << "role\n";
  for (FspaState q = 0; q < static_cast<FspaState>(fspa.size()); ++q) {
    std::string role;
    if (q == fspa.initial()) role += "initial ";
    if (fspa.is_final(q)) role += "final ";
    if (fspa.is_trap(q)) role += "trap ";
    if (fspa.energy()[q] == kInfiniteEnergy && !fspa.is_trap(q)) role += "dead ";
    std::cout << std::setw(10) << fspa.name(q) << std::setw(10) << energy_text(fspa.energy()[q]) << role << '\n';
  }
  for (const auto& w : fspa.warnings()) std::cerr << "warning: " << w << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent policy synthesis from temporal-logic missions"};
  app.require_subcommand(1);

  Paths vpaths;
  int samples = 10000;
  int max_length = 20;
  std::uint64_t vseed = 1;
  auto* validate = app.add_subcommand("validate", "check files and FSPA/formula agreement");
  add_paths(validate, vpaths);
  validate->add_option("--samples", samples, "random trajectories")->capture_default_str();
  validate->add_option("--max-length", max_length, "longest sampled trajectory")->capture_default_str();
  validate->add_option("--seed", vseed, "sampling seed")->capture_default_str();

  Paths tpaths;
  TrainFlags tflags;
  std::uint64_t tseed = 1;
  auto* train_cmd = app.add_subcommand("train", "train one seed");
  add_paths(train_cmd, tpaths);
  add_train_flags(train_cmd, tflags);
  train_cmd->add_option("--seed", tseed, "experiment seed")->capture_default_str();

  Paths bpaths;
  TrainFlags bflags;
  std::string seeds = "1-50";
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  auto* batch = app.add_subcommand("batch", "train many seeds of one arm");
  add_paths(batch, bpaths);
  add_train_flags(batch, bflags);
  batch->add_option("--seeds", seeds, "seed list, e.g. 1-50 or 3,7,9")->capture_default_str();
  batch->add_option("--jobs,-j", jobs, "concurrent seed runs")->capture_default_str();

  Paths epaths;
  std::string checkpoint;
  int episodes = 1;
  bool stochastic = false;
  bool quiet = false;
  std::uint64_t eseed = 1;
  std::string eout;
  auto* eval = app.add_subcommand("evaluate", "roll out a checkpoint and draw its routes");
  add_paths(eval, epaths);
  eval->add_option("--checkpoint", checkpoint, "policy checkpoint JSON")->required()->check(CLI::ExistingFile);
  eval->add_option("--episodes", episodes, "rollouts")->capture_default_str();
  eval->add_flag("--stochastic", stochastic, "sample actions instead of taking the argmax");
  eval->add_option("--seed", eseed, "rollout seed (stochastic mode)")->capture_default_str();
  eval->add_option("--out,-o", eout, "directory for traces and SVGs (default: checkpoint's)");
  eval->add_flag("--quiet,-q", quiet, "no ASCII rendering on stderr");

  Paths gpaths;
  auto* energy = app.add_subcommand("energy", "print the automaton's energy table");
  add_paths(energy, gpaths, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*validate) return cmd_validate(vpaths, samples, max_length, vseed);
    if (*train_cmd) {
      const ExperimentSpec spec = make_spec(tpaths, tflags, {tseed}, 1);
      return report_batch(spec, run_batch(spec));
    }
    if (*batch) {
      const ExperimentSpec spec = make_spec(bpaths, bflags, parse_seeds(seeds), jobs);
      return report_batch(spec, run_batch(spec));
    }
    if (*eval) return cmd_evaluate(epaths, checkpoint, episodes, stochastic, eseed, eout, quiet);
    if (*energy) return cmd_energy(gpaths);
  } catch (const std::exception& e) {
    nlohmann::json err{{"status", "error"}, {"message", e.what()}};
    std::cout << err.dump() << '\n';
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
