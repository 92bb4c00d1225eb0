#include "tlmarl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace tlmarl {

Problem load_problem(const std::string& scenario_path, const std::string& fspa_path,
                     const std::string& formula_text) {
  auto scenario = std::make_shared<Scenario>(Scenario::load(scenario_path));
  auto fspa = std::make_shared<Fspa>(Fspa::load(fspa_path, scenario->predicates()));
  const std::string text = formula_text.empty() ? scenario->formula_text() : formula_text;
  if (text.empty()) throw ScenarioError("no formula given and the scenario declares none");
  Formula phi = parse_formula(text, scenario->predicates());
  if (!formula_text.empty()) scenario->set_formula_text(formula_text);
  return {std::move(scenario), std::move(fspa), std::move(phi)};
}

std::string to_string(RewardArm arm) {
  switch (arm) {
    case RewardArm::Rho:
      return "rho";
    case RewardArm::RhoJ:
      return "rho+J";
    case RewardArm::None:
      return "none";
    case RewardArm::Custom:
      return "custom";
  }
  return "custom";
}

RewardArm arm_from_string(const std::string& s) {
  if (s == "rho") return RewardArm::Rho;
  if (s == "rho+J" || s == "rho+j") return RewardArm::RhoJ;
  if (s == "none") return RewardArm::None;
  if (s == "custom") return RewardArm::Custom;
  throw std::invalid_argument("unknown reward arm '" + s + "' (rho, rho+J, none, custom)");
}

RewardMix arm_mix(RewardArm arm, const RewardMix& custom) {
  switch (arm) {
    case RewardArm::Rho:
      return {1.0, 0.0};
    case RewardArm::RhoJ:
      return {1.0, 1.0};
    case RewardArm::None:
      return {0.0, 0.0};
    case RewardArm::Custom:
      return custom;
  }
  return custom;
}

// ---------------------------------------------------------------------------
// Curves

namespace {

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

void write_curve_csv(std::ostream& out, const std::vector<EpisodeMetrics>& metrics) {
  out << kCurveHeader << '\n';
  for (std::size_t e = 0; e < metrics.size(); ++e) {
    const auto& m = metrics[e];
    out << e << ',' << format_double(m.normalized_reward) << ',' << (m.success ? 1 : 0) << ',' << m.length
        << '\n';
  }
}

std::vector<CurveRow> read_curve_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCurveHeader) {
    throw std::runtime_error("curve file does not start with '" + std::string(kCurveHeader) + "'");
  }
  std::vector<CurveRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string cell[4];
    for (auto& c : cell) {
      if (!std::getline(fields, c, ',')) throw std::runtime_error("short curve row: " + line);
    }
    CurveRow row;
    row.episode = std::stoi(cell[0]);
    row.normalized_reward = std::stod(cell[1]);
    row.success = cell[2] == "1";
    row.episode_length = std::stoi(cell[3]);
    rows.push_back(row);
  }
  return rows;
}

std::vector<double> moving_average(const std::vector<double>& xs, int window) {
  if (window < 1) throw std::invalid_argument("moving-average window must be positive");
  std::vector<double> out(xs.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sum += xs[k];
    if (k >= static_cast<std::size_t>(window)) sum -= xs[k - window];
    out[k] = sum / static_cast<double>(std::min<std::size_t>(k + 1, window));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Seed runs

SeedResult run_seed(const Problem& problem, TrainConfig config, std::uint64_t seed, int minimum_steps) {
  SeedResult r;
  r.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  try {
    config.seed = seed;
    const Game game = problem.game();
    TrainResult trained = train(game, config);
    r.metrics = std::move(trained.metrics);
    r.policies = std::move(trained.policies);

    EvaluationReport greedy = evaluate(game, problem.formula, r.policies, 1, true, seed);
    r.converged = greedy.satisfied == 1;
    r.greedy_length = greedy.lengths.front();
    r.greedy_trace = std::move(greedy.traces.front());
    r.minimal_route = r.converged && minimum_steps >= 0 && r.greedy_length == minimum_steps;
    if (greedy.inconsistent) r.error = "greedy rollout: automaton and formula disagree";

    EvaluationReport sampled =
        evaluate(game, problem.formula, r.policies, kSampledRollouts, false, derive_seed(seed, 77));
    r.sampled_success = sampled.success_rate();
    if (sampled.inconsistent && r.error.empty()) r.error = "sampled rollout: automaton and formula disagree";
  } catch (const std::exception& e) {
    r.error = e.what();
    r.converged = false;
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::string arm_directory(RewardArm arm, LearnerKind learner) {
  const std::string name = to_string(arm);
  return learner == LearnerKind::QMemoryless ? "q-memoryless_" + name : name;
}

std::filesystem::path default_output_root() {
  const char* env = std::getenv("TLMARL_OUT");
  return env && *env ? std::filesystem::path(env) : std::filesystem::path("runs");
}

nlohmann::json summary_to_json(const ArmSummary& s, const ExperimentSpec& spec) {
  nlohmann::json j;
  j["arm"] = s.arm;
  j["learner"] = s.learner;
  j["runs"] = s.runs;
  j["converged"] = s.converged;
  j["minimal_route"] = s.minimal;
  j["failed"] = s.failed;
  j["convergence_rate"] = s.convergence_rate;
  j["mean_wall_seconds"] = s.mean_wall_seconds;
  j["seeds"] = s.seeds;
  j["flags"] = s.flags;
  j["greedy_lengths"] = s.greedy_lengths;
  j["scenario"] = spec.scenario_path;
  j["fspa"] = spec.fspa_path;
  j["config"] = spec.config.to_json();
  j["note"] = "convergence: the greedy joint policy after training satisfies the formula; " +
              std::to_string(s.runs) + " seeds per arm";
  return j;
}

ArmSummary summary_from_json(const nlohmann::json& j) {
  ArmSummary s;
  s.arm = j.at("arm").get<std::string>();
  s.learner = j.at("learner").get<std::string>();
  s.runs = j.at("runs").get<int>();
  s.converged = j.at("converged").get<int>();
  s.minimal = j.at("minimal_route").get<int>();
  s.failed = j.at("failed").get<int>();
  s.convergence_rate = j.at("convergence_rate").get<double>();
  s.mean_wall_seconds = j.at("mean_wall_seconds").get<double>();
  s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  s.flags = j.at("flags").get<std::vector<bool>>();
  s.greedy_lengths = j.at("greedy_lengths").get<std::vector<int>>();
  return s;
}

ArmSummary run_batch(const ExperimentSpec& spec, std::vector<SeedResult>* keep) {
  if (spec.seeds.empty()) throw std::invalid_argument("experiment needs at least one seed");
  const Problem problem = load_problem(spec.scenario_path, spec.fspa_path, spec.formula_text);
  TrainConfig config = spec.config;
  config.mix = arm_mix(spec.arm, spec.custom_mix);
  config.validate();

  const Game game = problem.game();
  const int horizon = config.horizon > 0 ? std::min(config.horizon, game.horizon()) : game.horizon();
  const int minimum_steps = minimum_accepting_steps(game, std::min(horizon, 20));

  const std::filesystem::path dir = spec.output_dir / arm_directory(spec.arm, config.learner);
  std::filesystem::create_directories(dir);

  std::vector<SeedResult> results(spec.seeds.size());
  std::atomic<std::size_t> next{0};
  std::mutex io;
  auto worker = [&] {
    for (std::size_t k = next++; k < spec.seeds.size(); k = next++) {
      SeedResult r = run_seed(problem, config, spec.seeds[k], minimum_steps);
      const std::string stem = "seed_" + std::to_string(r.seed);
      {
        std::ofstream csv(dir / (stem + ".csv"));
        write_curve_csv(csv, r.metrics);
      }
      if (spec.write_checkpoints && r.error.empty()) {
        std::ofstream ckpt(dir / (stem + ".policy.json"));
        ckpt << r.policies.to_json().dump(1) << '\n';
        std::ofstream trace(dir / (stem + ".trace.jsonl"));
        write_trace_jsonl(trace, game, r.greedy_trace);
      }
      for (auto& m : r.metrics) m.q_trajectory = {};
      std::lock_guard lock(io);
      results[k] = std::move(r);
    }
  };
  const int jobs = std::max(1, std::min<int>(spec.jobs, static_cast<int>(spec.seeds.size())));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  ArmSummary s;
  s.arm = to_string(spec.arm);
  s.learner = to_string(config.learner);
  s.runs = static_cast<int>(results.size());
  double wall = 0.0;
  std::vector<std::vector<double>> curves;
  for (const auto& r : results) {
    s.seeds.push_back(r.seed);
    s.flags.push_back(r.converged);
    s.greedy_lengths.push_back(r.greedy_length);
    s.converged += r.converged;
    s.minimal += r.minimal_route;
    s.failed += !r.error.empty();
    wall += r.wall_seconds;
    std::vector<double> curve;
    curve.reserve(r.metrics.size());
    for (const auto& m : r.metrics) curve.push_back(m.normalized_reward);
    curves.push_back(std::move(curve));
  }
  s.convergence_rate = static_cast<double>(s.converged) / s.runs;
  s.mean_wall_seconds = wall / s.runs;

  {
    std::ofstream out(dir / "summary.json");
    out << summary_to_json(s, spec).dump(1) << '\n';
  }
  if (!curves.front().empty()) {
    const CurveStats stats = curve_stats(curves, 100);
    Series series{s.arm, stats.mean, {}};
    for (double v : stats.variance) series.spread.push_back(std::sqrt(v));
    std::ofstream svg(dir / "curves.svg");
    svg << render_curves_svg({series}, "normalized reward, " + s.arm + " (" + s.learner + ")");
  }
  if (keep) *keep = std::move(results);
  return s;
}

// ---------------------------------------------------------------------------
// Learning-curve statistics

CurveStats curve_stats(const std::vector<std::vector<double>>& runs, int window, double plateau_fraction) {
  CurveStats st;
  if (runs.empty()) return st;
  const std::size_t len = runs.front().size();
  for (const auto& r : runs) {
    if (r.size() != len) throw std::invalid_argument("curves of different lengths");
  }
  std::vector<std::vector<double>> smooth;
  for (const auto& r : runs) smooth.push_back(moving_average(r, window));
  st.mean.assign(len, 0.0);
  st.variance.assign(len, 0.0);
  const double n = static_cast<double>(runs.size());
  for (std::size_t e = 0; e < len; ++e) {
    double sum = 0.0;
    for (const auto& s : smooth) sum += s[e];
    const double mean = sum / n;
    double sq = 0.0;
    for (const auto& s : smooth) sq += (s[e] - mean) * (s[e] - mean);
    st.mean[e] = mean;
    st.variance[e] = sq / n;
  }
  if (len == 0) return st;
  for (std::size_t e = 0; e < len; ++e) {
    st.area += st.mean[e];
    st.mean_variance += st.variance[e];
  }
  st.area /= static_cast<double>(len);
  st.mean_variance /= static_cast<double>(len);
  const double level = plateau_fraction * st.mean.back();
  if (st.mean.back() > 0.0) {
    for (std::size_t e = 0; e < len; ++e) {
      if (st.mean[e] >= level) {
        st.plateau_episode = static_cast<int>(e);
        break;
      }
    }
  }
  return st;
}

// ---------------------------------------------------------------------------
// Cross-validation

bool fspa_accepts(const Scenario& scenario, const Fspa& fspa, const std::vector<TeamState>& trajectory) {
  FspaState q = fspa.initial();
  std::vector<double> row(scenario.predicates().size());
  for (std::size_t t = 1; t < trajectory.size(); ++t) {
    scenario.predicate_values(trajectory[t], row);
    q = fspa.step(q, row);
  }
  return fspa.is_final(q);
}

std::string describe_trajectory(const Scenario& scenario, const std::vector<TeamState>& trajectory) {
  std::ostringstream out;
  for (std::size_t t = 0; t < trajectory.size(); ++t) {
    const auto& x = trajectory[t];
    out << "t=" << t << " positions=(";
    for (std::size_t i = 0; i < x.positions.size(); ++i) out << (i ? "," : "") << x.positions[i];
    out << ") completed={";
    bool first = true;
    for (std::size_t r = 0; r < scenario.requests().size(); ++r) {
      if (x.completed.contains(static_cast<int>(r))) {
        out << (first ? "" : ",") << scenario.requests()[r].id;
        first = false;
      }
    }
    out << "}\n";
  }
  return out.str();
}

namespace {

/// Random joint actions. Half the episodes act uniformly over each agent's
/// effective actions. The rest follow a random visiting order of each agent's
/// requests, walking toward one site per request with some noise; shared
/// requests use one common site and are served once every owner stands on it.
class TrajectorySampler {
 public:
  TrajectorySampler(const Scenario& scenario, Rng& rng) : sc_(scenario), rng_(rng) {}

  void begin_episode() {
    directed_ = sample_uniform(rng_) < 0.5;
    site_.clear();
    for (const auto& r : sc_.requests()) site_.push_back(r.sites[index(r.sites.size())]);
    order_.assign(static_cast<std::size_t>(sc_.agent_count()), {});
    for (int i = 0; i < sc_.agent_count(); ++i) {
      order_[i] = sc_.agents()[i].capabilities;
      std::shuffle(order_[i].begin(), order_[i].end(), rng_);
      // Sometimes stop early, so incomplete missions are sampled too.
      if (sample_uniform(rng_) < 0.2) order_[i].resize(index(order_[i].size()));
    }
  }

  Action pick(int agent, const TeamState& x) {
    const Vertex v = x.positions[agent];
    if (!directed_ || sample_uniform(rng_) < 0.15) return uniform(agent, v);
    auto& todo = order_[agent];
    while (!todo.empty() && x.completed.contains(todo.front())) todo.erase(todo.begin());
    if (todo.empty()) return uniform(agent, v);
    const int r = todo.front();
    const Vertex goal = site_[r];
    if (v == goal) {
      bool together = true;
      for (int j : sc_.requests()[r].owners) together = together && x.positions[j] == goal;
      if (together) return sample_uniform(rng_) < 0.8 ? Action::serve(r) : Action::idle();
      return sample_uniform(rng_) < 0.1 ? Action::serve(r) : Action::idle();
    }
    const Agent& ag = sc_.agents()[agent];
    for (Vertex u : sc_.graph().neighbors(v)) {
      if (ag.can_reach(u) && sc_.distances()(u, goal) < sc_.distances()(v, goal)) return Action::move(u);
    }
    return uniform(agent, v);
  }

 private:
  std::size_t index(std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(sample_uniform(rng_) * static_cast<double>(n)));
  }

  Action uniform(int agent, Vertex v) {
    const Agent& ag = sc_.agents()[agent];
    std::vector<Action> opts{Action::idle()};
    for (Vertex u : sc_.graph().neighbors(v)) {
      if (ag.can_reach(u)) opts.push_back(Action::move(u));
    }
    for (int r : ag.capabilities) opts.push_back(Action::serve(r));
    return opts[index(opts.size())];
  }

  const Scenario& sc_;
  Rng& rng_;
  bool directed_ = false;
  std::vector<Vertex> site_;
  std::vector<std::vector<int>> order_;
};

}  // namespace

ConsistencyReport check_consistency(const Problem& problem, int samples, int max_length, std::uint64_t seed,
                                    std::size_t keep) {
  const Scenario& sc = *problem.scenario;
  Rng rng(derive_seed(seed, 0));
  TrajectorySampler sampler(sc, rng);
  ConsistencyReport report;
  std::vector<TeamState> traj;
  JointAction joint(static_cast<std::size_t>(sc.agent_count()));
  for (int k = 0; k < samples; ++k) {
    const int length = 1 + std::min(max_length - 1, static_cast<int>(sample_uniform(rng) * max_length));
    sampler.begin_episode();
    traj.assign(1, sc.initial_state());
    for (int t = 0; t < length; ++t) {
      const TeamState& x = traj.back();
      TeamState next;
      for (int i = 0; i < sc.agent_count(); ++i) {
        joint[i] = sampler.pick(i, x);
        next.positions.push_back(sc.agent_step(i, x.positions[i], joint[i]));
      }
      next.completed = sc.completed_requests(next.positions, joint);
      traj.push_back(std::move(next));
    }
    const bool accepted = fspa_accepts(sc, *problem.fspa, traj);
    const double rho = robustness(sc.signal(traj), problem.formula);
    ++report.samples;
    report.accepted += accepted;
    if (accepted != (rho > 0.0) && report.counterexamples.size() < keep) {
      report.counterexamples.push_back({traj, accepted, rho});
    } else if (accepted != (rho > 0.0)) {
      report.counterexamples.push_back({{}, accepted, rho});
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

struct Layout {
  int width;
  int height;
  std::vector<std::pair<int, int>> cell;  // vertex -> (col, row)
};

Layout layout_of(const EnvGraph& g) {
  Layout l{};
  if (g.is_grid()) {
    std::tie(l.width, l.height) = g.grid_shape();
  } else {
    l.width = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(g.size()))));
    l.height = (g.size() + l.width - 1) / l.width;
  }
  for (Vertex v = 0; v < g.size(); ++v) l.cell.emplace_back(v % l.width, v / l.width);
  return l;
}

std::vector<std::vector<Vertex>> agent_paths(const Scenario& sc, const EpisodeTrace& trace) {
  std::vector<std::vector<Vertex>> paths(static_cast<std::size_t>(sc.agent_count()));
  const auto traj = team_trajectory(trace);
  const TeamState start = traj.empty() ? sc.initial_state() : traj.front();
  for (int i = 0; i < sc.agent_count(); ++i) {
    paths[i].push_back(start.positions[i]);
    for (std::size_t t = 1; t < traj.size(); ++t) {
      if (traj[t].positions[i] != paths[i].back()) paths[i].push_back(traj[t].positions[i]);
    }
  }
  return paths;
}

const char* kColors[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_ascii(const Scenario& sc, const EpisodeTrace& trace) {
  const Layout l = layout_of(sc.graph());
  const auto paths = agent_paths(sc, trace);
  // Each cell: request ids, then agent marks (digit = agent index + 1,
  // upper-case S at its start).
  std::vector<std::string> cells(static_cast<std::size_t>(sc.graph().size()));
  for (const auto& r : sc.requests()) {
    for (Vertex v : r.sites) cells[v] += "s" + r.id;
  }
  for (int i = 0; i < sc.agent_count(); ++i) {
    for (Vertex v : paths[i]) {
      const char mark = static_cast<char>('1' + i);
      if (cells[v].find(mark) == std::string::npos || cells[v].back() != mark) cells[v] += mark;
    }
  }
  std::size_t w = 4;
  for (const auto& c : cells) w = std::max(w, c.size() + 1);
  std::ostringstream out;
  const std::string rule = "+" + [&] {
    std::string seg;
    for (int c = 0; c < l.width; ++c) seg += std::string(w, '-') + "+";
    return seg;
  }();
  for (int row = 0; row < l.height; ++row) {
    out << rule << '\n' << '|';
    for (int col = 0; col < l.width; ++col) {
      const Vertex v = row * l.width + col;
      std::string c = v < sc.graph().size() ? cells[v] : "";
      out << std::setw(static_cast<int>(w)) << std::left << (c.empty() ? "." : c) << '|';
    }
    out << '\n' << '|';
    for (int col = 0; col < l.width; ++col) {
      const Vertex v = row * l.width + col;
      out << std::setw(static_cast<int>(w)) << std::right << (v < sc.graph().size() ? std::to_string(v) : "")
          << '|';
    }
    out << '\n';
  }
  out << rule << '\n';
  for (int i = 0; i < sc.agent_count(); ++i) {
    out << (i + 1) << " = " << sc.agents()[i].name << ":";
    for (Vertex v : paths[i]) out << ' ' << v;
    out << '\n';
  }
  return out.str();
}

std::string render_svg(const Scenario& sc, const EpisodeTrace& trace) {
  const Layout l = layout_of(sc.graph());
  const auto paths = agent_paths(sc, trace);
  const int cell = 60;
  const int legend = 20 * (sc.agent_count() + 1);
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << l.width * cell + 2 << "\" height=\""
      << l.height * cell + legend + 2 << "\" font-family=\"sans-serif\">\n";
  for (Vertex v = 0; v < sc.graph().size(); ++v) {
    const auto [c, r] = l.cell[v];
    out << "<rect x=\"" << c * cell + 1 << "\" y=\"" << r * cell + 1 << "\" width=\"" << cell << "\" height=\""
        << cell << "\" fill=\"white\" stroke=\"#999\"/>\n";
    out << "<text x=\"" << (c + 1) * cell - 4 << "\" y=\"" << (r + 1) * cell - 4
        << "\" font-size=\"10\" text-anchor=\"end\" fill=\"#666\">" << v << "</text>\n";
  }
  for (const auto& req : sc.requests()) {
    for (Vertex v : req.sites) {
      const auto [c, r] = l.cell[v];
      out << "<text x=\"" << c * cell + 6 << "\" y=\"" << r * cell + 16 << "\" font-size=\"12\">&#963;"
          << xml_escape(req.id) << "</text>\n";
    }
  }
  for (int i = 0; i < sc.agent_count(); ++i) {
    const char* color = kColors[i % 6];
    const double off = (i - (sc.agent_count() - 1) / 2.0) * 6.0;
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"3\" points=\"";
    for (Vertex v : paths[i]) {
      const auto [c, r] = l.cell[v];
      out << c * cell + cell / 2 + off + 1 << ',' << r * cell + cell / 2 + off + 1 << ' ';
    }
    out << "\"/>\n";
    const auto [c0, r0] = l.cell[paths[i].front()];
    out << "<circle cx=\"" << c0 * cell + cell / 2 + off + 1 << "\" cy=\"" << r0 * cell + cell / 2 + off + 1
        << "\" r=\"6\" fill=\"" << color << "\"/>\n";
    out << "<text x=\"4\" y=\"" << l.height * cell + 18 + 20 * i << "\" font-size=\"12\" fill=\"" << color
        << "\">" << xml_escape(sc.agents()[i].name) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string render_curves_svg(const std::vector<Series>& series, const std::string& title) {
  const double w = 640, h = 360, left = 50, right = 150, top = 30, bottom = 40;
  std::size_t len = 0;
  double lo = 0.0, hi = 1.0;
  for (const auto& s : series) {
    len = std::max(len, s.mean.size());
    for (std::size_t k = 0; k < s.mean.size(); ++k) {
      const double d = s.spread.empty() ? 0.0 : s.spread[k];
      lo = std::min(lo, s.mean[k] - d);
      hi = std::max(hi, s.mean[k] + d);
    }
  }
  auto sx = [&](std::size_t k) { return left + (w - left - right) * (len > 1 ? double(k) / (len - 1) : 0.0); };
  auto sy = [&](double y) { return top + (h - top - bottom) * (1.0 - (y - lo) / (hi - lo)); };
  const std::size_t stride = std::max<std::size_t>(1, len / 400);

  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<text x=\"" << left << "\" y=\"18\" font-size=\"13\">" << xml_escape(title) << "</text>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << sy(lo) << "\" x2=\"" << w - right << "\" y2=\"" << sy(lo)
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << sy(lo)
      << "\" stroke=\"black\"/>\n";
  for (double y : {lo, (lo + hi) / 2, hi}) {
    out << "<text x=\"" << left - 4 << "\" y=\"" << sy(y) + 4 << "\" text-anchor=\"end\">" << y << "</text>\n";
  }
  out << "<text x=\"" << w - right << "\" y=\"" << h - 12 << "\" text-anchor=\"end\">episode (" << len
      << ")</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& se = series[s];
    const char* color = kColors[s % 6];
    if (!se.spread.empty()) {
      out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
      for (std::size_t k = 0; k < se.mean.size(); k += stride) out << sx(k) << ',' << sy(se.mean[k] + se.spread[k]) << ' ';
      for (std::size_t k = se.mean.size(); k-- > 0;) {
        if (k % stride == 0) out << sx(k) << ',' << sy(se.mean[k] - se.spread[k]) << ' ';
      }
      out << "\"/>\n";
    }
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < se.mean.size(); k += stride) out << sx(k) << ',' << sy(se.mean[k]) << ' ';
    out << "\"/>\n";
    out << "<text x=\"" << w - right + 8 << "\" y=\"" << top + 16 * (s + 1) << "\" fill=\"" << color << "\">"
        << xml_escape(se.label) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace tlmarl
