#include "tlmarl/game.hpp"

#include <istream>
#include <ostream>

namespace tlmarl {

Game::Game(std::shared_ptr<const Scenario> scenario, std::shared_ptr<const Fspa> fspa)
    : scenario_(std::move(scenario)), fspa_(std::move(fspa)) {
  if (!scenario_ || !fspa_) throw std::invalid_argument("game needs a scenario and an automaton");
}

GameState Game::reset() const { return {scenario_->initial_state(), fspa_->initial(), 0}; }

double Game::base_reward(FspaState prev, FspaState next) const {
  const double c = scenario_->reward_constant();
  if (fspa_->is_final(next) && !fspa_->is_final(prev)) return c;
  if (fspa_->is_trap(next) && !fspa_->is_trap(prev)) return -c;
  return 0.0;
}

double Game::shaped_energy(FspaState q, FspaState next) const {
  const double from = fspa_->energy()[q];
  const double to = fspa_->energy()[next];
  if (to == kInfiniteEnergy) return from == kInfiniteEnergy ? 0.0 : -trap_penalty_;
  if (from == kInfiniteEnergy) return kRhoMax;
  return from - to;
}

void Game::set_trap_penalty(double p) {
  if (!(p >= 0.0) || p > kRhoMax) throw std::invalid_argument("trap penalty must lie in [0, rho_max]");
  trap_penalty_ = p;
}

double Game::disjunction_robustness(const TeamState& x, FspaState q) const {
  if (fspa_->is_terminal(q)) return 0.0;
  const auto row = scenario_->predicate_values(x);
  return eval_guard(row, fspa_->outgoing_disjunction(q));
}

std::pair<TeamState, FspaState> Game::predicted_state(int agent, const GameState& s,
                                                      const JointAction& a,
                                                      const TeamState& next) const {
  TeamState hat = next;
  hat.positions[agent] = s.team.positions[agent];
  if (a[agent].kind == Action::Kind::Serve) hat.completed.erase(a[agent].target);
  const auto row = scenario_->predicate_values(hat);
  return {std::move(hat), fspa_->step(s.q, row)};
}

double Game::shaped_rho(int agent, const GameState& s, const JointAction& a,
                        const GameState& next) const {
  auto [hat, q_hat] = predicted_state(agent, s, a, next.team);
  return disjunction_robustness(next.team, next.q) - disjunction_robustness(hat, q_hat);
}

StepOutcome Game::step(const GameState& s, const JointAction& a) const {
  const int n = agent_count();
  if (static_cast<int>(a.size()) != n) throw std::invalid_argument("joint action has wrong arity");
  if (fspa_->is_terminal(s.q) || s.t >= horizon()) {
    throw std::logic_error("step on a finished episode");
  }

  StepOutcome out;
  GameState& next = out.next;
  next.team.positions.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    next.team.positions[i] = scenario_->agent_step(i, s.team.positions[i], a[i]);
  }
  next.team.completed = scenario_->completed_requests(next.team.positions, a);
  next.t = s.t + 1;

  const std::size_t width = scenario_->predicates().size();
  std::vector<double> row(width);
  scenario_->predicate_values(next.team, row);
  next.q = fspa_->step(s.q, row);

  const double realized =
      fspa_->is_terminal(next.q) ? 0.0 : eval_guard(row, fspa_->outgoing_disjunction(next.q));
  out.shaped_rho.resize(static_cast<std::size_t>(n));
  TeamState hat;
  for (int i = 0; i < n; ++i) {
    const bool moved = next.team.positions[i] != s.team.positions[i];
    const bool served = a[i].kind == Action::Kind::Serve && next.team.completed.contains(a[i].target);
    if (!moved && !served) {
      // Holding agent i back changes nothing.
      out.shaped_rho[i] = 0.0;
      continue;
    }
    hat = next.team;
    hat.positions[i] = s.team.positions[i];
    if (served) hat.completed.erase(a[i].target);
    scenario_->predicate_values(hat, row);
    const FspaState q_hat = fspa_->step(s.q, row);
    const double predicted =
        fspa_->is_terminal(q_hat) ? 0.0 : eval_guard(row, fspa_->outgoing_disjunction(q_hat));
    out.shaped_rho[i] = realized - predicted;
  }

  out.base_reward = base_reward(s.q, next.q);
  out.shaped_energy = shaped_energy(s.q, next.q);
  out.success = fspa_->is_final(next.q);
  out.done = fspa_->is_terminal(next.q) || next.t >= horizon();
  return out;
}

std::vector<TeamState> team_trajectory(const EpisodeTrace& trace) {
  std::vector<TeamState> out;
  if (trace.empty()) return out;
  out.push_back(trace.front().state.team);
  for (const auto& step : trace) out.push_back(step.outcome.next.team);
  return out;
}

std::vector<JointAction> joint_actions(const EpisodeTrace& trace) {
  std::vector<JointAction> out;
  for (const auto& step : trace) out.push_back(step.action);
  return out;
}

std::string action_to_string(const Scenario& scenario, const Action& a) {
  switch (a.kind) {
    case Action::Kind::Idle:
      return "eps";
    case Action::Kind::Move:
      return "move:" + std::to_string(a.target);
    case Action::Kind::Serve:
      return "serve:" + scenario.requests().at(a.target).id;
  }
  return "eps";
}

Action action_from_string(const Scenario& scenario, const std::string& text) {
  if (text == "eps") return Action::idle();
  if (text.rfind("move:", 0) == 0) return Action::move(std::stoi(text.substr(5)));
  if (text.rfind("serve:", 0) == 0) {
    const int r = scenario.request_index(text.substr(6));
    if (r < 0) throw std::invalid_argument("unknown request in action '" + text + "'");
    return Action::serve(r);
  }
  throw std::invalid_argument("malformed action '" + text + "'");
}

namespace {

nlohmann::json completed_ids(const Scenario& scenario, RequestSet set) {
  auto out = nlohmann::json::array();
  for (std::size_t r = 0; r < scenario.requests().size(); ++r) {
    if (set.contains(static_cast<int>(r))) out.push_back(scenario.requests()[r].id);
  }
  return out;
}

RequestSet completed_from_ids(const Scenario& scenario, const nlohmann::json& ids) {
  RequestSet set;
  for (const auto& id : ids) {
    const int r = scenario.request_index(id.get<std::string>());
    if (r < 0) throw std::invalid_argument("unknown request in trace");
    set.insert(r);
  }
  return set;
}

}  // namespace

void write_trace_jsonl(std::ostream& out, const Game& game, const EpisodeTrace& trace) {
  const Scenario& sc = game.scenario();
  for (const auto& step : trace) {
    nlohmann::json rec;
    rec["step"] = step.state.t;
    rec["positions"] = step.state.team.positions;
    rec["completed"] = completed_ids(sc, step.state.team.completed);
    auto actions = nlohmann::json::array();
    for (const auto& a : step.action) actions.push_back(action_to_string(sc, a));
    rec["actions"] = actions;
    rec["q"] = game.fspa().name(step.state.q);
    rec["next_positions"] = step.outcome.next.team.positions;
    rec["next_completed"] = completed_ids(sc, step.outcome.next.team.completed);
    rec["next_q"] = game.fspa().name(step.outcome.next.q);
    rec["base"] = step.outcome.base_reward;
    rec["rho"] = step.outcome.shaped_rho;
    rec["energy"] = step.outcome.shaped_energy;
    rec["done"] = step.outcome.done;
    rec["success"] = step.outcome.success;
    out << rec.dump() << '\n';
  }
}

EpisodeTrace read_trace_jsonl(std::istream& in, const Game& game) {
  const Scenario& sc = game.scenario();
  auto state_index = [&](const nlohmann::json& j) {
    const FspaState q = game.fspa().index_of(j.get<std::string>());
    if (q < 0) throw std::invalid_argument("unknown automaton state in trace");
    return q;
  };
  EpisodeTrace trace;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto rec = nlohmann::json::parse(line);
    TraceStep step;
    step.state.t = rec.at("step").get<int>();
    step.state.team.positions = rec.at("positions").get<std::vector<Vertex>>();
    step.state.team.completed = completed_from_ids(sc, rec.at("completed"));
    step.state.q = state_index(rec.at("q"));
    for (const auto& a : rec.at("actions")) step.action.push_back(action_from_string(sc, a.get<std::string>()));
    step.outcome.next.t = step.state.t + 1;
    step.outcome.next.team.positions = rec.at("next_positions").get<std::vector<Vertex>>();
    step.outcome.next.team.completed = completed_from_ids(sc, rec.at("next_completed"));
    step.outcome.next.q = state_index(rec.at("next_q"));
    step.outcome.base_reward = rec.at("base").get<double>();
    step.outcome.shaped_rho = rec.at("rho").get<std::vector<double>>();
    step.outcome.shaped_energy = rec.at("energy").get<double>();
    step.outcome.done = rec.at("done").get<bool>();
    step.outcome.success = rec.at("success").get<bool>();
    trace.push_back(std::move(step));
  }
  return trace;
}

}  // namespace tlmarl
