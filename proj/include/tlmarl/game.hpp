#pragma once

// The automaton-augmented stochastic game: product dynamics of the team and
// the FSPA, the sparse terminal reward and the two per-step shaping rewards.

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "tlmarl/automaton.hpp"
#include "tlmarl/world.hpp"

namespace tlmarl {

struct GameState {
  TeamState team;
  FspaState q = 0;
  int t = 0;
  friend bool operator==(const GameState&, const GameState&) = default;
};

/// Weights of the shaping terms in the per-agent training reward.
struct RewardMix {
  double rho = 1.0;
  double energy = 1.0;
};

struct StepOutcome {
  GameState next;
  double base_reward = 0.0;
  std::vector<double> shaped_rho;  // per agent
  double shaped_energy = 0.0;      // shared by all agents
  bool done = false;
  bool success = false;

  double total(int agent, const RewardMix& mix) const {
    return base_reward + mix.rho * shaped_rho[agent] + mix.energy * shaped_energy;
  }
};

struct TraceStep {
  GameState state;
  JointAction action;
  StepOutcome outcome;
};

using EpisodeTrace = std::vector<TraceStep>;

class Game {
 public:
  Game(std::shared_ptr<const Scenario> scenario, std::shared_ptr<const Fspa> fspa);

  const Scenario& scenario() const { return *scenario_; }
  const Fspa& fspa() const { return *fspa_; }
  int horizon() const { return scenario_->horizon(); }
  int agent_count() const { return scenario_->agent_count(); }

  GameState reset() const;

  /// Motions resolve first, then completions at the new positions, then the
  /// automaton reads the resulting team state.
  StepOutcome step(const GameState& s, const JointAction& a) const;

  /// +C on entering F, -C on entering Tr, 0 otherwise.
  double base_reward(FspaState prev, FspaState next) const;

  /// Team state with agent i held at its time-t vertex and its own service
  /// completions removed, plus the automaton state stepped from s.q.
  std::pair<TeamState, FspaState> predicted_state(int agent, const GameState& s, const JointAction& a,
                                                  const TeamState& next) const;

  double shaped_rho(int agent, const GameState& s, const JointAction& a, const GameState& next) const;

  /// J(q) - J(next); -trap_penalty() on entering an infinite-energy state
  /// from a finite one, 0 between two infinite-energy states.
  double shaped_energy(FspaState q, FspaState next) const;

  /// Defaults to rho_max.
  double trap_penalty() const { return trap_penalty_; }
  void set_trap_penalty(double p);

  Vertex observe(int agent, const GameState& s) const { return s.team.positions.at(agent); }

  /// rho(x, D_q), or 0 when q is final or trap.
  double disjunction_robustness(const TeamState& x, FspaState q) const;

 private:
  std::shared_ptr<const Scenario> scenario_;
  std::shared_ptr<const Fspa> fspa_;
  double trap_penalty_ = kRhoMax;
};

/// Team trajectory x_0..x_T and joint actions of a trace.
std::vector<TeamState> team_trajectory(const EpisodeTrace& trace);
std::vector<JointAction> joint_actions(const EpisodeTrace& trace);

std::string action_to_string(const Scenario& scenario, const Action& a);
Action action_from_string(const Scenario& scenario, const std::string& text);

/// One JSON object per line: step, positions, completed, actions, q, next_q,
/// base, rho, energy, done, success.
void write_trace_jsonl(std::ostream& out, const Game& game, const EpisodeTrace& trace);
EpisodeTrace read_trace_jsonl(std::istream& in, const Game& game);

}  // namespace tlmarl
