#pragma once

// Finite policy graphs trained by likelihood-ratio policy gradient with
// centralized rewards and decentralized observations, plus a memoryless
// decentralized Q-learning baseline.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tlmarl/game.hpp"

namespace tlmarl {

using Rng = std::mt19937_64;

/// Deterministic per-stream seed derived from one experiment seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

double sample_uniform(Rng& rng);

/// Softmax of `row / temperature`.
std::vector<double> softmax(std::span<const double> row, double temperature);
void softmax(std::span<const double> row, double temperature, std::span<double> out);
int sample_index(std::span<const double> probs, Rng& rng);
/// First index of the maximum.
int argmax(std::span<const double> row);

enum class ActionEncoding {
  Vertex,   // eps, one move per reachable vertex, one serve per capability
  Compass,  // N, E, S, W, eps, one serve per capability (grid graphs only)
};

std::string to_string(ActionEncoding e);
ActionEncoding action_encoding_from_string(const std::string& s);

/// Maps a learner's action index to an element of A_i, given the agent's own
/// current vertex.
class ActionCodec {
 public:
  ActionCodec(const Scenario& scenario, int agent, ActionEncoding encoding);

  int size() const { return static_cast<int>(labels_.size()); }
  ActionEncoding encoding() const { return encoding_; }
  Action decode(int index, Vertex current) const;
  const std::string& label(int index) const { return labels_.at(index); }

  /// Observation index of a vertex (position in V_i).
  int observation(Vertex v) const;
  int observation_count() const { return static_cast<int>(reachable_.size()); }

 private:
  ActionEncoding encoding_;
  std::vector<Vertex> reachable_;
  std::vector<int> capabilities_;
  std::vector<std::string> labels_;
  std::vector<int> observation_of_;  // vertex -> observation index or -1
  int grid_width_ = 0;
  int grid_height_ = 0;
};

/// Finite-state stochastic controller: action table psi (N x |A|),
/// internal-transition table eta (N x |O| x N) and initial table eta0
/// (|O| x N), each a softmax at a shared temperature. All three live in one
/// flat parameter vector in that order.
class PolicyGraph {
 public:
  PolicyGraph(int nodes, int observations, int actions, double temperature = 1.0);

  int nodes() const { return nodes_; }
  int observations() const { return observations_; }
  int actions() const { return actions_; }
  double temperature() const { return temperature_; }

  std::span<const double> action_row(int node) const;
  std::span<const double> transition_row(int node, int observation) const;
  std::span<const double> initial_row(int observation) const;
  std::size_t action_offset(int node) const;
  std::size_t transition_offset(int node, int observation) const;
  std::size_t initial_offset(int observation) const;

  std::vector<double>& parameters() { return params_; }
  const std::vector<double>& parameters() const { return params_; }

  int sample_initial(int observation, Rng& rng) const;
  int sample_action(int node, Rng& rng) const;
  int sample_transition(int node, int observation, Rng& rng) const;

  int greedy_initial(int observation) const { return argmax(initial_row(observation)); }
  int greedy_action(int node) const { return argmax(action_row(node)); }
  int greedy_transition(int node, int observation) const {
    return argmax(transition_row(node, observation));
  }

  nlohmann::json to_json() const;
  static PolicyGraph from_json(const nlohmann::json& j);

 private:
  int nodes_;
  int observations_;
  int actions_;
  double temperature_;
  std::vector<double> params_;
};

/// One decision point of a policy-graph agent: the observation seen, the
/// internal node entered (from eta0 at t = 0, from eta afterwards) and the
/// action emitted from that node.
struct ControllerStep {
  int observation;
  int node;
  int action;
};

using ControllerTrace = std::vector<ControllerStep>;

/// log Pr(nodes, actions | observations) under the graph.
double log_probability(const PolicyGraph& pg, const ControllerTrace& trace);

/// Gradient of log_probability with respect to the flat parameter vector.
std::vector<double> log_probability_gradient(const PolicyGraph& pg, const ControllerTrace& trace);

/// Adds scale * grad log Pr(choices at step t) into `grad`.
void accumulate_step_gradient(const PolicyGraph& pg, const ControllerTrace& trace, std::size_t t,
                              double scale, std::span<double> grad);

/// Episodic REINFORCE with eligibility traces: z_t = decay * z_{t-1} + score_t
/// and each reward r_t contributes alpha * gamma^t * r_t * z_t. decay = 1 is
/// the undecayed trace.
void pg_update(PolicyGraph& pg, const ControllerTrace& trace, std::span<const double> rewards,
               double gamma, double alpha, double decay = 1.0);

/// Memoryless tabular action values over the agent's own observation.
class QTable {
 public:
  QTable(int observations, int actions);
  int observations() const { return observations_; }
  int actions() const { return actions_; }
  double& at(int o, int a) { return values_[static_cast<std::size_t>(o) * actions_ + a]; }
  double at(int o, int a) const { return values_[static_cast<std::size_t>(o) * actions_ + a]; }
  std::span<const double> row(int o) const {
    return {values_.data() + static_cast<std::size_t>(o) * actions_, static_cast<std::size_t>(actions_)};
  }
  int greedy(int o) const { return argmax(row(o)); }
  int epsilon_greedy(int o, double epsilon, Rng& rng) const;

  nlohmann::json to_json() const;
  static QTable from_json(const nlohmann::json& j);

 private:
  int observations_;
  int actions_;
  std::vector<double> values_;
};

/// One-step TD update toward r + gamma * max_a' Q[o', a'] (no bootstrap when
/// done).
void q_update(QTable& table, int o, int a, double r, int o_next, bool done, double alpha,
              double gamma);

enum class LearnerKind { PolicyGraph, QMemoryless };

std::string to_string(LearnerKind k);
LearnerKind learner_from_string(const std::string& s);

struct TrainConfig {
  int episodes = 10000;
  int horizon = 0;  // 0: use the scenario's horizon
  double gamma = 0.995;
  double alpha = 0.01;
  double temperature = 1.0;
  int nodes = 10;
  RewardMix mix;
  double trace_decay = 0.9;   // 1: undecayed eligibility trace
  double trap_penalty = 1.0;  // r_J = -trap_penalty on entering a trap
  std::uint64_t seed = 1;
  LearnerKind learner = LearnerKind::PolicyGraph;
  ActionEncoding encoding = ActionEncoding::Compass;
  double q_alpha = 0.1;
  double epsilon_start = 0.3;
  double epsilon_end = 0.05;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

/// Trained per-agent controllers with everything needed to replay them.
struct Policies {
  LearnerKind kind = LearnerKind::PolicyGraph;
  ActionEncoding encoding = ActionEncoding::Compass;
  std::vector<PolicyGraph> graphs;  // kind == PolicyGraph
  std::vector<QTable> tables;       // kind == QMemoryless
  TrainConfig config;

  nlohmann::json to_json() const;
  static Policies from_json(const nlohmann::json& j);
};

Policies initial_policies(const Game& game, const TrainConfig& config);

struct EpisodeMetrics {
  double normalized_reward = 0.0;  // discounted base reward / C
  bool success = false;
  int length = 0;
  std::vector<FspaState> q_trajectory;
};

struct TrainResult {
  Policies policies;
  std::vector<EpisodeMetrics> metrics;
};

TrainResult train(const Game& game, const TrainConfig& config);

/// Runs one episode without learning. Greedy mode takes argmax at every
/// choice and ignores `rng`. Each agent draws from its own stream. Shaping
/// rewards in the trace use the trap penalty stored with the policies.
EpisodeTrace rollout(const Game& game, const Policies& policies, bool greedy, std::uint64_t seed);

struct EvaluationReport {
  int episodes = 0;
  int successes = 0;
  int satisfied = 0;              // logic-module check on the team trajectory
  int inconsistent = 0;           // success flag disagrees with satisfaction
  std::vector<int> lengths;       // steps per episode
  std::vector<EpisodeTrace> traces;
  double success_rate() const { return episodes ? double(successes) / episodes : 0.0; }
  double satisfaction_rate() const { return episodes ? double(satisfied) / episodes : 0.0; }
};

EvaluationReport evaluate(const Game& game, const Formula& phi, const Policies& policies, int episodes,
                          bool greedy, std::uint64_t seed);

/// Fewest steps any joint plan needs to drive the automaton into F, searching
/// breadth-first over (positions, automaton state); -1 if none within
/// `max_steps`.
int minimum_accepting_steps(const Game& game, int max_steps);

}  // namespace tlmarl
