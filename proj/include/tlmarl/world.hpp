#pragma once

// Environment graph, agent transition systems, service requests, team states
// and the go/do predicate library evaluated on them.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tlmarl/logic.hpp"

namespace tlmarl {

using Vertex = int;

/// Undirected graph over vertices 0..n-1.
class EnvGraph {
 public:
  EnvGraph() = default;
  /// Adds each edge in both directions; self-loops are rejected.
  EnvGraph(int vertex_count, const std::vector<std::pair<Vertex, Vertex>>& edges);

  /// Row-major `width` x `height` grid: vertex = row * width + col.
  static EnvGraph grid(int width, int height);

  int size() const { return static_cast<int>(adjacency_.size()); }
  bool contains(Vertex v) const { return v >= 0 && v < size(); }
  bool adjacent(Vertex u, Vertex v) const;
  const std::vector<Vertex>& neighbors(Vertex v) const { return adjacency_.at(v); }

  /// Grid geometry when built by grid(); {0, 0} otherwise.
  std::pair<int, int> grid_shape() const { return {width_, height_}; }
  bool is_grid() const { return width_ > 0; }

  std::vector<std::pair<Vertex, Vertex>> edge_list() const;

 private:
  std::vector<std::vector<Vertex>> adjacency_;
  int width_ = 0;
  int height_ = 0;
};

inline constexpr int kNoPath = std::numeric_limits<int>::max();

/// Unweighted shortest-path length, kNoPath if disconnected.
int graph_distance(const EnvGraph& g, Vertex u, Vertex v);

/// All-pairs breadth-first distances, computed once per graph.
class DistanceTable {
 public:
  DistanceTable() = default;
  explicit DistanceTable(const EnvGraph& g);
  int operator()(Vertex u, Vertex v) const { return dist_[static_cast<std::size_t>(u) * n_ + v]; }

 private:
  std::size_t n_ = 0;
  std::vector<int> dist_;
};

/// Subset of requests, indexed by request position in the scenario.
class RequestSet {
 public:
  static constexpr int kCapacity = 64;
  bool contains(int r) const { return (bits_ >> r) & 1u; }
  void insert(int r) { bits_ |= std::uint64_t{1} << r; }
  void erase(int r) { bits_ &= ~(std::uint64_t{1} << r); }
  bool empty() const { return bits_ == 0; }
  std::uint64_t bits() const { return bits_; }
  friend bool operator==(RequestSet, RequestSet) = default;

 private:
  std::uint64_t bits_ = 0;
};

struct Request {
  std::string id;
  std::vector<Vertex> sites;  // l(sigma), non-empty
  std::vector<int> owners;    // I_sigma, agent indices, sorted
  double go_constant = 0.5;
  double do_constant = 1.0;
  bool shared() const { return owners.size() > 1; }
};

struct Agent {
  std::string name;
  Vertex start = 0;
  std::vector<Vertex> reachable;  // V_i, sorted
  std::vector<int> capabilities;  // Sigma_i, request indices, sorted
  bool can_reach(Vertex v) const;
  bool can_serve(int request) const;
};

/// An element of A_i = V_i u Sigma_i u {eps}.
struct Action {
  enum class Kind : std::uint8_t { Idle, Move, Serve };
  Kind kind = Kind::Idle;
  int target = -1;  // vertex for Move, request index for Serve

  static Action idle() { return {}; }
  static Action move(Vertex v) { return {Kind::Move, v}; }
  static Action serve(int request) { return {Kind::Serve, request}; }
  friend bool operator==(const Action&, const Action&) = default;
};

using JointAction = std::vector<Action>;

struct TeamState {
  std::vector<Vertex> positions;
  RequestSet completed;
  friend bool operator==(const TeamState&, const TeamState&) = default;
};

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Graph, agents, requests and the go/do predicates of one mission.
class Scenario {
 public:
  Scenario(EnvGraph graph, std::vector<Agent> agents, std::vector<Request> requests);

  /// Reads the JSON scenario document (see README for the schema).
  static Scenario from_json(const nlohmann::json& doc);
  static Scenario load(const std::string& path);
  nlohmann::json to_json() const;

  const EnvGraph& graph() const { return graph_; }
  const DistanceTable& distances() const { return dist_; }
  const std::vector<Agent>& agents() const { return agents_; }
  const std::vector<Request>& requests() const { return requests_; }
  const PredicateTable& predicates() const { return predicates_; }
  int agent_count() const { return static_cast<int>(agents_.size()); }
  int request_index(std::string_view id) const;  // -1 if unknown

  int horizon() const { return horizon_; }
  void set_horizon(int t);
  double reward_constant() const { return reward_constant_; }
  void set_reward_constant(double c);
  const std::string& formula_text() const { return formula_; }
  void set_formula_text(std::string text) { formula_ = std::move(text); }

  TeamState initial_state() const;

  /// Checks a in A_i; throws std::invalid_argument otherwise.
  void check_action(int agent, Action a) const;

  Vertex agent_step(int agent, Vertex v, Action a) const;
  RequestSet completed_requests(std::span<const Vertex> positions, const JointAction& actions) const;

  double go_value(const TeamState& x, int request) const;
  double do_value(const TeamState& x, int request) const;

  /// Values of every registered predicate at x, in slot order.
  std::vector<double> predicate_values(const TeamState& x) const;
  void predicate_values(const TeamState& x, std::span<double> out) const;

  /// Signal over a team trajectory for the logic module.
  Signal signal(std::span<const TeamState> trajectory) const;

 private:
  EnvGraph graph_;
  DistanceTable dist_;
  std::vector<Agent> agents_;
  std::vector<Request> requests_;
  PredicateTable predicates_;
  std::vector<int> predicate_request_;  // slot -> request index
  int horizon_ = 100;
  double reward_constant_ = 1.0;
  std::string formula_;
};

/// One element z_t = (v, sigma) of a motion-and-service plan; nullopt is eps.
struct PlanStep {
  Vertex vertex;
  std::optional<int> service;
  friend bool operator==(const PlanStep&, const PlanStep&) = default;
};
using MsPlan = std::vector<PlanStep>;

/// Builds per-agent plans from a team trajectory (T+1 states) and the joint
/// actions taken between them (T entries). Services appear at the step where
/// they completed. Throws std::logic_error if a plan breaks the plan rules.
std::vector<MsPlan> extract_ms_plans(const Scenario& scenario,
                                     std::span<const TeamState> trajectory,
                                     std::span<const JointAction> actions);

/// Empty string when `plan` is a valid plan for `agent`, else the first
/// violated rule.
std::string validate_ms_plan(const Scenario& scenario, int agent, const MsPlan& plan);

}  // namespace tlmarl
