#pragma once

// Finite state predicate automata: guarded edges over predicate formulas,
// deterministic stepping on a single state, outgoing-edge disjunctions and the
// energy (distance-to-final) table.

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tlmarl/logic.hpp"

namespace tlmarl {

using FspaState = int;

inline constexpr double kInfiniteEnergy = std::numeric_limits<double>::infinity();

class FspaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FspaEdge {
  FspaState from;
  FspaState to;
  Formula guard;
  std::string guard_text;
  double weight = 1.0;
};

/// J(q) for every automaton state; kInfiniteEnergy where no final state is
/// reachable.
using EnergyTable = std::vector<double>;

class Fspa {
 public:
  /// Builds and validates. Edge endpoints are state indices into `names`.
  Fspa(std::vector<std::string> names, FspaState initial, std::vector<FspaState> finals,
       std::vector<FspaState> traps, std::vector<FspaEdge> edges);

  /// Parses the JSON automaton document; guards are resolved against
  /// `predicates`.
  static Fspa from_json(const nlohmann::json& doc, const PredicateTable& predicates);
  static Fspa load(const std::string& path, const PredicateTable& predicates);
  nlohmann::json to_json() const;

  std::size_t size() const { return names_.size(); }
  const std::string& name(FspaState q) const { return names_.at(q); }
  FspaState index_of(const std::string& name) const;  // -1 if unknown
  FspaState initial() const { return initial_; }
  bool is_final(FspaState q) const { return final_.at(q); }
  bool is_trap(FspaState q) const { return trap_.at(q); }
  bool is_terminal(FspaState q) const { return is_final(q) || is_trap(q); }
  const std::vector<FspaEdge>& edges() const { return edges_; }
  const std::vector<std::size_t>& outgoing(FspaState q) const { return outgoing_.at(q); }

  /// Target of the first declared edge out of q whose guard is > 0 at `row`;
  /// q itself when none fires.
  FspaState step(FspaState q, std::span<const double> row) const;

  /// Disjunction of the guards leading from q to other non-trap states;
  /// `!top` when there is none.
  const Formula& outgoing_disjunction(FspaState q) const { return disjunction_.at(q); }

  const EnergyTable& energy() const { return energy_; }

  /// Non-fatal findings from construction (unreachable states, dead states).
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::vector<std::string> names_;
  FspaState initial_;
  std::vector<bool> final_;
  std::vector<bool> trap_;
  std::vector<FspaEdge> edges_;
  std::vector<std::vector<std::size_t>> outgoing_;
  std::vector<Formula> disjunction_;
  EnergyTable energy_;
  std::vector<std::string> warnings_;
};

/// Minimum weighted path length to the final set (Dijkstra over reversed
/// edges from every final state).
EnergyTable compute_energy(std::size_t state_count, const std::vector<FspaEdge>& edges,
                           const std::vector<bool>& final_states);

/// States where more than one edge to another state fires on some sampled
/// row. One message per (state, row) conflict, capped at `limit`.
std::vector<std::string> guard_overlaps(const Fspa& fspa,
                                        const std::vector<std::vector<double>>& rows,
                                        std::size_t limit = 20);

}  // namespace tlmarl
