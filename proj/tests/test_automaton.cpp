#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "paths.hpp"
#include "tlmarl/automaton.hpp"
#include "tlmarl/world.hpp"

using namespace tlmarl;

namespace {

const PredicateTable& example_predicates() {
  static const Scenario s = Scenario::load(test_paths::scenario());
  return s.predicates();
}

Fspa example_fspa() { return Fspa::load(test_paths::fspa(), example_predicates()); }

Fspa from_text(const char* text) {
  return Fspa::from_json(nlohmann::json::parse(text), PredicateTable::custom({"p", "q"}));
}

std::vector<double> row_of(const Scenario& s, std::vector<Vertex> pos, std::vector<int> done) {
  TeamState x{std::move(pos), {}};
  for (int r : done) x.completed.insert(r);
  return s.predicate_values(x);
}

}  // namespace

TEST_CASE("authored mission automaton loads") {
  const Fspa f = example_fspa();
  CHECK(f.size() == 8);
  CHECK(f.is_final(6));
  CHECK(f.is_trap(7));
  CHECK(f.warnings().empty());
  for (FspaState q = 0; q <= 6; ++q) CHECK(f.energy()[q] < kInfiniteEnergy);
  CHECK(f.energy()[6] == 0.0);
  CHECK(f.energy()[7] == kInfiniteEnergy);
  // Hand shortest paths: 5 -> 6 costs 1; 4 -> 6 costs 2 (direct or via 5);
  // the pre states pay their weighted service edge plus the remainder.
  CHECK(f.energy()[5] == 1.0);
  CHECK(f.energy()[4] == 2.0);
  CHECK(f.energy()[1] == 14.0);
  CHECK(f.energy()[0] == 15.0);
}

TEST_CASE("transitions of the mission automaton") {
  const Scenario s = Scenario::load(test_paths::scenario());
  const Fspa f = example_fspa();
  const Vertex s1 = s.requests()[0].sites[0];
  const Vertex s3 = s.requests()[2].sites[0];
  REQUIRE(s1 != s3);

  // sigma1 done, nobody near sigma3: the "first service, not yet at sigma3" state.
  CHECK(f.step(0, row_of(s, {s1, s1}, {0})) == 4);
  // sigma2 done with both owners on sigma3's site.
  CHECK(f.step(1, row_of(s, {s3, s3}, {1})) == 5);
  // sigma3 first: trap.
  CHECK(f.step(0, row_of(s, {s3, s3}, {2})) == 7);
  // Nothing done, agent 1 at its site: the go-tracking edge fires.
  CHECK(f.step(0, row_of(s, {s1, 0}, {})) == 1);
  // Nothing changes: stay.
  CHECK(f.step(1, row_of(s, {s1, 0}, {})) == 1);

  SUBCASE("terminal states absorb") {
    std::mt19937_64 rng(1);
    for (int k = 0; k < 200; ++k) {
      std::vector<int> done;
      for (int r = 0; r < 3; ++r) {
        if (rng() % 2) done.push_back(r);
      }
      const auto row = row_of(s, {static_cast<Vertex>(rng() % 25), static_cast<Vertex>(rng() % 25)}, done);
      CHECK(f.step(6, row) == 6);
      CHECK(f.step(7, row) == 7);
    }
  }
}

TEST_CASE("outgoing disjunctions") {
  SUBCASE("two non-trap edges") {
    const Fspa f = from_text(R"({"states": ["a", "b", "c", "t"], "initial": "a", "final": ["c"], "trap": ["t"],
      "edges": [["a", "b", "p"], ["a", "c", "q"], ["a", "t", "!p && !q"], ["b", "c", "q"], ["a", "a", "top"]]})");
    const auto preds = PredicateTable::custom({"p", "q"});
    CHECK(structurally_equal(f.outgoing_disjunction(0),
                             Formula::disj(Formula::pred(*preds.find("p")), Formula::pred(*preds.find("q")))));
  }
  SUBCASE("only a trap edge") {
    const Fspa f = from_text(R"({"states": ["a", "b", "f", "t"], "initial": "a", "final": ["f"], "trap": ["t"],
      "edges": [["a", "f", "p"], ["b", "t", "q"]]})");
    CHECK(structurally_equal(f.outgoing_disjunction(1), Formula::negate(Formula::top())));
  }
  SUBCASE("authored state 5 keeps its forward and backward guards") {
    const Fspa f = example_fspa();
    const Formula expected = Formula::disj(parse_guard("do3", example_predicates()),
                                           parse_guard("!go3 && !do3", example_predicates()));
    CHECK(structurally_equal(f.outgoing_disjunction(5), expected));
  }
}

TEST_CASE("energy of a chain") {
  const Fspa f = from_text(R"({"states": ["q0", "q1", "qf"], "initial": "q0", "final": ["qf"],
    "edges": [["q0", "q1", "p"], ["q1", "qf", "q"]]})");
  CHECK(f.energy()[0] == 2.0);
  CHECK(f.energy()[1] == 1.0);
  CHECK(f.energy()[2] == 0.0);
}

TEST_CASE("Dijkstra agrees with Bellman-Ford on random automata") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> weight(0.1, 10.0);
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = 2 + rng() % 19;
    std::vector<bool> finals(n, false);
    finals[rng() % n] = true;
    std::vector<FspaEdge> edges;
    const std::size_t m = rng() % (3 * n);
    for (std::size_t e = 0; e < m; ++e) {
      const auto a = static_cast<FspaState>(rng() % n);
      const auto b = static_cast<FspaState>(rng() % n);
      edges.push_back({a, b, Formula::top(), "top", weight(rng)});
    }
    const EnergyTable j = compute_energy(n, edges, finals);
    const auto bf = oracle::bellman_ford(n, edges, finals);
    for (std::size_t q = 0; q < n; ++q) {
      CHECK(j[q] == bf[q]);
      if (finals[q]) CHECK(j[q] == 0.0);
    }
    for (const auto& e : edges) {
      if (j[e.to] < kInfiniteEnergy) CHECK(j[e.from] <= e.weight + j[e.to]);
    }
  }
}

TEST_CASE("automaton documents are validated") {
  CHECK_THROWS_AS(from_text(R"({"states": ["a", "f"], "initial": "a", "final": ["f"],
    "edges": [["x", "f", "p"]]})"), FspaError);
  CHECK_THROWS_AS(from_text(R"({"states": ["a", "f"], "initial": "a", "final": [],
    "edges": [["a", "f", "p"]]})"), FspaError);
  CHECK_THROWS_AS(from_text(R"({"states": ["a", "f"], "initial": "a", "final": ["f"],
    "edges": [["a", "f", "p && zz"]]})"), FspaError);
  CHECK_THROWS_AS(from_text(R"({"states": ["a", "f"], "initial": "a", "final": ["f"],
    "edges": [["a", "f", "<> p"]]})"), FspaError);
  CHECK_THROWS_AS(from_text(R"({"states": ["a", "f"], "initial": "a", "final": ["f"],
    "edges": [["a", "f", "p", -1]]})"), FspaError);
  CHECK_THROWS_AS(from_text(R"({"states": ["a", "f", "t"], "initial": "a", "final": ["f"], "trap": ["t"],
    "edges": [["a", "t", "p"]]})"), FspaError);
}

TEST_CASE("authored guards are exclusive") {
  const Scenario s = Scenario::load(test_paths::scenario());
  const Fspa f = example_fspa();
  std::mt19937_64 rng(4);
  std::vector<std::vector<double>> rows;
  for (int k = 0; k < 5000; ++k) {
    std::vector<int> done;
    for (int r = 0; r < 3; ++r) {
      if (rng() % 3 == 0) done.push_back(r);
    }
    rows.push_back(row_of(s, {static_cast<Vertex>(rng() % 25), static_cast<Vertex>(rng() % 25)}, done));
  }
  CHECK(guard_overlaps(f, rows).empty());
}

TEST_CASE("automaton JSON round-trips") {
  const Fspa f = example_fspa();
  const Fspa g = Fspa::from_json(f.to_json(), example_predicates());
  CHECK(g.to_json() == f.to_json());
  CHECK(g.energy() == f.energy());
}
