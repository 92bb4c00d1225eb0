#include <doctest.h>

#include <random>
#include <sstream>

#include "paths.hpp"
#include "tlmarl/game.hpp"

using namespace tlmarl;

namespace {

Game example_game() {
  auto sc = std::make_shared<Scenario>(Scenario::load(test_paths::scenario()));
  auto fs = std::make_shared<Fspa>(Fspa::load(test_paths::fspa(), sc->predicates()));
  return Game(sc, fs);
}

// One agent, one request at vertex 0 of a 5x1 corridor; the automaton first
// waits for go1, then for do1.
Game corridor_game() {
  auto sc = std::make_shared<Scenario>(Scenario::from_json(nlohmann::json::parse(R"({
    "graph": {"grid": "5x1"},
    "requests": [{"id": "1", "sites": [0]}],
    "agents": [{"name": "a", "start": 4, "capabilities": ["1"]}],
    "horizon": 20
  })")));
  auto fs = std::make_shared<Fspa>(Fspa::from_json(nlohmann::json::parse(R"({
    "states": ["far", "near", "done"], "initial": "far", "final": ["done"],
    "edges": [["far", "near", "go1"], ["near", "done", "do1"]]
  })"), sc->predicates()));
  return Game(sc, fs);
}

GameState state(std::vector<Vertex> pos, FspaState q, std::vector<int> done = {}) {
  GameState s;
  s.team.positions = std::move(pos);
  for (int r : done) s.team.completed.insert(r);
  s.q = q;
  return s;
}

JointAction random_joint(const Game& g, const GameState& s, std::mt19937_64& rng) {
  JointAction a;
  for (int i = 0; i < g.agent_count(); ++i) {
    const Agent& ag = g.scenario().agents()[i];
    const Vertex v = s.team.positions[i];
    switch (rng() % 4) {
      case 0:
        a.push_back(Action::idle());
        break;
      case 1:
        a.push_back(Action::serve(ag.capabilities[rng() % ag.capabilities.size()]));
        break;
      default: {
        const auto& nb = g.scenario().graph().neighbors(v);
        a.push_back(Action::move(nb[rng() % nb.size()]));
      }
    }
  }
  return a;
}

}  // namespace

TEST_CASE("reset") {
  const Game g = example_game();
  const GameState s = g.reset();
  CHECK(s.team.positions == std::vector<Vertex>{4, 18});
  CHECK(s.team.completed.empty());
  CHECK(s.q == 0);
  CHECK(s.t == 0);
  CHECK(g.reset() == s);
  CHECK(g.fspa().energy()[s.q] < kInfiniteEnergy);
}

TEST_CASE("a joint no-op changes nothing") {
  const Game g = example_game();
  const GameState s = g.reset();
  const StepOutcome out = g.step(s, {Action::idle(), Action::idle()});
  CHECK(out.next.team == s.team);
  CHECK(out.next.q == s.q);
  CHECK(out.next.t == 1);
  CHECK(out.base_reward == 0.0);
  CHECK(out.shaped_energy == 0.0);
  CHECK(out.shaped_rho == std::vector<double>{0.0, 0.0});
  CHECK_FALSE(out.done);
}

TEST_CASE("terminal rewards") {
  Game g = example_game();
  const Vertex s3 = g.scenario().requests()[2].sites[0];

  SUBCASE("entering the final state") {
    const StepOutcome out = g.step(state({s3, s3}, 5, {0}), {Action::serve(2), Action::serve(2)});
    CHECK(out.next.q == 6);
    CHECK(out.base_reward == 1.0);
    CHECK(out.success);
    CHECK(out.done);
    CHECK(out.shaped_energy == 1.0);  // J 1 -> 0 along a unit edge
  }
  SUBCASE("entering the trap") {
    const StepOutcome out = g.step(state({s3, s3}, 0), {Action::serve(2), Action::serve(2)});
    CHECK(out.next.q == 7);
    CHECK(out.base_reward == -1.0);
    CHECK_FALSE(out.success);
    CHECK(out.done);
    CHECK(out.shaped_energy == -kRhoMax);
    g.set_trap_penalty(1.0);
    CHECK(g.step(state({s3, s3}, 0), {Action::serve(2), Action::serve(2)}).shaped_energy == -1.0);
  }
  SUBCASE("base reward table") {
    CHECK(g.base_reward(6, 6) == 0.0);
    CHECK(g.base_reward(5, 6) == 1.0);
    CHECK(g.base_reward(3, 3) == 0.0);
    CHECK(g.base_reward(0, 7) == -1.0);
  }
  SUBCASE("stepping a finished episode is an error") {
    CHECK_THROWS_AS(g.step(state({0, 0}, 6), {Action::idle(), Action::idle()}), std::logic_error);
  }
}

TEST_CASE("energy shaping") {
  const Game g = example_game();
  CHECK(g.shaped_energy(3, 3) == 0.0);
  CHECK(g.shaped_energy(5, 6) == 1.0);
  // Falling back from "at sigma3" to "away from sigma3" delays completion.
  CHECK(g.shaped_energy(5, 4) < 0.0);
  CHECK(g.shaped_energy(7, 7) == 0.0);
}

TEST_CASE("predicted states") {
  const Game g = example_game();
  const Vertex s1 = g.scenario().requests()[0].sites[0];
  const Vertex s3 = g.scenario().requests()[2].sites[0];

  SUBCASE("idle agent: prediction equals the outcome") {
    const GameState s = g.reset();
    const JointAction a{Action::idle(), Action::move(g.scenario().graph().neighbors(18)[0])};
    const StepOutcome out = g.step(s, a);
    auto [hat, q_hat] = g.predicted_state(0, s, a, out.next.team);
    CHECK(hat == out.next.team);
    CHECK(q_hat == out.next.q);
  }
  SUBCASE("shared request drops out for either owner") {
    const GameState s = state({s3, s3}, 4, {0});
    const JointAction a{Action::serve(2), Action::serve(2)};
    const StepOutcome out = g.step(s, a);
    REQUIRE(out.next.team.completed.contains(2));
    for (int i = 0; i < 2; ++i) CHECK_FALSE(g.predicted_state(i, s, a, out.next.team).first.completed.contains(2));
  }
  SUBCASE("non-owner keeps another agent's completion") {
    const GameState s = state({s1, 18}, 0);
    const JointAction a{Action::serve(0), Action::idle()};
    const StepOutcome out = g.step(s, a);
    REQUIRE(out.next.team.completed.contains(0));
    CHECK(g.predicted_state(1, s, a, out.next.team).first.completed.contains(0));
    CHECK_FALSE(g.predicted_state(0, s, a, out.next.team).first.completed.contains(0));
  }
}

TEST_CASE("robustness shaping on a corridor") {
  const Game g = corridor_game();
  // At "far" the only outgoing guard is go1 = 0.5 - dist.
  const GameState s = state({3}, 0);
  CHECK(g.step(s, {Action::move(2)}).shaped_rho[0] == doctest::Approx(1.0));
  CHECK(g.step(s, {Action::move(4)}).shaped_rho[0] == doctest::Approx(-1.0));
  CHECK(g.step(s, {Action::idle()}).shaped_rho[0] == 0.0);
  // The step onto the site leaves "far"; the realized side is D_near = do1.
  const StepOutcome arrive = g.step(state({1}, 0), {Action::move(0)});
  CHECK(arrive.next.q == 1);
  CHECK(arrive.shaped_rho[0] == doctest::Approx(-1.0 - (0.5 - 1.0)));
  CHECK(g.shaped_rho(0, state({1}, 0), {Action::move(0)}, arrive.next) == arrive.shaped_rho[0]);
}

TEST_CASE("observations are the agent's own vertex") {
  const Game g = example_game();
  const GameState s = g.reset();
  CHECK(g.observe(0, s) == 4);
  GameState t = s;
  t.team.positions[1] = 0;
  t.q = 3;
  t.team.completed.insert(1);
  CHECK(g.observe(0, t) == g.observe(0, s));
}

TEST_CASE("shaping invariants over random episodes") {
  Game g = example_game();
  g.set_trap_penalty(1.0);
  std::mt19937_64 rng(123);
  int telescoped = 0;
  for (int e = 0; e < 2000; ++e) {
    GameState s = g.reset();
    const FspaState q0 = s.q;
    double energy_sum = 0.0;
    int nonzero_base = 0;
    for (;;) {
      const JointAction a = random_joint(g, s, rng);
      const StepOutcome out = g.step(s, a);
      energy_sum += out.shaped_energy;
      nonzero_base += out.base_reward != 0.0;
      for (int i = 0; i < g.agent_count(); ++i) {
        if (a[i].kind == Action::Kind::Idle) CHECK(out.shaped_rho[i] == 0.0);
        CHECK(out.shaped_rho[i] == g.shaped_rho(i, s, a, out.next));
      }
      CHECK(g.step(s, a).next == out.next);
      s = out.next;
      if (out.done) break;
    }
    CHECK(s.t <= g.horizon());
    CHECK(nonzero_base <= 1);
    const double j_end = g.fspa().energy()[s.q];
    if (j_end < kInfiniteEnergy) {
      CHECK(energy_sum == doctest::Approx(g.fspa().energy()[q0] - j_end));
      ++telescoped;
    }
  }
  CHECK(telescoped > 0);
}

TEST_CASE("trace files round-trip") {
  const Game g = example_game();
  std::mt19937_64 rng(9);
  EpisodeTrace trace;
  GameState s = g.reset();
  for (int k = 0; k < 30; ++k) {
    const JointAction a = random_joint(g, s, rng);
    StepOutcome out = g.step(s, a);
    trace.push_back({s, a, out});
    s = out.next;
    if (out.done) break;
  }
  std::stringstream buf;
  write_trace_jsonl(buf, g, trace);
  const EpisodeTrace back = read_trace_jsonl(buf, g);
  REQUIRE(back.size() == trace.size());
  for (std::size_t k = 0; k < trace.size(); ++k) {
    CHECK(back[k].state == trace[k].state);
    CHECK(back[k].action == trace[k].action);
    CHECK(back[k].outcome.next == trace[k].outcome.next);
    CHECK(back[k].outcome.shaped_rho == trace[k].outcome.shaped_rho);
    CHECK(back[k].outcome.shaped_energy == trace[k].outcome.shaped_energy);
    CHECK(back[k].outcome.base_reward == trace[k].outcome.base_reward);
  }
}

TEST_CASE("action text") {
  const Game g = example_game();
  for (const Action a : {Action::idle(), Action::move(7), Action::serve(2)}) {
    CHECK(action_from_string(g.scenario(), action_to_string(g.scenario(), a)) == a);
  }
}
