#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "paths.hpp"
#include "tlmarl/harness.hpp"

using namespace tlmarl;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("tlmarl_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

Problem with_edited_fspa(const std::function<void(nlohmann::json&)>& edit) {
  Problem p = load_problem(test_paths::scenario(), test_paths::fspa());
  nlohmann::json doc = p.fspa->to_json();
  edit(doc);
  p.fspa = std::make_shared<Fspa>(Fspa::from_json(doc, p.scenario->predicates()));
  return p;
}

}  // namespace

TEST_CASE("arm names") {
  for (RewardArm a : {RewardArm::Rho, RewardArm::RhoJ, RewardArm::None, RewardArm::Custom}) {
    CHECK(arm_from_string(to_string(a)) == a);
  }
  CHECK_THROWS(arm_from_string("both"));
  CHECK(arm_mix(RewardArm::None).rho == 0.0);
  CHECK(arm_mix(RewardArm::None).energy == 0.0);
  CHECK(arm_mix(RewardArm::Rho).energy == 0.0);
  CHECK(arm_mix(RewardArm::Custom, {0.3, 2.0}).energy == 2.0);
}

TEST_CASE("curve files round-trip") {
  std::vector<EpisodeMetrics> m(4);
  for (int k = 0; k < 4; ++k) {
    m[k].normalized_reward = 0.1 * k - 1.0 / 3.0;
    m[k].success = k % 2;
    m[k].length = 10 + k;
  }
  std::stringstream buf;
  write_curve_csv(buf, m);
  const auto rows = read_curve_csv(buf);
  REQUIRE(rows.size() == 4);
  for (int k = 0; k < 4; ++k) {
    CHECK(rows[k].episode == k);
    CHECK(rows[k].normalized_reward == m[k].normalized_reward);
    CHECK(rows[k].success == m[k].success);
    CHECK(rows[k].episode_length == m[k].length);
  }
  std::stringstream bad("a,b,c\n");
  CHECK_THROWS(read_curve_csv(bad));
}

TEST_CASE("moving average and curve statistics") {
  const std::vector<double> xs{1, 2, 3, 4, 5};
  CHECK(moving_average(xs, 2) == std::vector<double>{1, 1.5, 2.5, 3.5, 4.5});
  CHECK(moving_average(xs, 1) == xs);
  CHECK_THROWS(moving_average(xs, 0));

  const CurveStats st = curve_stats({{0, 0, 1, 1}, {0, 1, 1, 1}}, 1);
  CHECK(st.mean == std::vector<double>{0, 0.5, 1, 1});
  CHECK(st.variance == std::vector<double>{0, 0.25, 0, 0});
  CHECK(st.area == doctest::Approx(0.625));
  CHECK(st.mean_variance == doctest::Approx(0.0625));
  CHECK(st.plateau_episode == 2);
  CHECK(curve_stats({{0, 0, 0}}, 1).plateau_episode == -1);
}

TEST_CASE("mission automaton agrees with the formula on sampled runs") {
  const Problem p = load_problem(test_paths::scenario(), test_paths::fspa());
  const ConsistencyReport r = check_consistency(p, 2000, 20, 3);
  CHECK(r.samples == 2000);
  CHECK(r.accepted > 20);
  CHECK(r.counterexamples.empty());
}

TEST_CASE("a flipped guard is caught") {
  const Problem p = with_edited_fspa([](nlohmann::json& doc) {
    for (auto& e : doc["edges"]) {
      if (e["from"] == "4" && e["to"] == "6") e["guard"] = "!do3";
    }
  });
  const ConsistencyReport r = check_consistency(p, 2000, 20, 3, 2);
  CHECK_FALSE(r.counterexamples.empty());
  REQUIRE_FALSE(r.counterexamples.front().trajectory.empty());
  const auto& ce = r.counterexamples.front();
  CHECK(fspa_accepts(*p.scenario, *p.fspa, ce.trajectory) == ce.accepted);
  CHECK((ce.robustness > 0.0) != ce.accepted);
  CHECK_FALSE(describe_trajectory(*p.scenario, ce.trajectory).empty());
}

TEST_CASE("a guard naming an unknown request fails to load") {
  CHECK_THROWS_AS(with_edited_fspa([](nlohmann::json& doc) { doc["edges"][0]["guard"] = "do9"; }), FspaError);
}

TEST_CASE("batch output") {
  const auto dir = scratch("batch");
  ExperimentSpec spec;
  spec.scenario_path = test_paths::scenario();
  spec.fspa_path = test_paths::fspa();
  spec.config.episodes = 30;
  spec.seeds = {1, 2, 3};
  spec.jobs = 2;
  spec.output_dir = dir;
  std::vector<SeedResult> results;
  const ArmSummary s = run_batch(spec, &results);
  const auto arm_dir = dir / "rho+J";
  for (auto seed : spec.seeds) {
    const auto stem = arm_dir / ("seed_" + std::to_string(seed));
    REQUIRE(std::filesystem::exists(stem.string() + ".csv"));
    CHECK(std::filesystem::exists(stem.string() + ".policy.json"));
    CHECK(std::filesystem::exists(stem.string() + ".trace.jsonl"));
    std::ifstream in(stem.string() + ".csv");
    CHECK(read_curve_csv(in).size() == 30);
  }
  CHECK(std::filesystem::exists(arm_dir / "curves.svg"));
  REQUIRE(std::filesystem::exists(arm_dir / "summary.json"));

  std::ifstream in(arm_dir / "summary.json");
  const ArmSummary back = summary_from_json(nlohmann::json::parse(in));
  CHECK(back.runs == 3);
  CHECK(back.seeds == spec.seeds);
  CHECK(back.flags == s.flags);
  int converged = 0;
  for (bool f : back.flags) converged += f;
  CHECK(back.convergence_rate == static_cast<double>(converged) / back.runs);
  CHECK(back.failed == 0);

  // The checkpoint reproduces the recorded greedy trace.
  const Problem p = load_problem(spec.scenario_path, spec.fspa_path);
  std::ifstream ck(arm_dir / "seed_2.policy.json");
  const Policies pol = Policies::from_json(nlohmann::json::parse(ck));
  std::ifstream tr(arm_dir / "seed_2.trace.jsonl");
  const EpisodeTrace recorded = read_trace_jsonl(tr, p.game());
  const EpisodeTrace replay = rollout(p.game(), pol, true, 0);
  REQUIRE(recorded.size() == replay.size());
  double a = 0.0, b = 0.0;
  for (std::size_t k = 0; k < replay.size(); ++k) {
    CHECK(recorded[k].action == replay[k].action);
    a += recorded[k].outcome.total(0, {1, 1});
    b += replay[k].outcome.total(0, {1, 1});
  }
  CHECK(a == b);
  std::filesystem::remove_all(dir);
}

TEST_CASE("batch runs are independent of the job count") {
  const auto d1 = scratch("jobs1");
  const auto d2 = scratch("jobs3");
  ExperimentSpec spec;
  spec.scenario_path = test_paths::scenario();
  spec.fspa_path = test_paths::fspa();
  spec.arm = RewardArm::None;
  spec.config.episodes = 20;
  spec.seeds = {5, 6, 7};
  spec.write_checkpoints = false;
  spec.output_dir = d1;
  spec.jobs = 1;
  std::vector<SeedResult> r1, r3;
  run_batch(spec, &r1);
  spec.output_dir = d2;
  spec.jobs = 3;
  run_batch(spec, &r3);
  for (std::size_t k = 0; k < 3; ++k) {
    REQUIRE(r1[k].metrics.size() == r3[k].metrics.size());
    for (std::size_t e = 0; e < r1[k].metrics.size(); ++e) {
      CHECK(r1[k].metrics[e].normalized_reward == r3[k].metrics[e].normalized_reward);
    }
  }
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
}

TEST_CASE("rendering") {
  const Problem p = load_problem(test_paths::scenario(), test_paths::fspa());
  const Game g = p.game();
  TrainConfig cfg;
  cfg.episodes = 0;
  const EpisodeTrace tr = rollout(g, initial_policies(g, cfg), false, 3);
  const std::string a = render_ascii(*p.scenario, tr);
  CHECK(a == render_ascii(*p.scenario, tr));
  CHECK(render_svg(*p.scenario, tr) == render_svg(*p.scenario, tr));
  for (const auto& r : p.scenario->requests()) CHECK(a.find("s" + r.id) != std::string::npos);
  CHECK(render_svg(*p.scenario, tr).rfind("<svg", 0) == 0);
  const std::string c = render_curves_svg({{"x", {0, 0.5, 1}, {0.1, 0.1, 0.1}}}, "t");
  CHECK(c.find("polyline") != std::string::npos);
}
