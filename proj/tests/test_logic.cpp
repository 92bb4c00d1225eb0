#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "tlmarl/logic.hpp"

using namespace tlmarl;

namespace {

Signal scalar_signal(const std::vector<std::vector<double>>& rows) {
  Signal s(rows.front().size());
  for (const auto& r : rows) s.push_back(r);
  return s;
}

PredicateTable example_predicates() {
  return PredicateTable::custom({"go1", "do1", "go2", "do2", "go3", "do3"});
}

}  // namespace

TEST_CASE("parser builds the expected trees") {
  const auto preds = example_predicates();
  const Formula go1 = Formula::pred(*preds.find("go1"));
  const Formula do1 = Formula::pred(*preds.find("do1"));

  SUBCASE("then/and tree of a single-request task") {
    const Formula f = parse_formula("go1 T do1 && [](!( !go1 && do1 ))", preds);
    const Formula expected = Formula::conj(
        Formula::binary(Op::Then, go1, do1),
        Formula::unary(Op::Always, Formula::negate(Formula::conj(Formula::negate(go1), do1))));
    CHECK(structurally_equal(f, expected));
  }
  SUBCASE("top") { CHECK(parse_formula("top", preds).op() == Op::True); }
  SUBCASE("eventually of a disjunction") {
    const Formula f = parse_formula("<> (do1 || do2)", preds);
    REQUIRE(f.op() == Op::Eventually);
    CHECK(f.child(0).op() == Op::Or);
  }
  SUBCASE("implication is right associative and loosest") {
    const Formula f = parse_formula("go1 -> do1 -> go2 || do2", preds);
    REQUIRE(f.op() == Op::Imply);
    CHECK(f.child(1).op() == Op::Imply);
    CHECK(f.child(1).child(1).op() == Op::Or);
  }
  SUBCASE("until binds tighter than conjunction") {
    const Formula f = parse_formula("!do3 U do1 && go1", preds);
    REQUIRE(f.op() == Op::And);
    CHECK(f.child(0).op() == Op::Until);
  }
}

TEST_CASE("parser rejects malformed input") {
  const auto preds = example_predicates();
  CHECK_THROWS_AS(parse_formula("go1 &&", preds), ParseError);
  CHECK_THROWS_AS(parse_formula("(go1", preds), ParseError);
  CHECK_THROWS_AS(parse_formula("go9", preds), ParseError);
  CHECK_THROWS_AS(parse_formula("go1 do1", preds), ParseError);
  CHECK_THROWS_AS(parse_guard("<> go1", preds), ParseError);
}

TEST_CASE("printing round-trips through the parser") {
  const auto preds = example_predicates();
  std::mt19937_64 rng(11);
  for (int k = 0; k < 500; ++k) {
    const Formula f = oracle::random_formula(rng, 5, preds);
    const Formula g = parse_formula(to_string(f), preds);
    CHECK_MESSAGE(structurally_equal(f, g), to_string(f));
  }
}

TEST_CASE("robustness of small hand cases") {
  const auto preds = PredicateTable::custom({"p", "q"});
  const Formula p = Formula::pred(*preds.find("p"));
  const Formula q = Formula::pred(*preds.find("q"));
  const Signal x = scalar_signal({{-3, 1}, {2, -1}, {-1, 4}});

  CHECK(robustness(x, Formula::unary(Op::Eventually, p)) == 2.0);
  CHECK(robustness(x, Formula::unary(Op::Always, p)) == -3.0);
  CHECK(robustness(x, Formula::unary(Op::Next, p)) == 2.0);
  CHECK(robustness(x, Formula::unary(Op::Next, p), 2) == -kRhoMax);
  CHECK(robustness(x, Formula::top()) == kRhoMax);
  // p U q: q holds at 0 already.
  CHECK(robustness(x, Formula::binary(Op::Until, p, q)) == 1.0);
  // p T q at t=0: max(min(-3, max(-1, 4)), min(2, 4)) = 2.
  CHECK(robustness(x, Formula::binary(Op::Then, p, q)) == 2.0);
  // Then needs a strictly earlier p: impossible at the last step.
  CHECK(robustness(x, Formula::binary(Op::Then, p, q), 2) == -kRhoMax);
  CHECK_THROWS_AS(robustness(x, p, 3), std::out_of_range);
}

TEST_CASE("negation and lattice laws on random inputs") {
  const auto preds = PredicateTable::custom({"a", "b", "c"});
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> val(-5.0, 5.0);
  for (int k = 0; k < 300; ++k) {
    const Formula f = oracle::random_formula(rng, 4, preds);
    const Formula g = oracle::random_formula(rng, 4, preds);
    Signal x(3);
    const int len = 1 + static_cast<int>(rng() % 6);
    for (int t = 0; t < len; ++t) x.push_back(std::vector<double>{val(rng), val(rng), val(rng)});
    const double rf = robustness(x, f);
    const double rg = robustness(x, g);
    CHECK(robustness(x, Formula::negate(f)) == -rf);
    CHECK(robustness(x, Formula::conj(f, g)) == std::min(rf, rg));
    CHECK(robustness(x, Formula::disj(f, g)) == std::max(rf, rg));
    CHECK(satisfies(x, f) == (rf > 0.0));
    if (rf != 0.0) CHECK_FALSE((satisfies(x, f) && satisfies(x, Formula::negate(f))));
    CHECK(robustness_series(x, f)[0] == rf);
  }
}

TEST_CASE("recursive evaluator equals the enumeration oracle") {
  const auto preds = PredicateTable::custom({"a", "b"});
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> val(-4, 4);
  for (int k = 0; k < 300; ++k) {
    const Formula f = oracle::random_formula(rng, 4, preds);
    Signal x(2);
    const int len = 1 + static_cast<int>(rng() % 6);
    for (int t = 0; t < len; ++t) x.push_back(std::vector<double>{double(val(rng)), double(val(rng))});
    const auto series = robustness_series(x, f);
    for (std::size_t t = 0; t < x.length(); ++t) {
      REQUIRE_MESSAGE(series[t] == oracle::suffix_robustness(x, f, t), to_string(f) << " at t=" << t);
    }
  }
}

TEST_CASE("guards evaluate pointwise") {
  const auto preds = PredicateTable::custom({"p", "q"});
  const Formula g = parse_guard("p && !q || !p", preds);
  CHECK(eval_guard(std::vector<double>{2, -3}, g) == 2.0);
  const Formula contradiction = parse_guard("p && !p", preds);
  for (double v : {-2.0, 0.0, 0.5, 7.0}) CHECK(eval_guard(std::vector<double>{v, 0}, contradiction) <= 0.0);
  CHECK_THROWS_AS(eval_guard(std::vector<double>{1, 1}, Formula::unary(Op::Eventually, g)), std::logic_error);
}
