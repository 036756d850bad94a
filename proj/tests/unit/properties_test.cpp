#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "provlog/engine.hpp"
#include "provlog/rule_parser.hpp"
#include "provlog/security_rules.hpp"

namespace provlog {
namespace {

/// Every rule-defined relation of `db` equals the naive model's relation.
void expect_same_model(const DerivedDatabase& db, const testing::Model& naive, const std::string& context) {
  for (const auto& sig : db.derived_predicates()) {
    EXPECT_EQ(testing::to_set(db.tuples(sig)), testing::relation(naive, sig)) << context << " " << sig.str();
  }
}

TEST(Equivalence, PackMatchesNaiveFixpoint) {
  std::mt19937_64 rng(404);
  const auto pack = builtin_pack(
      {.depth_bound = 5, .file_threshold = 3, .net_threshold = 2, .derive_initial_compromise = true});
  for (int i = 0; i < 30; ++i) {
    const auto fb = testing::random_store(rng, {.max_nodes = 25, .max_edges = 70, .max_ts = 20});
    expect_same_model(materialize(pack, fb), testing::naive_fixpoint(pack, fb), "store " + std::to_string(i));
  }
}

TEST(Equivalence, ReachabilityIsTheTransitiveClosure) {
  std::mt19937_64 rng(405);
  const auto pack = builtin_pack();
  for (int i = 0; i < 50; ++i) {
    const auto fb = testing::random_store(rng);
    Engine engine(fb);
    const auto db = engine.materialize_for(pack, {{"reachable", 2}, {"causal_dependency", 2}});
    std::set<std::vector<std::string>> closure;
    for (const auto& [a, b] : testing::transitive_closure(fb)) closure.insert({a, b});
    EXPECT_EQ(testing::labels(db.tuples({"reachable", 2})), closure);
    // Two different recursive formulations of the same relation.
    EXPECT_EQ(db.tuples({"causal_dependency", 2}), db.tuples({"reachable", 2}));
  }
}

TEST(Equivalence, HopCountedReachabilityAgreesWithPlainReachability) {
  std::mt19937_64 rng(406);
  for (int i = 0; i < 30; ++i) {
    const auto fb = testing::random_store(rng, {.max_nodes = 20, .max_edges = 40});
    // With a bound of at least the node count, bounded walks reach exactly
    // what unbounded reachability reaches.
    const auto pack = builtin_pack({.depth_bound = 21});
    const auto db = materialize(pack, fb);
    std::set<std::vector<std::string>> projected;
    for (const auto& t : testing::labels(db.tuples({"reachable", 3}))) projected.insert({t[0], t[1]});
    EXPECT_EQ(projected, testing::labels(db.tuples({"reachable", 2})));
  }
}

/// Random stratifiable programs over the graph schema. Predicate dI may use
/// dJ positively for J <= I (recursion included) and under negation or
/// counting only for J < I.
std::string random_program(std::mt19937_64& rng) {
  const auto below = [&](std::uint64_t n) { return n == 0 ? 0 : rng() % n; };
  const int preds = 2 + static_cast<int>(below(4));
  std::string text;
  for (int i = 0; i < preds; ++i) {
    const std::string head = "d" + std::to_string(i);
    const auto lower = [&] { return "d" + std::to_string(below(static_cast<std::uint64_t>(i))); };
    const auto upto = [&] { return "d" + std::to_string(below(static_cast<std::uint64_t>(i + 1))); };
    const int rules = 1 + static_cast<int>(below(3));
    for (int r = 0; r < rules; ++r) {
      switch (below(i == 0 ? 3 : 8)) {
        case 0: text += head + "(X, Y) :- edge(X, Y, _, _)."; break;
        case 1: text += head + "(X, Y) :- edge(X, Y, read, T), T > " + std::to_string(below(30)) + "."; break;
        case 2: text += head + "(X, D) :- edge(X, _, _, T), D is T - 1 + 2."; break;
        case 3: text += head + "(X, Z) :- " + upto() + "(X, Y), " + upto() + "(Y, Z)."; break;
        case 4: text += head + "(X, Y) :- " + upto() + "(X, Y), not " + lower() + "(Y, X)."; break;
        case 5: text += head + "(X, N) :- process(X), N = #count{Y : " + lower() + "(X, Y)}."; break;
        case 6: text += head + "(X, X) :- " + upto() + "(X, _), not sensitive_file(X)."; break;
        default: text += head + "(X, Y) :- " + lower() + "(X, Y), edge(Y, _, _, T), " + lower() + "(Y, T2), T != T2."; break;
      }
      text += "\n";
    }
  }
  return text;
}

TEST(Equivalence, RandomProgramsMatchNaiveFixpoint) {
  std::mt19937_64 rng(407);
  std::size_t nonempty = 0;
  for (int i = 0; i < 150; ++i) {
    const auto text = random_program(rng);
    const auto program = parse_program_or_throw(text);
    const auto fb = testing::random_store(rng, {.max_nodes = 15, .max_edges = 30, .max_ts = 30});
    const auto db = materialize(program, fb);
    expect_same_model(db, testing::naive_fixpoint(program, fb), text);
    nonempty += db.derived_count() > 0 ? 1 : 0;
  }
  EXPECT_GT(nonempty, 75U);
}

TEST(Equivalence, SemiNaiveAndGoalDirectedAgreeOnDetectors) {
  std::mt19937_64 rng(408);
  const auto pack = builtin_pack({.depth_bound = 4, .file_threshold = 3, .net_threshold = 2});
  for (int i = 0; i < 15; ++i) {
    const auto fb = testing::random_store(rng, {.max_nodes = 30, .max_edges = 100});
    Engine engine(fb);
    const auto full = engine.materialize(pack);
    for (const auto& sig : detector_predicates()) {
      std::string q = "?- " + sig.name + "(";
      for (std::size_t a = 0; a < sig.arity; ++a) q += (a ? ", V" : "V") + std::to_string(a);
      const auto rows = engine.query(parse_query_or_throw(q + ")."), pack).rows;
      EXPECT_EQ(testing::to_set(rows), testing::to_set(full.tuples(sig))) << sig.str();
    }
  }
}

}  // namespace
}  // namespace provlog
