#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hcjoin/job.hpp"
#include "hcjoin/optimizer.hpp"
#include "support/generators.hpp"
#include "support/prefix_oracle.hpp"

namespace hcj {

namespace {

std::vector<VarId> vars(std::initializer_list<VarId> v) { return v; }

}  // namespace

TEST(StatisticsTest, HandCountedRelation) {
  const auto q = parse_query("Q(X,Y) :- R(X,Y).");
  const auto catalog = testing::catalog_of(q, {{"R", make_relation("R", 2, {{1, 2}, {1, 3}, {2, 3}})}});
  const auto stats = collect_stats(catalog);
  EXPECT_EQ(stats.cardinality("R"), 3u);
  EXPECT_EQ(stats.distinct("R", 0), 2u);
  EXPECT_EQ(stats.distinct("R", 1), 2u);
  EXPECT_EQ(stats.max_degree("R", 1, 0b01), 2u);
  EXPECT_EQ(stats.max_degree("R", 0, 0b10), 2u);
  EXPECT_EQ(stats.distinct_projection("R", 0b11), 3u);
}

TEST(StatisticsTest, EmptyRelationIsAllZero) {
  const auto q = parse_query("Q(X,Y) :- R(X,Y).");
  const auto stats = collect_stats(testing::catalog_of(q, {{"R", make_relation("R", 2, {})}}));
  EXPECT_EQ(stats.cardinality("R"), 0u);
  EXPECT_EQ(stats.distinct("R", 0), 0u);
  EXPECT_EQ(stats.max_degree("R", 1, 0b01), 0u);
  EXPECT_EQ(stats.avg_degree("R", 1, 0b01), 0.0);
}

TEST(StatisticsTest, AverageDegreeIsRowsOverDistinct) {
  std::vector<std::vector<Value>> rows;
  for (Value x = 0; x < 50; ++x) {
    rows.push_back({x, 2 * x});
    rows.push_back({x, 2 * x + 1});
  }
  const auto q = parse_query("Q(X,Y) :- R(X,Y).");
  const auto stats = collect_stats(testing::catalog_of(q, {{"R", make_relation("R", 2, rows)}}));
  EXPECT_EQ(stats.cardinality("R"), 100u);
  EXPECT_EQ(stats.distinct("R", 0), 50u);
  EXPECT_DOUBLE_EQ(stats.avg_degree("R", 1, 0b01), 2.0);
}

TEST(StatisticsTest, DegreeInvariantsOnRandomRelations) {
  const auto q = parse_query("Q(X,Y,Z) :- R(X,Y,Z).");
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto stats = collect_stats(testing::catalog_of(q, {{"R", testing::random_relation("R", 3, 300, 8, seed)}}));
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_LE(stats.distinct("R", c), stats.cardinality("R"));
      const ColumnMask other = 0b111 & ~(ColumnMask{1} << c);
      for (ColumnMask s1 = 0; s1 <= other; ++s1) {
        if ((s1 & other) != s1) continue;
        EXPECT_GE(stats.max_degree("R", c, s1), 1u);
        // Binding more columns can only shrink the max degree.
        EXPECT_GE(stats.max_degree("R", c, s1), stats.max_degree("R", c, other));
      }
    }
  }
}

TEST(ChainBoundTest, TightExample) {
  const auto q = parse_query("Q(X,Y) :- R(X,Y), S(Y), T(X).");
  const auto catalog = testing::catalog_of(q, {{"R", make_relation("R", 2, {{1, 2}, {1, 3}, {2, 3}})},
                                               {"S", make_relation("S", 1, {{3}})},
                                               {"T", make_relation("T", 1, {{1}, {2}})}});
  const auto stats = collect_stats(catalog);
  const auto bounds = chain_bounds(q, stats, vars({0, 1}));
  EXPECT_EQ(bounds, (std::vector<Cost>{1, 2, 2}));
  EXPECT_EQ(testing::exact_prefix_count(q, catalog, vars({0, 1})), 2u);
}

TEST(ChainBoundTest, EmptyAtomGivesZero) {
  const auto q = parse_query("Q(X,Y) :- R(X,Y), S(Y).");
  const auto catalog =
      testing::catalog_of(q, {{"R", make_relation("R", 2, {{1, 2}})}, {"S", make_relation("S", 1, {})}});
  EXPECT_EQ(chain_bound(q, collect_stats(catalog), vars({1})), 0.0);
}

TEST(ChainBoundTest, NeverBelowExactPrefixCount) {
  std::mt19937_64 rng(17);
  const auto& queries = testing::table3_queries();
  for (int trial = 0; trial < 20; ++trial) {
    const auto& named = queries[trial % 3];
    const auto q = parse_query(named.text);
    const auto catalog = testing::graph_catalog(q, testing::random_graph(30, 120, trial));
    const auto stats = collect_stats(catalog);
    std::vector<VarId> order(q.num_variables());
    std::iota(order.begin(), order.end(), VarId{0});
    std::shuffle(order.begin(), order.end(), rng);
    const auto bounds = chain_bounds(q, stats, order);
    for (std::size_t i = 1; i <= order.size(); ++i) {
      const auto exact = testing::exact_prefix_count(q, catalog, std::span<const VarId>(order).first(i));
      EXPECT_GE(bounds[i], static_cast<Cost>(exact)) << named.name << " prefix " << i;
      EXPECT_GE(bounds[i], bounds[i - 1]);
    }
  }
}

TEST(CostTest, LevelCostArithmetic) {
  EXPECT_DOUBLE_EQ(level_cost(2, 100, 700), 600.0);
  EXPECT_EQ(level_cost(3, 0, 10), 0.0);
}

TEST(CostTest, PartitionedTotal) {
  const std::vector<Cost> levels{0, 10, 20, 40};
  EXPECT_DOUBLE_EQ(partitioned_cost(levels, std::vector<std::uint64_t>{4, 4, 4}), 280.0);
  EXPECT_DOUBLE_EQ(partitioned_cost(levels, std::vector<std::uint64_t>{1, 1, 1}), 70.0);
  // Pre-loop work is repeated by every task.
  EXPECT_DOUBLE_EQ(partitioned_cost(std::vector<Cost>{5, 0, 0}, std::vector<std::uint64_t>{2, 4}), 40.0);
}

TEST(CostTest, LastShareIncreasesCost) {
  const std::vector<Cost> levels{0, 10, 20, 40};
  Cost previous = 0;
  for (std::uint64_t s = 1; s <= 64; s *= 2) {
    const auto c = partitioned_cost(levels, std::vector<std::uint64_t>{2, 2, s});
    EXPECT_GT(c, previous);
    previous = c;
  }
}

TEST(CostTest, UnitSharesMatchTotal) {
  const auto q = parse_query("Q(X,Y,Z) :- R(X,Y), S(Y,Z), T(X,Z).");
  const auto catalog = testing::graph_catalog(q, testing::random_graph(100, 600, 3));
  const auto stats = collect_stats(catalog);
  const auto plan = make_plan(q, stats, {0, 1, 2}, {1, 1, 1}, true);
  EXPECT_DOUBLE_EQ(plan.cost.partitioned_total, plan.cost.total);
}

TEST(EvennessTest, WeightedShares) {
  EXPECT_NEAR(evenness(std::vector<std::uint64_t>{32, 32, 1}), 64.01, 1e-9);
  EXPECT_NEAR(evenness(std::vector<std::uint64_t>{1024, 1, 1}), 1015.71, 1e-9);
  // The weight bottoms out at 3/4.
  std::vector<std::uint64_t> long_vector(40, 0);
  long_vector[39] = 100;
  EXPECT_NEAR(evenness(long_vector), 75.0, 1e-9);
}

TEST(SearchSpaceTest, CompositionCounts) {
  EXPECT_EQ(exponent_compositions(3, 10).size(), 66u);
  EXPECT_EQ(exponent_compositions(4, 10).size(), 286u);
  EXPECT_EQ(exponent_compositions(1, 6), (std::vector<std::vector<unsigned>>{{6}}));
  for (const auto& c : exponent_compositions(3, 5)) EXPECT_EQ(c[0] + c[1] + c[2], 5u);
}

TEST(SearchSpaceTest, DomainPrune) {
  EXPECT_FALSE(domain_allows(1151, 64));
  EXPECT_TRUE(domain_allows(1152, 64));
  EXPECT_TRUE(domain_allows(1, 1));
}

TEST(RewriteTest, CliqueFigureHoists) {
  const auto q = parse_query("Q(X,Y,Z,U) :- R1(X,Y), R2(X,Z), R3(X,U), R4(Y,Z), R5(Y,U), R6(Z,U).");
  const auto hoists = detect_rewrites(q, vars({0, 1, 2, 3}));
  ASSERT_EQ(hoists.size(), 3u);
  EXPECT_EQ(hoists[0], (HoistedIntersection{1, 2, {3, 4}, 0}));
  EXPECT_EQ(hoists[1], (HoistedIntersection{2, 3, {1, 5}, 1}));
  EXPECT_EQ(hoists[2], (HoistedIntersection{3, 4, {2, 4}, 2}));
}

TEST(RewriteTest, TriangleHasNoHoists) {
  const auto q = parse_query("Q(X,Y,Z) :- R(X,Y), S(Y,Z), T(X,Z).");
  std::vector<VarId> order{0, 1, 2};
  do {
    EXPECT_TRUE(detect_rewrites(q, order).empty());
  } while (std::next_permutation(order.begin(), order.end()));
}

TEST(RewriteTest, NoHoistWhenSourcesDependOnPreviousLoop) {
  const auto q = parse_query("Q(X,Y,Z) :- R(X,Y), S(X,Y), T(Y,Z).");
  EXPECT_TRUE(detect_rewrites(q, vars({0, 1, 2})).empty());
}

TEST(RewriteTest, HoistInvariantsOnTable3) {
  for (const auto& named : testing::table3_queries()) {
    const auto q = parse_query(named.text);
    std::vector<VarId> order(q.num_variables());
    std::iota(order.begin(), order.end(), VarId{0});
    do {
      std::vector<std::size_t> pos(order.size());
      for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i + 1;
      for (const auto& h : detect_rewrites(q, order)) {
        EXPECT_GE(h.sources.size(), 2u);
        EXPECT_LT(h.placement + 1, h.target_level);
        for (const auto a : h.sources) {
          for (const auto u : q.atoms[a].vars) {
            // No source depends on a variable bound in (placement, target).
            EXPECT_FALSE(pos[u] > h.placement && pos[u] < h.target_level);
          }
        }
      }
    } while (std::next_permutation(order.begin(), order.end()));
  }
}

TEST(ChoosePlanTest, DeterministicAndValid) {
  const auto q = parse_query("Q(X,Y,Z) :- R(X,Y), S(Y,Z), T(X,Z).");
  const auto catalog = testing::graph_catalog(q, testing::zipf_graph(20000, 20000, 1.2, 1));
  const auto stats = collect_stats(catalog);
  const auto a = choose_plan(q, stats, 1024);
  const auto b = choose_plan(q, stats, 1024);
  EXPECT_EQ(a.order, b.order);
  EXPECT_EQ(a.shares, b.shares);
  EXPECT_EQ(a.threads(), 1024u);
  EXPECT_EQ(a.search.share_candidates, 66u);
  EXPECT_FALSE(a.search.fallback);
  EXPECT_NE(a.shares_in_order(), (std::vector<std::uint64_t>{1024, 1, 1}));
  EXPECT_NE(explain_text(q, a).find("66 share candidates enumerated"), std::string::npos);
}

TEST(ChoosePlanTest, OverridesEchoBack) {
  const auto q = parse_query("Q(X,Y,Z) :- R(X,Y), S(Y,Z), T(X,Z).");
  const auto catalog = testing::graph_catalog(q, testing::random_graph(200, 2000, 1));
  const auto stats = collect_stats(catalog);
  PlanOverrides overrides;
  overrides.order = {2, 0, 1};
  overrides.shares = {{0, 4}, {1, 2}, {2, 8}};
  const auto plan = choose_plan(q, stats, 64, overrides);
  EXPECT_EQ(plan.order, (std::vector<VarId>{2, 0, 1}));
  EXPECT_EQ(plan.shares, (std::vector<std::uint64_t>{4, 2, 8}));

  overrides.shares = {{0, 4}};
  const auto partial = choose_plan(q, stats, 64, overrides);
  EXPECT_EQ(partial.shares[0], 4u);
  EXPECT_EQ(partial.threads(), 64u);

  overrides.shares = {{0, 4}, {1, 2}, {2, 2}};
  EXPECT_THROW(choose_plan(q, stats, 64, overrides), ConfigError);
}

TEST(ChoosePlanTest, FallsBackWhenEverythingIsPruned) {
  const auto q = parse_query("Q(X,Y,Z) :- R(X,Y), S(Y,Z), T(X,Z).");
  const auto catalog = testing::graph_catalog(q, testing::random_graph(10, 40, 1));
  const auto plan = choose_plan(q, collect_stats(catalog), 1024);
  EXPECT_TRUE(plan.search.fallback);
  EXPECT_FALSE(plan.search.warnings.empty());
  EXPECT_EQ(plan.shares_in_order(), (std::vector<std::uint64_t>{1024, 1, 1}));
}

TEST(ChoosePlanTest, RejectsBadThreadCounts) {
  const auto q = parse_query("Q(X,Y) :- R(X,Y).");
  const auto catalog = testing::catalog_of(q, {{"R", make_relation("R", 2, {{1, 2}})}});
  EXPECT_THROW(choose_plan(q, collect_stats(catalog), 12), ConfigError);
}

TEST(ChoosePlanTest, ExplainJsonTwin) {
  const auto q = parse_query("Q(X,Y,Z,U) :- R1(X,Y), R2(X,Z), R3(X,U), R4(Y,Z), R5(Y,U), R6(Z,U).");
  const auto catalog = testing::graph_catalog(q, testing::random_graph(100, 800, 2));
  const auto stats = collect_stats(catalog);
  const auto plan = make_plan(q, stats, {0, 1, 2, 3}, {2, 2, 2, 1}, true);
  const auto j = explain_json(q, plan);
  EXPECT_EQ(j["hoists"].size(), 3u);
  EXPECT_EQ(j["order"], nlohmann::json({"X", "Y", "Z", "U"}));
  EXPECT_EQ(j["level_costs"].size(), 5u);
  EXPECT_NE(explain_text(q, plan).find("tmp_Y = R4.Y & R5.Y"), std::string::npos);
}

}  // namespace hcj
