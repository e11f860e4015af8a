#include <random>
#include <set>

#include <gtest/gtest.h>

#include "hcjoin/executor.hpp"
#include "hcjoin/job.hpp"
#include "hcjoin/oracle.hpp"
#include "support/generators.hpp"

namespace hcj {

namespace {

const char* kTriangle = "Q(X,Y,Z) :- R(X,Y), S(Y,Z), T(X,Z).";
const char* kClique = "Q(X,Y,Z,U) :- R1(X,Y), R2(X,Z), R3(X,U), R4(Y,Z), R5(Y,U), R6(Z,U).";

Relation five_edges() { return make_relation("E", 2, {{1, 2}, {2, 3}, {1, 3}, {3, 1}, {2, 1}}); }

ResultSet execute_plan(const Query& q, const Catalog& catalog, const Plan& plan, std::size_t workers,
                       bool instrument = false, std::uint64_t seed = 1) {
  const auto prepared = prepare(q, catalog, plan, HashFamily(q.num_variables(), seed), workers);
  ExecOptions options;
  options.workers = workers;
  options.collect_tuples = true;
  options.instrument = instrument;
  return run(prepared, options);
}

std::vector<std::uint64_t> random_shares(std::mt19937_64& rng, std::size_t n, unsigned log_p) {
  std::vector<std::uint64_t> shares(n, 1);
  for (unsigned b = 0; b < log_p; ++b) shares[rng() % n] *= 2;
  return shares;
}

}  // namespace

TEST(ExecutorTest, DirectedTriangleOnFiveEdges) {
  const auto q = parse_query(kTriangle);
  const auto catalog = testing::graph_catalog(q, five_edges());
  const auto plan = make_plan(q, collect_stats(catalog), {0, 1, 2}, {1, 1, 1}, true);
  const auto result = execute_plan(q, catalog, plan, 1);
  // (2,1,3) closes R(2,1), S(1,3), T(2,3) as well.
  EXPECT_EQ(result.sorted_rows(), (std::vector<std::vector<Value>>{{1, 2, 3}, {2, 1, 3}, {2, 3, 1}}));
  EXPECT_EQ(result.count, 3u);
}

TEST(ExecutorTest, ResolvesPartitionsByProjection) {
  const auto q = parse_query(kTriangle);
  const auto catalog = testing::graph_catalog(q, testing::random_graph(50, 200, 1));
  const auto plan = make_plan(q, collect_stats(catalog), {0, 1, 2}, {2, 4, 2}, false);
  const auto prepared = prepare(q, catalog, plan, HashFamily(3, 1));
  EXPECT_EQ(prepared.num_tasks(), 16u);
  for (std::size_t t = 0; t < prepared.num_tasks(); ++t) {
    const auto c = prepared.task_coordinates(t);
    // Task (i,j,k) reads R_ij, S_jk, T_ik.
    EXPECT_EQ(prepared.resolve_partition(c, 0), c[0] * 4 + c[1]);
    EXPECT_EQ(prepared.resolve_partition(c, 1), c[1] * 2 + c[2]);
    EXPECT_EQ(prepared.resolve_partition(c, 2), c[0] * 2 + c[2]);
  }
  EXPECT_EQ(prepared.task_coordinates(5), (std::vector<std::uint32_t>{0, 2, 1}));

  const auto unit = make_plan(q, collect_stats(catalog), {0, 1, 2}, {1, 1, 1}, false);
  const auto whole = prepare(q, catalog, unit, HashFamily(3, 1));
  EXPECT_EQ(whole.atoms[0].tries.size(), 1u);
  EXPECT_EQ(whole.atoms[0].partitioned.num_rows(), 200u);
}

TEST(ExecutorTest, EmptyAtomGivesNoBindings) {
  const auto q = parse_query("Q(X,Y,Z) :- R(X,Y), S(Y,Z).");
  const auto catalog = testing::catalog_of(q, {{"R", make_relation("R", 2, {{1, 2}})}, {"S", make_relation("S", 2, {})}});
  const auto plan = make_plan(q, collect_stats(catalog), {0, 1, 2}, {2, 1, 1}, true);
  EXPECT_EQ(execute_plan(q, catalog, plan, 2).count, 0u);
}

TEST(ExecutorTest, SingleTaskMatchesRunTask) {
  const auto q = parse_query(kTriangle);
  const auto catalog = testing::graph_catalog(q, testing::random_graph(100, 800, 4));
  const auto plan = make_plan(q, collect_stats(catalog), {1, 0, 2}, {1, 1, 1}, true);
  const auto prepared = prepare(q, catalog, plan, HashFamily(3, 1));
  ExecOptions options;
  options.collect_tuples = true;
  std::vector<Value> tuples;
  const auto stats = run_task(prepared, 0, options, &tuples);
  const auto result = run(prepared, options);
  EXPECT_EQ(result.tuples, tuples);
  EXPECT_EQ(result.count, stats.emitted);
}

TEST(ExecutorTest, TasksPartitionTheAnswer) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 12; ++trial) {
    const auto& named = testing::table3_queries()[trial % testing::table3_queries().size()];
    const auto q = parse_query(named.text);
    const auto catalog = named.graph ? testing::graph_catalog(q, testing::random_graph(80, 500, trial))
                                     : testing::fixture_catalog(q, false, trial);
    const auto expected = evaluate(q, catalog);
    std::vector<VarId> order(q.num_variables());
    std::iota(order.begin(), order.end(), VarId{0});
    std::shuffle(order.begin(), order.end(), rng);
    const auto plan = make_plan(q, collect_stats(catalog), order, random_shares(rng, order.size(), 4), trial % 2 == 0);
    const auto prepared = prepare(q, catalog, plan, HashFamily(q.num_variables(), trial));
    ExecOptions options;
    options.collect_tuples = true;
    std::set<std::vector<Value>> seen;
    std::uint64_t total = 0;
    for (std::size_t t = 0; t < prepared.num_tasks(); ++t) {
      std::vector<Value> tuples;
      total += run_task(prepared, t, options, &tuples).emitted;
      for (std::size_t i = 0; i < tuples.size(); i += q.num_variables()) {
        EXPECT_TRUE(seen.emplace(tuples.begin() + i, tuples.begin() + i + q.num_variables()).second)
            << named.name << ": binding produced twice";
      }
    }
    EXPECT_EQ(total, expected.size()) << named.name;
    EXPECT_EQ(std::vector<std::vector<Value>>(seen.begin(), seen.end()), expected) << named.name;
  }
}

TEST(ExecutorTest, RewritesDoNotChangeResults) {
  const auto q = parse_query(kClique);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto catalog = testing::graph_catalog(q, testing::random_graph(200, 2000, seed));
    const auto stats = collect_stats(catalog);
    const auto with = execute_plan(q, catalog, make_plan(q, stats, {0, 1, 2, 3}, {2, 2, 1, 1}, true), 2, true);
    const auto without = execute_plan(q, catalog, make_plan(q, stats, {0, 1, 2, 3}, {2, 2, 1, 1}, false), 2, true);
    EXPECT_EQ(with.sorted_rows(), without.sorted_rows());
    EXPECT_LE(with.total_steps(), without.total_steps());
  }
  const auto catalog = testing::graph_catalog(q, testing::random_graph(60, 500, 5));
  const auto plan = make_plan(q, collect_stats(catalog), {0, 1, 2, 3}, {2, 1, 2, 1}, true);
  EXPECT_EQ(execute_plan(q, catalog, plan, 1).sorted_rows(), evaluate(q, catalog));
}

TEST(ExecutorTest, WorkerCountDoesNotChangeResults) {
  const auto q = parse_query(kTriangle);
  const auto catalog = testing::graph_catalog(q, testing::random_graph(200, 2000, 9));
  const auto plan = make_plan(q, collect_stats(catalog), {0, 1, 2}, {4, 4, 2}, true);
  const auto reference = execute_plan(q, catalog, plan, 1).sorted_rows();
  for (const std::size_t workers : {2, 8}) EXPECT_EQ(execute_plan(q, catalog, plan, workers).sorted_rows(), reference);
}

TEST(ExecutorTest, TuplesAreInVariableOrderWithinTask) {
  const auto q = parse_query(kTriangle);
  const auto catalog = testing::graph_catalog(q, testing::random_graph(60, 400, 2));
  const auto plan = make_plan(q, collect_stats(catalog), {2, 0, 1}, {1, 1, 1}, true);
  const auto rows = execute_plan(q, catalog, plan, 1).rows();
  // Emission is lexicographic in the plan order (Z, X, Y).
  EXPECT_TRUE(std::is_sorted(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return std::tie(a[2], a[0], a[1]) < std::tie(b[2], b[0], b[1]);
  }));
}

TEST(ExecutorTest, InstrumentationCountsSteps) {
  const auto q = parse_query(kTriangle);
  const auto catalog = testing::graph_catalog(q, testing::random_graph(60, 400, 2));
  const auto plan = make_plan(q, collect_stats(catalog), {0, 1, 2}, {2, 2, 1}, true);
  EXPECT_GT(execute_plan(q, catalog, plan, 1, true).total_steps(), 0u);
  EXPECT_EQ(execute_plan(q, catalog, plan, 1, false).total_steps(), 0u);
}

}  // namespace hcj
