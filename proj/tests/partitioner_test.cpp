#include <random>

#include <gtest/gtest.h>

#include "hcjoin/partitioner.hpp"
#include "hcjoin/rows.hpp"
#include "support/fixtures.hpp"
#include "support/generators.hpp"

namespace hcj {

class PartitionerExampleTest : public ::testing::Test {
 protected:
  Relation relation = testing::example_partition_relation();
  AtomShares shares = testing::example_partition_shares();
  HashFamily hashes = testing::example_partition_hashes();
};

TEST_F(PartitionerExampleTest, ComputesInjectedIds) {
  const auto ids = compute_ids(relation, shares, hashes);
  // Row 3 is (0,4,1).
  EXPECT_EQ(std::vector<std::uint32_t>(ids.row(3).begin(), ids.row(3).end()), (std::vector<std::uint32_t>{0, 1, 0}));
}

TEST_F(PartitionerExampleTest, HistogramAndPrefix) {
  const auto layout = histogram_and_prefix(compute_ids(relation, shares, hashes), shares);
  const std::uint32_t p010[] = {0, 1, 0};
  const std::uint32_t p100[] = {1, 0, 0};
  EXPECT_EQ(layout.histogram[shares.flatten(p010)], 2u);
  EXPECT_EQ(layout.offsets[shares.flatten(p010)], 3u);
  EXPECT_EQ(layout.histogram[shares.flatten(p100)], 0u);
  EXPECT_EQ(layout.offsets.back(), 7u);
}

TEST_F(PartitionerExampleTest, ScatterPlacesGreyPartition) {
  const auto ids = compute_ids(relation, shares, hashes);
  const auto layout = histogram_and_prefix(ids, shares);
  for (const std::size_t workers : {1, 2, 3}) {
    const auto out = scatter(relation, ids, layout, shares, workers);
    const std::uint32_t p010[] = {0, 1, 0};
    const auto p = shares.flatten(p010);
    EXPECT_EQ(out.offsets[p], 3u);
    std::vector<Value> rows(out.partition_rows(p).begin(), out.partition_rows(p).end());
    EXPECT_EQ(rows, (std::vector<Value>{0, 4, 1, 5, 3, 9}));
  }
}

TEST(PartitionerTest, UnitSharesGiveZeroIds) {
  const auto rel = testing::random_relation("r", 3, 50, 100, 1);
  const AtomShares shares{{0, 1, 2}, {1, 1, 1}};
  const auto ids = compute_ids(rel, shares, HashFamily(3, 9));
  EXPECT_TRUE(std::all_of(ids.ids.begin(), ids.ids.end(), [](auto id) { return id == 0; }));
}

TEST(PartitionerTest, SeededHashMatchesDefinition) {
  const HashFamily hashes(2, 42);
  const Value x = 123456789;
  const Value y = 987654321;
  const auto rel = make_relation("r", 2, {{x, y}});
  const auto ids = compute_ids(rel, AtomShares{{0, 1}, {2, 2}}, hashes);
  const auto by_hand = [&](VarId v, Value value) {
    return static_cast<std::uint32_t>(((hashes.multiplier(v) * value + hashes.addend(v)) >> 32) % 2);
  };
  EXPECT_EQ(ids.row(0)[0], by_hand(0, x));
  EXPECT_EQ(ids.row(0)[1], by_hand(1, y));
  EXPECT_EQ(hashes.multiplier(0) & 1, 1u);
}

TEST(PartitionerTest, EmptyRelationGivesZeroTables) {
  const auto rel = make_relation("r", 2, {});
  const AtomShares shares{{0, 1}, {4, 2}};
  const auto layout = histogram_and_prefix(compute_ids(rel, shares, HashFamily(2, 1)), shares);
  EXPECT_EQ(layout.histogram, std::vector<std::uint64_t>(8, 0));
  EXPECT_EQ(layout.offsets, std::vector<std::uint64_t>(9, 0));
}

TEST(PartitionerTest, RandomRelationsSatisfyInvariants) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const auto arity = 2 + trial % 3;
    const auto rel = testing::random_relation("r", arity, 1000, 50, trial);
    AtomShares shares;
    for (std::size_t c = 0; c < arity; ++c) {
      shares.vars.push_back(static_cast<VarId>(c));
      shares.shares.push_back(std::uint64_t{1} << (rng() % 3));
    }
    std::vector<std::size_t> order(arity);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    const HashFamily hashes(arity, trial);
    const auto out = partition_relation(rel, shares, hashes, order, 1 + trial % 4);
    EXPECT_EQ(testing::check_partitioned(rel, out, hashes, order), "") << "trial " << trial;
    const auto serial = partition_relation(rel, shares, hashes, order, 1);
    EXPECT_EQ(out.data, serial.data);
    EXPECT_EQ(out.offsets, serial.offsets);
  }
}

TEST(PartitionerTest, SortsByPlanOrder) {
  // T(Z,X) under variable order X,Y,Z sorts by X then Z: column order (1, 0).
  const auto rel = make_relation("T", 2, {{1, 9}, {2, 3}, {0, 3}, {5, 1}});
  const AtomShares shares{{2, 0}, {1, 1}};
  const std::vector<std::size_t> order{1, 0};
  const auto out = partition_relation(rel, shares, HashFamily(3, 1), order);
  EXPECT_EQ(out.data, (std::vector<Value>{5, 1, 0, 3, 2, 3, 1, 9}));
}

TEST(PartitionerTest, SortStrategiesAgree) {
  const auto rel = testing::random_relation("r", 3, 2000, 30, 5);
  const AtomShares shares{{0, 1, 2}, {2, 1, 2}};
  const HashFamily hashes(3, 5);
  const std::vector<std::size_t> order{2, 0, 1};
  const auto ids = compute_ids(rel, shares, hashes);
  const auto layout = histogram_and_prefix(ids, shares);
  auto a = scatter(rel, ids, layout, shares);
  auto b = a;
  sort_partitions(a, order, 4, SortStrategy::kPerPartition);
  sort_partitions(b, order, 8, SortStrategy::kJoint);
  EXPECT_EQ(a.data, b.data);
}

TEST(PartitionerTest, AssignPartitionsCoversAllPartitions) {
  const std::vector<std::uint64_t> histogram{5, 0, 0, 7, 1, 1, 10, 0};
  for (const std::size_t workers : {1, 2, 3, 8, 16}) {
    const auto bounds = assign_partitions(histogram, workers);
    ASSERT_GE(bounds.size(), 2u);
    EXPECT_EQ(bounds.front(), 0u);
    EXPECT_EQ(bounds.back(), histogram.size());
    EXPECT_TRUE(std::is_sorted(bounds.begin(), bounds.end()));
  }
}

}  // namespace hcj
