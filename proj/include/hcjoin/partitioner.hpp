#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hcjoin/types.hpp"

namespace hcj {

/**
 * One seeded hash function per query variable. h_v(x) is a multiply-add-shift hash
 * reduced modulo the variable's share; shares are powers of two so the reduction is a mask.
 */
class HashFamily {
 public:
  using Custom = std::function<std::uint64_t(Value)>;

  HashFamily() = default;
  HashFamily(std::size_t num_vars, std::uint64_t master_seed);

  std::size_t size() const { return multipliers_.size(); }
  std::uint64_t multiplier(VarId v) const { return multipliers_.at(v); }
  std::uint64_t addend(VarId v) const { return addends_.at(v); }

  // Replaces h_v with `fn` (reduced modulo the share like the default hash).
  void set_custom(VarId v, Custom fn);

  std::uint64_t hash(VarId v, Value x) const {
    if (!custom_.empty() && custom_[v]) return custom_[v](x);
    return (multipliers_[v] * x + addends_[v]) >> 32;
  }

  std::uint32_t bucket(VarId v, Value x, std::uint64_t share) const {
    return share == 1 ? 0u : static_cast<std::uint32_t>(hash(v, x) & (share - 1));
  }

 private:
  std::vector<std::uint64_t> multipliers_;
  std::vector<std::uint64_t> addends_;
  std::vector<Custom> custom_;
};

// Shares of an atom's columns, in column order; the product is the atom's partition count.
struct AtomShares {
  std::vector<VarId> vars;
  std::vector<std::uint64_t> shares;

  std::size_t arity() const { return vars.size(); }
  std::size_t num_partitions() const;
  // Lexicographic flattening of a partition identifier tuple.
  std::size_t flatten(std::span<const std::uint32_t> ids) const;
  std::vector<std::uint32_t> unflatten(std::size_t partition) const;
};

// Partition identifiers for every row, row-major (arity ids per row).
struct PartitionIdArray {
  std::size_t arity = 0;
  std::vector<std::uint32_t> ids;

  std::size_t size() const { return arity == 0 ? 0 : ids.size() / arity; }
  std::span<const std::uint32_t> row(std::size_t i) const { return {ids.data() + i * arity, arity}; }
};

struct PartitionLayout {
  // Rows per partition, lexicographic partition order.
  std::vector<std::uint64_t> histogram;
  // Exclusive prefix sums of histogram plus a final sentinel equal to the row count.
  std::vector<std::uint64_t> offsets;

  std::size_t num_partitions() const { return histogram.size(); }
};

/**
 * A relation scattered into contiguous partitions. Partition p occupies rows
 * [offsets[p], offsets[p + 1]) of data. After sorting, each partition is ordered
 * lexicographically under column_order.
 */
struct PartitionedRelation {
  std::size_t arity = 0;
  AtomShares shares;
  std::vector<Value> data;
  std::vector<std::uint64_t> offsets;
  std::vector<std::size_t> column_order;
  bool sorted = false;

  std::size_t num_partitions() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::size_t num_rows() const { return arity == 0 ? 0 : data.size() / arity; }
  std::size_t partition_size(std::size_t p) const { return offsets[p + 1] - offsets[p]; }
  std::span<const Value> partition_rows(std::size_t p) const {
    return {data.data() + offsets[p] * arity, partition_size(p) * arity};
  }
};

enum class SortStrategy { kAuto, kPerPartition, kJoint };

PartitionIdArray compute_ids(const Relation& relation, const AtomShares& shares, const HashFamily& hashes,
                             std::size_t workers = 1);

// Single-threaded histogram and prefix sum.
PartitionLayout histogram_and_prefix(const PartitionIdArray& ids, const AtomShares& shares);

PartitionedRelation scatter(const Relation& relation, const PartitionIdArray& ids, const PartitionLayout& layout,
                            const AtomShares& shares, std::size_t workers = 1);

// Sorts every partition under column_order. kAuto sorts partitions independently when
// there are at least as many partitions as workers, else runs one joint sort keyed by
// (partition, row).
void sort_partitions(PartitionedRelation& relation, std::span<const std::size_t> column_order, std::size_t workers = 1,
                     SortStrategy strategy = SortStrategy::kAuto);

// compute_ids + histogram_and_prefix + scatter + sort_partitions.
PartitionedRelation partition_relation(const Relation& relation, const AtomShares& shares, const HashFamily& hashes,
                                       std::span<const std::size_t> column_order, std::size_t workers = 1);

// Contiguous partition ranges for `workers` scatter threads, balanced by row mass. Returns
// workers + 1 boundaries (possibly fewer workers when there are fewer partitions).
std::vector<std::size_t> assign_partitions(std::span<const std::uint64_t> histogram, std::size_t workers);

}  // namespace hcj
