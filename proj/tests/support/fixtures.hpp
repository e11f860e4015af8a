#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "hcjoin/partitioner.hpp"
#include "hcjoin/rows.hpp"

namespace hcj::testing {

// R(X,Y,Z) of the Loomis-Whitney partitioning example, shares (2,2,1) over X,Y,Z.
inline Relation example_partition_relation() {
  return make_relation("R", 3, {{0, 2, 5}, {2, 0, 1}, {5, 6, 2}, {0, 4, 1}, {5, 3, 9}, {1, 1, 4}, {7, 5, 2}}, false);
}

inline AtomShares example_partition_shares() { return AtomShares{{0, 1, 2}, {2, 2, 1}}; }

// Injected hashes for the example: the listed values map to the given buckets.
inline HashFamily example_partition_hashes() {
  HashFamily hashes(3, 1);
  const auto table = [](std::map<Value, std::uint64_t> m) {
    return [m](Value x) { return m.at(x); };
  };
  hashes.set_custom(0, table({{0, 0}, {5, 0}, {2, 0}, {1, 1}, {7, 1}}));
  hashes.set_custom(1, table({{1, 1}, {3, 1}, {4, 1}, {5, 1}, {2, 0}, {0, 0}, {6, 0}}));
  hashes.set_custom(2, [](Value) { return std::uint64_t{0}; });
  return hashes;
}

// Checks permutation, placement and sortedness of a partitioned relation; returns the
// first violation or an empty string.
inline std::string check_partitioned(const Relation& source, const PartitionedRelation& out, const HashFamily& hashes,
                                     std::span<const std::size_t> column_order) {
  const auto k = source.arity;
  auto a = rows_of(source);
  std::vector<std::vector<Value>> b;
  for (std::size_t i = 0; i < out.num_rows(); ++i) b.emplace_back(out.data.begin() + i * k, out.data.begin() + (i + 1) * k);
  std::sort(a.begin(), a.end());
  auto sorted_b = b;
  std::sort(sorted_b.begin(), sorted_b.end());
  if (a != sorted_b) return "scattered rows are not a permutation of the source";

  if (out.offsets.size() != out.shares.num_partitions() + 1) return "offset table has the wrong length";
  if (out.offsets.back() != source.size()) return "offset sentinel differs from the row count";
  for (std::size_t p = 0; p < out.num_partitions(); ++p) {
    if (out.offsets[p] > out.offsets[p + 1]) return "offset table decreases";
    const auto ids = out.shares.unflatten(p);
    for (auto i = out.offsets[p]; i < out.offsets[p + 1]; ++i) {
      for (std::size_t c = 0; c < k; ++c) {
        if (hashes.bucket(out.shares.vars[c], b[i][c], out.shares.shares[c]) != ids[c]) {
          return "row placed in partition " + std::to_string(p) + " hashes elsewhere";
        }
      }
    }
    if (!rows_sorted(out.partition_rows(p), k, column_order)) return "partition " + std::to_string(p) + " is unsorted";
  }
  return "";
}

}  // namespace hcj::testing
