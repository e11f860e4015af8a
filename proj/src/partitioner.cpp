#include "hcjoin/partitioner.hpp"

#include <algorithm>
#include <numeric>

#include <tbb/parallel_sort.h>

#include "hcjoin/parallel.hpp"
#include "hcjoin/rows.hpp"

namespace hcj {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

HashFamily::HashFamily(std::size_t num_vars, std::uint64_t master_seed) {
  std::uint64_t state = master_seed;
  multipliers_.reserve(num_vars);
  addends_.reserve(num_vars);
  for (std::size_t v = 0; v < num_vars; ++v) {
    multipliers_.push_back(splitmix64(state) | 1ULL);
    addends_.push_back(splitmix64(state));
  }
}

void HashFamily::set_custom(VarId v, Custom fn) {
  if (custom_.empty()) custom_.resize(multipliers_.size());
  custom_.at(v) = std::move(fn);
}

std::size_t AtomShares::num_partitions() const {
  std::size_t product = 1;
  for (const auto s : shares) product *= s;
  return product;
}

std::size_t AtomShares::flatten(std::span<const std::uint32_t> ids) const {
  std::size_t index = 0;
  for (std::size_t c = 0; c < shares.size(); ++c) index = index * shares[c] + ids[c];
  return index;
}

std::vector<std::uint32_t> AtomShares::unflatten(std::size_t partition) const {
  std::vector<std::uint32_t> ids(shares.size());
  for (std::size_t c = shares.size(); c-- > 0;) {
    ids[c] = static_cast<std::uint32_t>(partition % shares[c]);
    partition /= shares[c];
  }
  return ids;
}

PartitionIdArray compute_ids(const Relation& relation, const AtomShares& shares, const HashFamily& hashes,
                             std::size_t workers) {
  if (shares.arity() != relation.arity) throw SchemaError("shares do not cover every attribute of '" + relation.name + "'");
  const auto k = relation.arity;
  const auto n = relation.size();
  PartitionIdArray result;
  result.arity = k;
  result.ids.resize(n * k);

  WorkerPool pool(workers);
  pool.for_each_range(n, 4096, [&](std::size_t begin, std::size_t end) {
    for (auto i = begin; i < end; ++i) {
      for (std::size_t c = 0; c < k; ++c) {
        result.ids[i * k + c] = hashes.bucket(shares.vars[c], relation.data[i * k + c], shares.shares[c]);
      }
    }
  });
  return result;
}

PartitionLayout histogram_and_prefix(const PartitionIdArray& ids, const AtomShares& shares) {
  PartitionLayout layout;
  const auto partitions = shares.num_partitions();
  layout.histogram.assign(partitions, 0);
  for (std::size_t i = 0; i < ids.size(); ++i) ++layout.histogram[shares.flatten(ids.row(i))];

  layout.offsets.resize(partitions + 1);
  std::uint64_t running = 0;
  for (std::size_t p = 0; p < partitions; ++p) {
    layout.offsets[p] = running;
    running += layout.histogram[p];
  }
  layout.offsets[partitions] = running;
  return layout;
}

std::vector<std::size_t> assign_partitions(std::span<const std::uint64_t> histogram, std::size_t workers) {
  const auto partitions = histogram.size();
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(partitions, 1));
  const auto total = std::accumulate(histogram.begin(), histogram.end(), std::uint64_t{0});

  std::vector<std::size_t> bounds{0};
  std::uint64_t mass = 0;
  for (std::size_t p = 0; p < partitions && bounds.size() < workers; ++p) {
    mass += histogram[p];
    // Close the block once it reaches its proportional share of the rows.
    if (mass * workers >= total * bounds.size() && partitions - (p + 1) >= workers - bounds.size()) {
      bounds.push_back(p + 1);
    }
  }
  bounds.push_back(partitions);
  return bounds;
}

PartitionedRelation scatter(const Relation& relation, const PartitionIdArray& ids, const PartitionLayout& layout,
                            const AtomShares& shares, std::size_t workers) {
  const auto k = relation.arity;
  const auto n = relation.size();
  PartitionedRelation out;
  out.arity = k;
  out.shares = shares;
  out.offsets = layout.offsets;
  out.data.resize(n * k);

  const auto bounds = assign_partitions(layout.histogram, workers);
  const auto owners = bounds.size() - 1;

  // Every owner scans all of A but writes only the partitions in its block.
  WorkerPool pool(owners);
  pool.for_each_index(owners, [&](std::size_t w) {
    const auto lo = bounds[w];
    const auto hi = bounds[w + 1];
    if (lo == hi) return;
    std::vector<std::uint64_t> cursor(layout.offsets.begin() + static_cast<std::ptrdiff_t>(lo),
                                      layout.offsets.begin() + static_cast<std::ptrdiff_t>(hi));
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = shares.flatten(ids.row(i));
      if (p < lo || p >= hi) continue;
      const auto dst = cursor[p - lo]++;
      std::copy_n(relation.data.data() + i * k, k, out.data.data() + dst * k);
    }
  });
  return out;
}

void sort_partitions(PartitionedRelation& relation, std::span<const std::size_t> column_order, std::size_t workers,
                     SortStrategy strategy) {
  const auto k = relation.arity;
  relation.column_order.assign(column_order.begin(), column_order.end());
  relation.sorted = true;
  const auto partitions = relation.num_partitions();
  if (strategy == SortStrategy::kAuto) {
    strategy = partitions >= workers ? SortStrategy::kPerPartition : SortStrategy::kJoint;
  }

  if (strategy == SortStrategy::kPerPartition) {
    WorkerPool pool(workers);
    pool.for_each_index(partitions, [&](std::size_t p) {
      std::span<Value> rows(relation.data.data() + relation.offsets[p] * k, relation.partition_size(p) * k);
      sort_rows(rows, k, column_order);
    });
    return;
  }

  // Joint sort of (partition id, row) pairs over the whole array keeps partitions contiguous.
  const auto n = relation.num_rows();
  std::vector<std::uint32_t> partition_of(n);
  for (std::size_t p = 0; p < partitions; ++p) {
    std::fill(partition_of.begin() + static_cast<std::ptrdiff_t>(relation.offsets[p]),
              partition_of.begin() + static_cast<std::ptrdiff_t>(relation.offsets[p + 1]), static_cast<std::uint32_t>(p));
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  const Value* base = relation.data.data();
  const auto less = [&](std::size_t a, std::size_t b) {
    if (partition_of[a] != partition_of[b]) return partition_of[a] < partition_of[b];
    return row_less(base + a * k, base + b * k, column_order);
  };
  WorkerPool pool(workers);
  pool.execute([&] { tbb::parallel_sort(perm.begin(), perm.end(), less); });

  std::vector<Value> sorted(relation.data.size());
  for (std::size_t i = 0; i < n; ++i) std::copy_n(base + perm[i] * k, k, sorted.data() + i * k);
  relation.data = std::move(sorted);
}

PartitionedRelation partition_relation(const Relation& relation, const AtomShares& shares, const HashFamily& hashes,
                                       std::span<const std::size_t> column_order, std::size_t workers) {
  const auto ids = compute_ids(relation, shares, hashes, workers);
  const auto layout = histogram_and_prefix(ids, shares);
  auto result = scatter(relation, ids, layout, shares, workers);
  sort_partitions(result, column_order, workers);
  return result;
}

}  // namespace hcj
