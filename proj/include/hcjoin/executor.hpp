#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hcjoin/coco.hpp"
#include "hcjoin/intersect.hpp"
#include "hcjoin/optimizer.hpp"
#include "hcjoin/partitioner.hpp"
#include "hcjoin/types.hpp"

namespace hcj {

// One atom's partitioned copy, sorted in the column order induced by the variable order,
// with one trie per partition.
struct AtomIndex {
  AtomShares shares;
  // column_order[r] is the atom column stored at trie level r.
  std::vector<std::size_t> column_order;
  PartitionedRelation partitioned;
  std::vector<CocoIndex> tries;
};

struct PrepareTimings {
  std::uint64_t partition_nanos = 0;
  std::uint64_t index_nanos = 0;
};

struct PreparedQuery {
  Query query;
  Plan plan;
  std::vector<AtomIndex> atoms;
  PrepareTimings timings;

  std::size_t num_tasks() const;
  // Task coordinates indexed by VarId; tasks are numbered row-major over the order.
  std::vector<std::uint32_t> task_coordinates(std::size_t task) const;
  // Partition of `atom` used by the task with these coordinates.
  std::size_t resolve_partition(std::span<const std::uint32_t> coordinates, std::size_t atom) const;
};

PreparedQuery prepare(const Query& query, const Catalog& catalog, const Plan& plan, const HashFamily& hashes,
                      std::size_t workers = 1);

struct TaskStats {
  std::size_t task = 0;
  std::uint64_t steps = 0;
  std::uint64_t emitted = 0;
  std::uint64_t wall_nanos = 0;
};

// Invoked before every intersection with the 1-based level and the sizes of the views
// being intersected. Called concurrently from tasks when workers > 1.
using LevelObserver = std::function<void(std::size_t level, std::span<const std::size_t> view_sizes)>;

struct ExecOptions {
  std::size_t workers = 1;
  bool collect_tuples = false;
  bool instrument = false;
  SearchConfig search;
  LevelObserver level_observer;
};

struct ResultSet {
  // Bindings are rows over the query variables in declaration order.
  std::size_t arity = 0;
  std::uint64_t count = 0;
  std::vector<Value> tuples;
  std::vector<TaskStats> tasks;

  std::uint64_t total_steps() const;
  std::vector<std::vector<Value>> rows() const;
  std::vector<std::vector<Value>> sorted_rows() const;
};

// Runs one task; tuples are appended to `out` when options.collect_tuples is set.
TaskStats run_task(const PreparedQuery& prepared, std::size_t task, const ExecOptions& options,
                   std::vector<Value>* out = nullptr);

ResultSet run(const PreparedQuery& prepared, const ExecOptions& options);

}  // namespace hcj
