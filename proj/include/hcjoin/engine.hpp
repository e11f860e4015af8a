#pragma once

#include <cstdint>

#include "hcjoin/executor.hpp"
#include "hcjoin/job.hpp"
#include "hcjoin/optimizer.hpp"

namespace hcj {

// Maps variable names in the run configuration to optimizer overrides.
PlanOverrides overrides_from(const Query& query, const RunConfig& config);

struct PhaseTimings {
  std::uint64_t load_nanos = 0;
  std::uint64_t optimize_nanos = 0;
  std::uint64_t partition_nanos = 0;
  std::uint64_t index_nanos = 0;
  std::uint64_t join_nanos = 0;

  // Preprocessing plus join; loading is excluded.
  std::uint64_t total_nanos() const { return optimize_nanos + partition_nanos + index_nanos + join_nanos; }
};

struct Execution {
  Plan plan;
  ResultSet result;
  PhaseTimings timings;
};

// Statistics, plan choice, partitioning, indexing and the parallel join for one catalog.
Execution execute(const Query& query, const Catalog& catalog, const RunConfig& config, std::size_t workers,
                  bool collect_tuples);

}  // namespace hcj
