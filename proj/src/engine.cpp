#include "hcjoin/engine.hpp"

#include <chrono>

namespace hcj {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t nanos_since(Clock::time_point start) {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count());
}

}  // namespace

PlanOverrides overrides_from(const Query& query, const RunConfig& config) {
  PlanOverrides overrides;
  overrides.rewrite = config.rewrite;
  for (const auto& name : config.order) overrides.order.push_back(query.variable_id(name));
  for (const auto& [name, share] : config.shares) overrides.shares[query.variable_id(name)] = share;
  return overrides;
}

Execution execute(const Query& query, const Catalog& catalog, const RunConfig& config, std::size_t workers,
                  bool collect_tuples) {
  Execution execution;

  auto start = Clock::now();
  const auto stats = collect_stats(catalog);
  execution.plan = choose_plan(query, stats, config.threads, overrides_from(query, config));
  execution.timings.optimize_nanos = nanos_since(start);

  const HashFamily hashes(query.num_variables(), config.seed);
  const auto prepared = prepare(query, catalog, execution.plan, hashes, workers);
  execution.timings.partition_nanos = prepared.timings.partition_nanos;
  execution.timings.index_nanos = prepared.timings.index_nanos;

  ExecOptions options;
  options.workers = workers;
  options.collect_tuples = collect_tuples;
  options.instrument = config.instrument;
  start = Clock::now();
  execution.result = run(prepared, options);
  execution.timings.join_nanos = nanos_since(start);
  return execution;
}

}  // namespace hcj
