#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "hcjoin/statistics.hpp"
#include "hcjoin/types.hpp"

namespace hcj {

// Optimizer estimates are doubles: bounds on large joins overflow 64-bit integers.
using Cost = double;

/**
 * A loop-invariant intersection lifted out of its home level. `target_level` and
 * `placement` are 1-based positions in the variable order; the temporary is rebuilt each
 * time the loop at `placement` binds a value (placement 0 means once, before the first loop).
 */
struct HoistedIntersection {
  VarId target = 0;
  std::size_t target_level = 0;
  std::vector<std::size_t> sources;
  std::size_t placement = 0;

  bool operator==(const HoistedIntersection&) const = default;
};

// Estimate for one atom participating at one level.
struct SourceEstimate {
  std::size_t atom = 0;
  std::size_t column = 0;
  // Atom columns bound before this level.
  ColumnMask bound = 0;
  // Deepest order position among the atom's earlier variables; 0 if none.
  std::size_t dependency = 0;
  Cost max_degree = 0;
  Cost avg_degree = 0;
};

struct LevelAnalysis {
  VarId var = 0;
  std::vector<SourceEstimate> sources;
};

struct CostReport {
  // chain bounds B_0..B_n.
  std::vector<Cost> bounds;
  // Per-level upper bounds; index 0 holds hoists placed before the first loop.
  std::vector<Cost> level_costs;
  Cost total = 0;
  Cost partitioned_total = 0;
  double evenness = 0;
};

struct PlanSearchStats {
  std::size_t orders_considered = 0;
  std::size_t orders_expanded = 0;
  std::size_t share_candidates = 0;
  std::size_t candidates_evaluated = 0;
  std::size_t pruned_by_cost = 0;
  std::size_t pruned_by_domain = 0;
  std::size_t survivors = 0;
  bool fallback = false;
  std::vector<std::string> warnings;
};

struct Plan {
  std::vector<VarId> order;
  // Indexed by VarId.
  std::vector<std::uint64_t> shares;
  std::vector<HoistedIntersection> rewrites;
  CostReport cost;
  PlanSearchStats search;

  std::uint64_t threads() const;
  std::vector<std::uint64_t> shares_in_order() const;
  // 1-based position of every variable.
  std::vector<std::size_t> positions() const;
  const HoistedIntersection* hoist_for(VarId target) const;
};

struct PlanOverrides {
  std::vector<VarId> order;
  std::map<VarId, std::uint64_t> shares;
  bool rewrite = true;
};

Statistics collect_stats(const Catalog& catalog);

// Per-level source estimates for a full order.
std::vector<LevelAnalysis> analyze_order(const Query& query, const Statistics& stats, std::span<const VarId> order);

// B_0..B_k for the given prefix (k = prefix length).
std::vector<Cost> chain_bounds(const Query& query, const Statistics& stats, std::span<const VarId> prefix);
Cost chain_bound(const Query& query, const Statistics& stats, std::span<const VarId> prefix);

// |S| * sum_min * log2(1 + sum_max / sum_min); 0 when sum_min is 0.
Cost level_cost(std::size_t num_sources, Cost sum_min, Cost sum_max);

std::vector<HoistedIntersection> detect_rewrites(const Query& query, std::span<const VarId> order);

// Level costs and total for an order; partitioned total and evenness are left at their
// share-independent defaults (equal to total and 0).
CostReport order_cost(const Query& query, const Statistics& stats, std::span<const VarId> order,
                      std::span<const HoistedIntersection> rewrites);

// sum over levels of (product of later shares) * level cost; level 0 is multiplied by all shares.
Cost partitioned_cost(std::span<const Cost> level_costs, std::span<const std::uint64_t> shares_in_order);

// sum_i P_i * max(1 - i/100, 3/4), i from 1.
double evenness(std::span<const std::uint64_t> shares_in_order);

// All ways to write `total` as an ordered sum of `parts` nonnegative exponents.
std::vector<std::vector<unsigned>> exponent_compositions(std::size_t parts, unsigned total);

// Smallest distinct count of the variable over the atoms containing it.
std::size_t domain_size(const Query& query, const Statistics& stats, VarId v);

// The 3 * P_i * log2(P_i) rule; shares of 1 never prune.
bool domain_allows(std::size_t domain, std::uint64_t share);

// Costs a fixed order and share vector (shares indexed by VarId).
Plan make_plan(const Query& query, const Statistics& stats, std::vector<VarId> order,
               std::vector<std::uint64_t> shares, bool rewrite);

// Joint order/share search with cost and domain pruning and the evenness tie-break.
Plan choose_plan(const Query& query, const Statistics& stats, std::uint64_t threads,
                 const PlanOverrides& overrides = {});

std::string explain_text(const Query& query, const Plan& plan);
nlohmann::json explain_json(const Query& query, const Plan& plan);

}  // namespace hcj
