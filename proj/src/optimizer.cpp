#include "hcjoin/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <tuple>

namespace hcj {

namespace {

constexpr std::size_t kMaxVariables = 12;
constexpr std::size_t kExhaustiveOrderLimit = 8;

void check_order(const Query& query, std::span<const VarId> order) {
  const auto n = query.num_variables();
  if (order.size() != n) throw ConfigError("variable order must list all " + std::to_string(n) + " variables");
  std::vector<bool> seen(n, false);
  for (const auto v : order) {
    if (v >= n || seen[v]) throw ConfigError("variable order is not a permutation of the query variables");
    seen[v] = true;
  }
}

std::vector<std::size_t> positions_of(std::span<const VarId> order, std::size_t num_vars) {
  // Variables outside the prefix get a position past every level.
  std::vector<std::size_t> pos(num_vars, std::numeric_limits<std::size_t>::max());
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i + 1;
  return pos;
}

std::vector<std::uint64_t> in_order(std::span<const VarId> order, std::span<const std::uint64_t> shares) {
  std::vector<std::uint64_t> out;
  out.reserve(order.size());
  for (const auto v : order) out.push_back(shares[v]);
  return out;
}

Cost min_max_degree(const LevelAnalysis& level) {
  auto best = std::numeric_limits<Cost>::infinity();
  for (const auto& s : level.sources) best = std::min(best, s.max_degree);
  return level.sources.empty() ? 0 : best;
}

std::string source_text(const Query& query, const SourceEstimate& s) {
  const auto& atom = query.atoms[s.atom];
  std::string text = atom.relation;
  if (s.bound != 0) {
    text += "[";
    bool first = true;
    for (std::size_t c = 0; c < atom.vars.size(); ++c) {
      if (!(s.bound & (ColumnMask{1} << c))) continue;
      if (!first) text += ",";
      text += query.variables[atom.vars[c]];
      first = false;
    }
    text += "]";
  }
  return text + "." + query.variables[atom.vars[s.column]];
}

std::string placement_text(const Query& query, const Plan& plan, std::size_t placement) {
  if (placement == 0) return "before the " + query.variables[plan.order[0]] + " loop";
  return "inside the " + query.variables[plan.order[placement - 1]] + " loop";
}

std::string format_cost(Cost c) {
  std::ostringstream out;
  out.precision(6);
  out << c;
  return out.str();
}

}  // namespace

std::uint64_t Plan::threads() const {
  return std::accumulate(shares.begin(), shares.end(), std::uint64_t{1}, std::multiplies<>());
}

std::vector<std::uint64_t> Plan::shares_in_order() const { return in_order(order, shares); }

std::vector<std::size_t> Plan::positions() const { return positions_of(order, order.size()); }

const HoistedIntersection* Plan::hoist_for(VarId target) const {
  for (const auto& h : rewrites) {
    if (h.target == target) return &h;
  }
  return nullptr;
}

Statistics collect_stats(const Catalog& catalog) { return Statistics(catalog); }

std::vector<LevelAnalysis> analyze_order(const Query& query, const Statistics& stats, std::span<const VarId> order) {
  const auto pos = positions_of(order, query.num_variables());
  std::vector<LevelAnalysis> levels;
  levels.reserve(order.size());
  for (std::size_t i = 1; i <= order.size(); ++i) {
    LevelAnalysis level;
    level.var = order[i - 1];
    for (const auto a : query.atoms_with(level.var)) {
      const auto& atom = query.atoms[a];
      SourceEstimate s;
      s.atom = a;
      s.column = atom.column_of(level.var);
      for (std::size_t c = 0; c < atom.vars.size(); ++c) {
        const auto p = pos[atom.vars[c]];
        if (p < i) {
          s.bound |= ColumnMask{1} << c;
          s.dependency = std::max(s.dependency, p);
        }
      }
      s.max_degree = static_cast<Cost>(stats.max_degree(atom.relation, s.column, s.bound));
      s.avg_degree = stats.avg_degree(atom.relation, s.column, s.bound);
      level.sources.push_back(s);
    }
    levels.push_back(std::move(level));
  }
  return levels;
}

std::vector<Cost> chain_bounds(const Query& query, const Statistics& stats, std::span<const VarId> prefix) {
  const auto levels = analyze_order(query, stats, prefix);
  std::vector<Cost> bounds{1.0};
  for (const auto& level : levels) bounds.push_back(bounds.back() * min_max_degree(level));
  return bounds;
}

Cost chain_bound(const Query& query, const Statistics& stats, std::span<const VarId> prefix) {
  return chain_bounds(query, stats, prefix).back();
}

Cost level_cost(std::size_t num_sources, Cost sum_min, Cost sum_max) {
  if (sum_min <= 0) return 0;
  return static_cast<Cost>(num_sources) * sum_min * std::log2(1.0 + sum_max / sum_min);
}

std::vector<HoistedIntersection> detect_rewrites(const Query& query, std::span<const VarId> order) {
  check_order(query, order);
  const auto pos = positions_of(order, query.num_variables());
  std::vector<HoistedIntersection> hoists;
  for (std::size_t i = 1; i <= order.size(); ++i) {
    const auto v = order[i - 1];
    HoistedIntersection h;
    h.target = v;
    h.target_level = i;
    for (const auto a : query.atoms_with(v)) {
      std::size_t dependency = 0;
      for (const auto u : query.atoms[a].vars) {
        if (pos[u] < i) dependency = std::max(dependency, pos[u]);
      }
      // Sources fixed before the previous loop are loop-invariant there.
      if (dependency + 1 < i) {
        h.sources.push_back(a);
        h.placement = std::max(h.placement, dependency);
      }
    }
    if (h.sources.size() >= 2) hoists.push_back(std::move(h));
  }
  return hoists;
}

CostReport order_cost(const Query& query, const Statistics& stats, std::span<const VarId> order,
                      std::span<const HoistedIntersection> rewrites) {
  const auto levels = analyze_order(query, stats, order);
  const auto n = order.size();
  CostReport report;
  report.bounds.assign(1, 1.0);
  for (const auto& level : levels) report.bounds.push_back(report.bounds.back() * min_max_degree(level));
  report.level_costs.assign(n + 1, 0.0);

  for (std::size_t i = 1; i <= n; ++i) {
    const auto& level = levels[i - 1];
    const HoistedIntersection* hoist = nullptr;
    for (const auto& h : rewrites) {
      if (h.target_level == i) hoist = &h;
    }
    const auto hoisted = [&](std::size_t atom) {
      return hoist && std::find(hoist->sources.begin(), hoist->sources.end(), atom) != hoist->sources.end();
    };

    std::vector<double> avgs;
    double tmp_avg = std::numeric_limits<double>::infinity();
    double tmp_max_avg = 0;
    Cost tmp_degree = std::numeric_limits<Cost>::infinity();
    for (const auto& s : level.sources) {
      if (hoisted(s.atom)) {
        tmp_avg = std::min(tmp_avg, s.avg_degree);
        tmp_max_avg = std::max(tmp_max_avg, s.avg_degree);
        tmp_degree = std::min(tmp_degree, s.max_degree);
      } else {
        avgs.push_back(s.avg_degree);
      }
    }
    if (hoist) avgs.push_back(tmp_avg);

    const auto min_avg = *std::min_element(avgs.begin(), avgs.end());
    const auto max_avg = *std::max_element(avgs.begin(), avgs.end());
    const auto bound = report.bounds[i];
    if (min_avg > 0) report.level_costs[i] = level_cost(avgs.size(), bound, bound * max_avg / min_avg);

    if (hoist && tmp_avg > 0) {
      const auto d = hoist->placement;
      const auto size = report.bounds[d] * tmp_degree;
      report.level_costs[d] += level_cost(hoist->sources.size(), size, size * tmp_max_avg / tmp_avg);
    }
  }
  report.total = std::accumulate(report.level_costs.begin(), report.level_costs.end(), Cost{0});
  report.partitioned_total = report.total;
  return report;
}

Cost partitioned_cost(std::span<const Cost> level_costs, std::span<const std::uint64_t> shares_in_order) {
  // level_costs[i] is multiplied by the product of shares at positions > i.
  Cost total = 0;
  double suffix = 1;
  const auto n = shares_in_order.size();
  for (std::size_t i = level_costs.size(); i-- > 0;) {
    total += suffix * level_costs[i];
    if (i >= 1 && i <= n) suffix *= static_cast<double>(shares_in_order[i - 1]);
  }
  return total;
}

double evenness(std::span<const std::uint64_t> shares_in_order) {
  double e = 0;
  for (std::size_t i = 0; i < shares_in_order.size(); ++i) {
    const auto w = std::max(1.0 - static_cast<double>(i + 1) / 100.0, 0.75);
    e += static_cast<double>(shares_in_order[i]) * w;
  }
  return e;
}

std::vector<std::vector<unsigned>> exponent_compositions(std::size_t parts, unsigned total) {
  std::vector<std::vector<unsigned>> out;
  if (parts == 0) {
    if (total == 0) out.emplace_back();
    return out;
  }
  std::vector<unsigned> current(parts, 0);
  // Odometer over the first parts-1 entries; the last takes the remainder.
  const auto recurse = [&](auto&& self, std::size_t index, unsigned remaining) -> void {
    if (index + 1 == parts) {
      current[index] = remaining;
      out.push_back(current);
      return;
    }
    for (unsigned e = remaining + 1; e-- > 0;) {
      current[index] = e;
      self(self, index + 1, remaining - e);
    }
  };
  recurse(recurse, 0, total);
  return out;
}

std::size_t domain_size(const Query& query, const Statistics& stats, VarId v) {
  auto best = std::numeric_limits<std::size_t>::max();
  for (const auto a : query.atoms_with(v)) {
    const auto& atom = query.atoms[a];
    best = std::min(best, stats.distinct(atom.relation, atom.column_of(v)));
  }
  return best;
}

bool domain_allows(std::size_t domain, std::uint64_t share) {
  if (share <= 1) return true;
  const auto needed = 3.0 * static_cast<double>(share) * std::log2(static_cast<double>(share));
  return static_cast<double>(domain) >= needed;
}

Plan make_plan(const Query& query, const Statistics& stats, std::vector<VarId> order,
               std::vector<std::uint64_t> shares, bool rewrite) {
  check_order(query, order);
  if (shares.size() != query.num_variables()) throw ConfigError("share vector must cover every variable");
  for (const auto s : shares) {
    if (!is_power_of_two(s)) throw ConfigError("shares must be powers of two");
  }
  Plan plan;
  plan.order = std::move(order);
  plan.shares = std::move(shares);
  if (rewrite) plan.rewrites = detect_rewrites(query, plan.order);
  plan.cost = order_cost(query, stats, plan.order, plan.rewrites);
  const auto ordered = plan.shares_in_order();
  plan.cost.partitioned_total = partitioned_cost(plan.cost.level_costs, ordered);
  plan.cost.evenness = evenness(ordered);
  return plan;
}

namespace {

struct OrderCandidate {
  std::vector<VarId> order;
  std::vector<HoistedIntersection> rewrites;
  CostReport cost;
};

OrderCandidate cost_order(const Query& query, const Statistics& stats, std::vector<VarId> order, bool rewrite) {
  OrderCandidate c;
  c.order = std::move(order);
  if (rewrite) c.rewrites = detect_rewrites(query, c.order);
  c.cost = order_cost(query, stats, c.order, c.rewrites);
  return c;
}

// Extends the prefix one variable at a time, taking the cheapest next level (cost of the
// prefix query so far), preferring variables connected to the prefix on ties.
std::vector<VarId> greedy_order(const Query& query, const Statistics& stats) {
  const auto n = query.num_variables();
  std::vector<VarId> order;
  std::vector<bool> used(n, false);
  while (order.size() < n) {
    VarId best = 0;
    auto best_key = std::make_tuple(true, std::numeric_limits<Cost>::infinity(), VarId{0});
    for (VarId v = 0; v < n; ++v) {
      if (used[v]) continue;
      auto prefix = order;
      prefix.push_back(v);
      const auto levels = analyze_order(query, stats, prefix);
      const auto& level = levels.back();
      bool connected = order.empty();
      double min_avg = std::numeric_limits<double>::infinity();
      double max_avg = 0;
      for (const auto& s : level.sources) {
        connected = connected || s.bound != 0;
        min_avg = std::min(min_avg, s.avg_degree);
        max_avg = std::max(max_avg, s.avg_degree);
      }
      const auto bound = chain_bound(query, stats, prefix);
      const auto cost = min_avg > 0 ? level_cost(level.sources.size(), bound, bound * max_avg / min_avg) : 0.0;
      const auto key = std::make_tuple(!connected, cost, v);
      if (key < best_key) {
        best_key = key;
        best = v;
      }
    }
    used[best] = true;
    order.push_back(best);
  }
  return order;
}

}  // namespace

Plan choose_plan(const Query& query, const Statistics& stats, std::uint64_t threads, const PlanOverrides& overrides) {
  query.validate();
  const auto n = query.num_variables();
  if (n > kMaxVariables) throw ConfigError("queries with more than 12 variables are not supported");
  if (!is_power_of_two(threads)) throw ConfigError("thread count must be a power of two");
  const auto log_p = log2_exact(threads);

  // Fixed shares from overrides; the remaining exponent is spread over the free variables.
  std::vector<int> fixed_exponent(n, -1);
  unsigned fixed_total = 0;
  for (const auto& [v, share] : overrides.shares) {
    if (v >= n) throw ConfigError("share override names an unknown variable");
    if (!is_power_of_two(share)) throw ConfigError("shares must be powers of two");
    fixed_exponent[v] = static_cast<int>(log2_exact(share));
    fixed_total += log2_exact(share);
  }
  if (fixed_total > log_p) throw ConfigError("share overrides multiply to more than the thread count");
  const auto num_free = static_cast<std::size_t>(std::count(fixed_exponent.begin(), fixed_exponent.end(), -1));
  if (num_free == 0 && fixed_total != log_p) {
    throw ConfigError("share overrides must multiply to the thread count " + std::to_string(threads));
  }
  const bool shares_fixed = num_free == 0;

  // Candidate orders, cheapest unpartitioned cost first.
  std::vector<OrderCandidate> orders;
  if (!overrides.order.empty()) {
    check_order(query, overrides.order);
    orders.push_back(cost_order(query, stats, overrides.order, overrides.rewrite));
  } else if (n <= kExhaustiveOrderLimit) {
    std::vector<VarId> order(n);
    std::iota(order.begin(), order.end(), VarId{0});
    do {
      orders.push_back(cost_order(query, stats, order, overrides.rewrite));
    } while (std::next_permutation(order.begin(), order.end()));
  } else {
    orders.push_back(cost_order(query, stats, greedy_order(query, stats), overrides.rewrite));
  }
  std::stable_sort(orders.begin(), orders.end(),
                   [](const OrderCandidate& a, const OrderCandidate& b) { return a.cost.total < b.cost.total; });

  std::vector<std::size_t> domains(n);
  for (VarId v = 0; v < n; ++v) domains[v] = domain_size(query, stats, v);

  const auto free_compositions = exponent_compositions(num_free, log_p - fixed_total);
  PlanSearchStats search;
  search.orders_considered = orders.size();
  search.share_candidates = free_compositions.size();

  struct Survivor {
    std::size_t order_index;
    std::vector<std::uint64_t> shares;
    Cost cost;
    double evenness;
  };
  std::vector<Survivor> survivors;
  Cost best_cost = std::numeric_limits<Cost>::infinity();

  for (std::size_t o = 0; o < orders.size(); ++o) {
    const auto& candidate = orders[o];
    // Every partitioned cost of this order is at least its unpartitioned cost.
    if (candidate.cost.total > 2 * best_cost) break;
    ++search.orders_expanded;
    for (const auto& composition : free_compositions) {
      ++search.candidates_evaluated;
      // Free exponents are assigned to free variables in order position.
      std::vector<std::uint64_t> shares(n, 1);
      std::size_t next = 0;
      for (const auto v : candidate.order) {
        const auto e = fixed_exponent[v] >= 0 ? static_cast<unsigned>(fixed_exponent[v]) : composition[next++];
        shares[v] = std::uint64_t{1} << e;
      }
      const auto ordered = in_order(candidate.order, shares);
      const auto cost = partitioned_cost(candidate.cost.level_costs, ordered);
      if (!shares_fixed) {
        bool domain_ok = true;
        for (VarId v = 0; v < n; ++v) {
          if (fixed_exponent[v] < 0 && !domain_allows(domains[v], shares[v])) domain_ok = false;
        }
        if (!domain_ok) {
          ++search.pruned_by_domain;
          continue;
        }
        if (cost > 2 * candidate.cost.total) {
          ++search.pruned_by_cost;
          continue;
        }
      }
      survivors.push_back({o, std::move(shares), cost, evenness(ordered)});
      best_cost = std::min(best_cost, cost);
    }
  }
  search.survivors = survivors.size();

  Plan plan;
  if (survivors.empty()) {
    // Nothing survived: the cheapest order with every free bucket on its first free variable.
    const auto& candidate = orders.front();
    std::vector<std::uint64_t> shares(n, 1);
    bool placed = false;
    for (const auto v : candidate.order) {
      if (fixed_exponent[v] >= 0) {
        shares[v] = std::uint64_t{1} << fixed_exponent[v];
      } else if (!placed) {
        shares[v] = std::uint64_t{1} << (log_p - fixed_total);
        placed = true;
      }
    }
    plan = make_plan(query, stats, candidate.order, shares, overrides.rewrite);
    search.fallback = true;
    search.warnings.push_back("all share candidates were pruned; falling back to shares (P,1,...,1)");
  } else {
    // Evenness decides among candidates within 2x of the cheapest; then cost, then order.
    const Survivor* chosen = nullptr;
    for (const auto& s : survivors) {
      if (s.cost > 2 * best_cost) continue;
      if (!chosen || std::tie(s.evenness, s.cost, orders[s.order_index].order, s.shares) <
                         std::tie(chosen->evenness, chosen->cost, orders[chosen->order_index].order, chosen->shares)) {
        chosen = &s;
      }
    }
    const auto& candidate = orders[chosen->order_index];
    plan.order = candidate.order;
    plan.shares = chosen->shares;
    plan.rewrites = candidate.rewrites;
    plan.cost = candidate.cost;
    plan.cost.partitioned_total = chosen->cost;
    plan.cost.evenness = chosen->evenness;
  }
  plan.search = std::move(search);
  return plan;
}

std::string explain_text(const Query& query, const Plan& plan) {
  std::ostringstream out;
  const auto n = plan.order.size();
  const auto levels_text = [&](std::size_t i) { return query.variables[plan.order[i - 1]]; };

  out << "query: " << query.to_string() << "\n";
  out << "threads: " << plan.threads() << "\n";
  out << "order:";
  for (const auto v : plan.order) out << " " << query.variables[v];
  out << "\nshares:";
  for (const auto v : plan.order) out << " " << query.variables[v] << "=" << plan.shares[v];
  out << "\n";

  if (plan.rewrites.empty()) {
    out << "hoists: none\n";
  } else {
    out << "hoists:\n";
    const auto pos = plan.positions();
    for (const auto& h : plan.rewrites) {
      out << "  tmp_" << query.variables[h.target] << " =";
      bool first = true;
      for (const auto a : h.sources) {
        SourceEstimate s;
        s.atom = a;
        const auto& atom = query.atoms[a];
        s.column = atom.column_of(h.target);
        for (std::size_t c = 0; c < atom.vars.size(); ++c) {
          if (pos[atom.vars[c]] < h.target_level) s.bound |= ColumnMask{1} << c;
        }
        out << (first ? " " : " & ") << source_text(query, s);
        first = false;
      }
      out << "  (" << placement_text(query, plan, h.placement) << ")\n";
    }
  }

  out << "level costs:\n";
  out << "  pre-loop: " << format_cost(plan.cost.level_costs[0]) << "\n";
  for (std::size_t i = 1; i <= n; ++i) {
    out << "  " << i << " " << levels_text(i) << ": bound " << format_cost(plan.cost.bounds[i]) << ", cost "
        << format_cost(plan.cost.level_costs[i]) << "\n";
  }
  out << "total cost: " << format_cost(plan.cost.total) << "\n";
  out << "partitioned cost: " << format_cost(plan.cost.partitioned_total) << "\n";
  out << "evenness: " << format_cost(plan.cost.evenness) << "\n";

  const auto& s = plan.search;
  out << "search: " << s.orders_considered << " orders considered, " << s.orders_expanded << " expanded\n";
  out << "  " << s.share_candidates << " share candidates enumerated\n";
  out << "  " << s.candidates_evaluated << " candidates evaluated, " << s.pruned_by_cost << " pruned by cost, "
      << s.pruned_by_domain << " pruned by domain, " << s.survivors << " survivors\n";
  for (const auto& w : s.warnings) out << "warning: " << w << "\n";
  return out.str();
}

nlohmann::json explain_json(const Query& query, const Plan& plan) {
  nlohmann::json j;
  j["query"] = query.to_string();
  j["threads"] = plan.threads();
  auto& order = j["order"] = nlohmann::json::array();
  auto& shares = j["shares"] = nlohmann::json::object();
  for (const auto v : plan.order) {
    order.push_back(query.variables[v]);
    shares[query.variables[v]] = plan.shares[v];
  }
  auto& hoists = j["hoists"] = nlohmann::json::array();
  for (const auto& h : plan.rewrites) {
    nlohmann::json hj;
    hj["target"] = query.variables[h.target];
    hj["target_level"] = h.target_level;
    hj["placement"] = h.placement;
    auto& sources = hj["sources"] = nlohmann::json::array();
    for (const auto a : h.sources) sources.push_back({{"atom", a}, {"relation", query.atoms[a].relation}});
    hoists.push_back(std::move(hj));
  }
  j["bounds"] = plan.cost.bounds;
  j["level_costs"] = plan.cost.level_costs;
  j["total_cost"] = plan.cost.total;
  j["partitioned_cost"] = plan.cost.partitioned_total;
  j["evenness"] = plan.cost.evenness;
  const auto& s = plan.search;
  j["search"] = {{"orders_considered", s.orders_considered},
                 {"orders_expanded", s.orders_expanded},
                 {"share_candidates", s.share_candidates},
                 {"candidates_evaluated", s.candidates_evaluated},
                 {"pruned_by_cost", s.pruned_by_cost},
                 {"pruned_by_domain", s.pruned_by_domain},
                 {"survivors", s.survivors},
                 {"fallback", s.fallback},
                 {"warnings", s.warnings}};
  return j;
}

}  // namespace hcj
