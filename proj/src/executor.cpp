#include "hcjoin/executor.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "hcjoin/parallel.hpp"

namespace hcj {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t nanos_since(Clock::time_point start) {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count());
}

struct SourceRef {
  std::size_t atom = 0;
  std::size_t trie_level = 0;
};

struct HoistPlan {
  std::vector<SourceRef> sources;
  std::size_t placement = 0;
};

struct LevelPlan {
  VarId var = 0;
  std::vector<SourceRef> direct;
  // Index into CompiledPlan::hoists, or -1.
  int hoist = -1;
  // Hoists whose temporaries go stale when this level binds a new value.
  std::vector<std::size_t> invalidates;
};

struct CompiledPlan {
  std::vector<LevelPlan> levels;
  std::vector<HoistPlan> hoists;
};

CompiledPlan compile(const PreparedQuery& prepared) {
  const auto& query = prepared.query;
  const auto& plan = prepared.plan;
  const auto pos = plan.positions();

  const auto trie_level = [&](std::size_t atom, VarId v) {
    std::size_t r = 0;
    for (const auto u : query.atoms[atom].vars) {
      if (pos[u] < pos[v]) ++r;
    }
    return r;
  };

  CompiledPlan compiled;
  compiled.levels.resize(plan.order.size());
  for (std::size_t i = 0; i < plan.order.size(); ++i) {
    auto& level = compiled.levels[i];
    level.var = plan.order[i];
    const auto* hoist = plan.hoist_for(level.var);
    if (hoist) {
      HoistPlan h;
      h.placement = hoist->placement;
      for (const auto a : hoist->sources) h.sources.push_back({a, trie_level(a, level.var)});
      level.hoist = static_cast<int>(compiled.hoists.size());
      compiled.hoists.push_back(std::move(h));
    }
    for (const auto a : query.atoms_with(level.var)) {
      if (hoist && std::find(hoist->sources.begin(), hoist->sources.end(), a) != hoist->sources.end()) continue;
      level.direct.push_back({a, trie_level(a, level.var)});
    }
  }
  for (std::size_t h = 0; h < compiled.hoists.size(); ++h) {
    const auto placement = compiled.hoists[h].placement;
    if (placement > 0) compiled.levels[placement - 1].invalidates.push_back(h);
  }
  return compiled;
}

// Hoisted intersection materialized for the current bindings of its placement prefix.
struct TempCache {
  bool valid = false;
  std::vector<Value> values;
  // positions[g][q]: absolute position of values[q] in source g's trie level.
  std::vector<std::vector<std::size_t>> positions;
};

class TaskRunner {
 public:
  TaskRunner(const PreparedQuery& prepared, const CompiledPlan& compiled, const ExecOptions& options,
             StepCounter* counter, std::vector<Value>* out)
      : prepared_(prepared), compiled_(compiled), options_(options), counter_(counter), out_(out) {
    const auto num_atoms = prepared.atoms.size();
    tries_.resize(num_atoms);
    ranges_.resize(num_atoms);
    for (std::size_t a = 0; a < num_atoms; ++a) ranges_[a].resize(prepared.atoms[a].column_order.size());
    binding_.resize(prepared.query.num_variables());
    temps_.resize(compiled.hoists.size());
    views_.resize(compiled.levels.size());
    cursors_.resize(compiled.levels.size());
    sizes_.resize(compiled.levels.size());
  }

  std::uint64_t run(std::size_t task) {
    const auto coordinates = prepared_.task_coordinates(task);
    for (std::size_t a = 0; a < prepared_.atoms.size(); ++a) {
      const auto& trie = prepared_.atoms[a].tries[prepared_.resolve_partition(coordinates, a)];
      // An empty partition empties the whole task.
      if (trie.empty()) return 0;
      tries_[a] = &trie;
      ranges_[a][0] = trie.root();
    }
    for (auto& t : temps_) t.valid = false;
    emitted_ = 0;
    if (!compiled_.levels.empty()) descend(0);
    return emitted_;
  }

 private:
  std::span<const Value> view_of(const SourceRef& s) const { return tries_[s.atom]->slice(ranges_[s.atom][s.trie_level]); }

  void bind_child(const SourceRef& s, std::size_t absolute) {
    const auto* trie = tries_[s.atom];
    if (s.trie_level + 1 < trie->arity()) ranges_[s.atom][s.trie_level + 1] = trie->child_range(s.trie_level, absolute);
  }

  void build_temp(std::size_t h) {
    const auto& hoist = compiled_.hoists[h];
    auto& temp = temps_[h];
    temp.values.clear();
    temp.positions.assign(hoist.sources.size(), {});
    std::vector<std::span<const Value>> views;
    for (const auto& s : hoist.sources) views.push_back(view_of(s));
    std::vector<std::size_t> cursors(views.size());
    intersect_views(
        std::span<const std::span<const Value>>(views), cursors,
        [&](Value v, std::span<const std::size_t> positions) {
          temp.values.push_back(v);
          for (std::size_t g = 0; g < positions.size(); ++g) {
            temp.positions[g].push_back(ranges_[hoist.sources[g].atom][hoist.sources[g].trie_level].begin +
                                        positions[g]);
          }
        },
        options_.search, counter_);
    temp.valid = true;
  }

  void descend(std::size_t i) {
    const auto& level = compiled_.levels[i];
    auto& views = views_[i];
    views.clear();
    for (const auto& s : level.direct) views.push_back(view_of(s));
    if (level.hoist >= 0) {
      const auto h = static_cast<std::size_t>(level.hoist);
      if (!temps_[h].valid) build_temp(h);
      views.push_back(temps_[h].values);
    }
    if (options_.level_observer) {
      auto& sizes = sizes_[i];
      sizes.clear();
      for (const auto& v : views) sizes.push_back(v.size());
      options_.level_observer(i + 1, sizes);
    }
    auto& cursors = cursors_[i];
    cursors.resize(views.size());
    const bool last = i + 1 == compiled_.levels.size();

    intersect_views(
        std::span<const std::span<const Value>>(views), cursors,
        [&](Value value, std::span<const std::size_t> positions) {
          binding_[level.var] = value;
          if (!last) {
            for (std::size_t k = 0; k < level.direct.size(); ++k) {
              const auto& s = level.direct[k];
              bind_child(s, ranges_[s.atom][s.trie_level].begin + positions[k]);
            }
            if (level.hoist >= 0) {
              const auto h = static_cast<std::size_t>(level.hoist);
              const auto q = positions[level.direct.size()];
              const auto& sources = compiled_.hoists[h].sources;
              for (std::size_t g = 0; g < sources.size(); ++g) bind_child(sources[g], temps_[h].positions[g][q]);
            }
            for (const auto h : level.invalidates) temps_[h].valid = false;
            descend(i + 1);
          } else {
            ++emitted_;
            if (out_) out_->insert(out_->end(), binding_.begin(), binding_.end());
          }
        },
        options_.search, counter_);
  }

  const PreparedQuery& prepared_;
  const CompiledPlan& compiled_;
  const ExecOptions& options_;
  StepCounter* counter_;
  std::vector<Value>* out_;

  std::vector<const CocoIndex*> tries_;
  // ranges_[atom][r]: the atom's current range at trie level r.
  std::vector<std::vector<LevelRange>> ranges_;
  std::vector<Value> binding_;
  std::vector<TempCache> temps_;
  std::vector<std::vector<std::span<const Value>>> views_;
  std::vector<std::vector<std::size_t>> cursors_;
  std::vector<std::vector<std::size_t>> sizes_;
  std::uint64_t emitted_ = 0;
};

TaskStats run_compiled(const PreparedQuery& prepared, const CompiledPlan& compiled, std::size_t task,
                       const ExecOptions& options, std::vector<Value>* out) {
  const auto start = Clock::now();
  StepCounter counter;
  TaskRunner runner(prepared, compiled, options, options.instrument ? &counter : nullptr, out);
  TaskStats stats;
  stats.task = task;
  stats.emitted = runner.run(task);
  stats.steps = counter.steps;
  stats.wall_nanos = nanos_since(start);
  return stats;
}

}  // namespace

std::size_t PreparedQuery::num_tasks() const { return static_cast<std::size_t>(plan.threads()); }

std::vector<std::uint32_t> PreparedQuery::task_coordinates(std::size_t task) const {
  std::vector<std::uint32_t> coordinates(plan.shares.size(), 0);
  // Row-major: the last variable in the order varies fastest.
  for (std::size_t i = plan.order.size(); i-- > 0;) {
    const auto v = plan.order[i];
    coordinates[v] = static_cast<std::uint32_t>(task % plan.shares[v]);
    task /= plan.shares[v];
  }
  return coordinates;
}

std::size_t PreparedQuery::resolve_partition(std::span<const std::uint32_t> coordinates, std::size_t atom) const {
  const auto& shares = atoms[atom].shares;
  std::vector<std::uint32_t> ids(shares.arity());
  for (std::size_t c = 0; c < shares.arity(); ++c) ids[c] = coordinates[shares.vars[c]];
  return shares.flatten(ids);
}

PreparedQuery prepare(const Query& query, const Catalog& catalog, const Plan& plan, const HashFamily& hashes,
                      std::size_t workers) {
  PreparedQuery prepared;
  prepared.query = query;
  prepared.plan = plan;
  const auto pos = plan.positions();

  auto start = Clock::now();
  prepared.atoms.resize(query.num_atoms());
  for (std::size_t a = 0; a < query.num_atoms(); ++a) {
    const auto& atom = query.atoms[a];
    auto& index = prepared.atoms[a];
    index.shares.vars = atom.vars;
    for (const auto v : atom.vars) index.shares.shares.push_back(plan.shares[v]);
    index.column_order.resize(atom.vars.size());
    std::iota(index.column_order.begin(), index.column_order.end(), std::size_t{0});
    std::sort(index.column_order.begin(), index.column_order.end(),
              [&](std::size_t x, std::size_t y) { return pos[atom.vars[x]] < pos[atom.vars[y]]; });
    index.partitioned =
        partition_relation(catalog.relation_for_atom(a), index.shares, hashes, index.column_order, workers);
  }
  prepared.timings.partition_nanos = nanos_since(start);

  start = Clock::now();
  WorkerPool pool(workers);
  for (auto& index : prepared.atoms) {
    const auto& part = index.partitioned;
    index.tries.resize(part.num_partitions());
    pool.for_each_index(part.num_partitions(), [&](std::size_t p) {
      index.tries[p] = build_coco(part.partition_rows(p), part.arity, index.column_order, true);
    });
  }
  prepared.timings.index_nanos = nanos_since(start);
  return prepared;
}

std::uint64_t ResultSet::total_steps() const {
  std::uint64_t total = 0;
  for (const auto& t : tasks) total += t.steps;
  return total;
}

std::vector<std::vector<Value>> ResultSet::rows() const {
  std::vector<std::vector<Value>> out;
  if (arity == 0) return out;
  for (std::size_t i = 0; i + arity <= tuples.size(); i += arity) {
    out.emplace_back(tuples.begin() + static_cast<std::ptrdiff_t>(i),
                     tuples.begin() + static_cast<std::ptrdiff_t>(i + arity));
  }
  return out;
}

std::vector<std::vector<Value>> ResultSet::sorted_rows() const {
  auto out = rows();
  std::sort(out.begin(), out.end());
  return out;
}

TaskStats run_task(const PreparedQuery& prepared, std::size_t task, const ExecOptions& options,
                   std::vector<Value>* out) {
  const auto compiled = compile(prepared);
  return run_compiled(prepared, compiled, task, options, options.collect_tuples ? out : nullptr);
}

ResultSet run(const PreparedQuery& prepared, const ExecOptions& options) {
  const auto compiled = compile(prepared);
  const auto num_tasks = prepared.num_tasks();
  ResultSet result;
  result.arity = prepared.query.num_variables();
  result.tasks.resize(num_tasks);
  std::vector<std::vector<Value>> buffers(options.collect_tuples ? num_tasks : 0);

  WorkerPool pool(options.workers);
  pool.for_each_index(num_tasks, [&](std::size_t task) {
    auto* out = options.collect_tuples ? &buffers[task] : nullptr;
    result.tasks[task] = run_compiled(prepared, compiled, task, options, out);
  });

  for (const auto& t : result.tasks) result.count += t.emitted;
  if (options.collect_tuples) {
    result.tuples.reserve(result.count * result.arity);
    for (auto& b : buffers) result.tuples.insert(result.tuples.end(), b.begin(), b.end());
  }
  return result;
}

}  // namespace hcj
