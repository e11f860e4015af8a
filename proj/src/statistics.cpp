#include "hcjoin/statistics.hpp"

#include <algorithm>

#include "hcjoin/rows.hpp"

namespace hcj {

namespace {

std::vector<std::size_t> columns_of(ColumnMask mask, std::size_t arity) {
  std::vector<std::size_t> columns;
  for (std::size_t c = 0; c < arity; ++c) {
    if (mask & (ColumnMask{1} << c)) columns.push_back(c);
  }
  return columns;
}

// Sorted distinct projection of `relation` onto `columns` (in the given order).
std::vector<Value> project(const Relation& relation, const std::vector<std::size_t>& columns) {
  const auto width = columns.size();
  std::vector<Value> rows;
  rows.reserve(relation.size() * width);
  for (std::size_t i = 0; i < relation.size(); ++i) {
    const auto row = relation.row(i);
    for (const auto c : columns) rows.push_back(row[c]);
  }
  const auto order = identity_order(width);
  sort_rows(rows, width, order);
  std::size_t out = 0;
  const auto n = rows.size() / width;
  for (std::size_t i = 0; i < n; ++i) {
    if (out > 0 && row_equal(rows.data() + (out - 1) * width, rows.data() + i * width, width)) continue;
    if (out != i) std::copy_n(rows.data() + i * width, width, rows.data() + out * width);
    ++out;
  }
  rows.resize(out * width);
  return rows;
}

}  // namespace

Statistics::Statistics(const Catalog& catalog) {
  for (const auto& [name, relation] : catalog.relations) {
    Entry e;
    e.relation = relation;
    for (std::size_t c = 0; c < relation->arity; ++c) {
      e.distinct.push_back(project(*relation, {c}).size());
    }
    entries_.emplace(name, std::move(e));
  }
}

const Statistics::Entry& Statistics::entry(const std::string& relation) const {
  const auto it = entries_.find(relation);
  if (it == entries_.end()) throw ConfigError("no statistics for relation '" + relation + "'");
  return it->second;
}

std::size_t Statistics::cardinality(const std::string& relation) const { return entry(relation).relation->size(); }

std::size_t Statistics::distinct(const std::string& relation, std::size_t column) const {
  return entry(relation).distinct.at(column);
}

std::size_t Statistics::distinct_projection(const std::string& relation, ColumnMask columns) const {
  const auto& e = entry(relation);
  if (e.relation->empty()) return 0;
  if (columns == 0) return 1;
  {
    std::lock_guard lock(mutex_);
    const auto it = projection_memo_.find({relation, columns});
    if (it != projection_memo_.end()) return it->second;
  }
  const auto cols = columns_of(columns, e.relation->arity);
  const auto result = project(*e.relation, cols).size() / cols.size();
  std::lock_guard lock(mutex_);
  projection_memo_[{relation, columns}] = result;
  return result;
}

std::size_t Statistics::max_degree(const std::string& relation, std::size_t column, ColumnMask bound) const {
  const auto& e = entry(relation);
  if (e.relation->empty()) return 0;
  bound &= ~(ColumnMask{1} << column);
  if (bound == 0) return e.distinct.at(column);
  {
    std::lock_guard lock(mutex_);
    const auto it = degree_memo_.find({relation, column, bound});
    if (it != degree_memo_.end()) return it->second;
  }

  // Group the distinct (bound..., column) projection by its bound prefix.
  auto cols = columns_of(bound, e.relation->arity);
  const auto prefix = cols.size();
  cols.push_back(column);
  const auto width = cols.size();
  const auto rows = project(*e.relation, cols);
  const auto n = rows.size() / width;
  std::size_t best = 0;
  std::size_t run = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool same_group = i > 0 && row_equal(rows.data() + (i - 1) * width, rows.data() + i * width, prefix);
    run = same_group ? run + 1 : 1;
    best = std::max(best, run);
  }
  std::lock_guard lock(mutex_);
  degree_memo_[{relation, column, bound}] = best;
  return best;
}

double Statistics::avg_degree(const std::string& relation, std::size_t column, ColumnMask bound) const {
  bound &= ~(ColumnMask{1} << column);
  const auto groups = distinct_projection(relation, bound);
  if (groups == 0) return 0.0;
  const auto pairs = distinct_projection(relation, bound | (ColumnMask{1} << column));
  return static_cast<double>(pairs) / static_cast<double>(groups);
}

}  // namespace hcj
