#include "hcjoin/coco.hpp"

#include <limits>
#include <stdexcept>

#include "hcjoin/rows.hpp"

namespace hcj {

std::vector<std::uint64_t> CocoIndex::offsets(std::size_t level) const {
  const auto& l = levels_[level];
  if (!l.has_offsets) return {};
  if (wide_) return l.offsets64;
  return {l.offsets32.begin(), l.offsets32.end()};
}

LevelRange CocoIndex::row_range(std::size_t p) const {
  if (!has_last_offsets()) throw std::logic_error("row_range: last-level offsets were omitted");
  const auto last = levels_.size() - 1;
  return {last + 1, offset(last, p), offset(last, p + 1)};
}

std::vector<std::vector<Value>> CocoIndex::enumerate() const {
  std::vector<std::vector<Value>> rows;
  if (empty()) return rows;
  const auto k = arity();
  std::vector<Value> prefix(k);

  // Iterative depth-first walk; stack[r] is the remaining range at level r.
  std::vector<LevelRange> stack(k);
  stack[0] = root();
  std::size_t depth = 0;
  while (true) {
    auto& range = stack[depth];
    if (range.empty()) {
      if (depth == 0) break;
      --depth;
      continue;
    }
    const auto p = range.begin++;
    prefix[depth] = levels_[depth].values[p];
    if (depth + 1 == k) {
      rows.push_back(prefix);
    } else {
      stack[depth + 1] = child_range(depth, p);
      ++depth;
    }
  }
  return rows;
}

std::size_t CocoIndex::memory_bytes() const {
  std::size_t bytes = 0;
  for (const auto& l : levels_) {
    bytes += l.values.size() * sizeof(Value) + l.offsets32.size() * sizeof(std::uint32_t) +
             l.offsets64.size() * sizeof(std::uint64_t);
  }
  return bytes;
}

CocoIndex build_coco(std::span<const Value> rows, std::size_t arity, std::span<const std::size_t> column_order,
                     bool omit_last_offsets) {
  if (arity == 0) throw std::invalid_argument("build_coco: arity must be at least 1");
  if (column_order.size() != arity) throw std::invalid_argument("build_coco: column order must cover every column");
  CocoIndex index;
  index.levels_.resize(arity);
  const auto n = rows.size() / arity;
  if (n == 0) {
    // Empty partitions still get (empty) levels with a zero sentinel so lookups stay uniform.
    for (std::size_t r = 0; r < arity; ++r) {
      index.levels_[r].offsets32.assign(1, 0);
      index.levels_[r].has_offsets = !(omit_last_offsets && r + 1 == arity);
      if (!index.levels_[r].has_offsets) index.levels_[r].offsets32.clear();
    }
    return index;
  }
  index.wide_ = n >= std::numeric_limits<std::uint32_t>::max();

  const auto at = [&](std::size_t row, std::size_t level) { return rows[row * arity + column_order[level]]; };
  const auto first_difference = [&](std::size_t prev, std::size_t cur) {
    std::size_t e = 0;
    while (e < arity && at(prev, e) == at(cur, e)) ++e;
    return e;
  };

  // Pass 1: count the distinct prefixes ending at each level.
  std::vector<std::size_t> unique(arity, 1);
  for (std::size_t i = 1; i < n; ++i) {
    const auto e = first_difference(i - 1, i);
    if (e == arity) continue;
    if (at(i, e) < at(i - 1, e)) {
      throw std::invalid_argument("build_coco: rows are not sorted at row " + std::to_string(i));
    }
    for (auto d = e; d < arity; ++d) ++unique[d];
  }

  for (std::size_t r = 0; r < arity; ++r) {
    auto& level = index.levels_[r];
    level.values.resize(unique[r]);
    level.has_offsets = !(omit_last_offsets && r + 1 == arity);
    if (!level.has_offsets) continue;
    if (index.wide_) {
      level.offsets64.resize(unique[r] + 1);
    } else {
      level.offsets32.resize(unique[r] + 1);
    }
  }

  // Pass 2: a row whose first difference with its predecessor is at e opens new entries
  // at levels e..k-1. cursor[d] is the next free slot of level d.
  std::vector<std::size_t> cursor(arity, 0);
  const auto set_offset = [&](std::size_t level, std::size_t slot, std::uint64_t value) {
    auto& l = index.levels_[level];
    if (!l.has_offsets) return;
    if (index.wide_) {
      l.offsets64[slot] = value;
    } else {
      l.offsets32[slot] = static_cast<std::uint32_t>(value);
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    const auto e = i == 0 ? 0 : first_difference(i - 1, i);
    for (auto d = e; d < arity; ++d) {
      const auto slot = cursor[d]++;
      index.levels_[d].values[slot] = at(i, d);
      set_offset(d, slot, d + 1 < arity ? cursor[d + 1] : i);
    }
  }
  for (std::size_t d = 0; d < arity; ++d) set_offset(d, unique[d], d + 1 < arity ? unique[d + 1] : n);
  return index;
}

CocoIndex build_coco(std::span<const Value> rows, std::size_t arity, bool omit_last_offsets) {
  const auto order = identity_order(arity);
  return build_coco(rows, arity, order, omit_last_offsets);
}

}  // namespace hcj
