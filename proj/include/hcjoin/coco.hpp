#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "hcjoin/types.hpp"

namespace hcj {

// Half-open interval of positions in one trie level's value array.
struct LevelRange {
  std::size_t level = 0;
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return begin == end; }
  bool operator==(const LevelRange&) const = default;
};

/**
 * Compressed column trie over one sorted partition. Level r stores the last component of
 * every distinct r-prefix in `values`; offsets[p], offsets[p + 1] delimit the children of
 * values[p] in level r + 1. The last level's offsets point into the partition's rows and
 * are dropped when the source is known to be duplicate-free.
 *
 * Offsets are 32-bit when the partition has fewer than 2^32 rows, else 64-bit.
 */
class CocoIndex {
 public:
  CocoIndex() = default;

  std::size_t arity() const { return levels_.size(); }
  bool empty() const { return levels_.empty() || levels_[0].values.empty(); }
  bool wide_offsets() const { return wide_; }
  bool has_last_offsets() const { return !levels_.empty() && levels_.back().has_offsets; }

  std::span<const Value> values(std::size_t level) const { return levels_[level].values; }
  std::size_t level_size(std::size_t level) const { return levels_[level].values.size(); }

  std::uint64_t offset(std::size_t level, std::size_t p) const {
    const auto& l = levels_[level];
    return wide_ ? l.offsets64[p] : l.offsets32[p];
  }

  // Offsets of a level widened to 64 bits; empty when omitted.
  std::vector<std::uint64_t> offsets(std::size_t level) const;

  LevelRange root() const { return {0, 0, levels_.empty() ? 0 : levels_[0].values.size()}; }

  // Children of values[p] at `level`: [O_level[p], O_level[p + 1]) in level + 1.
  LevelRange child_range(std::size_t level, std::size_t p) const {
    if (level + 1 >= levels_.size()) {
      throw std::logic_error("child_range: level " + std::to_string(level) + " has no child level");
    }
    const auto& l = levels_[level];
    if (wide_) return {level + 1, l.offsets64[p], l.offsets64[p + 1]};
    return {level + 1, l.offsets32[p], l.offsets32[p + 1]};
  }

  // Row range of a last-level entry; throws if the last offsets were omitted.
  LevelRange row_range(std::size_t p) const;

  std::span<const Value> slice(const LevelRange& range) const {
    return values(range.level).subspan(range.begin, range.size());
  }

  // Depth-first expansion: the sorted distinct rows in trie column order.
  std::vector<std::vector<Value>> enumerate() const;

  std::size_t memory_bytes() const;

  friend CocoIndex build_coco(std::span<const Value>, std::size_t, std::span<const std::size_t>, bool);

 private:
  struct Level {
    std::vector<Value> values;
    std::vector<std::uint32_t> offsets32;
    std::vector<std::uint64_t> offsets64;
    bool has_offsets = true;
  };

  std::vector<Level> levels_;
  bool wide_ = false;
};

/**
 * Builds the trie of a row-major block sorted lexicographically under column_order
 * (column_order[r] is the source column stored at trie level r). Throws std::invalid_argument
 * if the rows are not sorted.
 */
CocoIndex build_coco(std::span<const Value> rows, std::size_t arity, std::span<const std::size_t> column_order,
                     bool omit_last_offsets = false);

CocoIndex build_coco(std::span<const Value> rows, std::size_t arity, bool omit_last_offsets = false);

}  // namespace hcj
