#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hcjoin/types.hpp"

namespace hcj {

// Lexicographic comparison of two rows under a column permutation.
inline bool row_less(const Value* a, const Value* b, std::span<const std::size_t> column_order) {
  for (const auto c : column_order) {
    if (a[c] != b[c]) return a[c] < b[c];
  }
  return false;
}

inline bool row_equal(const Value* a, const Value* b, std::size_t arity) {
  for (std::size_t c = 0; c < arity; ++c) {
    if (a[c] != b[c]) return false;
  }
  return true;
}

std::vector<std::size_t> identity_order(std::size_t arity);

// Sorts the rows of a row-major block in place under `column_order` (must list every column).
void sort_rows(std::span<Value> rows, std::size_t arity, std::span<const std::size_t> column_order);

bool rows_sorted(std::span<const Value> rows, std::size_t arity, std::span<const std::size_t> column_order);

}  // namespace hcj
