#include "hcjoin/rows.hpp"

#include <algorithm>
#include <numeric>

namespace hcj {

std::vector<std::size_t> identity_order(std::size_t arity) {
  std::vector<std::size_t> order(arity);
  std::iota(order.begin(), order.end(), 0);
  return order;
}

void sort_rows(std::span<Value> rows, std::size_t arity, std::span<const std::size_t> column_order) {
  if (arity == 0) return;
  const auto n = rows.size() / arity;
  if (n < 2) return;

  if (arity == 1) {
    std::sort(rows.begin(), rows.end());
    return;
  }

  // Sort a permutation, then gather; rows are variable-width so they cannot be swapped as values.
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  const Value* base = rows.data();
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    return row_less(base + a * arity, base + b * arity, column_order);
  });

  std::vector<Value> sorted(rows.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(base + perm[i] * arity, arity, sorted.data() + i * arity);
  }
  std::copy(sorted.begin(), sorted.end(), rows.begin());
}

bool rows_sorted(std::span<const Value> rows, std::size_t arity, std::span<const std::size_t> column_order) {
  if (arity == 0) return true;
  const auto n = rows.size() / arity;
  for (std::size_t i = 1; i < n; ++i) {
    if (row_less(rows.data() + i * arity, rows.data() + (i - 1) * arity, column_order)) return false;
  }
  return true;
}

}  // namespace hcj
