#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include "hcjoin/types.hpp"

namespace hcj {

// Bit c set means column c is included.
using ColumnMask = std::uint32_t;

/**
 * Per-relation statistics. Cardinalities and per-column distinct counts are computed
 * eagerly; projection sizes and conditional max-degrees are computed on first request and
 * memoized (thread-safe).
 */
class Statistics {
 public:
  explicit Statistics(const Catalog& catalog);

  std::size_t cardinality(const std::string& relation) const;
  std::size_t distinct(const std::string& relation, std::size_t column) const;

  // Number of distinct rows of the projection onto `columns`; 1 for the empty projection of
  // a nonempty relation, 0 for an empty relation.
  std::size_t distinct_projection(const std::string& relation, ColumnMask columns) const;

  // Largest number of distinct `column` values among rows sharing one assignment of the
  // `bound` columns. With no bound columns this is distinct(column).
  std::size_t max_degree(const std::string& relation, std::size_t column, ColumnMask bound) const;

  // Average number of distinct `column` values per assignment of `bound` present in the relation.
  double avg_degree(const std::string& relation, std::size_t column, ColumnMask bound) const;

 private:
  struct Entry {
    std::shared_ptr<const Relation> relation;
    std::vector<std::size_t> distinct;
  };

  const Entry& entry(const std::string& relation) const;

  std::map<std::string, Entry> entries_;
  mutable std::mutex mutex_;
  mutable std::map<std::tuple<std::string, ColumnMask>, std::size_t> projection_memo_;
  mutable std::map<std::tuple<std::string, std::size_t, ColumnMask>, std::size_t> degree_memo_;
};

}  // namespace hcj
