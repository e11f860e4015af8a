#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hcjoin/types.hpp"

#ifndef HCJ_INSTRUMENT
#define HCJ_INSTRUMENT 1
#endif

namespace hcj {

// Comparison counter for cost-model validation and skew reporting.
struct StepCounter {
  std::uint64_t steps = 0;
};

#if HCJ_INSTRUMENT
#define HCJ_COUNT_STEPS(counter, n) \
  do {                              \
    if (counter) (counter)->steps += (n); \
  } while (0)
#else
#define HCJ_COUNT_STEPS(counter, n) ((void)(counter))
#endif

enum class SearchStrategy { kLinear, kQuadratic, kExponential };

struct SearchConfig {
  // Remaining lengths up to linear_max scan linearly, up to quadratic_max stride-scan,
  // beyond that gallop.
  std::size_t linear_max = 32;
  std::size_t quadratic_max = 1024;
  // Values per stride in quadratic search: one 64-byte line of 8-byte values.
  std::size_t stride = 8;
};

inline SearchStrategy choose_strategy(std::size_t remaining, const SearchConfig& config = {}) {
  if (remaining <= config.linear_max) return SearchStrategy::kLinear;
  if (remaining <= config.quadratic_max) return SearchStrategy::kQuadratic;
  return SearchStrategy::kExponential;
}

// All searches return the first position p with view[p] >= x, or view.size().

inline std::size_t linear_search(std::span<const Value> view, Value x, StepCounter* counter = nullptr) {
  std::size_t i = 0;
  while (i < view.size() && view[i] < x) ++i;
  HCJ_COUNT_STEPS(counter, std::min(i + 1, view.size()));
  return i;
}

inline std::size_t quadratic_search(std::span<const Value> view, Value x, std::size_t stride = 8,
                                    StepCounter* counter = nullptr) {
  const auto n = view.size();
  std::size_t i = 0;
  std::uint64_t steps = 0;
  // Skip whole strides whose last value is still below x, then scan inside the stride.
  while (i + stride <= n) {
    ++steps;
    if (view[i + stride - 1] >= x) break;
    i += stride;
  }
  const auto stop = std::min(i + stride, n);
  while (i < stop) {
    ++steps;
    if (view[i] >= x) break;
    ++i;
  }
  HCJ_COUNT_STEPS(counter, steps);
  return i;
}

inline std::size_t exponential_search(std::span<const Value> view, Value x, StepCounter* counter = nullptr) {
  const auto n = view.size();
  if (n == 0) return 0;
  std::uint64_t steps = 1;
  if (view[0] >= x) {
    HCJ_COUNT_STEPS(counter, steps);
    return 0;
  }
  // Invariant: view[lo] < x; the answer lies in (lo, hi].
  std::size_t lo = 0;
  std::size_t step = 1;
  std::size_t hi = 1;
  while (hi < n) {
    ++steps;
    if (view[hi] >= x) break;
    lo = hi;
    step <<= 1;
    hi = lo + step;
  }
  hi = std::min(hi, n);
  while (hi - lo > 1) {
    const auto mid = lo + (hi - lo) / 2;
    ++steps;
    if (view[mid] >= x) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  HCJ_COUNT_STEPS(counter, steps);
  return hi;
}

inline std::size_t search(std::span<const Value> view, Value x, SearchStrategy strategy,
                          StepCounter* counter = nullptr, std::size_t stride = 8) {
  switch (strategy) {
    case SearchStrategy::kLinear:
      return linear_search(view, x, counter);
    case SearchStrategy::kQuadratic:
      return quadratic_search(view, x, stride, counter);
    case SearchStrategy::kExponential:
      return exponential_search(view, x, counter);
  }
  return view.size();
}

// Strategy picked from the view length.
inline std::size_t search(std::span<const Value> view, Value x, const SearchConfig& config,
                          StepCounter* counter = nullptr) {
  return search(view, x, choose_strategy(view.size(), config), counter, config.stride);
}

/**
 * Multiway intersection of strictly increasing views by min/max cursors: while the cursor
 * values disagree, the minimum cursor jumps to the first value >= the maximum (searching
 * from where it stands); when they agree the value is emitted and every cursor advances.
 *
 * on_match(value, positions) receives each common value in ascending order together with
 * its position in every view. `cursors` must hold views.size() slots. Returns the number
 * of matches.
 */
template <typename OnMatch>
std::size_t intersect_views(std::span<const std::span<const Value>> views, std::span<std::size_t> cursors,
                            OnMatch&& on_match, const SearchConfig& config = {}, StepCounter* counter = nullptr) {
  const auto k = views.size();
  if (k == 0) return 0;
  for (const auto& view : views) {
    if (view.empty()) {
      HCJ_COUNT_STEPS(counter, 1);
      return 0;
    }
  }
  std::fill_n(cursors.begin(), k, std::size_t{0});

  if (k == 1) {
    const auto view = views[0];
    for (std::size_t p = 0; p < view.size(); ++p) {
      cursors[0] = p;
      on_match(view[p], std::span<const std::size_t>(cursors.data(), 1));
    }
    HCJ_COUNT_STEPS(counter, view.size());
    return view.size();
  }

  std::size_t matches = 0;
  while (true) {
    HCJ_COUNT_STEPS(counter, 1);
    auto max_value = views[0][cursors[0]];
    auto min_value = max_value;
    std::size_t min_view = 0;
    for (std::size_t j = 1; j < k; ++j) {
      const auto v = views[j][cursors[j]];
      if (v > max_value) max_value = v;
      if (v < min_value) {
        min_value = v;
        min_view = j;
      }
    }

    if (min_value == max_value) {
      ++matches;
      on_match(min_value, std::span<const std::size_t>(cursors.data(), k));
      for (std::size_t j = 0; j < k; ++j) {
        if (++cursors[j] == views[j].size()) return matches;
      }
      continue;
    }

    const auto& view = views[min_view];
    auto& cursor = cursors[min_view];
    const auto rest = view.subspan(cursor);
    cursor += search(rest, max_value, choose_strategy(rest.size(), config), counter, config.stride);
    if (cursor == view.size()) return matches;
  }
}

/**
 * Pull-style wrapper over intersect_views for callers that want an iterator. Materializes
 * the matches on construction.
 */
class MultiwayIntersection {
 public:
  explicit MultiwayIntersection(std::span<const std::span<const Value>> views, const SearchConfig& config = {},
                                StepCounter* counter = nullptr)
      : width_(views.size()) {
    std::vector<std::size_t> cursors(views.size());
    intersect_views(
        views, cursors,
        [&](Value v, std::span<const std::size_t> positions) {
          values_.push_back(v);
          positions_.insert(positions_.end(), positions.begin(), positions.end());
        },
        config, counter);
  }

  // Advances to the next common value; false once exhausted.
  bool next() {
    if (index_ + 1 >= static_cast<std::ptrdiff_t>(values_.size())) {
      index_ = static_cast<std::ptrdiff_t>(values_.size());
      return false;
    }
    ++index_;
    return true;
  }

  Value value() const { return values_[static_cast<std::size_t>(index_)]; }
  std::span<const std::size_t> positions() const {
    return {positions_.data() + static_cast<std::size_t>(index_) * width_, width_};
  }

  const std::vector<Value>& values() const { return values_; }

 private:
  std::size_t width_;
  std::vector<Value> values_;
  std::vector<std::size_t> positions_;
  std::ptrdiff_t index_ = -1;
};

}  // namespace hcj
