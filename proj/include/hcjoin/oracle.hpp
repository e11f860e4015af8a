#pragma once

#include <cstdint>
#include <vector>

#include "hcjoin/types.hpp"

namespace hcj {

using Binding = std::vector<Value>;

// Refuses instances whose backtracking would exceed this many loop steps.
inline constexpr std::uint64_t kOracleStepLimit = 1'000'000'000;

/**
 * Brute-force evaluation: backtracks over the atoms in query order, scanning every row of
 * each atom and keeping those consistent with the variables bound so far. Returns the sorted
 * distinct bindings over the query variables in declaration order. Throws ConfigError when
 * the step limit is exceeded.
 */
std::vector<Binding> evaluate(const Query& query, const Catalog& catalog,
                              std::uint64_t step_limit = kOracleStepLimit);

}  // namespace hcj
