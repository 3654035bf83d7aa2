#pragma once

#include <string>
#include <vector>

#include "uner/types.hpp"

namespace uner {

enum class Strictness {
  kPropriety,      // N > q + 2 and m > a >= 1
  kFiniteVariance  // N > q + 6 and m > a >= 5
};

struct ValidationReport {
  Strictness strictness = Strictness::kPropriety;
  bool pass = true;
  // One entry per violated inequality, e.g. "N > q + 2 (N = 5, q = 3)".
  std::vector<std::string> failures;

  std::string message() const;
};

ValidationReport validate_conditions(const UnitDataset& data, const PriorConfig& prior,
                                     Strictness strictness);

// Count-only overload, for configuration checks before any data exists.
ValidationReport validate_conditions(long total_units, long q, long m, int a, Strictness strictness);

}  // namespace uner
