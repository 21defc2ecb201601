#pragma once

#include <map>
#include <vector>

#include "nom/rational.hpp"

namespace nom {

// One linear-programming row: sum(coef[v] * x_v) >= rhs, or == rhs when eq
// is set. Variables are nonnegative by convention.
struct LPRow {
  std::map<int, Rat> coef;
  Rat rhs;
  bool eq = false;
};

enum class LPStatus { Optimal, Infeasible, Unbounded };

struct LPResult {
  LPStatus status = LPStatus::Infeasible;
  std::map<int, Rat> solution;  // every mentioned variable (zero if non-basic)
  Rat objective;
};

// Minimizes sum(objective[v] * x_v) subject to the rows and x_v >= 0 for
// every variable mentioned in either input. Exact rational two-phase
// simplex with Bland's smallest-index pivoting rule (terminates without
// cycling).
LPResult solve_lp(const std::vector<LPRow>& rows,
                  const std::map<int, Rat>& objective);

}  // namespace nom
