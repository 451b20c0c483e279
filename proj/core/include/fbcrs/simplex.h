#pragma once

#include <cstddef>
#include <vector>

namespace fbcrs {

// Dense LP in inequality form:
//   maximize c^T v  subject to  A v <= b,  v >= 0,  with b >= 0.
// The origin is feasible, so no phase one is needed.
struct DenseLp {
  std::size_t num_vars = 0;
  std::vector<std::vector<double>> rows;  // A, one row per constraint
  std::vector<double> rhs;                // b
  std::vector<double> objective;          // c
};

struct SimplexOptions {
  double tolerance = 1e-9;
  std::size_t max_iterations = 1'000'000;
  // Consecutive degenerate pivots tolerated under largest-coefficient
  // pricing before switching to Bland's rule for anti-cycling.
  std::size_t degenerate_streak_for_bland = 50;
};

struct SimplexResult {
  std::vector<double> primal;  // v
  std::vector<double> dual;    // one multiplier per constraint, >= 0
  double objective = 0.0;
  std::size_t iterations = 0;
};

// Throws SolverError on unboundedness or when the iteration cap is hit.
SimplexResult solve_dense_lp(const DenseLp& lp, const SimplexOptions& options = {});

}  // namespace fbcrs
