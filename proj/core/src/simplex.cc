#include "fbcrs/simplex.h"

#include <cmath>
#include <limits>
#include <sstream>

#include "fbcrs/error.h"

namespace fbcrs {

namespace {

// Dictionary-form tableau holding only nonbasic columns: row r reads
//   basic[r] = rhs[r] - sum_k coef[r][k] * nonbasic[k]
// and the objective reads z = value + sum_k reduced[k] * nonbasic[k].
// Variable ids 0..num_vars-1 are structural, num_vars.. are slacks.
class Tableau {
 public:
  explicit Tableau(const DenseLp& lp)
      : m_(lp.rows.size()),
        n_(lp.num_vars),
        coef_(m_ * n_),
        rhs_(lp.rhs),
        reduced_(lp.objective),
        basic_(m_),
        nonbasic_(n_) {
    for (std::size_t r = 0; r < m_; ++r) {
      for (std::size_t k = 0; k < n_; ++k) at(r, k) = lp.rows[r][k];
      basic_[r] = n_ + r;
    }
    for (std::size_t k = 0; k < n_; ++k) nonbasic_[k] = k;
  }

  SimplexResult solve(const SimplexOptions& options) {
    const double tol = options.tolerance;
    std::size_t streak = 0;
    SimplexResult out;
    for (out.iterations = 0;; ++out.iterations) {
      if (out.iterations >= options.max_iterations) {
        throw SolverError("simplex iteration cap reached");
      }
      const bool bland = streak >= options.degenerate_streak_for_bland;
      const std::size_t enter = choose_entering(tol, bland);
      if (enter == kNone) break;
      const std::size_t leave = choose_leaving(enter, bland);
      if (leave == kNone) throw SolverError("LP is unbounded");
      streak = rhs_[leave] <= tol * 1e-3 ? streak + 1 : 0;
      pivot(leave, enter);
    }

    out.primal.assign(n_, 0.0);
    for (std::size_t r = 0; r < m_; ++r) {
      if (basic_[r] < n_) out.primal[basic_[r]] = std::max(0.0, rhs_[r]);
    }
    out.dual.assign(m_, 0.0);
    for (std::size_t k = 0; k < n_; ++k) {
      if (nonbasic_[k] >= n_) out.dual[nonbasic_[k] - n_] = std::max(0.0, -reduced_[k]);
    }
    out.objective = value_;
    return out;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  double& at(std::size_t r, std::size_t k) { return coef_[r * n_ + k]; }

  std::size_t choose_entering(double tol, bool bland) const {
    std::size_t best = kNone;
    double best_value = tol;
    for (std::size_t k = 0; k < n_; ++k) {
      if (reduced_[k] <= tol) continue;
      if (bland) {
        if (best == kNone || nonbasic_[k] < nonbasic_[best]) best = k;
      } else if (reduced_[k] > best_value) {
        best_value = reduced_[k];
        best = k;
      }
    }
    return best;
  }

  std::size_t choose_leaving(std::size_t enter, bool bland) {
    constexpr double kPivotTol = 1e-11;
    std::size_t best = kNone;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < m_; ++r) {
      const double a = at(r, enter);
      if (a <= kPivotTol) continue;
      const double ratio = std::max(0.0, rhs_[r]) / a;
      if (best == kNone || ratio < best_ratio - 1e-15) {
        best = r;
        best_ratio = ratio;
      } else if (ratio <= best_ratio + 1e-15) {
        // Ties: Bland picks the smallest variable id; otherwise prefer the
        // larger pivot element for stability.
        const bool take = bland ? basic_[r] < basic_[best] : a > at(best, enter);
        if (take) {
          best = r;
          best_ratio = std::min(best_ratio, ratio);
        }
      }
    }
    return best;
  }

  void pivot(std::size_t leave, std::size_t enter) {
    const double p = at(leave, enter);
    double* prow = &coef_[leave * n_];
    const double inv = 1.0 / p;
    for (std::size_t k = 0; k < n_; ++k) prow[k] *= inv;
    prow[enter] = inv;
    rhs_[leave] *= inv;

    // The pivot row is often sparse; only its nonzero columns change.
    nonzero_.clear();
    for (std::size_t k = 0; k < n_; ++k) {
      if (k != enter && prow[k] != 0.0) nonzero_.push_back(k);
    }
    const bool dense = 4 * nonzero_.size() > n_;
    for (std::size_t r = 0; r < m_; ++r) {
      if (r == leave) continue;
      double* row = &coef_[r * n_];
      const double f = row[enter];
      if (f == 0.0) continue;
      if (dense) {
        for (std::size_t k = 0; k < n_; ++k) row[k] -= f * prow[k];
      } else {
        for (std::size_t k : nonzero_) row[k] -= f * prow[k];
      }
      row[enter] = -f * inv;
      rhs_[r] -= f * rhs_[leave];
    }
    const double f = reduced_[enter];
    for (std::size_t k : nonzero_) reduced_[k] -= f * prow[k];
    reduced_[enter] = -f * inv;
    value_ += f * rhs_[leave];
    std::swap(basic_[leave], nonbasic_[enter]);
  }

  std::size_t m_;
  std::size_t n_;
  std::vector<double> coef_;
  std::vector<double> rhs_;
  std::vector<double> reduced_;
  std::vector<std::size_t> basic_;
  std::vector<std::size_t> nonbasic_;
  std::vector<std::size_t> nonzero_;
  double value_ = 0.0;
};

}  // namespace

SimplexResult solve_dense_lp(const DenseLp& lp, const SimplexOptions& options) {
  if (lp.rhs.size() != lp.rows.size() || lp.objective.size() != lp.num_vars) {
    throw InputError("DenseLp dimensions are inconsistent");
  }
  for (std::size_t r = 0; r < lp.rows.size(); ++r) {
    if (lp.rows[r].size() != lp.num_vars) throw InputError("DenseLp row has wrong width");
    if (!(lp.rhs[r] >= 0.0)) {
      std::ostringstream msg;
      msg << "DenseLp requires b >= 0 (row " << r << ")";
      throw InputError(msg.str());
    }
  }
  return Tableau(lp).solve(options);
}

}  // namespace fbcrs
