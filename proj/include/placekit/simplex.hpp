#pragma once

#include <vector>

namespace placekit {

enum class LpStatus { Optimal, Infeasible, IterationLimit, Unbounded };
enum class RowRelation { LessEqual, Equal, GreaterEqual };

struct LpRow {
  std::vector<int> vars;
  std::vector<double> coeffs;
  double rhs = 0.0;
  RowRelation relation = RowRelation::LessEqual;
};

/// maximize c.x subject to the rows and lower <= x <= upper.
struct LpProblemData {
  int n_vars = 0;
  std::vector<double> objective;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<LpRow> rows;
};

struct LpSolution {
  std::vector<double> x;
  double objective = 0.0;
  LpStatus status = LpStatus::Optimal;
  double max_residual = 0.0;
  long pivots = 0;
};

/// Dense two-phase bounded-variable primal simplex with Bland's anti-cycling
/// rule; fully deterministic.
LpSolution solve_lp_simplex(const LpProblemData& problem, long max_pivots = 1000000);

}  // namespace placekit
