#include "placekit/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace placekit {

namespace {

constexpr double kTol = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarState { AtLower, AtUpper, Basic };

struct Tableau {
  int m = 0;       // rows
  int total = 0;   // structural + slack + artificial
  std::vector<double> t;  // m x total, B^{-1} A
  std::vector<double> xb;       // basic values
  std::vector<int> basis;       // basic variable per row
  std::vector<VarState> state;
  std::vector<double> lo, up;

  double& at(int r, int c) { return t[static_cast<std::size_t>(r) * total + c]; }
  double at(int r, int c) const { return t[static_cast<std::size_t>(r) * total + c]; }

  double value(int j) const {
    if (state[static_cast<std::size_t>(j)] == VarState::AtLower) return lo[static_cast<std::size_t>(j)];
    if (state[static_cast<std::size_t>(j)] == VarState::AtUpper) return up[static_cast<std::size_t>(j)];
    for (int r = 0; r < m; ++r) {
      if (basis[static_cast<std::size_t>(r)] == j) return xb[static_cast<std::size_t>(r)];
    }
    return 0.0;
  }
};

// One simplex phase: maximize cost over the current tableau. Returns false on
// iteration-limit, true otherwise; sets `unbounded` on an improving free ray.
bool run_phase(Tableau& tb, const std::vector<double>& cost, long max_pivots, long& pivots,
               bool& unbounded) {
  const int m = tb.m, total = tb.total;
  std::vector<double> dual(static_cast<std::size_t>(m));
  while (true) {
    if (pivots >= max_pivots) return false;
    // reduced costs d_j = c_j - c_B^T T_j  (T already = B^{-1}A)
    for (int r = 0; r < m; ++r) dual[static_cast<std::size_t>(r)] = cost[static_cast<std::size_t>(tb.basis[static_cast<std::size_t>(r)])];
    int enter = -1;
    int dir = 0;
    for (int j = 0; j < total; ++j) {
      if (tb.state[static_cast<std::size_t>(j)] == VarState::Basic) continue;
      if (tb.up[static_cast<std::size_t>(j)] - tb.lo[static_cast<std::size_t>(j)] < kTol) continue;  // fixed
      double d = cost[static_cast<std::size_t>(j)];
      for (int r = 0; r < m; ++r) d -= dual[static_cast<std::size_t>(r)] * tb.at(r, j);
      if (tb.state[static_cast<std::size_t>(j)] == VarState::AtLower && d > kTol) {
        enter = j;
        dir = +1;
        break;  // Bland: lowest index
      }
      if (tb.state[static_cast<std::size_t>(j)] == VarState::AtUpper && d < -kTol) {
        enter = j;
        dir = -1;
        break;
      }
    }
    if (enter < 0) return true;  // optimal for this phase

    // Ratio test: x_enter moves by dir * t; basics change by -dir * t * col.
    double t_max = tb.up[static_cast<std::size_t>(enter)] - tb.lo[static_cast<std::size_t>(enter)];
    int leave_row = -1;      // -1 = bound flip
    double leave_bound = 0;  // bound hit by the leaving basic variable
    for (int r = 0; r < m; ++r) {
      const double coef = dir * tb.at(r, enter);
      const int bv = tb.basis[static_cast<std::size_t>(r)];
      double limit = kInf;
      double hit = 0.0;
      if (coef > kTol) {  // basic decreases toward its lower bound
        limit = (tb.xb[static_cast<std::size_t>(r)] - tb.lo[static_cast<std::size_t>(bv)]) / coef;
        hit = tb.lo[static_cast<std::size_t>(bv)];
      } else if (coef < -kTol && tb.up[static_cast<std::size_t>(bv)] < kInf) {
        limit = (tb.up[static_cast<std::size_t>(bv)] - tb.xb[static_cast<std::size_t>(r)]) / (-coef);
        hit = tb.up[static_cast<std::size_t>(bv)];
      } else {
        continue;
      }
      if (limit < -kTol) limit = 0.0;
      if (limit < t_max - kTol ||
          (limit < t_max + kTol && leave_row >= 0 &&
           bv < tb.basis[static_cast<std::size_t>(leave_row)])) {
        // strict improvement, or Bland tie-break on the leaving variable index
        t_max = std::max(limit, 0.0);
        leave_row = r;
        leave_bound = hit;
      }
    }
    if (t_max >= kInf) {
      unbounded = true;
      return true;
    }

    ++pivots;
    if (leave_row < 0) {
      // bound flip
      for (int r = 0; r < m; ++r) {
        tb.xb[static_cast<std::size_t>(r)] -= dir * t_max * tb.at(r, enter);
      }
      tb.state[static_cast<std::size_t>(enter)] =
          dir > 0 ? VarState::AtUpper : VarState::AtLower;
      continue;
    }

    // Pivot: entering becomes basic, leaving goes to the bound it hit.
    const int leave_var = tb.basis[static_cast<std::size_t>(leave_row)];
    const double enter_start = tb.state[static_cast<std::size_t>(enter)] == VarState::AtLower
                                   ? tb.lo[static_cast<std::size_t>(enter)]
                                   : tb.up[static_cast<std::size_t>(enter)];
    for (int r = 0; r < m; ++r) {
      tb.xb[static_cast<std::size_t>(r)] -= dir * t_max * tb.at(r, enter);
    }
    const double enter_value = enter_start + dir * t_max;

    const double pivot = tb.at(leave_row, enter);
    const double inv = 1.0 / pivot;
    for (int c = 0; c < total; ++c) tb.at(leave_row, c) *= inv;
    for (int r = 0; r < m; ++r) {
      if (r == leave_row) continue;
      const double f = tb.at(r, enter);
      if (f == 0.0) continue;
      for (int c = 0; c < total; ++c) tb.at(r, c) -= f * tb.at(leave_row, c);
    }
    tb.basis[static_cast<std::size_t>(leave_row)] = enter;
    tb.xb[static_cast<std::size_t>(leave_row)] = enter_value;
    tb.state[static_cast<std::size_t>(enter)] = VarState::Basic;
    tb.state[static_cast<std::size_t>(leave_var)] =
        (tb.up[static_cast<std::size_t>(leave_var)] < kInf &&
         std::abs(leave_bound - tb.up[static_cast<std::size_t>(leave_var)]) <
             std::abs(leave_bound - tb.lo[static_cast<std::size_t>(leave_var)]))
            ? VarState::AtUpper
            : VarState::AtLower;
  }
}

}  // namespace

LpSolution solve_lp_simplex(const LpProblemData& problem, long max_pivots) {
  const int n = problem.n_vars;
  const int m = static_cast<int>(problem.rows.size());
  LpSolution out;

  // Layout: [structural | slack/surplus per inequality | artificial per row].
  int n_slack = 0;
  for (const LpRow& row : problem.rows) {
    if (row.relation != RowRelation::Equal) ++n_slack;
  }
  const int total = n + n_slack + m;

  Tableau tb;
  tb.m = m;
  tb.total = total;
  tb.t.assign(static_cast<std::size_t>(m) * total, 0.0);
  tb.xb.assign(static_cast<std::size_t>(m), 0.0);
  tb.basis.assign(static_cast<std::size_t>(m), -1);
  tb.state.assign(static_cast<std::size_t>(total), VarState::AtLower);
  tb.lo.assign(static_cast<std::size_t>(total), 0.0);
  tb.up.assign(static_cast<std::size_t>(total), kInf);
  for (int j = 0; j < n; ++j) {
    tb.lo[static_cast<std::size_t>(j)] = problem.lower[static_cast<std::size_t>(j)];
    tb.up[static_cast<std::size_t>(j)] = problem.upper[static_cast<std::size_t>(j)];
  }

  // Rows with rhs normalized >= 0 relative to nonbasic values at lower bound.
  int slack_cursor = n;
  for (int r = 0; r < m; ++r) {
    const LpRow& row = problem.rows[static_cast<std::size_t>(r)];
    double sign = 1.0;
    // residual rhs once structural vars sit at their lower bounds
    double rhs = row.rhs;
    for (std::size_t k = 0; k < row.vars.size(); ++k) {
      rhs -= row.coeffs[k] * problem.lower[static_cast<std::size_t>(row.vars[k])];
    }
    RowRelation rel = row.relation;
    if (rhs < 0.0) {
      sign = -1.0;
      rhs = -rhs;
      if (rel == RowRelation::LessEqual) rel = RowRelation::GreaterEqual;
      else if (rel == RowRelation::GreaterEqual) rel = RowRelation::LessEqual;
    }
    for (std::size_t k = 0; k < row.vars.size(); ++k) {
      tb.at(r, row.vars[k]) += sign * row.coeffs[k];
    }
    if (rel == RowRelation::LessEqual) {
      tb.at(r, slack_cursor) = 1.0;
      ++slack_cursor;
    } else if (rel == RowRelation::GreaterEqual) {
      tb.at(r, slack_cursor) = -1.0;
      ++slack_cursor;
    }
    const int art = n + n_slack + r;
    tb.at(r, art) = 1.0;
    tb.basis[static_cast<std::size_t>(r)] = art;
    tb.state[static_cast<std::size_t>(art)] = VarState::Basic;
    tb.xb[static_cast<std::size_t>(r)] = rhs;
  }
  // The tableau columns above are expressed with structural vars shifted by
  // their lower bounds; since all our lower bounds are 0 this is the identity
  // shift, but the rhs normalization above keeps it correct regardless.

  // --- Phase 1: drive artificials to zero. ---
  std::vector<double> cost1(static_cast<std::size_t>(total), 0.0);
  for (int r = 0; r < m; ++r) cost1[static_cast<std::size_t>(n + n_slack + r)] = -1.0;
  bool unbounded = false;
  if (!run_phase(tb, cost1, max_pivots, out.pivots, unbounded)) {
    out.status = LpStatus::IterationLimit;
    return out;
  }
  double art_sum = 0.0;
  for (int r = 0; r < m; ++r) {
    if (tb.basis[static_cast<std::size_t>(r)] >= n + n_slack) {
      art_sum += tb.xb[static_cast<std::size_t>(r)];
    }
  }
  if (art_sum > 1e-7) {
    out.status = LpStatus::Infeasible;
    return out;
  }
  // Pin artificials at zero for phase 2.
  for (int r = 0; r < m; ++r) {
    tb.up[static_cast<std::size_t>(n + n_slack + r)] = 0.0;
  }

  // --- Phase 2: the real objective. ---
  std::vector<double> cost2(static_cast<std::size_t>(total), 0.0);
  for (int j = 0; j < n; ++j) cost2[static_cast<std::size_t>(j)] = problem.objective[static_cast<std::size_t>(j)];
  if (!run_phase(tb, cost2, max_pivots, out.pivots, unbounded)) {
    out.status = LpStatus::IterationLimit;
    return out;
  }
  if (unbounded) {
    out.status = LpStatus::Unbounded;
    return out;
  }

  out.x.assign(static_cast<std::size_t>(n), 0.0);
  for (int j = 0; j < n; ++j) {
    out.x[static_cast<std::size_t>(j)] = tb.value(j);
  }
  out.objective = 0.0;
  for (int j = 0; j < n; ++j) {
    out.objective += problem.objective[static_cast<std::size_t>(j)] * out.x[static_cast<std::size_t>(j)];
  }
  // Residual check against the original rows.
  out.max_residual = 0.0;
  for (const LpRow& row : problem.rows) {
    double lhs = 0.0;
    for (std::size_t k = 0; k < row.vars.size(); ++k) {
      lhs += row.coeffs[k] * out.x[static_cast<std::size_t>(row.vars[k])];
    }
    double viol = 0.0;
    if (row.relation == RowRelation::LessEqual) viol = std::max(0.0, lhs - row.rhs);
    else if (row.relation == RowRelation::GreaterEqual) viol = std::max(0.0, row.rhs - lhs);
    else viol = std::abs(lhs - row.rhs);
    out.max_residual = std::max(out.max_residual, viol);
  }
  out.status = LpStatus::Optimal;
  return out;
}

}  // namespace placekit
