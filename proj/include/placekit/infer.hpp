#pragma once

#include "placekit/model.hpp"
#include "placekit/simplex.hpp"
#include "placekit/types.hpp"

#include <string>
#include <vector>

namespace placekit {

// =============================================================================
// ILP problem
// =============================================================================

enum class IlpRowKind { Chain, Coverage, Slot, Overlap };

struct IlpRow {
  IlpRowKind kind = IlpRowKind::Coverage;
  std::vector<int> vars;
  std::vector<double> coeffs;
  double rhs = 0.0;
  RowRelation relation = RowRelation::LessEqual;
  std::string tag;  // human-readable origin, e.g. the object id
};

/// Binary program over the sampled candidates: one variable per candidate,
/// coefficient log Psi(1) - log Psi(0), plus the constant sum of log Psi(0).
struct IlpProblem {
  CandidateSet candidates;
  std::vector<double> coefficients;
  double objective_constant = 0.0;
  std::vector<IlpRow> rows;
  std::vector<std::string> object_ids;

  std::size_t n_vars() const { return candidates.candidates.size(); }
  /// Full strategy objective of a 0/1 assignment.
  double assignment_objective(const std::vector<double>& x) const;
};

constexpr int kIlpVariableCap = 20000;

/// Rows from the scored candidate set: chain rows per (base object, config),
/// one coverage row per object, slot rows per (environment, location), and
/// overlap rows for geometrically conflicting same-environment pairs
/// (footprint hulls closer than 5 mm). Topological stacking pruning has
/// already removed upward s-variables during candidate construction.
/// Throws Error("NoCandidates", <object id>) when an object has none.
IlpProblem build_ilp(const Scene& scene, CandidateSet candidates);

/// LP relaxation (0 <= x <= 1) of the ILP, solved by the dense bounded
/// simplex. The reported objective includes the constant term.
LpSolution solve_lp(const IlpProblem& problem);

enum class SolveMode { Exact, RelaxRound };

struct SolveResult {
  PlacingStrategy strategy;
  double objective = 0.0;  // full strategy objective of the chosen assignment
  double lp_bound = 0.0;   // root LP objective
  long lp_solves = 0;
  bool used_exact_fallback = false;
};

/// mode Exact: depth-first branch-and-bound with the LP bound, provably
/// optimal. mode RelaxRound: iteratively fix the largest fractional variable
/// to 1 and re-solve, backtracking on infeasibility (at most 3 times per
/// fixing) before falling back to exact search on the residual problem.
SolveResult solve_placing(const IlpProblem& problem, SolveMode mode);

// =============================================================================
// Feasibility
// =============================================================================

struct FeasibilityViolation {
  std::string kind;  // coverage | chain | slot | overlap | acyclic
  std::string message;
};

struct FeasibilityReport {
  std::vector<FeasibilityViolation> violations;
  bool ok() const { return violations.empty(); }
};

/// Checks Eqs. (8)-(11) plus acyclicity by explicit cycle search over the
/// stacking digraph. Geometric checks (slot, overlap) use the strategy's
/// placed clouds with 5 mm footprint dilation.
FeasibilityReport check_feasibility(const Scene& scene, const PlacingStrategy& strategy);

}  // namespace placekit
