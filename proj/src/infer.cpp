#include "placekit/infer.hpp"

#include "placekit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace placekit {

namespace {
constexpr double kOverlapClearance = 0.005;
constexpr double kIntTol = 1e-7;
}  // namespace

double IlpProblem::assignment_objective(const std::vector<double>& x) const {
  double obj = objective_constant;
  for (std::size_t i = 0; i < coefficients.size(); ++i) obj += coefficients[i] * x[i];
  return obj;
}

// =============================================================================
// build_ilp
// =============================================================================

IlpProblem build_ilp(const Scene& scene, CandidateSet candidates) {
  IlpProblem p;
  p.candidates = std::move(candidates);
  for (const auto& e : scene.objects) p.object_ids.push_back(e.id);

  const auto& cands = p.candidates.candidates;
  if (cands.size() > static_cast<std::size_t>(kIlpVariableCap)) {
    throw Error("TooLarge", "instance has " + std::to_string(cands.size()) +
                                " variables (cap " + std::to_string(kIlpVariableCap) +
                                "); coarsen the sampling grid or reduce configurations");
  }

  p.coefficients.resize(cands.size());
  p.objective_constant = 0.0;
  for (std::size_t v = 0; v < cands.size(); ++v) {
    p.coefficients[v] = cands[v].log_psi_set - cands[v].log_psi_unset;
    p.objective_constant += cands[v].log_psi_unset;
    if (!std::isfinite(p.coefficients[v])) {
      throw Error("BadFeature", "non-finite candidate coefficient");
    }
  }

  const int n = p.candidates.n_objects;
  // coverage rows (order: object index) — every variable sits in exactly one
  for (int i = 0; i < n; ++i) {
    IlpRow row;
    row.kind = IlpRowKind::Coverage;
    row.relation = RowRelation::Equal;
    row.rhs = 1.0;
    row.tag = p.object_ids[static_cast<std::size_t>(i)];
    for (std::size_t v = 0; v < cands.size(); ++v) {
      if (cands[v].object == i) {
        row.vars.push_back(static_cast<int>(v));
        row.coeffs.push_back(1.0);
      }
    }
    if (row.vars.empty()) {
      throw Error("NoCandidates", p.object_ids[static_cast<std::size_t>(i)]);
    }
    p.rows.push_back(std::move(row));
  }

  // chain rows per (base object r, base config t) that has stacked variables:
  // sum_{on top of (r,t)} x <= sum_{(r,t) placed anywhere} x
  std::map<std::pair<int, int>, std::vector<int>> stacked_on;
  for (std::size_t v = 0; v < cands.size(); ++v) {
    if (cands[v].base.kind == BaseRef::Kind::Object) {
      stacked_on[{cands[v].base.index, cands[v].base_config_index}].push_back(
          static_cast<int>(v));
    }
  }
  for (const auto& [key, vars_on_top] : stacked_on) {
    const auto [r, t] = key;
    IlpRow row;
    row.kind = IlpRowKind::Chain;
    row.relation = RowRelation::LessEqual;
    row.rhs = 0.0;
    row.tag = p.object_ids[static_cast<std::size_t>(r)] + "@cfg" + std::to_string(t);
    for (int v : vars_on_top) {
      row.vars.push_back(v);
      row.coeffs.push_back(1.0);
    }
    for (std::size_t v = 0; v < cands.size(); ++v) {
      if (cands[v].object == r && cands[v].config_index == t) {
        row.vars.push_back(static_cast<int>(v));
        row.coeffs.push_back(-1.0);
      }
    }
    p.rows.push_back(std::move(row));
  }

  // slot rows per (environment, sampled location)
  std::map<std::pair<int, int>, std::vector<int>> slots;
  for (std::size_t v = 0; v < cands.size(); ++v) {
    if (cands[v].base.kind == BaseRef::Kind::Environment) {
      slots[{cands[v].base.index, cands[v].location_index}].push_back(static_cast<int>(v));
    }
  }
  for (const auto& [key, vars] : slots) {
    IlpRow row;
    row.kind = IlpRowKind::Slot;
    row.relation = RowRelation::LessEqual;
    row.rhs = 1.0;
    row.tag = scene.environments[static_cast<std::size_t>(key.first)].id + "#" +
              std::to_string(key.second);
    for (int v : vars) {
      row.vars.push_back(v);
      row.coeffs.push_back(1.0);
    }
    p.rows.push_back(std::move(row));
  }

  // overlap rows: same environment, different objects, conflicting footprints
  std::vector<int> tvars;
  for (std::size_t v = 0; v < cands.size(); ++v) {
    if (cands[v].base.kind == BaseRef::Kind::Environment &&
        cands[v].footprint.vertices.size() >= 3) {
      tvars.push_back(static_cast<int>(v));
    }
  }
  for (std::size_t a = 0; a < tvars.size(); ++a) {
    for (std::size_t b = a + 1; b < tvars.size(); ++b) {
      const Candidate& ca = cands[static_cast<std::size_t>(tvars[a])];
      const Candidate& cb = cands[static_cast<std::size_t>(tvars[b])];
      if (ca.object == cb.object) continue;
      if (ca.base.index != cb.base.index) continue;
      if (ca.location_index == cb.location_index) continue;  // slot row covers it
      if (!polygons_conflict(ca.footprint, cb.footprint, kOverlapClearance)) continue;
      IlpRow row;
      row.kind = IlpRowKind::Overlap;
      row.relation = RowRelation::LessEqual;
      row.rhs = 1.0;
      row.vars = {tvars[a], tvars[b]};
      row.coeffs = {1.0, 1.0};
      p.rows.push_back(std::move(row));
    }
  }
  return p;
}

// =============================================================================
// LP relaxation
// =============================================================================

namespace {

LpProblemData to_lp(const IlpProblem& p, const std::vector<double>& lower,
                    const std::vector<double>& upper) {
  LpProblemData lp;
  lp.n_vars = static_cast<int>(p.n_vars());
  lp.objective = p.coefficients;
  lp.lower = lower;
  lp.upper = upper;
  for (const IlpRow& row : p.rows) {
    LpRow r;
    r.vars = row.vars;
    r.coeffs = row.coeffs;
    r.rhs = row.rhs;
    r.relation = row.relation;
    lp.rows.push_back(std::move(r));
  }
  return lp;
}

}  // namespace

LpSolution solve_lp(const IlpProblem& problem) {
  const std::vector<double> lower(problem.n_vars(), 0.0);
  const std::vector<double> upper(problem.n_vars(), 1.0);
  LpSolution sol = solve_lp_simplex(to_lp(problem, lower, upper));
  if (sol.status == LpStatus::Optimal) {
    sol.objective += problem.objective_constant;
  }
  return sol;
}

// =============================================================================
// solve_placing
// =============================================================================

namespace {

PlacingStrategy decode(const IlpProblem& p, const std::vector<double>& x) {
  PlacingStrategy s =
      PlacingStrategy::empty(p.candidates.n_objects, p.candidates.n_environments);
  for (std::size_t v = 0; v < x.size(); ++v) {
    if (x[v] < 0.5) continue;
    const Candidate& c = p.candidates.candidates[v];
    const std::size_t i = static_cast<std::size_t>(c.object);
    if (c.base.kind == BaseRef::Kind::Environment) {
      s.placed_on[i][static_cast<std::size_t>(c.base.index)] = 1;
    } else {
      s.stack_on[i][static_cast<std::size_t>(c.base.index)] = 1;
    }
    s.configs[i] = c.placement.rotation;
    s.locations[i] = c.placement.location;
  }
  return s;
}

struct BnbState {
  const IlpProblem* problem = nullptr;
  std::vector<double> lower, upper;
  std::vector<double> best_x;
  double best_obj = -std::numeric_limits<double>::infinity();
  long lp_solves = 0;

  void search() {
    LpSolution sol = solve_lp_simplex(to_lp(*problem, lower, upper));
    ++lp_solves;
    if (sol.status != LpStatus::Optimal) return;
    const double obj = sol.objective + problem->objective_constant;
    if (obj <= best_obj + 1e-9) return;  // bound
    int frac = -1;
    double best_frac_dist = 1.0;
    for (std::size_t v = 0; v < sol.x.size(); ++v) {
      const double f = sol.x[v];
      if (f > kIntTol && f < 1.0 - kIntTol) {
        const double d = std::abs(f - 0.5);
        if (d < best_frac_dist) {
          best_frac_dist = d;
          frac = static_cast<int>(v);
        }
      }
    }
    if (frac < 0) {
      // integral solution
      std::vector<double> rounded(sol.x.size());
      for (std::size_t v = 0; v < sol.x.size(); ++v) rounded[v] = sol.x[v] > 0.5 ? 1.0 : 0.0;
      const double exact_obj = problem->assignment_objective(rounded);
      if (exact_obj > best_obj) {
        best_obj = exact_obj;
        best_x = std::move(rounded);
      }
      return;
    }
    const std::size_t fv = static_cast<std::size_t>(frac);
    const double save_lo = lower[fv], save_up = upper[fv];
    lower[fv] = upper[fv] = 1.0;
    search();
    lower[fv] = upper[fv] = 0.0;
    search();
    lower[fv] = save_lo;
    upper[fv] = save_up;
  }
};

}  // namespace

SolveResult solve_placing(const IlpProblem& problem, SolveMode mode) {
  SolveResult result;
  const std::size_t nv = problem.n_vars();

  const LpSolution root = solve_lp(problem);
  if (root.status == LpStatus::Infeasible) {
    std::string tag;
    for (const IlpRow& row : problem.rows) {
      if (row.kind == IlpRowKind::Coverage) {
        tag = row.tag;
        break;
      }
    }
    throw Error("Infeasible", "no feasible strategy (coverage row for " + tag + ")");
  }
  if (root.status != LpStatus::Optimal) {
    throw Error("SolverFailed", "LP relaxation did not reach an optimum");
  }
  result.lp_bound = root.objective;
  result.lp_solves = 1;

  const auto run_exact = [&](const std::vector<double>& lo,
                             const std::vector<double>& up) -> std::vector<double> {
    BnbState bnb;
    bnb.problem = &problem;
    bnb.lower = lo;
    bnb.upper = up;
    bnb.search();
    result.lp_solves += bnb.lp_solves;
    if (bnb.best_x.empty()) {
      throw Error("Infeasible", "branch and bound found no integral assignment");
    }
    result.objective = bnb.best_obj;
    return bnb.best_x;
  };

  std::vector<double> x;
  if (mode == SolveMode::Exact) {
    x = run_exact(std::vector<double>(nv, 0.0), std::vector<double>(nv, 1.0));
  } else {
    // relax-and-round with bounded backtracking
    std::vector<double> lower(nv, 0.0), upper(nv, 1.0);
    std::vector<std::pair<std::size_t, int>> fixings;  // (var, tries at this level)
    bool fallback = false;
    while (true) {
      LpSolution sol = solve_lp_simplex(to_lp(problem, lower, upper));
      ++result.lp_solves;
      if (sol.status != LpStatus::Optimal) {
        // backtrack: flip the most recent fixing from 1 to 0
        bool recovered = false;
        while (!fixings.empty()) {
          auto& [var, tries] = fixings.back();
          if (tries < 3 && upper[var] == 1.0 && lower[var] == 1.0) {
            lower[var] = upper[var] = 0.0;
            ++tries;
            recovered = true;
            break;
          }
          lower[var] = 0.0;
          upper[var] = 1.0;
          fixings.pop_back();
        }
        if (recovered) continue;
        fallback = true;
        break;
      }
      int frac = -1;
      double frac_value = -1.0;
      for (std::size_t v = 0; v < nv; ++v) {
        if (sol.x[v] > kIntTol && sol.x[v] < 1.0 - kIntTol && sol.x[v] > frac_value) {
          frac_value = sol.x[v];
          frac = static_cast<int>(v);
        }
      }
      if (frac < 0) {
        x.assign(nv, 0.0);
        for (std::size_t v = 0; v < nv; ++v) x[v] = sol.x[v] > 0.5 ? 1.0 : 0.0;
        result.objective = problem.assignment_objective(x);
        break;
      }
      const std::size_t fv = static_cast<std::size_t>(frac);
      lower[fv] = upper[fv] = 1.0;  // largest fractional value first
      fixings.emplace_back(fv, 1);
    }
    if (fallback) {
      result.used_exact_fallback = true;
      x = run_exact(std::vector<double>(nv, 0.0), std::vector<double>(nv, 1.0));
    }
  }

  result.strategy = decode(problem, x);
  return result;
}

// =============================================================================
// check_feasibility
// =============================================================================

FeasibilityReport check_feasibility(const Scene& scene, const PlacingStrategy& strategy) {
  FeasibilityReport report;
  const int n = static_cast<int>(scene.objects.size());
  const auto oid = [&](int i) { return scene.objects[static_cast<std::size_t>(i)].id; };

  // coverage: exactly one base indicator per object
  for (int i = 0; i < n; ++i) {
    const int bases = strategy.base_count(i);
    if (bases != 1) {
      report.violations.push_back(
          {"coverage", "object " + oid(i) + " has " + std::to_string(bases) + " bases"});
    }
  }
  // chain: each object supports at most one object
  for (int r = 0; r < n; ++r) {
    int on_top = 0;
    for (int i = 0; i < n; ++i) {
      on_top += strategy.stack_on[static_cast<std::size_t>(i)][static_cast<std::size_t>(r)];
    }
    if (on_top > 1) {
      report.violations.push_back(
          {"chain", "object " + oid(r) + " supports " + std::to_string(on_top) + " objects"});
    }
    if (strategy.stack_on[static_cast<std::size_t>(r)][static_cast<std::size_t>(r)]) {
      report.violations.push_back({"chain", "object " + oid(r) + " stacks on itself"});
    }
  }
  // acyclicity by explicit cycle search over the stacking digraph
  {
    std::vector<int> color(static_cast<std::size_t>(n), 0);  // 0 new, 1 done, 2 on path
    for (int start = 0; start < n; ++start) {
      if (color[static_cast<std::size_t>(start)] != 0) continue;
      std::vector<int> path;
      int cur = start;
      while (cur >= 0 && color[static_cast<std::size_t>(cur)] == 0) {
        color[static_cast<std::size_t>(cur)] = 2;
        path.push_back(cur);
        int next = -1;
        for (int r = 0; r < n; ++r) {
          if (r != cur &&
              strategy.stack_on[static_cast<std::size_t>(cur)][static_cast<std::size_t>(r)]) {
            next = r;
            break;
          }
        }
        if (next >= 0 && color[static_cast<std::size_t>(next)] == 2) {
          report.violations.push_back(
              {"acyclic", "stacking cycle through object " + oid(next)});
          break;
        }
        cur = next;
      }
      for (int v : path) color[static_cast<std::size_t>(v)] = 1;
    }
  }

  // geometric checks for objects placed directly on the same environment
  struct Placed {
    int object;
    int env;
    ConvexPolygon2D footprint;
    bool has_footprint;
  };
  std::vector<Placed> placed;
  for (int i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < strategy.placed_on[static_cast<std::size_t>(i)].size(); ++r) {
      if (!strategy.placed_on[static_cast<std::size_t>(i)][r]) continue;
      Placed pl;
      pl.object = i;
      pl.env = static_cast<int>(r);
      Placement placement;
      placement.rotation = strategy.configs[static_cast<std::size_t>(i)];
      placement.location = strategy.locations[static_cast<std::size_t>(i)];
      try {
        pl.footprint =
            footprint_hull(apply_placement(scene.objects[static_cast<std::size_t>(i)].cloud,
                                           placement));
        pl.has_footprint = true;
      } catch (const Error&) {
        pl.has_footprint = false;
      }
      placed.push_back(std::move(pl));
    }
  }
  for (std::size_t a = 0; a < placed.size(); ++a) {
    for (std::size_t b = a + 1; b < placed.size(); ++b) {
      if (placed[a].env != placed[b].env || placed[a].object == placed[b].object) continue;
      const Vec3 la = strategy.locations[static_cast<std::size_t>(placed[a].object)];
      const Vec3 lb = strategy.locations[static_cast<std::size_t>(placed[b].object)];
      if ((la - lb).norm() < 1e-9) {
        report.violations.push_back(
            {"slot", "objects " + oid(placed[a].object) + " and " + oid(placed[b].object) +
                         " share one location"});
        continue;
      }
      if (placed[a].has_footprint && placed[b].has_footprint &&
          polygons_conflict(placed[a].footprint, placed[b].footprint, kOverlapClearance)) {
        report.violations.push_back(
            {"overlap", "objects " + oid(placed[a].object) + " and " + oid(placed[b].object) +
                            " overlap on " +
                            scene.environments[static_cast<std::size_t>(placed[a].env)].id});
      }
    }
  }
  return report;
}

}  // namespace placekit
