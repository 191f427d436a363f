#include "placekit/model.hpp"

#include "placekit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace placekit {

// =============================================================================
// Scene / strategy
// =============================================================================

void Scene::validate() const {
  if (objects.empty() || environments.empty()) {
    throw Error("BadScene", "need at least one object and one environment");
  }
  std::set<std::string> ids;
  for (const auto& e : objects) {
    if (!ids.insert(e.id).second) throw Error("BadScene", "duplicate id " + e.id);
    e.cloud.validate();
  }
  for (const auto& e : environments) {
    if (!ids.insert(e.id).second) throw Error("BadScene", "duplicate id " + e.id);
    e.cloud.validate();
  }
}

PlacingStrategy PlacingStrategy::empty(int n_objects, int n_environments) {
  PlacingStrategy s;
  s.stack_on.assign(static_cast<std::size_t>(n_objects),
                    std::vector<std::uint8_t>(static_cast<std::size_t>(n_objects), 0));
  s.placed_on.assign(static_cast<std::size_t>(n_objects),
                     std::vector<std::uint8_t>(static_cast<std::size_t>(n_environments), 0));
  s.configs.assign(static_cast<std::size_t>(n_objects), Rotation::identity());
  s.locations.assign(static_cast<std::size_t>(n_objects), Vec3::Zero());
  return s;
}

int PlacingStrategy::base_count(int object) const {
  const std::size_t i = static_cast<std::size_t>(object);
  int count = 0;
  for (std::uint8_t v : stack_on[i]) count += v;
  for (std::uint8_t v : placed_on[i]) count += v;
  return count;
}

// =============================================================================
// Potentials
// =============================================================================

double stability_potential(const LinearModel& model_s, const PointCloud& object,
                           const PointCloud& base, const Placement& placement) {
  const StabilityFeatures f = stability_vector(object, base, placement,
                                               StabilityConfig::multi178());
  return score(model_s, f.values);
}

double semantic_potential(const LinearModel& model_p, const BowVocabulary& vocab,
                          const PointCloud& object, const PointCloud& base, double base_height) {
  const SemanticFeatures f = semantic_vector(object, base, vocab, base_height);
  return score(model_p, f.values);
}

namespace {

double log_sigmoid(double m) {
  if (m >= 0.0) return -std::log1p(std::exp(-m));
  return m - std::log1p(std::exp(m));
}

}  // namespace

void gate_log_potentials(double stability_margin, double semantic_margin, double& log_psi_set,
                         double& log_psi_unset) {
  const double ls = log_sigmoid(std::clamp(stability_margin, -500.0, 500.0));
  const double lp = log_sigmoid(std::clamp(semantic_margin, -500.0, 500.0));
  log_psi_set = ls + lp;
  // Psi(0) = 1 - Psi(1); -expm1 keeps precision when Psi(1) is close to 1.
  const double one_minus = -std::expm1(log_psi_set);
  log_psi_unset = one_minus > 0.0 ? std::log(one_minus) : -745.0;
}

ScoredPlacement score_placement(const LinearModel& model_s, const LinearModel& model_p,
                                const BowVocabulary& vocab, const PointCloud& object,
                                const PointCloud& base, const Placement& placement,
                                double base_height) {
  ScoredPlacement out;
  out.placement = placement;
  out.stability_score = stability_potential(model_s, object, base, placement);
  out.semantic_score = semantic_potential(model_p, vocab, object, base, base_height);
  gate_log_potentials(out.stability_score, out.semantic_score, out.log_psi_set,
                      out.log_psi_unset);
  return out;
}

// =============================================================================
// Candidate sets
// =============================================================================

double base_support_height(const PointCloud& area, double ground_z) {
  std::vector<double> zs;
  zs.reserve(area.size());
  for (const Vec3& p : area.points) zs.push_back(p.z());
  std::sort(zs.begin(), zs.end(), std::greater<double>());
  const std::size_t top = std::max<std::size_t>(1, zs.size() / 10);
  double sum = 0.0;
  for (std::size_t i = 0; i < top; ++i) sum += zs[i];
  return sum / static_cast<double>(top) - ground_z;
}

namespace {

struct CellSample {
  double x, y, support;
};

// One jittered XY location per grid cell with its support height, shared by
// all objects placed on the same base so slot constraints bind across them.
std::vector<CellSample> sample_cells(const PointCloud& base, double grid_step,
                                     std::uint64_t seed, int max_locations) {
  Vec3 lo, hi;
  base.bounds(lo, hi);
  const auto cells = [&](double width) {
    return std::max<int>(1, static_cast<int>(std::ceil(width / grid_step - 1e-9)));
  };
  const int nx = cells(hi.x() - lo.x());
  const int ny = cells(hi.y() - lo.y());
  std::mt19937_64 rng(seed);
  std::vector<CellSample> out;
  for (int ix = 0; ix < nx; ++ix) {
    for (int iy = 0; iy < ny; ++iy) {
      const double cx0 = lo.x() + ix * grid_step;
      const double cy0 = lo.y() + iy * grid_step;
      const double cx1 = std::min(hi.x(), cx0 + grid_step);
      const double cy1 = std::min(hi.y(), cy0 + grid_step);
      CellSample cell;
      cell.x = uniform_in(rng, cx0, cx1);
      cell.y = uniform_in(rng, cy0, cy1);
      double support = -std::numeric_limits<double>::infinity();
      for (const Vec3& p : base.points) {
        if (p.x() >= cx0 && p.x() <= cx1 && p.y() >= cy0 && p.y() <= cy1) {
          support = std::max(support, p.z());
        }
      }
      cell.support = std::isfinite(support) ? support : lo.z();
      out.push_back(cell);
    }
  }
  if (max_locations > 0 && static_cast<int>(out.size()) > max_locations) {
    // Deterministic even subsample across the grid.
    std::vector<CellSample> kept;
    kept.reserve(static_cast<std::size_t>(max_locations));
    for (int i = 0; i < max_locations; ++i) {
      kept.push_back(out[static_cast<std::size_t>(i) * out.size() /
                         static_cast<std::size_t>(max_locations)]);
    }
    out = std::move(kept);
  }
  return out;
}

}  // namespace

CandidateSet build_candidates(const Scene& scene, const LinearModel& model_s,
                              const LinearModel& model_p, const BowVocabulary& vocab,
                              const CandidateParams& params) {
  scene.validate();
  CandidateSet set;
  set.n_objects = static_cast<int>(scene.objects.size());
  set.n_environments = static_cast<int>(scene.environments.size());
  const auto& all_configs = cube_orientations();
  const int n_cfg = std::clamp(params.max_configs, 1, static_cast<int>(all_configs.size()));
  set.config_table.assign(all_configs.begin(), all_configs.begin() + n_cfg);

  // Per (object, config): rotated cloud, min z, footprint area at the origin.
  const int n_obj = set.n_objects;
  std::vector<std::vector<PointCloud>> rotated(static_cast<std::size_t>(n_obj));
  std::vector<std::vector<double>> min_z(static_cast<std::size_t>(n_obj));
  std::vector<std::vector<double>> area(static_cast<std::size_t>(n_obj));
  for (int i = 0; i < n_obj; ++i) {
    for (int j = 0; j < n_cfg; ++j) {
      PointCloud rc = transform_cloud(scene.objects[static_cast<std::size_t>(i)].cloud,
                                      set.config_table[static_cast<std::size_t>(j)], Vec3::Zero());
      double mz = std::numeric_limits<double>::infinity();
      for (const Vec3& p : rc.points) mz = std::min(mz, p.z());
      double a = 0.0;
      try {
        a = footprint_hull(rc).area();
      } catch (const Error&) {
        a = 0.0;
      }
      rotated[static_cast<std::size_t>(i)].push_back(std::move(rc));
      min_z[static_cast<std::size_t>(i)].push_back(mz);
      area[static_cast<std::size_t>(i)].push_back(a);
    }
  }

  // t-variables: objects on environments.
  for (int r = 0; r < set.n_environments; ++r) {
    const PointCloud& env = scene.environments[static_cast<std::size_t>(r)].cloud;
    const auto cells = sample_cells(env, params.grid_step,
                                    params.seed * 1000003ull + static_cast<std::uint64_t>(r),
                                    params.max_locations);
    const double height = base_support_height(env, scene.ground_z);
    for (int i = 0; i < n_obj; ++i) {
      const PointCloud& obj = scene.objects[static_cast<std::size_t>(i)].cloud;
      const double semantic =
          semantic_potential(model_p, vocab, obj, env, height);
      for (int j = 0; j < n_cfg; ++j) {
        for (std::size_t k = 0; k < cells.size(); ++k) {
          Candidate cand;
          cand.object = i;
          cand.config_index = j;
          cand.base = BaseRef::environment(r);
          cand.location_index = static_cast<int>(k);
          cand.placement.rotation = set.config_table[static_cast<std::size_t>(j)];
          cand.placement.location =
              Vec3(cells[k].x, cells[k].y,
                   cells[k].support - min_z[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
          cand.placement.base = cand.base;
          if (!collision_free(obj, env, cand.placement, params.clearance)) continue;
          const double stability = stability_potential(model_s, obj, env, cand.placement);
          gate_log_potentials(stability, semantic, cand.log_psi_set, cand.log_psi_unset);
          const PointCloud placed = apply_placement(obj, cand.placement);
          try {
            cand.footprint = footprint_hull(placed);
          } catch (const Error&) {
            cand.footprint = {};
          }
          set.candidates.push_back(std::move(cand));
        }
      }
    }
  }

  // s-variables: objects stacked on objects, pruned to the strict
  // footprint-area order so the stacking digraph is acyclic.
  for (int r = 0; r < n_obj; ++r) {
    for (int t = 0; t < n_cfg; ++t) {
      const PointCloud& base_cloud = rotated[static_cast<std::size_t>(r)][static_cast<std::size_t>(t)];
      const double base_area = area[static_cast<std::size_t>(r)][static_cast<std::size_t>(t)];
      std::vector<CellSample> cells;
      bool cells_ready = false;
      for (int i = 0; i < n_obj; ++i) {
        if (i == r) continue;
        const PointCloud& obj = scene.objects[static_cast<std::size_t>(i)].cloud;
        double semantic = 0.0;
        bool semantic_ready = false;
        for (int j = 0; j < n_cfg; ++j) {
          const double obj_area = area[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
          // allow iff base area >= 0.99 * object area and the strict
          // (area, object, config) order points from object to base
          if (base_area < 0.99 * obj_area) continue;
          const auto key_base = std::make_tuple(base_area, r, t);
          const auto key_obj = std::make_tuple(obj_area, i, j);
          if (!(key_base > key_obj)) continue;
          if (!cells_ready) {
            cells = sample_cells(base_cloud, params.grid_step,
                                 params.seed * 1000033ull + static_cast<std::uint64_t>(r) * 29ull +
                                     static_cast<std::uint64_t>(t),
                                 params.max_locations);
            cells_ready = true;
          }
          if (!semantic_ready) {
            // Stacking semantic preference: the base cloud is the object
            // rotated by its configuration; no ground-height term.
            semantic = semantic_potential(model_p, vocab, obj, base_cloud, 0.0);
            semantic_ready = true;
          }
          for (std::size_t k = 0; k < cells.size(); ++k) {
            Candidate cand;
            cand.object = i;
            cand.config_index = j;
            cand.base = BaseRef::object(r);
            cand.base_config_index = t;
            cand.location_index = static_cast<int>(k);
            cand.placement.rotation = set.config_table[static_cast<std::size_t>(j)];
            cand.placement.location =
                Vec3(cells[k].x, cells[k].y,
                     cells[k].support - min_z[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
            cand.placement.base = cand.base;
            if (!collision_free(obj, base_cloud, cand.placement, params.clearance)) continue;
            const double stability = stability_potential(model_s, obj, base_cloud, cand.placement);
            gate_log_potentials(stability, semantic, cand.log_psi_set, cand.log_psi_unset);
            set.candidates.push_back(std::move(cand));
          }
        }
      }
    }
  }
  return set;
}

// =============================================================================
// Strategy scoring
// =============================================================================

double strategy_score(const Scene& scene, const CandidateSet& candidates,
                      const PlacingStrategy& strategy) {
  const int n = candidates.n_objects;
  std::vector<std::string> violations;

  // Coverage and chain constraints.
  for (int i = 0; i < n; ++i) {
    if (strategy.base_count(i) != 1) {
      violations.push_back("coverage: object " + scene.objects[static_cast<std::size_t>(i)].id +
                           " has " + std::to_string(strategy.base_count(i)) + " bases");
    }
  }
  for (int r = 0; r < n; ++r) {
    int on_top = 0;
    for (int i = 0; i < n; ++i) on_top += strategy.stack_on[static_cast<std::size_t>(i)][static_cast<std::size_t>(r)];
    if (on_top > 1) {
      violations.push_back("chain: object " + scene.objects[static_cast<std::size_t>(r)].id +
                           " supports " + std::to_string(on_top) + " objects");
    }
  }
  // Cycle check over the stacking digraph.
  {
    std::vector<int> state(static_cast<std::size_t>(n), 0);
    for (int start = 0; start < n; ++start) {
      int cur = start;
      std::vector<int> path;
      while (cur >= 0 && state[static_cast<std::size_t>(cur)] == 0) {
        state[static_cast<std::size_t>(cur)] = 2;
        path.push_back(cur);
        int next = -1;
        for (int r = 0; r < n; ++r) {
          if (strategy.stack_on[static_cast<std::size_t>(cur)][static_cast<std::size_t>(r)]) {
            next = r;
            break;
          }
        }
        if (next >= 0 && state[static_cast<std::size_t>(next)] == 2) {
          violations.push_back("acyclic: stacking cycle through object " +
                               scene.objects[static_cast<std::size_t>(next)].id);
          break;
        }
        cur = next;
      }
      for (int v : path) state[static_cast<std::size_t>(v)] = 1;
    }
  }
  if (!violations.empty()) {
    std::string msg;
    for (const auto& v : violations) msg += (msg.empty() ? "" : "; ") + v;
    throw Error("InfeasibleStrategy", msg);
  }

  // Match each object's assignment to a sampled candidate.
  std::vector<int> chosen(static_cast<std::size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    BaseRef want;
    bool found_base = false;
    for (std::size_t r = 0; r < strategy.placed_on[static_cast<std::size_t>(i)].size(); ++r) {
      if (strategy.placed_on[static_cast<std::size_t>(i)][r]) {
        want = BaseRef::environment(static_cast<int>(r));
        found_base = true;
      }
    }
    for (std::size_t r = 0; r < strategy.stack_on[static_cast<std::size_t>(i)].size(); ++r) {
      if (strategy.stack_on[static_cast<std::size_t>(i)][r]) {
        want = BaseRef::object(static_cast<int>(r));
        found_base = true;
      }
    }
    if (!found_base) continue;
    for (std::size_t c = 0; c < candidates.candidates.size(); ++c) {
      const Candidate& cand = candidates.candidates[c];
      if (cand.object != i || !(cand.base == want)) continue;
      if (cand.placement.rotation.angle_to(strategy.configs[static_cast<std::size_t>(i)]) > 1e-9) {
        continue;
      }
      if ((cand.placement.location - strategy.locations[static_cast<std::size_t>(i)]).norm() >
          1e-9) {
        continue;
      }
      chosen[static_cast<std::size_t>(i)] = static_cast<int>(c);
      break;
    }
    if (chosen[static_cast<std::size_t>(i)] < 0) {
      throw Error("InfeasibleStrategy",
                  "object " + scene.objects[static_cast<std::size_t>(i)].id +
                      " assignment does not match any sampled candidate");
    }
  }

  double total = 0.0;
  for (const Candidate& cand : candidates.candidates) total += cand.log_psi_unset;
  for (int i = 0; i < n; ++i) {
    if (chosen[static_cast<std::size_t>(i)] >= 0) {
      const Candidate& cand =
          candidates.candidates[static_cast<std::size_t>(chosen[static_cast<std::size_t>(i)])];
      total += cand.log_psi_set - cand.log_psi_unset;
    }
  }
  return total;
}

}  // namespace placekit
