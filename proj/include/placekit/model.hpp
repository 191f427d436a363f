#pragma once

#include "placekit/learn.hpp"
#include "placekit/semantic.hpp"
#include "placekit/stability.hpp"
#include "placekit/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace placekit {

// =============================================================================
// Scene and strategy
// =============================================================================

struct SceneEntry {
  std::string id;
  PointCloud cloud;
};

struct Scene {
  std::vector<SceneEntry> objects;
  std::vector<SceneEntry> environments;
  double ground_z = 0.0;

  void validate() const;  // non-empty, unique ids
};

/// Placing strategy (S, T, C, L): stacking indicators, area indicators, and
/// per-object configuration and location relative to the chosen base.
struct PlacingStrategy {
  std::vector<std::vector<std::uint8_t>> stack_on;   // S: n x n, s[i][r]
  std::vector<std::vector<std::uint8_t>> placed_on;  // T: n x m, t[i][r]
  std::vector<Rotation> configs;                     // C, per object
  std::vector<Vec3> locations;                       // L, per object

  static PlacingStrategy empty(int n_objects, int n_environments);
  int base_count(int object) const;  // set indicators in row `object`
};

// =============================================================================
// Potentials
// =============================================================================

/// log psi_s margin: decision value of the stability model on the multi178
/// feature vector of (object placed by `placement`, base).
double stability_potential(const LinearModel& model_s, const PointCloud& object,
                           const PointCloud& base, const Placement& placement);

/// log psi_p margin: decision value of the semantic model on phi_p(O, B).
/// Independent of the placement location by construction.
double semantic_potential(const LinearModel& model_p, const BowVocabulary& vocab,
                          const PointCloud& object, const PointCloud& base, double base_height);

struct ScoredPlacement {
  Placement placement;
  double stability_score = 0.0;  // margin of the stability model
  double semantic_score = 0.0;   // margin of the semantic model
  double log_psi_set = 0.0;      // log Psi(indicator = 1)
  double log_psi_unset = 0.0;    // log Psi(indicator = 0)
};

/// Gate of the two latent indicators: an assignment is on only when the
/// placement is stable AND semantically preferred. With the logistic link,
/// Psi(1) = sigmoid(m_s) * sigmoid(m_p) and Psi(0) = 1 - Psi(1).
void gate_log_potentials(double stability_margin, double semantic_margin, double& log_psi_set,
                         double& log_psi_unset);

ScoredPlacement score_placement(const LinearModel& model_s, const LinearModel& model_p,
                                const BowVocabulary& vocab, const PointCloud& object,
                                const PointCloud& base, const Placement& placement,
                                double base_height);

// =============================================================================
// Candidate sets
// =============================================================================

/// One scored candidate variable of the strategy model: object i in config j
/// either on environment r at sampled location k (t-variable) or on object r
/// in the base's config t (s-variable, location relative to the base frame).
struct Candidate {
  int object = 0;
  int config_index = 0;
  BaseRef base;
  int base_config_index = -1;  // s-variables only
  int location_index = 0;
  Placement placement;
  double log_psi_set = 0.0;
  double log_psi_unset = 0.0;
  ConvexPolygon2D footprint;  // world-frame XY hull for t-variables
};

struct CandidateSet {
  std::vector<Candidate> candidates;
  int n_objects = 0;
  int n_environments = 0;
  std::vector<Rotation> config_table;  // shared orientation table
};

struct CandidateParams {
  double grid_step = 0.1;
  int max_configs = 24;      // leading subset of the orientation table
  double clearance = 0.005;  // collision filter
  std::uint64_t seed = 0;
  int max_locations = 0;     // 0 = no cap, otherwise cap per (object, base)
};

/// Samples, collision-filters and scores candidates for every object against
/// every environment (t-variables) and every potential base object
/// (s-variables, pre-pruned by the footprint-area stacking order).
CandidateSet build_candidates(const Scene& scene, const LinearModel& model_s,
                              const LinearModel& model_p, const BowVocabulary& vocab,
                              const CandidateParams& params);

/// Support-surface height of a placing area above the scene ground (mean z of
/// the top decile of the cloud).
double base_support_height(const PointCloud& area, double ground_z);

/// f(S, T): sum of log Psi over all sampled indicators, set and unset.
/// Each placed object must match one candidate (base, config, location);
/// infeasible strategies raise Error("InfeasibleStrategy").
double strategy_score(const Scene& scene, const CandidateSet& candidates,
                      const PlacingStrategy& strategy);

}  // namespace placekit
