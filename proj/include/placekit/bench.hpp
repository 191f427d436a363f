#pragma once

#include "placekit/learn.hpp"
#include "placekit/semantic.hpp"
#include "placekit/stability.hpp"
#include "placekit/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace placekit {

// =============================================================================
// Synthetic generators
// =============================================================================

enum class AreaKind { DishRack, FlatTable, PenHolder, StemwareHolder, Rod, Hook, Shelf };
enum class ObjectKind { Plate, Bowl, Mug, Martini, Box, Book, Pen, HangerClothes };

AreaKind area_kind_from_string(const std::string& s);
ObjectKind object_kind_from_string(const std::string& s);
std::string to_string(AreaKind k);
std::string to_string(ObjectKind k);

using GenParams = std::map<std::string, double>;

/// Deterministic parametric placing-area clouds (point spacing <= 5 mm,
/// per-point jitter seeded). Unknown or out-of-range parameters raise
/// Error("BadParams").
PointCloud generate_scene(AreaKind kind, const GenParams& params, std::uint64_t seed);

/// Deterministic parametric object clouds with colors.
PointCloud generate_object(ObjectKind kind, const GenParams& params, std::uint64_t seed);

// =============================================================================
// Stability oracle
// =============================================================================

struct OracleLabel {
  bool stable = false;
  bool preferred = false;
};

struct OracleParams {
  double com_margin = 0.01;       // COM must sit this far inside the contact hull
  double contact_gap = 0.002;     // touching threshold after settling
  double caging_dilation = 0.03;  // footprint dilation for the caging test
  double orientation_tol_deg = 15.0;
};

/// Quasi-static label: stable iff, after settling by the falling distance,
/// either the COM projects >= com_margin inside the >= 3-point contact hull, or
/// base material above the COM surrounds the object in all four horizontal
/// directions within the dilated footprint. Preferred additionally requires
/// the orientation to match the generator's canonical set within 15 degrees.
/// Throws Error("CollidingPlacement") when the placement collides.
OracleLabel stability_oracle(const PointCloud& object, const PointCloud& base,
                             const Placement& placement, ObjectKind object_kind,
                             AreaKind area_kind, const OracleParams& params = {});

/// Generator metadata: is the orientation canonical-preferred for this pair?
bool preferred_orientation_ok(ObjectKind object_kind, AreaKind area_kind, const Rotation& rot,
                              double tol_deg = 15.0);

/// Generator-assigned semantic compatibility (which areas suit which objects).
bool semantically_correct(ObjectKind object_kind, AreaKind area_kind);

// =============================================================================
// Metrics
// =============================================================================

/// 1-based rank of the first positive label; empty when there are none.
std::optional<double> metric_r0(const std::vector<int>& ranked_labels);

/// Fraction of positives among the top 5 entries (denominator fixed at 5).
double metric_p_at_5(const std::vector<int>& ranked_labels);

/// Mann-Whitney AUC with ties counted 1/2. Throws Error("SingleClass") when a
/// class is missing.
double metric_auc(const std::vector<double>& scores, const std::vector<int>& labels);

// =============================================================================
// Baselines
// =============================================================================

enum class BaselineKind { Chance, FlatUpright, LowestPoint, Vertical, Horizontal, Prior };

BaselineKind baseline_kind_from_string(const std::string& s);
std::string to_string(BaselineKind k);

/// Deterministic heuristic ranking of candidate placements (indices into
/// `candidates`, best first).
std::vector<int> baseline_rank(BaselineKind kind, const PointCloud& object,
                               const PointCloud& base, AreaKind area_kind,
                               const std::vector<Placement>& candidates, std::uint64_t seed);

// =============================================================================
// Dataset assembly
// =============================================================================

struct LabeledPlacement {
  std::string task;
  std::string object_id;
  std::string area_id;
  Placement placement;
  bool stable = false;
  bool preferred = false;
  std::string stability_features_path;
  std::string semantic_features_path;
};

struct TaskSpec {
  ObjectKind object_kind;
  AreaKind area_kind;
  GenParams object_params;
  GenParams area_params;
  std::string object_id;  // defaults to the kind name
  std::string area_id;
};

struct DatasetOptions {
  int samples_per_pair = 200;
  double grid_step = 0.05;
  double clearance = 0.005;
  StabilityConfig stability_config = StabilityConfig::single145();
  bool cache_semantic = false;  // requires a vocabulary
  const BowVocabulary* vocab = nullptr;
};

struct Dataset {
  std::vector<LabeledPlacement> rows;
  std::vector<std::vector<double>> stability_features;  // parallel to rows
  std::vector<std::vector<double>> semantic_features;   // empty unless cached
  std::map<std::string, std::pair<int, int>> task_counts;  // task -> (pos, neg)
  std::string stability_fingerprint;
};

/// Samples placements per task, filters collisions, labels with the oracle and
/// computes features. Deterministic for a fixed seed.
Dataset build_dataset(const std::vector<TaskSpec>& tasks, const DatasetOptions& options,
                      std::uint64_t seed);

/// Writes rows as JSON lines plus per-row feature cache files under `dir`.
void write_dataset(const std::string& dir, const Dataset& dataset);
Dataset read_dataset(const std::string& dir);

// =============================================================================
// Evaluation reports
// =============================================================================

struct TaskMetrics {
  std::string task;
  std::optional<double> r0;
  double p_at_5 = 0.0;
  double auc = 0.0;
};

struct EvalReport {
  std::vector<std::pair<std::string, std::vector<TaskMetrics>>> methods;
  std::string to_table() const;  // plain-text table, methods x (R0, P@5, AUC)
  std::string to_json() const;
};

}  // namespace placekit
