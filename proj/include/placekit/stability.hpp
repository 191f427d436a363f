#pragma once

#include "placekit/geometry.hpp"
#include "placekit/types.hpp"

#include <vector>

namespace placekit {

// =============================================================================
// Configuration
// =============================================================================

enum class StabilityVariant { Single145, Multi178 };

/// Controls the stability feature layout. Two named configurations:
///   single145: caging 9+12+16 (n_r=4, n_theta=4), histograms 4x8 with ratios.
///   multi178:  caging histogram only (n_r=1, n_theta=4), 9x9 grid, no ratios.
struct StabilityConfig {
  StabilityVariant variant = StabilityVariant::Single145;
  int n_r = 4;       // caging histogram radial divisions
  int n_theta = 4;   // caging histogram azimuth divisions
  int n_z = 4;       // placement histogram vertical bins
  int n_rho = 8;     // placement histogram radial bins
  double contact_fraction = 0.05;
  double ratio_cap = 10.0;

  static StabilityConfig single145();
  static StabilityConfig multi178();

  bool with_ratios() const { return variant == StabilityVariant::Single145; }
  bool with_caging_zones() const { return variant == StabilityVariant::Single145; }
  int contact_length() const { return 12; }
  int caging_length() const;
  int histogram_length() const;
  int total_length() const { return contact_length() + caging_length() + histogram_length(); }
  const char* name() const;
};

struct StabilityFeatures {
  std::vector<double> values;
  StabilityConfig config;
};

// =============================================================================
// Contact extraction
// =============================================================================

/// Supporting contact set: base points ranked by smallest vertical gap to the
/// object (top `fraction`, floor 3, cap 200). Gaps are measured inside a 1 cm
/// XY column; when fewer than 3 base points see the object overhead the gap
/// falls back to the unconstrained vertical distance.
struct ContactSet {
  std::vector<int> indices;   // into the base cloud, sorted by (gap, index)
  std::vector<double> gaps;   // parallel to indices
  bool column_constrained = true;
};

ContactSet supporting_contact_set(const PointCloud& placed_object, const PointCloud& base,
                                  double contact_fraction);

// =============================================================================
// Feature blocks
// =============================================================================

/// 12 supporting-contact features: [falling distance, XY variance, Z variance,
/// l1, l2, l3, l2/l1, l3/l2, dist(object centroid, contact-hull boundary),
/// contact-hull area / object-hull area, fraction of object points below the
/// contact plane, fraction above]. Ratios are 0 when the denominator < 1e-12;
/// a degenerate contact hull yields dist = -(object XY radius) and ratio 0.
std::vector<double> supporting_contacts(const PointCloud& placed_object, const PointCloud& base,
                                        double contact_fraction);

/// Caging block: single145 emits 9 per-region max heights, 12 directional gap
/// distances (4 directions x 3 vertical levels) and the n_r*n_theta height
/// histogram; multi178 emits the 4 height-histogram values only. Empty zones
/// produce the 1.0 m max-gap sentinel (gaps) or 0 (heights).
std::vector<double> caging_features(const PointCloud& placed_object, const PointCloud& base,
                                    const StabilityConfig& config);

/// Cylindrical placement histograms centered at the placed object's centroid:
/// object counts, base counts, and (single145 only) per-cell capped ratios.
std::vector<double> placement_histograms(const PointCloud& placed_object, const PointCloud& base,
                                         const StabilityConfig& config);

/// Full stability vector: [contacts | caging | histograms], length 145 or 178.
StabilityFeatures stability_vector(const PointCloud& object, const PointCloud& base,
                                   const Placement& placement, const StabilityConfig& config);

constexpr double kCagingGapSentinel = 1.0;  // meters, empty-zone marker

}  // namespace placekit
