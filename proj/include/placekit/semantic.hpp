#pragma once

#include "placekit/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace placekit {

// =============================================================================
// Descriptors
// =============================================================================

/// 3D Zernike moment magnitudes of the voxelized, unit-sphere-normalized
/// cloud: 32^3 occupancy grid inside the minimal bounding sphere, moments up
/// to order 11, first 37 entries in (n, l) lexicographic order.
/// Throws Error("TooSparse") for fewer than 10 points.
std::vector<double> zernike_descriptor(const PointCloud& cloud);

/// Per-point FPFH signatures (3 x 11 bins; rows sum to 300 after per-histogram
/// percentage normalization, or are all-zero for isolated points).
std::vector<std::vector<double>> fpfh_signatures(const PointCloud& cloud, double radius);

/// Median nearest-neighbor spacing; the default FPFH radius is 2.5x this.
double median_nn_spacing(const PointCloud& cloud);
double default_fpfh_radius(const PointCloud& cloud);

constexpr int kFpfhDim = 33;
constexpr int kBowCenters = 100;

// =============================================================================
// Bag of words
// =============================================================================

struct BowVocabulary {
  std::vector<std::vector<double>> centers;  // kBowCenters x kFpfhDim
  std::uint64_t seed = 0;
  std::string fingerprint;  // hash of the centers

  bool trained() const { return !centers.empty(); }
};

/// k-means (k-means++ init, at most 100 iterations, deterministic empty-cluster
/// reseeding) over FPFH rows pooled from the corpus clouds.
BowVocabulary train_bow_vocabulary(const std::vector<PointCloud>& corpus, std::uint64_t seed);

/// Normalized 100-bin histogram of nearest-center assignments (ties to the
/// lowest center index). Throws Error("VocabularyMissing") if untrained.
std::vector<double> bow_histogram(const PointCloud& cloud, const BowVocabulary& vocab);

/// `bow-vocab v1` text format round trip.
void write_vocabulary(std::ostream& out, const BowVocabulary& vocab);
BowVocabulary read_vocabulary(std::istream& in);
void write_vocabulary_file(const std::string& path, const BowVocabulary& vocab);
BowVocabulary read_vocabulary_file(const std::string& path);

// =============================================================================
// Color / curvature / shape
// =============================================================================

struct ColorHistogram {
  std::vector<double> values;  // 36 hue-saturation bins + 10 intensity bins
  bool has_color = false;
};

/// 6x6 hue/saturation plus 10-bin intensity histogram, each block normalized
/// to sum 1. Colorless clouds give all zeros and has_color = false.
ColorHistogram color_histogram(const PointCloud& cloud);

/// 12-bin histogram of per-point surface variation sigma = l3/(l1+l2+l3) over
/// [0, 1/3], normalized to sum 1. Throws Error("TooSparse") when the cloud has
/// fewer than k_neighbors + 1 points.
std::vector<double> curvature_histogram(const PointCloud& cloud, int k_neighbors = 10);

/// Covariance eigenvalues (descending) plus the two adjacent ratios.
std::vector<double> overall_shape(const PointCloud& cloud);

// =============================================================================
// Combined semantic vector
// =============================================================================

struct SemanticFeatures {
  std::vector<double> values;  // length 801
  std::map<std::string, std::pair<int, int>> group_offsets;  // name -> (start, length)
  bool object_has_color = false;
  bool base_has_color = false;
};

constexpr int kSemanticDim = 801;

/// Per group g in (zernike, bow, color, curvature, shape):
/// [g(O) | g(B) | g(O)*g(B) | min(g(O), g(B))], then base_height appended.
SemanticFeatures semantic_vector(const PointCloud& object, const PointCloud& base,
                                 const BowVocabulary& vocab, double base_height);

}  // namespace placekit
