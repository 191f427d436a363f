#pragma once

#include "placekit/types.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace placekit {

/// Portable uniform double in [0,1) from a mt19937_64 draw. The standard
/// distributions are implementation-defined; this mapping is not.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// =============================================================================
// Rigid transforms
// =============================================================================

/// Applies p -> rot*p + trans to every point; colors and order preserved.
PointCloud transform_cloud(const PointCloud& cloud, const Rotation& rot, const Vec3& trans);

/// Cloud of the object as placed (rotation then translation from `placement`).
inline PointCloud apply_placement(const PointCloud& object, const Placement& placement) {
  return transform_cloud(object, placement.rotation, placement.location);
}

// =============================================================================
// 2D convex hulls
// =============================================================================

/// Monotone chain on coordinates snapped to a 1e-9 m integer lattice so the
/// orientation predicate is exact. Output is strictly convex and CCW.
/// Throws Error("DegenerateHull") for <3 points or all-collinear input.
ConvexPolygon2D convex_hull_2d(const std::vector<Vec2>& points);

/// Signed distance to the polygon boundary: positive inside, negative outside,
/// zero on the boundary. Magnitude is the Euclidean distance to the nearest
/// edge or vertex.
double distance_to_boundary(const ConvexPolygon2D& poly, const Vec2& p);

/// XY-projected convex hull of a cloud.
ConvexPolygon2D footprint_hull(const PointCloud& cloud);

/// True if the two convex polygons intersect or come closer than `clearance`.
bool polygons_conflict(const ConvexPolygon2D& a, const ConvexPolygon2D& b, double clearance);

// =============================================================================
// Covariance eigen-analysis
// =============================================================================

/// Eigenvalues of the 3x3 covariance matrix (1/k normalization), descending,
/// clamped to >= 0. Throws Error("DegenerateCovariance") for <2 points.
std::array<double, 3> covariance_eigenvalues(const std::vector<Vec3>& points);

// =============================================================================
// Candidate sampling and collision
// =============================================================================

/// Grid x configuration candidate placements over the base's XY bounding box.
/// Within each cell the XY position is jittered uniformly (seeded); Z is set
/// so the rotated object's lowest point rests at the base's support height in
/// that cell. Candidate count = n_cells * configs.size().
std::vector<Placement> sample_placements(const PointCloud& object, const PointCloud& base,
                                         double grid_step, const std::vector<Rotation>& configs,
                                         std::uint64_t seed, BaseRef base_ref = BaseRef{});

/// True iff no base point interpenetrates the placed object: no object-base
/// pair closer than `clearance` with the base point above the object's local
/// lower surface. Accelerated by a KD-tree; semantics match the brute-force
/// pairwise rule exactly.
bool collision_free(const PointCloud& object, const PointCloud& base, const Placement& placement,
                    double clearance = 0.005);

/// Brute-force variant used as the oracle (same rule, no index).
bool collision_free_bruteforce(const PointCloud& object, const PointCloud& base,
                               const Placement& placement, double clearance = 0.005);

}  // namespace placekit
