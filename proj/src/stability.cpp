#include "placekit/stability.hpp"

#include "placekit/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace placekit {

namespace {
constexpr double kContactColumnRadius = 0.01;  // meters
constexpr int kContactFloor = 3;
constexpr int kContactCap = 200;
constexpr double kEps = 1e-12;
}  // namespace

StabilityConfig StabilityConfig::single145() {
  StabilityConfig c;
  c.variant = StabilityVariant::Single145;
  c.n_r = 4;
  c.n_theta = 4;
  c.n_z = 4;
  c.n_rho = 8;
  return c;
}

StabilityConfig StabilityConfig::multi178() {
  StabilityConfig c;
  c.variant = StabilityVariant::Multi178;
  c.n_r = 1;
  c.n_theta = 4;
  c.n_z = 9;
  c.n_rho = 9;
  return c;
}

int StabilityConfig::caging_length() const {
  const int hist = n_r * n_theta;
  return with_caging_zones() ? 9 + 12 + hist : hist;
}

int StabilityConfig::histogram_length() const {
  return n_z * n_rho * (with_ratios() ? 3 : 2);
}

const char* StabilityConfig::name() const {
  return variant == StabilityVariant::Single145 ? "single145" : "multi178";
}

// =============================================================================
// Contacts
// =============================================================================

ContactSet supporting_contact_set(const PointCloud& placed_object, const PointCloud& base,
                                  double contact_fraction) {
  if (placed_object.empty() || base.empty()) {
    throw Error("EmptyCloud", "supporting contacts need non-empty clouds");
  }
  // XY-projected index over the object for column queries.
  std::vector<Vec3> obj_xy;
  obj_xy.reserve(placed_object.size());
  for (const Vec3& p : placed_object.points) obj_xy.emplace_back(p.x(), p.y(), 0.0);
  const KdTree3 xy_tree(obj_xy);

  const std::size_t nb = base.size();
  std::vector<std::pair<double, int>> gap_index;
  gap_index.reserve(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    const Vec3& x = base.points[i];
    const auto ids = xy_tree.radius_search(Vec3(x.x(), x.y(), 0.0), kContactColumnRadius);
    // Vertical distance up to the object's surface above this base point.
    double gap = std::numeric_limits<double>::infinity();
    for (int id : ids) {
      const double dz = placed_object.points[static_cast<std::size_t>(id)].z() - x.z();
      if (dz >= -1e-9) gap = std::min(gap, dz);
    }
    if (std::isfinite(gap)) gap_index.emplace_back(gap, static_cast<int>(i));
  }

  ContactSet out;
  if (gap_index.size() < static_cast<std::size_t>(kContactFloor)) {
    // Object overhangs almost none of the base; fall back to the plain
    // vertical distance so every feature stays finite.
    out.column_constrained = false;
    double obj_min_z = std::numeric_limits<double>::infinity();
    for (const Vec3& p : placed_object.points) obj_min_z = std::min(obj_min_z, p.z());
    gap_index.clear();
    for (std::size_t i = 0; i < nb; ++i) {
      gap_index.emplace_back(obj_min_z - base.points[i].z(), static_cast<int>(i));
    }
  }
  std::sort(gap_index.begin(), gap_index.end());

  std::size_t k =
      static_cast<std::size_t>(std::ceil(contact_fraction * static_cast<double>(nb) - 1e-12));
  k = std::clamp<std::size_t>(k, kContactFloor, kContactCap);
  k = std::min(k, gap_index.size());

  // Synthetic clouds produce exact gap ties; taking the first k by index would
  // collapse the contact set onto one edge of the footprint. Spread the
  // boundary tie group evenly instead.
  const double cutoff = gap_index[k - 1].first;
  std::size_t tie_begin = k, tie_end = k;
  while (tie_begin > 0 && cutoff - gap_index[tie_begin - 1].first <= 1e-9) --tie_begin;
  while (tie_end < gap_index.size() && gap_index[tie_end].first - cutoff <= 1e-9) ++tie_end;
  std::vector<std::pair<double, int>> selected(gap_index.begin(),
                                               gap_index.begin() + tie_begin);
  const std::size_t slots = k - tie_begin;
  const std::size_t group = tie_end - tie_begin;
  for (std::size_t i = 0; i < slots; ++i) {
    selected.push_back(gap_index[tie_begin + i * group / slots]);
  }
  std::sort(selected.begin(), selected.end());

  out.indices.reserve(k);
  out.gaps.reserve(k);
  for (const auto& [gap, idx] : selected) {
    out.gaps.push_back(gap);
    out.indices.push_back(idx);
  }
  return out;
}

std::vector<double> supporting_contacts(const PointCloud& placed_object, const PointCloud& base,
                                        double contact_fraction) {
  const ContactSet contacts = supporting_contact_set(placed_object, base, contact_fraction);
  const std::size_t k = contacts.indices.size();

  std::vector<Vec3> cpts;
  cpts.reserve(k);
  for (int idx : contacts.indices) cpts.push_back(base.points[static_cast<std::size_t>(idx)]);

  std::vector<double> f(12, 0.0);
  f[0] = contacts.gaps.empty() ? 0.0 : contacts.gaps.front();  // falling distance

  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : cpts) mean += p;
  mean /= static_cast<double>(k);
  double var_xy = 0.0, var_z = 0.0;
  for (const Vec3& p : cpts) {
    var_xy += (p.x() - mean.x()) * (p.x() - mean.x()) + (p.y() - mean.y()) * (p.y() - mean.y());
    var_z += (p.z() - mean.z()) * (p.z() - mean.z());
  }
  f[1] = var_xy / static_cast<double>(k);
  f[2] = var_z / static_cast<double>(k);

  if (k >= 2) {
    const auto ev = covariance_eigenvalues(cpts);
    f[3] = ev[0];
    f[4] = ev[1];
    f[5] = ev[2];
    f[6] = ev[0] > kEps ? ev[1] / ev[0] : 0.0;
    f[7] = ev[1] > kEps ? ev[2] / ev[1] : 0.0;
  }

  // COM-vs-contact-hull features.
  const Vec3 obj_centroid = placed_object.centroid();
  std::vector<Vec2> contact_xy;
  contact_xy.reserve(k);
  for (const Vec3& p : cpts) contact_xy.emplace_back(p.x(), p.y());
  double contact_hull_area = 0.0;
  bool have_contact_hull = false;
  ConvexPolygon2D contact_hull;
  try {
    contact_hull = convex_hull_2d(contact_xy);
    contact_hull_area = contact_hull.area();
    have_contact_hull = true;
  } catch (const Error&) {
    have_contact_hull = false;
  }
  if (have_contact_hull) {
    f[8] = distance_to_boundary(contact_hull, Vec2(obj_centroid.x(), obj_centroid.y()));
  } else {
    f[8] = -placed_object.radius_xy();  // no support polygon: maximally unstable
  }
  double obj_hull_area = 0.0;
  try {
    obj_hull_area = footprint_hull(placed_object).area();
  } catch (const Error&) {
    obj_hull_area = 0.0;
  }
  f[9] = (have_contact_hull && obj_hull_area > kEps) ? contact_hull_area / obj_hull_area : 0.0;

  // Fractions below/above the contact plane (plane z = highest contact point).
  double plane_z = -std::numeric_limits<double>::infinity();
  for (const Vec3& p : cpts) plane_z = std::max(plane_z, p.z());
  std::size_t below = 0, above = 0;
  for (const Vec3& p : placed_object.points) {
    if (p.z() < plane_z) ++below;
    else if (p.z() > plane_z) ++above;
  }
  const double n_obj = static_cast<double>(placed_object.size());
  f[10] = static_cast<double>(below) / n_obj;
  f[11] = static_cast<double>(above) / n_obj;
  return f;
}

// =============================================================================
// Caging
// =============================================================================

namespace {

// Height histogram over a cylinder centered at the lowest contact point, polar
// axis aligned with the highest surrounding point so the histogram does not
// change when the base rotates about the object.
std::vector<double> caging_height_histogram(const PointCloud& placed_object,
                                            const PointCloud& base, const ContactSet& contacts,
                                            int n_r, int n_theta) {
  std::vector<double> h(static_cast<std::size_t>(n_r) * n_theta, 0.0);

  // Lowest contact point (ties to the lowest base index).
  int lowest = contacts.indices.front();
  double lowest_z = base.points[static_cast<std::size_t>(lowest)].z();
  for (int idx : contacts.indices) {
    const double z = base.points[static_cast<std::size_t>(idx)].z();
    if (z < lowest_z || (z == lowest_z && idx < lowest)) {
      lowest = idx;
      lowest_z = z;
    }
  }
  const Vec3 center = base.points[static_cast<std::size_t>(lowest)];

  double radius = 0.0;
  for (const Vec3& p : placed_object.points) {
    radius = std::max(radius, std::hypot(p.x() - center.x(), p.y() - center.y()));
  }
  radius = std::max(radius, 1e-6);
  const double obj_height = std::max(placed_object.height(), 1e-9);

  std::vector<int> inside;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const Vec3& p = base.points[i];
    if (std::hypot(p.x() - center.x(), p.y() - center.y()) <= radius) {
      inside.push_back(static_cast<int>(i));
    }
  }
  if (inside.empty()) return h;

  int highest = inside.front();
  for (int idx : inside) {
    if (base.points[static_cast<std::size_t>(idx)].z() >
        base.points[static_cast<std::size_t>(highest)].z()) {
      highest = idx;
    }
  }
  const Vec3& hp = base.points[static_cast<std::size_t>(highest)];
  const double hx = hp.x() - center.x(), hy = hp.y() - center.y();
  const double azimuth0 = (std::hypot(hx, hy) > 1e-12) ? std::atan2(hy, hx) : 0.0;

  for (int idx : inside) {
    const Vec3& p = base.points[static_cast<std::size_t>(idx)];
    const double dx = p.x() - center.x(), dy = p.y() - center.y();
    const double dist = std::hypot(dx, dy);
    const int ring = std::min(n_r - 1, static_cast<int>(dist / radius * n_r));
    double az = ((dist > 1e-12) ? std::atan2(dy, dx) : azimuth0) - azimuth0;
    while (az < 0.0) az += 2.0 * M_PI;
    while (az >= 2.0 * M_PI) az -= 2.0 * M_PI;
    const int sector = std::min(n_theta - 1, static_cast<int>(az / (2.0 * M_PI) * n_theta));
    const double value = std::max(0.0, p.z() - center.z()) / obj_height;
    double& cell = h[static_cast<std::size_t>(ring) * n_theta + sector];
    cell = std::max(cell, value);
  }
  return h;
}

}  // namespace

std::vector<double> caging_features(const PointCloud& placed_object, const PointCloud& base,
                                    const StabilityConfig& config) {
  if (placed_object.empty() || base.empty()) {
    throw Error("EmptyCloud", "caging features need non-empty clouds");
  }
  const ContactSet contacts = supporting_contact_set(placed_object, base, config.contact_fraction);

  std::vector<double> out;
  if (config.with_caging_zones()) {
    // Zone grid: object's world-frame bounding box scaled by 1.6 overall with
    // a 1.05x center zone; e1 = Z, e2 = X, e3 = Y.
    Vec3 lo, hi;
    placed_object.bounds(lo, hi);
    const Vec3 center = 0.5 * (lo + hi);
    Vec3 half = 0.5 * (hi - lo);
    for (int a = 0; a < 3; ++a) half[a] = std::max(half[a], 1e-6);
    const Vec3 outer = 1.6 * half;
    const Vec3 inner = 1.05 * half;

    // Zone index per axis: 0 below the center zone, 1 inside it, 2 above;
    // -1 when outside the scaled box entirely.
    const auto zone_of = [&](double v, int axis) -> int {
      const double d = v - center[axis];
      if (d < -outer[axis] || d > outer[axis]) return -1;
      if (d < -inner[axis]) return 0;
      if (d > inner[axis]) return 2;
      return 1;
    };

    double region_height[3][3] = {};  // [j][k], max z relative to bbox floor
    bool region_seen[3][3] = {};
    double zone_min_e2[3][3][3], zone_max_e2[3][3][3];
    double zone_min_e3[3][3][3], zone_max_e3[3][3][3];
    bool zone_seen[3][3][3] = {};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        for (int k = 0; k < 3; ++k) {
          zone_min_e2[i][j][k] = std::numeric_limits<double>::infinity();
          zone_max_e2[i][j][k] = -std::numeric_limits<double>::infinity();
          zone_min_e3[i][j][k] = std::numeric_limits<double>::infinity();
          zone_max_e3[i][j][k] = -std::numeric_limits<double>::infinity();
        }
      }
    }

    for (const Vec3& p : base.points) {
      const int i = zone_of(p.z(), 2);
      const int j = zone_of(p.x(), 0);
      const int k = zone_of(p.y(), 1);
      if (i < 0 || j < 0 || k < 0) continue;
      region_seen[j][k] = true;
      region_height[j][k] = std::max(region_height[j][k], std::max(0.0, p.z() - lo.z()));
      // Only material rising above the object's support plane can cage it; a
      // flat slab the object rests on must not register as a wall.
      if (p.z() <= lo.z() + 1e-9) continue;
      zone_seen[i][j][k] = true;
      zone_min_e2[i][j][k] = std::min(zone_min_e2[i][j][k], p.x());
      zone_max_e2[i][j][k] = std::max(zone_max_e2[i][j][k], p.x());
      zone_min_e3[i][j][k] = std::min(zone_min_e3[i][j][k], p.y());
      zone_max_e3[i][j][k] = std::max(zone_max_e3[i][j][k], p.y());
    }

    // 9 per-region max heights (top view), row-major in (j, k).
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < 3; ++k) {
        out.push_back(region_seen[j][k] ? region_height[j][k] : 0.0);
      }
    }

    // 12 directional gaps: per vertical level, the minimal horizontal distance
    // between the wall zones and the object along +e2, -e2, +e3, -e3. The
    // pairwise min over (object point, wall point) separates into extrema.
    for (int i = 0; i < 3; ++i) {
      double wall_max_e2 = -std::numeric_limits<double>::infinity();
      double wall_min_e2 = std::numeric_limits<double>::infinity();
      double wall_max_e3 = -std::numeric_limits<double>::infinity();
      double wall_min_e3 = std::numeric_limits<double>::infinity();
      bool seen_lo_e2 = false, seen_hi_e2 = false, seen_lo_e3 = false, seen_hi_e3 = false;
      for (int k = 0; k < 3; ++k) {
        if (zone_seen[i][0][k]) {
          seen_lo_e2 = true;
          wall_max_e2 = std::max(wall_max_e2, zone_max_e2[i][0][k]);
        }
        if (zone_seen[i][2][k]) {
          seen_hi_e2 = true;
          wall_min_e2 = std::min(wall_min_e2, zone_min_e2[i][2][k]);
        }
      }
      for (int j = 0; j < 3; ++j) {
        if (zone_seen[i][j][0]) {
          seen_lo_e3 = true;
          wall_max_e3 = std::max(wall_max_e3, zone_max_e3[i][j][0]);
        }
        if (zone_seen[i][j][2]) {
          seen_hi_e3 = true;
          wall_min_e3 = std::min(wall_min_e3, zone_min_e3[i][j][2]);
        }
      }
      out.push_back(seen_lo_e2 ? lo.x() - wall_max_e2 : kCagingGapSentinel);
      out.push_back(seen_hi_e2 ? wall_min_e2 - hi.x() : kCagingGapSentinel);
      out.push_back(seen_lo_e3 ? lo.y() - wall_max_e3 : kCagingGapSentinel);
      out.push_back(seen_hi_e3 ? wall_min_e3 - hi.y() : kCagingGapSentinel);
    }
  }

  const std::vector<double> h =
      caging_height_histogram(placed_object, base, contacts, config.n_r, config.n_theta);
  out.insert(out.end(), h.begin(), h.end());
  return out;
}

// =============================================================================
// Placement histograms
// =============================================================================

std::vector<double> placement_histograms(const PointCloud& placed_object, const PointCloud& base,
                                         const StabilityConfig& config) {
  if (placed_object.empty() || base.empty()) {
    throw Error("EmptyCloud", "placement histograms need non-empty clouds");
  }
  const double obj_height = placed_object.height();
  const double obj_radius = placed_object.radius_xy();
  if (obj_height <= 1e-9 || obj_radius <= 1e-9) {
    throw Error("DegenerateObject", "object needs positive height and radius");
  }
  const int nz = config.n_z, nr = config.n_rho;
  const double cyl_h = obj_height * static_cast<double>(nz) / (nz - 2);
  const double cyl_r = obj_radius * static_cast<double>(nr) / (nr - 2);
  const Vec3 c = placed_object.centroid();
  const double z0 = c.z() - 0.5 * cyl_h;

  const auto bin_cloud = [&](const PointCloud& cloud, std::vector<double>& counts) {
    for (const Vec3& p : cloud.points) {
      const double dist = std::hypot(p.x() - c.x(), p.y() - c.y());
      if (dist > cyl_r) continue;
      const double dz = p.z() - z0;
      if (dz < 0.0 || dz > cyl_h) continue;
      const int zi = std::min(nz - 1, static_cast<int>(dz / cyl_h * nz));
      const int ri = std::min(nr - 1, static_cast<int>(dist / cyl_r * nr));
      counts[static_cast<std::size_t>(zi) * nr + ri] += 1.0;
    }
  };

  const std::size_t cells = static_cast<std::size_t>(nz) * nr;
  std::vector<double> obj_counts(cells, 0.0), base_counts(cells, 0.0);
  bin_cloud(placed_object, obj_counts);
  bin_cloud(base, base_counts);

  std::vector<double> out;
  out.reserve(cells * (config.with_ratios() ? 3 : 2));
  out.insert(out.end(), obj_counts.begin(), obj_counts.end());
  out.insert(out.end(), base_counts.begin(), base_counts.end());
  if (config.with_ratios()) {
    for (std::size_t i = 0; i < cells; ++i) {
      double r;
      if (base_counts[i] > 0.0) {
        r = std::min(config.ratio_cap, obj_counts[i] / base_counts[i]);
      } else {
        r = obj_counts[i] > 0.0 ? config.ratio_cap : 0.0;
      }
      out.push_back(r);
    }
  }
  return out;
}

// =============================================================================
// Full vector
// =============================================================================

StabilityFeatures stability_vector(const PointCloud& object, const PointCloud& base,
                                   const Placement& placement, const StabilityConfig& config) {
  const PointCloud placed = apply_placement(object, placement);
  StabilityFeatures f;
  f.config = config;
  f.values = supporting_contacts(placed, base, config.contact_fraction);
  const auto caging = caging_features(placed, base, config);
  f.values.insert(f.values.end(), caging.begin(), caging.end());
  const auto hist = placement_histograms(placed, base, config);
  f.values.insert(f.values.end(), hist.begin(), hist.end());
  if (static_cast<int>(f.values.size()) != config.total_length()) {
    throw Error("Internal", "stability feature length mismatch");
  }
  for (double v : f.values) {
    if (!std::isfinite(v)) throw Error("Internal", "non-finite stability feature");
  }
  return f;
}

}  // namespace placekit
