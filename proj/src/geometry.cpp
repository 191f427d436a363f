#include "placekit/geometry.hpp"

#include "placekit/kdtree.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace placekit {

PointCloud transform_cloud(const PointCloud& cloud, const Rotation& rot, const Vec3& trans) {
  if (cloud.empty()) {
    throw Error("EmptyCloud", "transform_cloud requires a non-empty cloud");
  }
  PointCloud out;
  out.frame = cloud.frame;
  out.colors = cloud.colors;
  out.points.reserve(cloud.size());
  const Mat3 m = rot.matrix();
  for (const Vec3& p : cloud.points) {
    out.points.push_back(m * p + trans);
  }
  return out;
}

// =============================================================================
// Convex hull (monotone chain, exact orientation on a 1e-7 m lattice)
// =============================================================================

namespace {

constexpr double kLatticeScale = 1e9;  // 1e-9 m resolution

struct LatticePoint {
  std::int64_t x, y;
  int src;  // index into the input
  bool operator<(const LatticePoint& o) const {
    if (x != o.x) return x < o.x;
    if (y != o.y) return y < o.y;
    return src < o.src;
  }
  bool same_cell(const LatticePoint& o) const { return x == o.x && y == o.y; }
};

// Exact sign of the cross product (b-a) x (c-a) on lattice coordinates.
int orient(const LatticePoint& a, const LatticePoint& b, const LatticePoint& c) {
  const __int128 v = static_cast<__int128>(b.x - a.x) * (c.y - a.y) -
                     static_cast<__int128>(b.y - a.y) * (c.x - a.x);
  if (v > 0) return 1;
  if (v < 0) return -1;
  return 0;
}

}  // namespace

ConvexPolygon2D convex_hull_2d(const std::vector<Vec2>& points) {
  if (points.size() < 3) {
    throw Error("DegenerateHull", "need at least 3 points");
  }
  std::vector<LatticePoint> lp;
  lp.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    lp.push_back({static_cast<std::int64_t>(std::llround(points[i].x() * kLatticeScale)),
                  static_cast<std::int64_t>(std::llround(points[i].y() * kLatticeScale)),
                  static_cast<int>(i)});
  }
  std::sort(lp.begin(), lp.end());
  lp.erase(std::unique(lp.begin(), lp.end(),
                       [](const LatticePoint& a, const LatticePoint& b) { return a.same_cell(b); }),
           lp.end());
  if (lp.size() < 3) {
    throw Error("DegenerateHull", "fewer than 3 distinct points");
  }

  // Monotone chain with strict turns so collinear points are dropped.
  std::vector<LatticePoint> hull(2 * lp.size());
  std::size_t k = 0;
  for (const LatticePoint& p : lp) {  // lower chain
    while (k >= 2 && orient(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  const std::size_t lower = k + 1;
  for (auto it = lp.rbegin() + 1; it != lp.rend(); ++it) {  // upper chain
    while (k >= lower && orient(hull[k - 2], hull[k - 1], *it) <= 0) --k;
    hull[k++] = *it;
  }
  hull.resize(k - 1);
  if (hull.size() < 3) {
    throw Error("DegenerateHull", "input points are collinear");
  }
  ConvexPolygon2D poly;
  poly.vertices.reserve(hull.size());
  for (const LatticePoint& p : hull) {
    poly.vertices.push_back(points[static_cast<std::size_t>(p.src)]);
  }
  return poly;
}

double distance_to_boundary(const ConvexPolygon2D& poly, const Vec2& p) {
  const std::size_t n = poly.vertices.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly.vertices[i];
    const Vec2& b = poly.vertices[(i + 1) % n];
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const Vec2 proj = a + t * ab;
    best = std::min(best, (p - proj).norm());
  }
  return poly.contains(p) ? best : -best;
}

ConvexPolygon2D footprint_hull(const PointCloud& cloud) {
  std::vector<Vec2> xy;
  xy.reserve(cloud.size());
  for (const Vec3& p : cloud.points) xy.push_back(Vec2(p.x(), p.y()));
  return convex_hull_2d(xy);
}

namespace {

double polygon_gap(const ConvexPolygon2D& a, const ConvexPolygon2D& b) {
  double best = std::numeric_limits<double>::infinity();
  const auto edge_pass = [&best](const ConvexPolygon2D& from, const ConvexPolygon2D& to) {
    const std::size_t n = to.vertices.size();
    for (const Vec2& p : from.vertices) {
      for (std::size_t i = 0; i < n; ++i) {
        const Vec2& s = to.vertices[i];
        const Vec2& e = to.vertices[(i + 1) % n];
        const Vec2 se = e - s;
        const double len2 = se.squaredNorm();
        double t = len2 > 0.0 ? (p - s).dot(se) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        best = std::min(best, (p - (s + t * se)).norm());
      }
    }
  };
  edge_pass(a, b);
  edge_pass(b, a);
  return best;
}

bool polygons_intersect(const ConvexPolygon2D& a, const ConvexPolygon2D& b) {
  // Separating axis over both polygons' edge normals.
  const auto separated_by = [](const ConvexPolygon2D& edges, const ConvexPolygon2D& p,
                               const ConvexPolygon2D& q) {
    const std::size_t n = edges.vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& s = edges.vertices[i];
      const Vec2& e = edges.vertices[(i + 1) % n];
      const Vec2 normal(-(e.y() - s.y()), e.x() - s.x());
      double pmin = std::numeric_limits<double>::infinity(), pmax = -pmin;
      for (const Vec2& v : p.vertices) {
        const double d = normal.dot(v);
        pmin = std::min(pmin, d);
        pmax = std::max(pmax, d);
      }
      double qmin = std::numeric_limits<double>::infinity(), qmax = -qmin;
      for (const Vec2& v : q.vertices) {
        const double d = normal.dot(v);
        qmin = std::min(qmin, d);
        qmax = std::max(qmax, d);
      }
      if (pmax < qmin || qmax < pmin) return true;
    }
    return false;
  };
  return !separated_by(a, a, b) && !separated_by(b, a, b);
}

}  // namespace

bool polygons_conflict(const ConvexPolygon2D& a, const ConvexPolygon2D& b, double clearance) {
  if (polygons_intersect(a, b)) return true;
  return polygon_gap(a, b) < clearance;
}

// =============================================================================
// Covariance eigenvalues
// =============================================================================

std::array<double, 3> covariance_eigenvalues(const std::vector<Vec3>& points) {
  if (points.size() < 2) {
    throw Error("DegenerateCovariance", "need at least 2 points");
  }
  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Mat3 cov = Mat3::Zero();
  for (const Vec3& p : points) {
    const Vec3 d = p - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(points.size());
  Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
  const Vec3 ev = solver.eigenvalues();  // ascending
  std::array<double, 3> out{ev[2], ev[1], ev[0]};
  for (double& v : out) v = std::max(v, 0.0);
  return out;
}

// =============================================================================
// Placement sampling and collision checks
// =============================================================================

std::vector<Placement> sample_placements(const PointCloud& object, const PointCloud& base,
                                         double grid_step, const std::vector<Rotation>& configs,
                                         std::uint64_t seed, BaseRef base_ref) {
  if (base.empty()) {
    throw Error("EmptyCloud", "sample_placements requires a non-empty base");
  }
  if (object.empty()) {
    throw Error("EmptyCloud", "sample_placements requires a non-empty object");
  }
  if (!(grid_step > 0.0)) {
    throw Error("BadParams", "grid_step must be positive");
  }
  if (configs.empty()) {
    throw Error("BadParams", "configs must be non-empty");
  }
  Vec3 lo, hi;
  base.bounds(lo, hi);
  const auto cells = [&](double width) {
    return std::max<int>(1, static_cast<int>(std::ceil(width / grid_step - 1e-9)));
  };
  const int nx = cells(hi.x() - lo.x());
  const int ny = cells(hi.y() - lo.y());

  // Per-config minimum z of the rotated object, reused across cells.
  std::vector<double> min_z(configs.size());
  for (std::size_t c = 0; c < configs.size(); ++c) {
    const Mat3 m = configs[c].matrix();
    double mz = std::numeric_limits<double>::infinity();
    for (const Vec3& p : object.points) mz = std::min(mz, (m * p).z());
    min_z[c] = mz;
  }

  std::mt19937_64 rng(seed);
  std::vector<Placement> out;
  out.reserve(static_cast<std::size_t>(nx) * ny * configs.size());
  for (int ix = 0; ix < nx; ++ix) {
    for (int iy = 0; iy < ny; ++iy) {
      const double cx0 = lo.x() + ix * grid_step;
      const double cy0 = lo.y() + iy * grid_step;
      const double cx1 = std::min(hi.x(), cx0 + grid_step);
      const double cy1 = std::min(hi.y(), cy0 + grid_step);
      const double jx = uniform_in(rng, cx0, cx1);
      const double jy = uniform_in(rng, cy0, cy1);
      // Support height: highest base point in this cell, else base floor.
      double support = -std::numeric_limits<double>::infinity();
      for (const Vec3& p : base.points) {
        if (p.x() >= cx0 && p.x() <= cx1 && p.y() >= cy0 && p.y() <= cy1) {
          support = std::max(support, p.z());
        }
      }
      if (!std::isfinite(support)) support = lo.z();
      for (std::size_t c = 0; c < configs.size(); ++c) {
        Placement pl;
        pl.location = Vec3(jx, jy, support - min_z[c]);
        pl.rotation = configs[c];
        pl.base = base_ref;
        out.push_back(pl);
      }
    }
  }
  return out;
}

namespace {

// Shared collision rule: base point x interpenetrates iff some placed object
// point lies strictly within `clearance` of x and x sits strictly above the
// lowest object point in that neighborhood.
bool point_collides(const Vec3& x, const std::vector<int>& neighbor_ids,
                    const std::vector<Vec3>& obj_points, double clearance) {
  bool within = false;
  double local_lower = std::numeric_limits<double>::infinity();
  for (int id : neighbor_ids) {
    const Vec3& o = obj_points[static_cast<std::size_t>(id)];
    if ((o - x).norm() < clearance) {
      within = true;
      local_lower = std::min(local_lower, o.z());
    }
  }
  return within && x.z() > local_lower;
}

}  // namespace

bool collision_free(const PointCloud& object, const PointCloud& base, const Placement& placement,
                    double clearance) {
  if (clearance <= 0.0) return true;
  const PointCloud placed = apply_placement(object, placement);
  const KdTree3 tree(placed.points);
  for (const Vec3& x : base.points) {
    const std::vector<int> ids = tree.radius_search(x, clearance);
    if (point_collides(x, ids, placed.points, clearance)) return false;
  }
  return true;
}

bool collision_free_bruteforce(const PointCloud& object, const PointCloud& base,
                               const Placement& placement, double clearance) {
  if (clearance <= 0.0) return true;
  const PointCloud placed = apply_placement(object, placement);
  std::vector<int> all(placed.size());
  for (std::size_t i = 0; i < placed.size(); ++i) all[i] = static_cast<int>(i);
  for (const Vec3& x : base.points) {
    if (point_collides(x, all, placed.points, clearance)) return false;
  }
  return true;
}

}  // namespace placekit
