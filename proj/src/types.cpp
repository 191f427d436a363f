#include "placekit/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace placekit {

void PointCloud::validate() const {
  if (points.empty()) {
    throw Error("EmptyCloud", "point cloud has no points");
  }
  if (!colors.empty() && colors.size() != points.size()) {
    throw Error("BadCloud", "color count does not match point count");
  }
  for (const Vec3& p : points) {
    if (!p.allFinite()) {
      throw Error("BadCloud", "non-finite coordinate");
    }
  }
  for (const Vec3& c : colors) {
    if (!c.allFinite()) {
      throw Error("BadCloud", "non-finite color");
    }
  }
}

Vec3 PointCloud::centroid() const {
  Vec3 sum = Vec3::Zero();
  for (const Vec3& p : points) sum += p;
  return sum / static_cast<double>(points.size());
}

void PointCloud::bounds(Vec3& lo, Vec3& hi) const {
  lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  hi = Vec3::Constant(-std::numeric_limits<double>::infinity());
  for (const Vec3& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
}

double PointCloud::height() const {
  Vec3 lo, hi;
  bounds(lo, hi);
  return hi.z() - lo.z();
}

double PointCloud::radius_xy() const {
  const Vec3 c = centroid();
  double r2 = 0.0;
  for (const Vec3& p : points) {
    const double dx = p.x() - c.x();
    const double dy = p.y() - c.y();
    r2 = std::max(r2, dx * dx + dy * dy);
  }
  return std::sqrt(r2);
}

// =============================================================================
// Rotation
// =============================================================================

Rotation::Rotation(double w, double x, double y, double z) : q_(w, x, y, z) {
  const double n = q_.norm();
  if (!(n > 1e-12) || !std::isfinite(n)) {
    throw Error("BadRotation", "quaternion norm too small or non-finite");
  }
  q_.normalize();
}

Rotation Rotation::from_axis_angle(const Vec3& axis, double angle_rad) {
  const double n = axis.norm();
  if (!(n > 1e-12)) {
    throw Error("BadRotation", "axis norm too small");
  }
  Rotation r;
  r.q_ = Eigen::Quaterniond(Eigen::AngleAxisd(angle_rad, axis / n));
  return r;
}

Rotation Rotation::from_matrix(const Mat3& m) {
  Rotation r;
  r.q_ = Eigen::Quaterniond(m);
  r.q_.normalize();
  return r;
}

Rotation Rotation::compose(const Rotation& rhs) const {
  Rotation r;
  r.q_ = q_ * rhs.q_;
  r.q_.normalize();
  return r;
}

Rotation Rotation::inverse() const {
  Rotation r;
  r.q_ = q_.conjugate();
  return r;
}

double Rotation::angle_to(const Rotation& other) const {
  const double d = std::min(1.0, std::abs(q_.dot(other.q_)));
  return 2.0 * std::acos(d);
}

const std::vector<Rotation>& cube_orientations() {
  // Signed permutation matrices with determinant +1: exactly 24.
  static const std::vector<Rotation> table = [] {
    std::vector<Rotation> out;
    int perm[3] = {0, 1, 2};
    std::vector<std::array<int, 3>> perms;
    do {
      perms.push_back({perm[0], perm[1], perm[2]});
    } while (std::next_permutation(perm, perm + 3));
    std::sort(perms.begin(), perms.end());
    for (const auto& p : perms) {
      for (int sx = 1; sx >= -1; sx -= 2) {
        for (int sy = 1; sy >= -1; sy -= 2) {
          for (int sz = 1; sz >= -1; sz -= 2) {
            Mat3 m = Mat3::Zero();
            m(0, p[0]) = sx;
            m(1, p[1]) = sy;
            m(2, p[2]) = sz;
            if (m.determinant() > 0.5) {
              out.push_back(Rotation::from_matrix(m));
            }
          }
        }
      }
    }
    return out;
  }();
  return table;
}

// =============================================================================
// ConvexPolygon2D
// =============================================================================

double ConvexPolygon2D::area() const {
  double twice = 0.0;
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = vertices[i];
    const Vec2& b = vertices[(i + 1) % n];
    twice += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * twice;
}

Vec2 ConvexPolygon2D::centroid() const {
  // Area-weighted centroid of the polygon.
  const std::size_t n = vertices.size();
  double twice = 0.0;
  Vec2 acc = Vec2::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = vertices[i];
    const Vec2& b = vertices[(i + 1) % n];
    const double cross = a.x() * b.y() - b.x() * a.y();
    twice += cross;
    acc += (a + b) * cross;
  }
  if (std::abs(twice) < 1e-300) return vertices.empty() ? Vec2::Zero() : vertices[0];
  return acc / (3.0 * twice);
}

bool ConvexPolygon2D::contains(const Vec2& p) const {
  const std::size_t n = vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = vertices[i];
    const Vec2& b = vertices[(i + 1) % n];
    const double cross = (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
    if (cross < 0.0) return false;
  }
  return true;
}

}  // namespace placekit
