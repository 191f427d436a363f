#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace placekit {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat3 = Eigen::Matrix3d;

/// Error with a stable machine-readable code alongside the human message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& detail)
      : std::runtime_error(code + ": " + detail), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

// =============================================================================
// PointCloud
// =============================================================================

/// Ordered set of 3D points in meters, with optional per-point RGB in [0,1].
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> colors;  // empty, or same length as points
  std::string frame;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_colors() const { return !colors.empty(); }

  /// Throws Error("EmptyCloud") / Error("BadCloud") on structural problems.
  void validate() const;

  Vec3 centroid() const;
  void bounds(Vec3& lo, Vec3& hi) const;
  double height() const;   // z extent
  double radius_xy() const;  // max XY distance from centroid
};

// =============================================================================
// Rotation
// =============================================================================

/// Unit quaternion; always normalized on construction.
class Rotation {
 public:
  Rotation() : q_(1.0, 0.0, 0.0, 0.0) {}
  Rotation(double w, double x, double y, double z);

  static Rotation identity() { return Rotation(); }
  static Rotation from_axis_angle(const Vec3& axis, double angle_rad);
  static Rotation from_matrix(const Mat3& m);

  Rotation compose(const Rotation& rhs) const;  // apply rhs first, then this
  Rotation inverse() const;
  Vec3 apply(const Vec3& p) const { return q_ * p; }
  Mat3 matrix() const { return q_.toRotationMatrix(); }

  double w() const { return q_.w(); }
  double x() const { return q_.x(); }
  double y() const { return q_.y(); }
  double z() const { return q_.z(); }

  double norm() const { return q_.norm(); }
  /// Relative rotation angle in [0, pi].
  double angle_to(const Rotation& other) const;

 private:
  Eigen::Quaterniond q_;
};

/// The 24 proper rotations of the cube (octahedral group), fixed order.
const std::vector<Rotation>& cube_orientations();

// =============================================================================
// Placement
// =============================================================================

/// Reference to the base an object rests on: a placing area or another object.
struct BaseRef {
  enum class Kind : std::uint8_t { Environment, Object };
  Kind kind = Kind::Environment;
  int index = 0;

  static BaseRef environment(int i) { return {Kind::Environment, i}; }
  static BaseRef object(int i) { return {Kind::Object, i}; }
  bool operator==(const BaseRef&) const = default;
};

/// Pose of one object relative to its base frame.
struct Placement {
  Vec3 location = Vec3::Zero();
  Rotation rotation;
  BaseRef base;
};

// =============================================================================
// ConvexPolygon2D
// =============================================================================

/// Strictly convex polygon, CCW vertex order, signed area > 0.
struct ConvexPolygon2D {
  std::vector<Vec2> vertices;

  double area() const;
  Vec2 centroid() const;
  bool contains(const Vec2& p) const;  // boundary counts as inside
};

}  // namespace placekit
