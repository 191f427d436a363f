#include "placekit/bench.hpp"

#include "placekit/geometry.hpp"
#include "placekit/model.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace placekit {

using nlohmann::json;
namespace fs = std::filesystem;

// =============================================================================
// Kind names
// =============================================================================

namespace {

const std::map<std::string, AreaKind> kAreaNames = {
    {"dish_rack", AreaKind::DishRack},   {"flat_table", AreaKind::FlatTable},
    {"pen_holder", AreaKind::PenHolder}, {"stemware_holder", AreaKind::StemwareHolder},
    {"rod", AreaKind::Rod},              {"hook", AreaKind::Hook},
    {"shelf", AreaKind::Shelf}};

const std::map<std::string, ObjectKind> kObjectNames = {
    {"plate", ObjectKind::Plate},     {"bowl", ObjectKind::Bowl},
    {"mug", ObjectKind::Mug},         {"martini", ObjectKind::Martini},
    {"box", ObjectKind::Box},         {"book", ObjectKind::Book},
    {"pen", ObjectKind::Pen},         {"hanger_clothes", ObjectKind::HangerClothes}};

double param(const GenParams& p, const std::string& key, double fallback, double lo, double hi) {
  double v = fallback;
  if (auto it = p.find(key); it != p.end()) v = it->second;
  if (!(v >= lo && v <= hi)) {
    throw Error("BadParams", key + " = " + std::to_string(v) + " outside [" +
                                 std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return v;
}

constexpr double kStep = 0.004;    // surface sampling step, under the 5 mm cap
constexpr double kJitter = 1e-4;   // breaks exact grid ties

struct Sampler {
  PointCloud cloud;
  std::mt19937_64 rng;
  Vec3 color = Vec3(0.7, 0.7, 0.7);

  explicit Sampler(std::uint64_t seed) : rng(seed) {}

  void add(double x, double y, double z) {
    cloud.points.emplace_back(x + uniform_in(rng, -kJitter, kJitter),
                              y + uniform_in(rng, -kJitter, kJitter),
                              z + uniform_in(rng, -kJitter, kJitter));
    cloud.colors.emplace_back(
        std::clamp(color.x() + uniform_in(rng, -0.03, 0.03), 0.0, 1.0),
        std::clamp(color.y() + uniform_in(rng, -0.03, 0.03), 0.0, 1.0),
        std::clamp(color.z() + uniform_in(rng, -0.03, 0.03), 0.0, 1.0));
  }

  void slab(double x0, double x1, double y0, double y1, double z) {
    for (double x = x0; x <= x1 + 1e-12; x += kStep) {
      for (double y = y0; y <= y1 + 1e-12; y += kStep) add(x, y, z);
    }
  }

  void wall_x(double x, double y0, double y1, double z0, double z1) {
    for (double y = y0; y <= y1 + 1e-12; y += kStep) {
      for (double z = z0; z <= z1 + 1e-12; z += kStep) add(x, y, z);
    }
  }

  void wall_y(double y, double x0, double x1, double z0, double z1) {
    for (double x = x0; x <= x1 + 1e-12; x += kStep) {
      for (double z = z0; z <= z1 + 1e-12; z += kStep) add(x, y, z);
    }
  }

  void disc(double cx, double cy, double z, double radius) {
    const int n_r = std::max(2, static_cast<int>(radius / kStep));
    add(cx, cy, z);
    for (int ir = 1; ir <= n_r; ++ir) {
      const double r = radius * ir / n_r;
      const int n_a = std::max(6, static_cast<int>(2 * M_PI * r / kStep));
      for (int a = 0; a < n_a; ++a) {
        const double th = 2 * M_PI * a / n_a + 0.0007;
        add(cx + r * std::cos(th), cy + r * std::sin(th), z);
      }
    }
  }

  // vertical cylinder (shell) between z0 and z1
  void tube(double cx, double cy, double radius, double z0, double z1) {
    const int n_a = std::max(8, static_cast<int>(2 * M_PI * radius / kStep));
    for (double z = z0; z <= z1 + 1e-12; z += kStep) {
      for (int a = 0; a < n_a; ++a) {
        const double th = 2 * M_PI * a / n_a + 0.0009;
        add(cx + radius * std::cos(th), cy + radius * std::sin(th), z);
      }
    }
  }

  // horizontal cylinder along +X
  void rod_x(double x0, double x1, double cy, double cz, double radius) {
    const int n_a = std::max(8, static_cast<int>(2 * M_PI * radius / kStep));
    for (double x = x0; x <= x1 + 1e-12; x += kStep) {
      for (int a = 0; a < n_a; ++a) {
        const double th = 2 * M_PI * a / n_a + 0.0005;
        add(x, cy + radius * std::cos(th), cz + radius * std::sin(th));
      }
    }
  }
};

}  // namespace

AreaKind area_kind_from_string(const std::string& s) {
  if (auto it = kAreaNames.find(s); it != kAreaNames.end()) return it->second;
  throw Error("BadParams", "unknown area kind " + s);
}

ObjectKind object_kind_from_string(const std::string& s) {
  if (auto it = kObjectNames.find(s); it != kObjectNames.end()) return it->second;
  throw Error("BadParams", "unknown object kind " + s);
}

std::string to_string(AreaKind k) {
  for (const auto& [name, kind] : kAreaNames) {
    if (kind == k) return name;
  }
  return "?";
}

std::string to_string(ObjectKind k) {
  for (const auto& [name, kind] : kObjectNames) {
    if (kind == k) return name;
  }
  return "?";
}

// =============================================================================
// Placing-area generators
// =============================================================================

PointCloud generate_scene(AreaKind kind, const GenParams& params, std::uint64_t seed) {
  Sampler s(seed);
  const double elev = param(params, "elevation", 0.0, -1.0, 2.0);
  switch (kind) {
    case AreaKind::FlatTable: {
      const double hx = param(params, "half_x", 0.2, 0.05, 1.0);
      const double hy = param(params, "half_y", 0.16, 0.05, 1.0);
      s.color = Vec3(0.6, 0.45, 0.3);
      s.slab(-hx, hx, -hy, hy, elev);
      break;
    }
    case AreaKind::DishRack: {
      const double pitch = param(params, "pitch", 0.04, 0.01, 0.2);
      const int nx = static_cast<int>(param(params, "nx", 6, 2, 16));
      const int ny = static_cast<int>(param(params, "ny", 4, 2, 16));
      const double spike_h = param(params, "spike_height", 0.1, 0.02, 0.4);
      const double spike_r = param(params, "spike_radius", 0.003, 0.001, 0.02);
      const double margin = param(params, "margin", 0.03, 0.0, 0.2);
      s.color = Vec3(0.85, 0.85, 0.9);
      const double hx = 0.5 * pitch * (nx - 1) + margin;
      const double hy = 0.5 * pitch * (ny - 1) + margin;
      s.slab(-hx, hx, -hy, hy, elev);
      for (int ix = 0; ix < nx; ++ix) {
        for (int iy = 0; iy < ny; ++iy) {
          const double cx = -0.5 * pitch * (nx - 1) + ix * pitch;
          const double cy = -0.5 * pitch * (ny - 1) + iy * pitch;
          for (double z = elev + kStep; z <= elev + spike_h + 1e-12; z += kStep) {
            for (int a = 0; a < 6; ++a) {
              const double th = 2 * M_PI * a / 6 + 0.0011;
              s.add(cx + spike_r * std::cos(th), cy + spike_r * std::sin(th), z);
            }
          }
          s.add(cx, cy, elev + spike_h);
        }
      }
      break;
    }
    case AreaKind::PenHolder: {
      const double inner_r = param(params, "inner_radius", 0.012, 0.006, 0.06);
      const double wall_h = param(params, "wall_height", 0.09, 0.02, 0.3);
      s.color = Vec3(0.3, 0.3, 0.35);
      // funnel floor rising slightly from the exact-center apex
      s.add(0.0, 0.0, elev);
      const double rise = 0.001;
      for (double fr : {0.1, 0.2, 0.35, 0.5, 0.65, 0.8, 0.95}) {
        const double rr = inner_r * fr;
        const int n_a = std::max(8, static_cast<int>(2 * M_PI * rr / 0.002));
        for (int a = 0; a < n_a; ++a) {
          const double th = 2 * M_PI * a / n_a + 0.0005;
          s.add(rr * std::cos(th), rr * std::sin(th), elev + rise * fr);
        }
      }
      s.tube(0.0, 0.0, inner_r, elev, elev + wall_h);
      break;
    }
    case AreaKind::StemwareHolder: {
      const double rail_len = param(params, "rail_length", 0.2, 0.05, 0.5);
      const double gap = param(params, "gap", 0.014, 0.006, 0.05);
      const double rail_w = param(params, "rail_width", 0.02, 0.01, 0.08);
      const double height = param(params, "height", 0.16, 0.05, 0.5);
      s.color = Vec3(0.5, 0.35, 0.25);
      // ground plate and the two rails the glass foot rests on
      s.slab(-rail_len / 2, rail_len / 2, -(gap / 2 + rail_w + 0.02),
             gap / 2 + rail_w + 0.02, elev);
      s.slab(-rail_len / 2, rail_len / 2, gap / 2, gap / 2 + rail_w, elev + height);
      s.slab(-rail_len / 2, rail_len / 2, -(gap / 2 + rail_w), -gap / 2, elev + height);
      // rail side faces so the slot is caged
      s.wall_y(gap / 2, -rail_len / 2, rail_len / 2, elev + height - 0.01, elev + height);
      s.wall_y(-gap / 2, -rail_len / 2, rail_len / 2, elev + height - 0.01, elev + height);
      break;
    }
    case AreaKind::Rod: {
      const double length = param(params, "length", 0.3, 0.1, 1.0);
      const double radius = param(params, "radius", 0.01, 0.004, 0.05);
      const double height = param(params, "height", 0.25, 0.05, 1.0);
      s.color = Vec3(0.55, 0.55, 0.6);
      s.slab(-length / 2, length / 2, -0.06, 0.06, elev);
      s.rod_x(-length / 2, length / 2, 0.0, elev + height, radius);
      s.wall_x(-length / 2, -0.02, 0.02, elev, elev + height);
      s.wall_x(length / 2, -0.02, 0.02, elev, elev + height);
      break;
    }
    case AreaKind::Hook: {
      const double peg_len = param(params, "peg_length", 0.06, 0.02, 0.2);
      const double peg_r = param(params, "peg_radius", 0.006, 0.002, 0.02);
      const double height = param(params, "height", 0.2, 0.05, 1.0);
      s.color = Vec3(0.4, 0.4, 0.45);
      s.wall_x(0.0, -0.08, 0.08, elev, elev + height + 0.05);
      // peg along +X from the wall
      const int n_a = 10;
      for (double x = 0.0; x <= peg_len + 1e-12; x += kStep) {
        for (int a = 0; a < n_a; ++a) {
          const double th = 2 * M_PI * a / n_a + 0.0013;
          s.add(x, peg_r * std::cos(th), elev + height + peg_r * std::sin(th));
        }
      }
      break;
    }
    case AreaKind::Shelf: {
      const double hx = param(params, "half_x", 0.18, 0.05, 0.6);
      const double depth = param(params, "depth", 0.12, 0.05, 0.5);
      const double clearance_h = param(params, "clearance_height", 0.26, 0.1, 0.8);
      s.color = Vec3(0.62, 0.5, 0.35);
      s.slab(-hx, hx, -depth, depth, elev);
      s.slab(-hx, hx, -depth, depth, elev + clearance_h);
      s.wall_y(depth, -hx, hx, elev, elev + clearance_h);
      break;
    }
  }
  s.cloud.frame = to_string(kind);
  return s.cloud;
}

// =============================================================================
// Object generators (canonical pose: resting upright, bottom at z = 0)
// =============================================================================

PointCloud generate_object(ObjectKind kind, const GenParams& params, std::uint64_t seed) {
  Sampler s(seed);
  switch (kind) {
    case ObjectKind::Plate: {
      const double r = param(params, "radius", 0.09, 0.03, 0.2);
      const double t = param(params, "thickness", 0.01, 0.004, 0.03);
      s.color = Vec3(0.9, 0.9, 0.88);
      s.disc(0, 0, 0.0, r);
      s.disc(0, 0, t, r);
      s.tube(0, 0, r, 0.0, t);
      break;
    }
    case ObjectKind::Bowl: {
      const double r = param(params, "radius", 0.07, 0.03, 0.15);
      const double depth = param(params, "depth", 0.045, 0.02, 0.1);
      s.color = Vec3(0.85, 0.7, 0.5);
      s.disc(0, 0, 0.0, 0.35 * r);
      const int layers = std::max(4, static_cast<int>(depth / kStep));
      for (int l = 0; l <= layers; ++l) {
        const double z = depth * l / layers;
        const double rr = 0.35 * r + (r - 0.35 * r) * std::sqrt(static_cast<double>(l) / layers);
        const int n_a = std::max(8, static_cast<int>(2 * M_PI * rr / kStep));
        for (int a = 0; a < n_a; ++a) {
          const double th = 2 * M_PI * a / n_a + 0.0003;
          s.add(rr * std::cos(th), rr * std::sin(th), z);
        }
      }
      break;
    }
    case ObjectKind::Mug: {
      const double r = param(params, "radius", 0.04, 0.02, 0.08);
      const double h = param(params, "height", 0.09, 0.05, 0.15);
      s.color = Vec3(0.2, 0.45, 0.8);
      s.disc(0, 0, 0.0, r);
      s.tube(0, 0, r, 0.0, h);
      // handle: half ring in the XZ plane at the +X side
      for (int a = 0; a <= 12; ++a) {
        const double th = -M_PI / 2 + M_PI * a / 12;
        s.add(r + 0.02 * std::cos(th), 0.0, h / 2 + 0.025 * std::sin(th));
      }
      break;
    }
    case ObjectKind::Martini: {
      const double bowl_r = param(params, "bowl_radius", 0.05, 0.02, 0.1);
      const double bowl_depth = param(params, "bowl_depth", 0.045, 0.02, 0.1);
      const double stem_h = param(params, "stem_height", 0.05, 0.02, 0.12);
      const double foot_r = param(params, "foot_radius", 0.035, 0.015, 0.08);
      s.color = Vec3(0.75, 0.85, 0.9);
      s.disc(0, 0, 0.0, foot_r);
      s.disc(0, 0, 0.004, foot_r);
      s.tube(0, 0, 0.004, 0.004, stem_h);
      const int layers = std::max(4, static_cast<int>(bowl_depth / kStep));
      for (int l = 0; l <= layers; ++l) {
        const double z = stem_h + bowl_depth * l / layers;
        const double rr = std::max(0.004, bowl_r * l / layers);
        const int n_a = std::max(8, static_cast<int>(2 * M_PI * rr / kStep));
        for (int a = 0; a < n_a; ++a) {
          const double th = 2 * M_PI * a / n_a + 0.0007;
          s.add(rr * std::cos(th), rr * std::sin(th), z);
        }
      }
      break;
    }
    case ObjectKind::Box: {
      const double hx = param(params, "half_x", 0.05, 0.01, 0.15);
      const double hy = param(params, "half_y", 0.04, 0.01, 0.15);
      const double hz = param(params, "half_z", 0.03, 0.01, 0.15);
      s.color = Vec3(0.7, 0.55, 0.3);
      s.slab(-hx, hx, -hy, hy, 0.0);
      s.slab(-hx, hx, -hy, hy, 2 * hz);
      s.wall_x(-hx, -hy, hy, 0.0, 2 * hz);
      s.wall_x(hx, -hy, hy, 0.0, 2 * hz);
      s.wall_y(-hy, -hx, hx, 0.0, 2 * hz);
      s.wall_y(hy, -hx, hx, 0.0, 2 * hz);
      break;
    }
    case ObjectKind::Book: {
      const double w = param(params, "width", 0.13, 0.05, 0.3);
      const double d = param(params, "depth", 0.19, 0.05, 0.3);
      const double t = param(params, "thickness", 0.024, 0.008, 0.08);
      s.color = Vec3(0.6, 0.15, 0.15);
      s.slab(-w / 2, w / 2, -d / 2, d / 2, 0.0);
      s.slab(-w / 2, w / 2, -d / 2, d / 2, t);
      s.wall_x(-w / 2, -d / 2, d / 2, 0.0, t);
      s.wall_x(w / 2, -d / 2, d / 2, 0.0, t);
      s.wall_y(-d / 2, -w / 2, w / 2, 0.0, t);
      s.wall_y(d / 2, -w / 2, w / 2, 0.0, t);
      break;
    }
    case ObjectKind::Pen: {
      const double r = param(params, "radius", 0.005, 0.002, 0.012);
      const double len = param(params, "length", 0.14, 0.06, 0.3);
      s.color = Vec3(0.1, 0.1, 0.6);
      s.tube(0, 0, r, 0.0, len);
      s.disc(0, 0, 0.0, r);
      s.disc(0, 0, len, r);
      break;
    }
    case ObjectKind::HangerClothes: {
      const double bar = param(params, "bar_length", 0.3, 0.1, 0.5);
      const double apex_h = param(params, "apex_height", 0.1, 0.04, 0.25);
      s.color = Vec3(0.8, 0.8, 0.82);
      // triangle outline in the XZ plane, hook arc above the apex
      for (double x = -bar / 2; x <= bar / 2 + 1e-12; x += kStep) s.add(x, 0.0, 0.0);
      const int side = std::max(6, static_cast<int>(std::hypot(bar / 2, apex_h) / kStep));
      for (int i = 0; i <= side; ++i) {
        const double f = static_cast<double>(i) / side;
        s.add(-bar / 2 + f * bar / 2, 0.0, f * apex_h);
        s.add(bar / 2 - f * bar / 2, 0.0, f * apex_h);
      }
      const double hook_r = 0.016;
      for (int a = 0; a <= 20; ++a) {
        const double th = -M_PI / 2 + 1.6 * M_PI * a / 20;
        s.add(hook_r * std::cos(th), 0.0, apex_h + hook_r + hook_r * std::sin(th));
      }
      break;
    }
  }
  s.cloud.frame = to_string(kind);
  return s.cloud;
}

// =============================================================================
// Preferred orientations and semantic compatibility
// =============================================================================

namespace {

enum class AreaClass { Flat, Rack, Holder, Stem, Hang };

AreaClass area_class(AreaKind k) {
  switch (k) {
    case AreaKind::FlatTable:
    case AreaKind::Shelf:
      return AreaClass::Flat;
    case AreaKind::DishRack:
      return AreaClass::Rack;
    case AreaKind::PenHolder:
      return AreaClass::Holder;
    case AreaKind::StemwareHolder:
      return AreaClass::Stem;
    case AreaKind::Rod:
    case AreaKind::Hook:
      return AreaClass::Hang;
  }
  return AreaClass::Flat;
}

}  // namespace

bool preferred_orientation_ok(ObjectKind object_kind, AreaKind area_kind, const Rotation& rot,
                              double tol_deg) {
  const double ct = std::cos(tol_deg * M_PI / 180.0);   // "within tol of vertical"
  const double st = std::sin(tol_deg * M_PI / 180.0);   // "within tol of horizontal"
  const Vec3 axis = rot.apply(Vec3::UnitZ());
  const double az = axis.z();
  const AreaClass cls = area_class(area_kind);
  switch (object_kind) {
    case ObjectKind::Plate:
      if (cls == AreaClass::Flat) return std::abs(az) >= ct;  // flat on the surface
      if (cls == AreaClass::Rack) return std::abs(az) <= st;  // standing on edge
      return false;
    case ObjectKind::Bowl:
      if (cls == AreaClass::Flat) return az >= ct;  // opening up
      if (cls == AreaClass::Rack) return std::abs(az) <= st;
      return false;
    case ObjectKind::Mug:
      if (cls == AreaClass::Flat) return az >= ct;
      if (cls == AreaClass::Rack) return az <= -ct;  // upside down
      return false;
    case ObjectKind::Martini:
      if (cls == AreaClass::Flat) return az >= ct;
      if (cls == AreaClass::Stem) return az <= -ct;  // hangs upside down
      return false;
    case ObjectKind::Box: {
      if (cls != AreaClass::Flat) return false;
      const Mat3 m = rot.matrix();
      for (int a = 0; a < 3; ++a) {
        if (std::abs(m(2, a)) >= ct) return true;  // some face down
      }
      return false;
    }
    case ObjectKind::Book:
      if (cls == AreaClass::Flat) {
        if (area_kind == AreaKind::Shelf && std::abs(az) <= st) return true;  // spine up
        return std::abs(az) >= ct;  // lying flat
      }
      return false;
    case ObjectKind::Pen:
      if (cls == AreaClass::Flat) return std::abs(az) <= st;   // lying down
      if (cls == AreaClass::Holder) return std::abs(az) >= ct;  // standing
      return false;
    case ObjectKind::HangerClothes: {
      const Vec3 normal = rot.apply(Vec3::UnitY());
      if (cls == AreaClass::Hang) return std::abs(normal.z()) <= st;  // plane vertical
      if (cls == AreaClass::Flat) return std::abs(normal.z()) >= ct;  // lying flat
      return false;
    }
  }
  return false;
}

bool semantically_correct(ObjectKind object_kind, AreaKind area_kind) {
  const AreaClass cls = area_class(area_kind);
  switch (object_kind) {
    case ObjectKind::Plate:
    case ObjectKind::Bowl:
      return cls == AreaClass::Rack || area_kind == AreaKind::FlatTable;
    case ObjectKind::Mug:
      return area_kind == AreaKind::FlatTable || cls == AreaClass::Rack ||
             area_kind == AreaKind::Shelf;
    case ObjectKind::Martini:
      return cls == AreaClass::Stem || area_kind == AreaKind::FlatTable;
    case ObjectKind::Box:
      return cls == AreaClass::Flat;
    case ObjectKind::Book:
      return cls == AreaClass::Flat;
    case ObjectKind::Pen:
      return cls == AreaClass::Holder || area_kind == AreaKind::FlatTable;
    case ObjectKind::HangerClothes:
      return cls == AreaClass::Hang;
  }
  return false;
}

// =============================================================================
// Stability oracle
// =============================================================================

OracleLabel stability_oracle(const PointCloud& object, const PointCloud& base,
                             const Placement& placement, ObjectKind object_kind,
                             AreaKind area_kind, const OracleParams& params) {
  if (!collision_free(object, base, placement)) {
    throw Error("CollidingPlacement", "oracle requires a collision-free placement");
  }
  // settle by the falling distance
  Placement settled = placement;
  {
    const PointCloud placed = apply_placement(object, placement);
    const ContactSet pre = supporting_contact_set(placed, base, 0.05);
    if (!pre.gaps.empty() && std::isfinite(pre.gaps.front()) && pre.gaps.front() > 0.0) {
      settled.location.z() -= pre.gaps.front();
    }
  }
  const PointCloud placed = apply_placement(object, settled);
  const Vec3 com = placed.centroid();
  const ContactSet contacts = supporting_contact_set(placed, base, 0.05);

  OracleLabel label;
  bool support_ok = false;
  std::vector<Vec2> touching;
  for (std::size_t i = 0; i < contacts.indices.size(); ++i) {
    if (contacts.gaps[i] <= params.contact_gap) {
      const Vec3& p = base.points[static_cast<std::size_t>(contacts.indices[i])];
      touching.emplace_back(p.x(), p.y());
    }
  }
  if (touching.size() >= 3) {
    try {
      const ConvexPolygon2D hull = convex_hull_2d(touching);
      support_ok =
          distance_to_boundary(hull, Vec2(com.x(), com.y())) >= params.com_margin;
    } catch (const Error&) {
      support_ok = false;
    }
  }

  bool caged = false;
  if (!support_ok) {
    try {
      const ConvexPolygon2D footprint = footprint_hull(placed);
      bool dir_ok[4] = {false, false, false, false};  // +x, -x, +y, -y
      for (const Vec3& p : base.points) {
        if (p.z() <= com.z()) continue;
        if (distance_to_boundary(footprint, Vec2(p.x(), p.y())) < -params.caging_dilation) {
          continue;
        }
        const double dx = p.x() - com.x(), dy = p.y() - com.y();
        if (dx >= std::abs(dy)) dir_ok[0] = true;
        if (-dx >= std::abs(dy)) dir_ok[1] = true;
        if (dy >= std::abs(dx)) dir_ok[2] = true;
        if (-dy >= std::abs(dx)) dir_ok[3] = true;
        if (dir_ok[0] && dir_ok[1] && dir_ok[2] && dir_ok[3]) break;
      }
      caged = dir_ok[0] && dir_ok[1] && dir_ok[2] && dir_ok[3];
    } catch (const Error&) {
      caged = false;
    }
  }

  label.stable = support_ok || caged;
  label.preferred = label.stable && preferred_orientation_ok(object_kind, area_kind,
                                                             settled.rotation,
                                                             params.orientation_tol_deg);
  return label;
}

// =============================================================================
// Metrics
// =============================================================================

std::optional<double> metric_r0(const std::vector<int>& ranked_labels) {
  for (std::size_t i = 0; i < ranked_labels.size(); ++i) {
    if (ranked_labels[i] > 0) return static_cast<double>(i + 1);
  }
  return std::nullopt;
}

double metric_p_at_5(const std::vector<int>& ranked_labels) {
  int hits = 0;
  const std::size_t top = std::min<std::size_t>(5, ranked_labels.size());
  for (std::size_t i = 0; i < top; ++i) hits += ranked_labels[i] > 0 ? 1 : 0;
  return static_cast<double>(hits) / 5.0;
}

double metric_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty()) {
    throw Error("BadParams", "scores and labels must be parallel and non-empty");
  }
  std::size_t n_pos = 0, n_neg = 0;
  for (int l : labels) (l > 0 ? n_pos : n_neg) += 1;
  if (n_pos == 0 || n_neg == 0) {
    throw Error("SingleClass", "AUC needs both classes");
  }
  // average ranks (ascending scores), ties share the mean rank
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[static_cast<std::size_t>(a)] != scores[static_cast<std::size_t>(b)]) {
      return scores[static_cast<std::size_t>(a)] < scores[static_cast<std::size_t>(b)];
    }
    return a < b;
  });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() &&
           scores[static_cast<std::size_t>(order[j + 1])] ==
               scores[static_cast<std::size_t>(order[i])]) {
      ++j;
    }
    const double avg_rank = 0.5 * static_cast<double>((i + 1) + (j + 1));
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[static_cast<std::size_t>(order[k])] > 0) rank_sum_pos += avg_rank;
    }
    i = j + 1;
  }
  const double u = rank_sum_pos - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// =============================================================================
// Baselines
// =============================================================================

BaselineKind baseline_kind_from_string(const std::string& s) {
  if (s == "chance") return BaselineKind::Chance;
  if (s == "flat_upright") return BaselineKind::FlatUpright;
  if (s == "lowest_point") return BaselineKind::LowestPoint;
  if (s == "vertical") return BaselineKind::Vertical;
  if (s == "horizontal") return BaselineKind::Horizontal;
  if (s == "prior") return BaselineKind::Prior;
  throw Error("BadParams", "unknown baseline " + s);
}

std::string to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::Chance: return "chance";
    case BaselineKind::FlatUpright: return "flat_upright";
    case BaselineKind::LowestPoint: return "lowest_point";
    case BaselineKind::Vertical: return "vertical";
    case BaselineKind::Horizontal: return "horizontal";
    case BaselineKind::Prior: return "prior";
  }
  return "?";
}

namespace {

struct CandidateGeometry {
  double contact_z;    // resting height of the lowest object point
  bool vertical;       // z extent > smallest horizontal extent
  bool upright;        // orientation близко to identity
  bool on_flat_patch;  // support near the dominant base plane
};

std::vector<CandidateGeometry> candidate_geometry(const PointCloud& object,
                                                  const PointCloud& base,
                                                  const std::vector<Placement>& candidates) {
  // dominant base plane: the most populated 2 mm z-bin
  double flat_z = 0.0;
  bool has_flat = false;
  {
    Vec3 lo, hi;
    base.bounds(lo, hi);
    const int bins = std::max(1, static_cast<int>((hi.z() - lo.z()) / 0.002) + 1);
    std::vector<int> hist(static_cast<std::size_t>(bins), 0);
    for (const Vec3& p : base.points) {
      const int b = std::clamp(static_cast<int>((p.z() - lo.z()) / 0.002), 0, bins - 1);
      hist[static_cast<std::size_t>(b)] += 1;
    }
    const auto it = std::max_element(hist.begin(), hist.end());
    if (*it >= static_cast<int>(base.size() / 4)) {
      has_flat = true;
      flat_z = lo.z() + 0.002 * (static_cast<double>(it - hist.begin()) + 0.5);
    }
  }
  std::vector<CandidateGeometry> out;
  out.reserve(candidates.size());
  for (const Placement& pl : candidates) {
    const Mat3 m = pl.rotation.matrix();
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (const Vec3& p : object.points) {
      const Vec3 q = m * p;
      lo = lo.cwiseMin(q);
      hi = hi.cwiseMax(q);
    }
    CandidateGeometry g;
    g.contact_z = pl.location.z() + lo.z();
    const double zext = hi.z() - lo.z();
    const double min_horiz = std::min(hi.x() - lo.x(), hi.y() - lo.y());
    g.vertical = zext > min_horiz;
    g.upright = pl.rotation.angle_to(Rotation::identity()) <= 15.0 * M_PI / 180.0;
    g.on_flat_patch = has_flat && std::abs(g.contact_z - flat_z) <= 0.005;
    out.push_back(g);
  }
  return out;
}

std::vector<int> order_by_flag(const std::vector<CandidateGeometry>& geo,
                               bool CandidateGeometry::*flag, bool flag_first) {
  std::vector<int> order(geo.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const bool fa = geo[static_cast<std::size_t>(a)].*flag;
    const bool fb = geo[static_cast<std::size_t>(b)].*flag;
    if (fa != fb) return flag_first ? fa : !fa;
    return false;
  });
  return order;
}

}  // namespace

std::vector<int> baseline_rank(BaselineKind kind, const PointCloud& object,
                               const PointCloud& base, AreaKind area_kind,
                               const std::vector<Placement>& candidates, std::uint64_t seed) {
  if (candidates.empty()) {
    throw Error("BadParams", "baseline_rank needs candidates");
  }
  const auto geo = candidate_geometry(object, base, candidates);
  switch (kind) {
    case BaselineKind::Chance: {
      std::vector<int> order(candidates.size());
      std::iota(order.begin(), order.end(), 0);
      std::mt19937_64 rng(seed);
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng() % i]);
      }
      return order;
    }
    case BaselineKind::FlatUpright: {
      bool any_flat = false;
      for (const auto& g : geo) any_flat = any_flat || g.on_flat_patch;
      if (!any_flat) {
        return baseline_rank(BaselineKind::Chance, object, base, area_kind, candidates, seed);
      }
      std::vector<int> order(candidates.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const auto& ga = geo[static_cast<std::size_t>(a)];
        const auto& gb = geo[static_cast<std::size_t>(b)];
        const bool pa = ga.upright && ga.on_flat_patch;
        const bool pb = gb.upright && gb.on_flat_patch;
        if (pa != pb) return pa;
        return false;
      });
      return order;
    }
    case BaselineKind::LowestPoint: {
      std::vector<int> order(candidates.size());
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double za = geo[static_cast<std::size_t>(a)].contact_z;
        const double zb = geo[static_cast<std::size_t>(b)].contact_z;
        if (za != zb) return za < zb;
        return a < b;
      });
      return order;
    }
    case BaselineKind::Vertical:
      return order_by_flag(geo, &CandidateGeometry::vertical, true);
    case BaselineKind::Horizontal:
      return order_by_flag(geo, &CandidateGeometry::vertical, false);
    case BaselineKind::Prior: {
      const AreaClass cls = area_class(area_kind);
      const bool vertical_first = cls != AreaClass::Flat;
      return order_by_flag(geo, &CandidateGeometry::vertical, vertical_first);
    }
  }
  throw Error("BadParams", "unhandled baseline kind");
}

// =============================================================================
// Dataset assembly
// =============================================================================

Dataset build_dataset(const std::vector<TaskSpec>& tasks, const DatasetOptions& options,
                      std::uint64_t seed) {
  if (options.cache_semantic && (options.vocab == nullptr || !options.vocab->trained())) {
    throw Error("VocabularyMissing", "semantic caching requires a trained vocabulary");
  }
  Dataset out;
  out.stability_fingerprint = options.stability_config.name();

  std::uint64_t task_index = 0;
  for (const TaskSpec& spec : tasks) {
    const std::uint64_t task_seed = seed * 1000003ull + task_index;
    const PointCloud object =
        generate_object(spec.object_kind, spec.object_params, task_seed * 7ull + 1);
    const PointCloud area = generate_scene(spec.area_kind, spec.area_params, task_seed * 7ull + 2);
    const std::string object_id =
        spec.object_id.empty() ? to_string(spec.object_kind) : spec.object_id;
    const std::string area_id = spec.area_id.empty() ? to_string(spec.area_kind) : spec.area_id;
    const std::string task_name = object_id + "@" + area_id;

    std::vector<Placement> all = sample_placements(object, area, options.grid_step,
                                                   cube_orientations(), task_seed * 7ull + 3);
    // seeded subsample down to the requested count
    std::mt19937_64 rng(task_seed * 7ull + 4);
    std::vector<int> order(all.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng() % i]);
    }

    int pos = 0, neg = 0, taken = 0;
    for (int idx : order) {
      if (taken >= options.samples_per_pair) break;
      const Placement& pl = all[static_cast<std::size_t>(idx)];
      if (!collision_free(object, area, pl, options.clearance)) continue;
      OracleLabel label;
      try {
        label = stability_oracle(object, area, pl, spec.object_kind, spec.area_kind);
      } catch (const Error&) {
        continue;
      }
      LabeledPlacement row;
      row.task = task_name;
      row.object_id = object_id;
      row.area_id = area_id;
      row.placement = pl;
      row.stable = label.stable;
      row.preferred = label.preferred;
      out.rows.push_back(row);
      out.stability_features.push_back(
          stability_vector(object, area, pl, options.stability_config).values);
      if (options.cache_semantic) {
        out.semantic_features.push_back(
            semantic_vector(object, area, *options.vocab,
                            base_support_height(area, 0.0))
                .values);
      }
      (label.preferred ? pos : neg) += 1;
      ++taken;
    }
    out.task_counts[task_name] = {pos, neg};
    ++task_index;
  }
  return out;
}

namespace {

json placement_to_json(const Placement& pl) {
  return json{{"location", {pl.location.x(), pl.location.y(), pl.location.z()}},
              {"quaternion", {pl.rotation.w(), pl.rotation.x(), pl.rotation.y(), pl.rotation.z()}}};
}

void write_feature_file(const std::string& path, const std::vector<double>& values) {
  std::ofstream f(path);
  if (!f) throw Error("BadDatasetFile", "cannot open " + path);
  f << std::setprecision(17);
  for (std::size_t i = 0; i < values.size(); ++i) f << (i ? "," : "") << values[i];
  f << '\n';
}

std::vector<double> read_feature_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("BadDatasetFile", "cannot open " + path);
  std::string line;
  std::getline(f, line);
  std::vector<double> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

}  // namespace

void write_dataset(const std::string& dir, const Dataset& dataset) {
  fs::create_directories(fs::path(dir) / "features");
  std::ofstream rows(fs::path(dir) / "dataset.jsonl");
  if (!rows) throw Error("BadDatasetFile", "cannot open dataset.jsonl under " + dir);
  for (std::size_t i = 0; i < dataset.rows.size(); ++i) {
    const LabeledPlacement& row = dataset.rows[i];
    const std::string stab_rel = "features/row_" + std::to_string(i) + ".stab.csv";
    write_feature_file((fs::path(dir) / stab_rel).string(), dataset.stability_features[i]);
    std::string sem_rel;
    if (!dataset.semantic_features.empty()) {
      sem_rel = "features/row_" + std::to_string(i) + ".sem.csv";
      write_feature_file((fs::path(dir) / sem_rel).string(), dataset.semantic_features[i]);
    }
    json j = placement_to_json(row.placement);
    j["task"] = row.task;
    j["object_id"] = row.object_id;
    j["area_id"] = row.area_id;
    j["stable"] = row.stable;
    j["preferred"] = row.preferred;
    j["stability_features_path"] = stab_rel;
    j["semantic_features_path"] = sem_rel;
    rows << j.dump() << '\n';
  }
  json meta;
  meta["format_version"] = 1;
  meta["stability_config"] = dataset.stability_fingerprint;
  json counts = json::object();
  for (const auto& [task, pn] : dataset.task_counts) {
    counts[task] = {{"positive", pn.first}, {"negative", pn.second}};
  }
  meta["task_counts"] = counts;
  std::ofstream mf(fs::path(dir) / "meta.json");
  mf << meta.dump(2) << '\n';
}

Dataset read_dataset(const std::string& dir) {
  Dataset out;
  std::ifstream mf(fs::path(dir) / "meta.json");
  if (!mf) throw Error("BadDatasetFile", "cannot open meta.json under " + dir);
  json meta;
  mf >> meta;
  out.stability_fingerprint = meta.at("stability_config").get<std::string>();
  for (const auto& [task, pn] : meta.at("task_counts").items()) {
    out.task_counts[task] = {pn.at("positive").get<int>(), pn.at("negative").get<int>()};
  }
  std::ifstream rows(fs::path(dir) / "dataset.jsonl");
  if (!rows) throw Error("BadDatasetFile", "cannot open dataset.jsonl under " + dir);
  std::string line;
  while (std::getline(rows, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    LabeledPlacement row;
    row.task = j.at("task").get<std::string>();
    row.object_id = j.at("object_id").get<std::string>();
    row.area_id = j.at("area_id").get<std::string>();
    const auto loc = j.at("location");
    row.placement.location = Vec3(loc[0].get<double>(), loc[1].get<double>(), loc[2].get<double>());
    const auto q = j.at("quaternion");
    row.placement.rotation = Rotation(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
                                      q[3].get<double>());
    row.stability_features_path = j.at("stability_features_path").get<std::string>();
    row.semantic_features_path = j.at("semantic_features_path").get<std::string>();
    row.stable = j.at("stable").get<bool>();
    row.preferred = j.at("preferred").get<bool>();
    out.stability_features.push_back(
        read_feature_file((fs::path(dir) / row.stability_features_path).string()));
    if (!row.semantic_features_path.empty()) {
      out.semantic_features.push_back(
          read_feature_file((fs::path(dir) / row.semantic_features_path).string()));
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

// =============================================================================
// Evaluation report
// =============================================================================

std::string EvalReport::to_table() const {
  std::ostringstream os;
  os << std::left << std::setw(18) << "method";
  std::vector<std::string> tasks;
  if (!methods.empty()) {
    for (const TaskMetrics& t : methods.front().second) tasks.push_back(t.task);
  }
  for (const std::string& t : tasks) os << std::setw(26) << t;
  os << std::setw(26) << "Average" << '\n';
  os << std::left << std::setw(18) << "";
  for (std::size_t i = 0; i <= tasks.size(); ++i) {
    os << std::setw(8) << "R0" << std::setw(8) << "P@5" << std::setw(10) << "AUC";
  }
  os << '\n';
  for (const auto& [name, metrics] : methods) {
    os << std::left << std::setw(18) << name;
    double r0_sum = 0.0, p5_sum = 0.0, auc_sum = 0.0;
    int r0_n = 0;
    for (const TaskMetrics& t : metrics) {
      if (t.r0.has_value()) {
        os << std::setw(8) << std::fixed << std::setprecision(1) << *t.r0;
        r0_sum += *t.r0;
        ++r0_n;
      } else {
        os << std::setw(8) << "-";
      }
      os << std::setw(8) << std::setprecision(2) << t.p_at_5 << std::setw(10)
         << std::setprecision(2) << t.auc;
      p5_sum += t.p_at_5;
      auc_sum += t.auc;
    }
    const double nn = metrics.empty() ? 1.0 : static_cast<double>(metrics.size());
    if (r0_n > 0) {
      os << std::setw(8) << std::setprecision(1) << r0_sum / r0_n;
    } else {
      os << std::setw(8) << "-";
    }
    os << std::setw(8) << std::setprecision(2) << p5_sum / nn << std::setw(10)
       << std::setprecision(2) << auc_sum / nn << '\n';
  }
  return os.str();
}

std::string EvalReport::to_json() const {
  json j;
  j["format_version"] = 1;
  json ms = json::array();
  for (const auto& [name, metrics] : methods) {
    json tasks = json::array();
    for (const TaskMetrics& t : metrics) {
      json tj;
      tj["task"] = t.task;
      if (t.r0.has_value()) tj["r0"] = *t.r0;
      else tj["r0"] = nullptr;
      tj["p_at_5"] = t.p_at_5;
      tj["auc"] = t.auc;
      tasks.push_back(tj);
    }
    ms.push_back(json{{"method", name}, {"tasks", tasks}});
  }
  j["methods"] = ms;
  return j.dump(2);
}

}  // namespace placekit
