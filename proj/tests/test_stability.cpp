#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "placekit/geometry.hpp"
#include "placekit/stability.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace placekit;

namespace {

PointCloud make_slab(double x0, double x1, double y0, double y1, double z, double step,
                     std::uint64_t jitter_seed = 0) {
  PointCloud c;
  std::mt19937_64 rng(jitter_seed);
  for (double x = x0; x <= x1 + 1e-12; x += step) {
    for (double y = y0; y <= y1 + 1e-12; y += step) {
      const double jx = jitter_seed ? uniform_in(rng, -1e-4, 1e-4) : 0.0;
      const double jy = jitter_seed ? uniform_in(rng, -1e-4, 1e-4) : 0.0;
      c.points.emplace_back(x + jx, y + jy, z);
    }
  }
  return c;
}

// Flat square plate sampled on both faces.
PointCloud make_flat_plate(double half, double thickness, double step) {
  PointCloud c;
  for (double x = -half; x <= half + 1e-12; x += step) {
    for (double y = -half; y <= half + 1e-12; y += step) {
      c.points.emplace_back(x, y, 0.0);
      c.points.emplace_back(x, y, thickness);
    }
  }
  return c;
}

// Vertical disc (plate stood on its rim), normal along Y, lightly jittered so
// nothing lands exactly on a histogram bin boundary.
PointCloud make_vertical_disc(double radius, double thickness, int n_ang, int n_rad) {
  PointCloud c;
  std::mt19937_64 rng(2024);
  for (int a = 0; a < n_ang; ++a) {
    const double th = 2.0 * M_PI * a / n_ang + 0.0007;
    for (int r = 1; r <= n_rad; ++r) {
      const double rr = radius * r / n_rad + uniform_in(rng, -1e-4, 1e-4);
      const double x = rr * std::cos(th);
      const double z = radius + rr * std::sin(th);
      const double jy = uniform_in(rng, -1e-4, 1e-4);
      c.points.emplace_back(x, -thickness / 2 + jy, z);
      c.points.emplace_back(x, thickness / 2 + jy, z);
    }
  }
  return c;
}

// Dish-rack: slab plus a grid of spikes, lightly jittered.
PointCloud make_rack(double half, double pitch, double spike_h, double step) {
  PointCloud c = make_slab(-half, half, -half, half, 0.0, step, 7);
  std::mt19937_64 rng(8);
  for (double sx = -half + pitch; sx < half; sx += pitch) {
    for (double sy = -half + pitch; sy < half; sy += pitch) {
      for (double z = step; z <= spike_h + 1e-12; z += step) {
        c.points.emplace_back(sx + uniform_in(rng, -1e-4, 1e-4),
                              sy + uniform_in(rng, -1e-4, 1e-4), z);
      }
    }
  }
  return c;
}

// Pen: thin vertical cylinder shell with a sampled bottom disc.
PointCloud make_pen(double radius, double height, int n_ang, int n_lay) {
  PointCloud c;
  for (int l = 0; l <= n_lay; ++l) {
    const double z = height * l / n_lay;
    for (int a = 0; a < n_ang; ++a) {
      const double th = 2.0 * M_PI * a / n_ang + 0.0003;
      c.points.emplace_back(radius * std::cos(th), radius * std::sin(th), z);
    }
  }
  for (int a = 0; a < n_ang; ++a) {
    const double th = 2.0 * M_PI * a / n_ang + 0.0011;
    c.points.emplace_back(0.5 * radius * std::cos(th), 0.5 * radius * std::sin(th), 0.0);
  }
  return c;
}

// Open cylindrical holder: funnel floor rising from an apex at the exact
// origin (index 0, so contact ties anchor there) plus a wall ring.
PointCloud make_holder(double inner_r, double wall_h, double floor_rise, int n_ang, int n_lay) {
  PointCloud c;
  c.points.emplace_back(0.0, 0.0, 0.0);  // index 0: apex, pen rests here
  const double fracs[] = {0.1, 0.15, 0.3, 0.45, 0.6, 0.75, 0.9};
  for (double fr : fracs) {
    const double rr = inner_r * fr;
    const double z = floor_rise * fr;
    for (int a = 0; a < 23; ++a) {
      const double th = 2.0 * M_PI * a / 23 + 0.0005;
      c.points.emplace_back(rr * std::cos(th), rr * std::sin(th), z);
    }
  }
  for (int l = 0; l <= n_lay; ++l) {
    const double z = wall_h * l / n_lay;
    for (int a = 0; a < n_ang; ++a) {
      const double th = 2.0 * M_PI * a / n_ang + 0.0009;
      c.points.emplace_back(inner_r * std::cos(th), inner_r * std::sin(th), z);
    }
  }
  return c;
}

}  // namespace

// =============================================================================
// Supporting contacts
// =============================================================================

TEST_CASE("supporting contacts: flush resting contact") {
  const PointCloud base = make_slab(-0.3, 0.3, -0.3, 0.3, 0.0, 0.01);
  const PointCloud plate = make_flat_plate(0.15, 0.01, 0.01);
  const auto f = supporting_contacts(plate, base, 0.05);
  REQUIRE(f.size() == 12);
  CHECK(std::abs(f[0]) < 1e-6);  // falling distance
  // contact hull tracks the footprint up to the 1 cm contact column
  CHECK(f[9] > 0.85);
  CHECK(f[9] < 1.3);
}

TEST_CASE("supporting contacts: hover gap is the falling distance") {
  const PointCloud base = make_slab(-0.15, 0.15, -0.15, 0.15, 0.0, 0.005);
  PointCloud plate = make_flat_plate(0.05, 0.01, 0.005);
  const double h = 0.037;
  for (Vec3& p : plate.points) p.z() += h;
  const auto f = supporting_contacts(plate, base, 0.05);
  CHECK(std::abs(f[0] - h) < 1e-6);
}

TEST_CASE("supporting contacts: exhaustive-sort oracle on a rack pose") {
  const PointCloud rack = make_rack(0.12, 0.04, 0.05, 0.008);
  const PointCloud plate = make_vertical_disc(0.09, 0.006, 60, 14);
  const auto fast = supporting_contacts(plate, rack, 0.05);

  // Oracle: brute-force vertical gaps in a 1 cm XY column (distance up to
  // object material above the base point), full sort with even spreading of
  // the boundary tie group, then the twelve features via plain loops.
  const std::size_t nb = rack.size();
  std::vector<std::pair<double, int>> gaps;
  for (std::size_t i = 0; i < nb; ++i) {
    double g = std::numeric_limits<double>::infinity();
    for (const Vec3& o : plate.points) {
      if (std::hypot(o.x() - rack.points[i].x(), o.y() - rack.points[i].y()) <= 0.01) {
        const double dz = o.z() - rack.points[i].z();
        if (dz >= -1e-9) g = std::min(g, dz);
      }
    }
    if (std::isfinite(g)) gaps.emplace_back(g, static_cast<int>(i));
  }
  std::sort(gaps.begin(), gaps.end());
  std::size_t k = static_cast<std::size_t>(std::ceil(0.05 * static_cast<double>(nb) - 1e-12));
  k = std::clamp<std::size_t>(k, 3, 200);
  k = std::min(k, gaps.size());
  REQUIRE(k >= 3);
  const double cutoff = gaps[k - 1].first;
  std::size_t tb = k, te = k;
  while (tb > 0 && cutoff - gaps[tb - 1].first <= 1e-9) --tb;
  while (te < gaps.size() && gaps[te].first - cutoff <= 1e-9) ++te;
  std::vector<std::pair<double, int>> sel(gaps.begin(), gaps.begin() + tb);
  const std::size_t slots = k - tb, group = te - tb;
  for (std::size_t i = 0; i < slots; ++i) sel.push_back(gaps[tb + i * group / slots]);
  std::sort(sel.begin(), sel.end());

  std::vector<Vec3> cpts;
  for (std::size_t i = 0; i < k; ++i) cpts.push_back(rack.points[sel[i].second]);
  std::vector<double> expect(12, 0.0);
  expect[0] = sel[0].first;
  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : cpts) mean += p;
  mean /= static_cast<double>(k);
  for (const Vec3& p : cpts) {
    expect[1] += (p.x() - mean.x()) * (p.x() - mean.x()) + (p.y() - mean.y()) * (p.y() - mean.y());
    expect[2] += (p.z() - mean.z()) * (p.z() - mean.z());
  }
  expect[1] /= static_cast<double>(k);
  expect[2] /= static_cast<double>(k);
  const auto ev = covariance_eigenvalues(cpts);
  expect[3] = ev[0];
  expect[4] = ev[1];
  expect[5] = ev[2];
  expect[6] = ev[0] > 1e-12 ? ev[1] / ev[0] : 0.0;
  expect[7] = ev[1] > 1e-12 ? ev[2] / ev[1] : 0.0;
  std::vector<Vec2> cxy;
  for (const Vec3& p : cpts) cxy.emplace_back(p.x(), p.y());
  const Vec3 oc = plate.centroid();
  try {
    const ConvexPolygon2D hull = convex_hull_2d(cxy);
    expect[8] = distance_to_boundary(hull, Vec2(oc.x(), oc.y()));
    const double obj_area = footprint_hull(plate).area();
    expect[9] = obj_area > 1e-12 ? hull.area() / obj_area : 0.0;
  } catch (const Error&) {
    expect[8] = -plate.radius_xy();
    expect[9] = 0.0;
  }
  double plane_z = -std::numeric_limits<double>::infinity();
  for (const Vec3& p : cpts) plane_z = std::max(plane_z, p.z());
  double below = 0, above = 0;
  for (const Vec3& p : plate.points) {
    if (p.z() < plane_z) ++below;
    else if (p.z() > plane_z) ++above;
  }
  expect[10] = below / static_cast<double>(plate.size());
  expect[11] = above / static_cast<double>(plate.size());

  for (int i = 0; i < 12; ++i) {
    CAPTURE(i);
    CHECK(std::abs(fast[i] - expect[i]) < 1e-9);
  }
}

// =============================================================================
// Caging
// =============================================================================

TEST_CASE("caging: pen in a narrow holder") {
  // Wall taller than the pen midpoint and within the covering cylinder.
  const PointCloud pen = make_pen(0.005, 0.10, 24, 30);
  const PointCloud holder = make_holder(0.009, 0.07, 0.002, 36, 40);
  const auto f = caging_features(pen, holder, StabilityConfig::single145());
  REQUIRE(f.size() == 37);
  // middle vertical level gaps: entries 9+4..9+7
  for (int d = 0; d < 4; ++d) {
    CAPTURE(d);
    CHECK(f[9 + 4 + d] < 0.009);
  }
  // all 16 height-histogram entries positive
  for (int i = 21; i < 37; ++i) {
    CAPTURE(i);
    CHECK(f[i] > 0.0);
  }
}

TEST_CASE("caging: flat slab gives sentinel gaps") {
  const PointCloud plate = make_flat_plate(0.05, 0.01, 0.005);
  const PointCloud base = make_slab(-0.5, 0.5, -0.5, 0.5, 0.0, 0.01);
  const auto f = caging_features(plate, base, StabilityConfig::single145());
  for (int i = 9; i < 21; ++i) {
    CAPTURE(i);
    CHECK(f[i] == kCagingGapSentinel);
  }
}

TEST_CASE("caging: height histogram invariant when base spins about the object axis") {
  const PointCloud pen = make_pen(0.005, 0.10, 24, 30);
  const PointCloud holder = make_holder(0.012, 0.07, 0.002, 36, 40);
  const StabilityConfig cfg = StabilityConfig::single145();
  const auto ref = caging_features(pen, holder, cfg);
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    const double angle = uniform_in(rng, 0.0, 2.0 * M_PI);
    const Rotation rz = Rotation::from_axis_angle(Vec3(0, 0, 1), angle);
    const PointCloud spun = transform_cloud(holder, rz, Vec3::Zero());
    const auto f = caging_features(pen, spun, cfg);
    for (int i = 21; i < 37; ++i) {
      CAPTURE(trial);
      CAPTURE(i);
      CHECK(std::abs(f[i] - ref[i]) < 1e-6);
    }
  }
}

TEST_CASE("caging: histogram max is in the first sector column") {
  const PointCloud pen = make_pen(0.005, 0.10, 24, 30);
  const PointCloud holder = make_holder(0.012, 0.07, 0.002, 36, 40);
  const StabilityConfig cfg = StabilityConfig::single145();
  const auto f = caging_features(pen, holder, cfg);
  const double global_max = *std::max_element(f.begin() + 21, f.end());
  double col_max = 0.0;
  for (int r = 0; r < cfg.n_r; ++r) {
    col_max = std::max(col_max, f[21 + r * cfg.n_theta]);
  }
  CHECK(col_max == doctest::Approx(global_max).epsilon(1e-12));
}

TEST_CASE("caging: multi178 variant emits 4 histogram values") {
  const PointCloud pen = make_pen(0.005, 0.10, 24, 30);
  const PointCloud holder = make_holder(0.012, 0.07, 0.002, 36, 40);
  const auto f = caging_features(pen, holder, StabilityConfig::multi178());
  CHECK(f.size() == 4);
}

// =============================================================================
// Placement histograms
// =============================================================================

TEST_CASE("placement histograms: empty environment") {
  PointCloud obj = make_flat_plate(0.05, 0.02, 0.005);
  PointCloud base;
  base.points.emplace_back(5.0, 5.0, 5.0);  // far outside the cylinder
  const StabilityConfig cfg = StabilityConfig::single145();
  const auto f = placement_histograms(obj, base, cfg);
  REQUIRE(f.size() == 96);
  const int cells = cfg.n_z * cfg.n_rho;
  for (int i = 0; i < cells; ++i) {
    CHECK(f[cells + i] == 0.0);  // base block zero
    if (f[i] > 0.0) {
      CHECK(f[2 * cells + i] == cfg.ratio_cap);
    } else {
      CHECK(f[2 * cells + i] == 0.0);
    }
  }
}

TEST_CASE("placement histograms: swapped symmetric roles swap blocks") {
  PointCloud a = make_flat_plate(0.05, 0.02, 0.005);
  PointCloud b = a;
  for (Vec3& p : b.points) p.z() += 0.01;  // same shape, slight offset
  const StabilityConfig cfg = StabilityConfig::multi178();
  const auto ab = placement_histograms(a, b, cfg);
  const int cells = cfg.n_z * cfg.n_rho;
  // Swapping roles recenters the cylinder on the other cloud; with identical
  // shapes the object/base blocks mirror.
  PointCloud a2 = b, b2 = a;
  const auto ba = placement_histograms(a2, b2, cfg);
  for (int i = 0; i < cells; ++i) {
    CHECK(ab[i] == ba[i]);  // object block counts identical for equal shapes
  }
}

TEST_CASE("placement histograms: naive binning oracle") {
  std::mt19937_64 rng(55);
  PointCloud obj, base;
  for (int i = 0; i < 400; ++i) {
    obj.points.emplace_back(uniform_in(rng, -0.05, 0.05), uniform_in(rng, -0.05, 0.05),
                            uniform_in(rng, 0.0, 0.04));
    base.points.emplace_back(uniform_in(rng, -0.2, 0.2), uniform_in(rng, -0.2, 0.2),
                             uniform_in(rng, -0.02, 0.06));
  }
  const StabilityConfig cfg = StabilityConfig::single145();
  const auto f = placement_histograms(obj, base, cfg);
  const int nz = cfg.n_z, nr = cfg.n_rho;
  const int cells = nz * nr;

  const Vec3 c = obj.centroid();
  const double h = obj.height(), r = obj.radius_xy();
  const double cyl_h = h * nz / (nz - 2.0), cyl_r = r * nr / (nr - 2.0);
  const double z0 = c.z() - cyl_h / 2;
  std::vector<double> oc(cells, 0.0), bc(cells, 0.0);
  const auto naive = [&](const PointCloud& cl, std::vector<double>& out) {
    for (const Vec3& p : cl.points) {
      const double d = std::hypot(p.x() - c.x(), p.y() - c.y());
      const double dz = p.z() - z0;
      if (d > cyl_r || dz < 0 || dz > cyl_h) continue;
      out[std::min(nz - 1, int(dz / cyl_h * nz)) * nr + std::min(nr - 1, int(d / cyl_r * nr))] +=
          1.0;
    }
  };
  naive(obj, oc);
  naive(base, bc);
  for (int i = 0; i < cells; ++i) {
    CHECK(f[i] == oc[i]);
    CHECK(f[cells + i] == bc[i]);
  }
}

TEST_CASE("placement histograms: degenerate object rejected") {
  PointCloud flat;  // zero height
  for (int i = 0; i < 10; ++i) flat.points.emplace_back(0.01 * i, 0.0, 0.0);
  const PointCloud base = make_slab(-0.1, 0.1, -0.1, 0.1, 0.0, 0.01);
  CHECK_THROWS_WITH_AS(placement_histograms(flat, base, StabilityConfig::single145()),
                       doctest::Contains("DegenerateObject"), Error);
}

// =============================================================================
// Full vector
// =============================================================================

TEST_CASE("stability vector lengths: 145 and 178") {
  const PointCloud rack = make_rack(0.12, 0.04, 0.05, 0.01);
  const PointCloud plate = make_vertical_disc(0.09, 0.006, 40, 10);
  Placement pl;  // plate cloud is already posed; identity placement
  const auto f145 = stability_vector(plate, rack, pl, StabilityConfig::single145());
  CHECK(f145.values.size() == 145);
  const auto f178 = stability_vector(plate, rack, pl, StabilityConfig::multi178());
  CHECK(f178.values.size() == 178);
}

TEST_CASE("stability vector deterministic") {
  const PointCloud rack = make_rack(0.12, 0.04, 0.05, 0.01);
  const PointCloud plate = make_vertical_disc(0.09, 0.006, 40, 10);
  Placement pl;
  pl.location = Vec3(0.01, -0.02, 0.0);
  const auto a = stability_vector(plate, rack, pl, StabilityConfig::single145());
  const auto b = stability_vector(plate, rack, pl, StabilityConfig::single145());
  CHECK(a.values == b.values);
}

TEST_CASE("stability vector: joint Z-rotation and translation invariance") {
  // Jittered clouds so nothing sits exactly on a bin boundary.
  const PointCloud rack = make_rack(0.12, 0.04, 0.05, 0.012);
  const PointCloud plate = make_vertical_disc(0.0905, 0.006, 36, 9);
  const StabilityConfig cfg = StabilityConfig::single145();
  Placement pl;
  pl.location = Vec3(0.013, -0.011, 0.0017);
  const auto ref = stability_vector(plate, rack, pl, cfg);

  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    const double ang = uniform_in(rng, 0.0, 2.0 * M_PI);
    const Rotation rz = Rotation::from_axis_angle(Vec3(0, 0, 1), ang);
    const Vec3 t(uniform_in(rng, -0.5, 0.5), uniform_in(rng, -0.5, 0.5),
                 uniform_in(rng, -0.5, 0.5));
    const PointCloud rack2 = transform_cloud(rack, rz, t);
    Placement pl2;
    pl2.rotation = rz.compose(pl.rotation);
    pl2.location = rz.apply(pl.location) + t;
    const auto got = stability_vector(plate, rack2, pl2, cfg);
    // supporting-contact block and histogram block are invariant
    for (int i = 0; i < 12; ++i) {
      CAPTURE(trial);
      CAPTURE(i);
      CHECK(std::abs(got.values[i] - ref.values[i]) < 1e-6);
    }
    for (int i = 49; i < 145; ++i) {
      CAPTURE(trial);
      CAPTURE(i);
      CHECK(std::abs(got.values[i] - ref.values[i]) < 1e-6);
    }
  }
}

TEST_CASE("stability vector: caging zone block invariant at 90 degree steps") {
  const PointCloud rack = make_rack(0.12, 0.04, 0.05, 0.012);
  const PointCloud plate = make_vertical_disc(0.0905, 0.006, 36, 9);
  const StabilityConfig cfg = StabilityConfig::single145();
  Placement pl;
  pl.location = Vec3(0.013, -0.011, 0.0017);
  const auto ref = stability_vector(plate, rack, pl, cfg);
  for (int quarter = 1; quarter < 4; ++quarter) {
    const Rotation rz = Rotation::from_axis_angle(Vec3(0, 0, 1), quarter * M_PI / 2);
    const PointCloud rack2 = transform_cloud(rack, rz, Vec3::Zero());
    Placement pl2;
    pl2.rotation = rz.compose(pl.rotation);
    pl2.location = rz.apply(pl.location);
    const auto got = stability_vector(plate, rack2, pl2, cfg);
    // 9 region heights are permuted by the rotation; compare as multisets.
    std::vector<double> a(ref.values.begin() + 12, ref.values.begin() + 21);
    std::vector<double> b(got.values.begin() + 12, got.values.begin() + 21);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    for (int i = 0; i < 9; ++i) CHECK(std::abs(a[i] - b[i]) < 1e-6);
    // 12 gaps likewise permute within each vertical level.
    for (int lvl = 0; lvl < 3; ++lvl) {
      std::vector<double> ga(ref.values.begin() + 21 + 4 * lvl,
                             ref.values.begin() + 21 + 4 * (lvl + 1));
      std::vector<double> gb(got.values.begin() + 21 + 4 * lvl,
                             got.values.begin() + 21 + 4 * (lvl + 1));
      std::sort(ga.begin(), ga.end());
      std::sort(gb.begin(), gb.end());
      for (int i = 0; i < 4; ++i) {
        CAPTURE(quarter);
        CAPTURE(lvl);
        CHECK(std::abs(ga[i] - gb[i]) < 1e-6);
      }
    }
  }
}
