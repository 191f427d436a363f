#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "placekit/bench.hpp"
#include "placekit/geometry.hpp"
#include "placekit/model.hpp"

#include <cmath>
#include <random>

using namespace placekit;

namespace {

// shared fixtures, built once
const BowVocabulary& test_vocab() {
  static const BowVocabulary vocab = [] {
    std::vector<PointCloud> corpus;
    corpus.push_back(generate_object(ObjectKind::Plate, {}, 1));
    corpus.push_back(generate_object(ObjectKind::Pen, {}, 2));
    corpus.push_back(generate_scene(AreaKind::FlatTable, {{"half_x", 0.1}, {"half_y", 0.1}}, 3));
    return train_bow_vocabulary(corpus, 17);
  }();
  return vocab;
}

LinearModel zero_model(int dim, const std::string& fp) {
  LinearModel m;
  m.weights.assign(static_cast<std::size_t>(dim), 0.0);
  m.bias = 0.0;
  m.feature_fingerprint = fp;
  return m;
}

}  // namespace

// =============================================================================
// Gate
// =============================================================================

TEST_CASE("gate: saturated margins") {
  double set = 0.0, unset = 0.0;
  gate_log_potentials(20.0, 20.0, set, unset);
  CHECK(std::exp(set) > 1.0 - 1e-8);
  CHECK(std::exp(unset) < 1e-8);
}

TEST_CASE("gate: AND behavior under a strongly negative stability margin") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    double set = 0.0, unset = 0.0;
    gate_log_potentials(-30.0, uniform_in(rng, -5.0, 25.0), set, unset);
    CHECK(std::exp(set) < 1e-8);
  }
}

TEST_CASE("gate: Psi(1) + Psi(0) = 1") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const double ms = uniform_in(rng, -30, 30), mp = uniform_in(rng, -30, 30);
    double set = 0.0, unset = 0.0;
    gate_log_potentials(ms, mp, set, unset);
    CHECK(std::abs(std::exp(set) + std::exp(unset) - 1.0) < 1e-12);
  }
}

TEST_CASE("gate: monotone in each margin") {
  double s1, u1, s2, u2;
  for (double other : {-3.0, 0.0, 3.0}) {
    double prev = -1e30;
    for (double m = -10.0; m <= 10.0; m += 0.5) {
      gate_log_potentials(m, other, s1, u1);
      CHECK(s1 >= prev);
      prev = s1;
    }
    prev = -1e30;
    for (double m = -10.0; m <= 10.0; m += 0.5) {
      gate_log_potentials(other, m, s2, u2);
      CHECK(s2 >= prev);
      prev = s2;
    }
  }
}

// =============================================================================
// Potentials
// =============================================================================

TEST_CASE("stability potential: zero model scores zero, deterministic") {
  const PointCloud plate = generate_object(ObjectKind::Plate, {}, 4);
  const PointCloud table = generate_scene(AreaKind::FlatTable, {}, 5);
  const LinearModel zero = zero_model(178, "multi178");
  Placement pl;
  pl.location = Vec3(0.01, 0.02, 0.012);
  CHECK(stability_potential(zero, plate, table, pl) == 0.0);

  LinearModel m = zero;
  std::mt19937_64 rng(6);
  for (double& w : m.weights) w = uniform_in(rng, -0.1, 0.1);
  const double a = stability_potential(m, plate, table, pl);
  const double b = stability_potential(m, plate, table, pl);
  CHECK(a == b);
  CHECK(std::isfinite(a));
}

TEST_CASE("semantic potential: independent of the placement location") {
  const PointCloud plate = generate_object(ObjectKind::Plate, {}, 7);
  const PointCloud table = generate_scene(AreaKind::FlatTable, {}, 8);
  LinearModel m = zero_model(801, "sem801");
  std::mt19937_64 rng(9);
  for (double& w : m.weights) w = uniform_in(rng, -0.05, 0.05);
  // phi_p takes no location at all; the API makes the independence structural.
  const double s1 = semantic_potential(m, test_vocab(), plate, table, 0.4);
  const double s2 = semantic_potential(m, test_vocab(), plate, table, 0.4);
  CHECK(s1 == s2);

  const LinearModel ms = zero_model(178, "multi178");
  const ScoredPlacement a = score_placement(ms, m, test_vocab(), plate, table,
                                            Placement{Vec3(0.0, 0.0, 0.012), Rotation(), {}}, 0.4);
  const ScoredPlacement b = score_placement(ms, m, test_vocab(), plate, table,
                                            Placement{Vec3(0.05, -0.03, 0.012), Rotation(), {}},
                                            0.4);
  CHECK(a.semantic_score == b.semantic_score);
}

TEST_CASE("stability potential: oracle-trained model prefers resting over hovering") {
  // plate + dish rack; features computed once, 20 training seeds
  const PointCloud plate =
      generate_object(ObjectKind::Plate, {{"radius", 0.07}, {"thickness", 0.012}}, 10);
  const PointCloud rack = generate_scene(
      AreaKind::DishRack, {{"pitch", 0.05}, {"nx", 4}, {"ny", 3}, {"spike_height", 0.09}}, 11);

  const auto candidates = sample_placements(plate, rack, 0.06, cube_orientations(), 12);
  const StabilityConfig cfg = StabilityConfig::multi178();
  TrainingSet data;
  data.feature_fingerprint = "multi178";
  for (const Placement& pl : candidates) {
    if (data.size() >= 150) break;
    if (!collision_free(plate, rack, pl)) continue;
    OracleLabel label;
    try {
      label = stability_oracle(plate, rack, pl, ObjectKind::Plate, AreaKind::DishRack);
    } catch (const Error&) {
      continue;
    }
    TrainingExample e;
    e.features = stability_vector(plate, rack, pl, cfg).values;
    e.label = label.preferred ? 1 : -1;
    data.examples.push_back(e);
  }
  REQUIRE(data.size() >= 50);

  // a resting vertical placement vs the identical pose hovering 5 cm up
  Placement resting;
  resting.rotation = Rotation::from_axis_angle(Vec3(1, 0, 0), M_PI / 2);
  resting.location = Vec3(0.0, -0.025, 0.075);  // plate plane between spike rows, hovering
  {
    const PointCloud posed = apply_placement(plate, resting);
    const ContactSet cs = supporting_contact_set(posed, rack, 0.05);
    resting.location.z() -= cs.gaps.front();  // settle
  }
  REQUIRE(collision_free(plate, rack, resting));
  Placement hovering = resting;
  hovering.location.z() += 0.05;
  const auto f_rest = stability_vector(plate, rack, resting, cfg).values;
  const auto f_hover = stability_vector(plate, rack, hovering, cfg).values;

  int agree = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const LinearModel m = train_svm(data, 1.0, seed + 1);
    if (score(m, f_rest) > score(m, f_hover)) ++agree;
  }
  CHECK(agree >= 18);
}

TEST_CASE("semantic potential: oracle-trained model prefers the rack for a plate") {
  // tasks over compatible/incompatible pairs; labels from the generator table
  const std::vector<ObjectKind> objs = {ObjectKind::Plate, ObjectKind::Bowl, ObjectKind::Pen,
                                        ObjectKind::Mug, ObjectKind::Box};
  const std::vector<AreaKind> areas = {AreaKind::DishRack, AreaKind::FlatTable,
                                       AreaKind::PenHolder};
  std::vector<PointCloud> obj_clouds, area_clouds;
  for (std::size_t i = 0; i < objs.size(); ++i) {
    obj_clouds.push_back(generate_object(objs[i], {}, 20 + i));
  }
  for (std::size_t i = 0; i < areas.size(); ++i) {
    area_clouds.push_back(generate_scene(areas[i], {}, 30 + i));
  }
  TrainingSet data;
  data.feature_fingerprint = "sem801";
  std::vector<double> plate_rack, plate_holder;
  for (std::size_t o = 0; o < objs.size(); ++o) {
    for (std::size_t a = 0; a < areas.size(); ++a) {
      const auto f =
          semantic_vector(obj_clouds[o], area_clouds[a], test_vocab(), 0.3 + 0.05 * a);
      if (objs[o] == ObjectKind::Plate && areas[a] == AreaKind::DishRack) plate_rack = f.values;
      if (objs[o] == ObjectKind::Plate && areas[a] == AreaKind::PenHolder) plate_holder = f.values;
      TrainingExample e;
      e.features = f.values;
      e.label = semantically_correct(objs[o], areas[a]) ? 1 : -1;
      data.examples.push_back(e);
    }
  }
  int agree = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const LinearModel m = train_svm(data, 1.0, seed + 1);
    if (score(m, plate_rack) > score(m, plate_holder)) ++agree;
  }
  CHECK(agree >= 18);
}

// =============================================================================
// Strategy scoring
// =============================================================================

namespace {

Scene two_box_scene() {
  Scene scene;
  scene.ground_z = 0.0;
  scene.objects.push_back(
      {"box_a", generate_object(ObjectKind::Box, {{"half_x", 0.05}, {"half_y", 0.05}}, 40)});
  scene.objects.push_back(
      {"box_b", generate_object(ObjectKind::Box, {{"half_x", 0.03}, {"half_y", 0.03}}, 41)});
  scene.environments.push_back(
      {"table", generate_scene(AreaKind::FlatTable, {{"half_x", 0.14}, {"half_y", 0.14}}, 42)});
  return scene;
}

CandidateSet small_candidates(const Scene& scene) {
  LinearModel ms = zero_model(178, "multi178");
  LinearModel mp = zero_model(801, "sem801");
  std::mt19937_64 rng(43);
  for (double& w : ms.weights) w = uniform_in(rng, -0.02, 0.02);
  for (double& w : mp.weights) w = uniform_in(rng, -0.02, 0.02);
  CandidateParams params;
  params.grid_step = 0.14;
  params.max_configs = 1;
  params.seed = 44;
  return build_candidates(scene, ms, mp, test_vocab(), params);
}

}  // namespace

TEST_CASE("strategy score: single candidate reduces to its own potential") {
  Scene scene;
  scene.ground_z = 0.0;
  scene.objects.push_back({"box", generate_object(ObjectKind::Box, {}, 50)});
  scene.environments.push_back(
      {"table", generate_scene(AreaKind::FlatTable, {{"half_x", 0.06}, {"half_y", 0.06}}, 51)});
  LinearModel ms = zero_model(178, "multi178");
  LinearModel mp = zero_model(801, "sem801");
  std::mt19937_64 rng(52);
  for (double& w : ms.weights) w = uniform_in(rng, -0.02, 0.02);
  CandidateParams params;
  params.grid_step = 0.2;  // single cell
  params.max_configs = 1;
  params.seed = 53;
  const CandidateSet cands = build_candidates(scene, ms, mp, test_vocab(), params);
  REQUIRE(cands.candidates.size() == 1);

  PlacingStrategy s = PlacingStrategy::empty(1, 1);
  s.placed_on[0][0] = 1;
  s.configs[0] = cands.candidates[0].placement.rotation;
  s.locations[0] = cands.candidates[0].placement.location;
  const double f = strategy_score(scene, cands, s);
  CHECK(f == doctest::Approx(cands.candidates[0].log_psi_set).epsilon(1e-12));
}

TEST_CASE("strategy score: swapping identical objects leaves the score unchanged") {
  Scene scene;
  scene.ground_z = 0.0;
  const PointCloud box = generate_object(ObjectKind::Box, {{"half_x", 0.03}}, 60);
  scene.objects.push_back({"first", box});
  scene.objects.push_back({"second", box});
  scene.environments.push_back(
      {"table", generate_scene(AreaKind::FlatTable, {{"half_x", 0.14}, {"half_y", 0.14}}, 61)});
  const CandidateSet cands = small_candidates(scene);

  // two distinct environment slots
  int c1 = -1, c2 = -1;
  for (std::size_t i = 0; i < cands.candidates.size(); ++i) {
    const Candidate& c = cands.candidates[i];
    if (c.base.kind != BaseRef::Kind::Environment) continue;
    if (c.object == 0 && c.location_index == 0 && c1 < 0) c1 = static_cast<int>(i);
    if (c.object == 1 && c.location_index == 1 && c2 < 0) c2 = static_cast<int>(i);
  }
  REQUIRE(c1 >= 0);
  REQUIRE(c2 >= 0);

  PlacingStrategy s = PlacingStrategy::empty(2, 1);
  s.placed_on[0][0] = 1;
  s.placed_on[1][0] = 1;
  s.configs[0] = cands.candidates[static_cast<std::size_t>(c1)].placement.rotation;
  s.locations[0] = cands.candidates[static_cast<std::size_t>(c1)].placement.location;
  s.configs[1] = cands.candidates[static_cast<std::size_t>(c2)].placement.rotation;
  s.locations[1] = cands.candidates[static_cast<std::size_t>(c2)].placement.location;
  const double f1 = strategy_score(scene, cands, s);

  PlacingStrategy swapped = s;
  std::swap(swapped.configs[0], swapped.configs[1]);
  std::swap(swapped.locations[0], swapped.locations[1]);
  const double f2 = strategy_score(scene, cands, swapped);
  CHECK(std::abs(f1 - f2) < 1e-9);
}

TEST_CASE("strategy score: below the brute-force maximum") {
  const Scene scene = two_box_scene();
  const CandidateSet cands = small_candidates(scene);

  // enumerate all pairs of environment candidates for the two objects
  std::vector<int> of0, of1;
  for (std::size_t i = 0; i < cands.candidates.size(); ++i) {
    if (cands.candidates[i].base.kind != BaseRef::Kind::Environment) continue;
    (cands.candidates[i].object == 0 ? of0 : of1).push_back(static_cast<int>(i));
  }
  REQUIRE(!of0.empty());
  REQUIRE(!of1.empty());
  double best = -1e30;
  std::vector<std::pair<int, int>> feasible;
  for (int a : of0) {
    for (int b : of1) {
      const Candidate& ca = cands.candidates[static_cast<std::size_t>(a)];
      const Candidate& cb = cands.candidates[static_cast<std::size_t>(b)];
      if (ca.location_index == cb.location_index) continue;  // slot clash
      PlacingStrategy s = PlacingStrategy::empty(2, 1);
      s.placed_on[0][0] = 1;
      s.placed_on[1][0] = 1;
      s.configs[0] = ca.placement.rotation;
      s.locations[0] = ca.placement.location;
      s.configs[1] = cb.placement.rotation;
      s.locations[1] = cb.placement.location;
      const double f = strategy_score(scene, cands, s);
      best = std::max(best, f);
      feasible.emplace_back(a, b);
    }
  }
  REQUIRE(!feasible.empty());
  // every feasible strategy scores at most the enumerated maximum
  std::mt19937_64 rng(70);
  for (int trial = 0; trial < 10; ++trial) {
    const auto& [a, b] = feasible[rng() % feasible.size()];
    const Candidate& ca = cands.candidates[static_cast<std::size_t>(a)];
    const Candidate& cb = cands.candidates[static_cast<std::size_t>(b)];
    PlacingStrategy s = PlacingStrategy::empty(2, 1);
    s.placed_on[0][0] = 1;
    s.placed_on[1][0] = 1;
    s.configs[0] = ca.placement.rotation;
    s.locations[0] = ca.placement.location;
    s.configs[1] = cb.placement.rotation;
    s.locations[1] = cb.placement.location;
    CHECK(strategy_score(scene, cands, s) <= best + 1e-9);
  }
}

TEST_CASE("strategy score: infeasible strategies are rejected") {
  const Scene scene = two_box_scene();
  const CandidateSet cands = small_candidates(scene);
  PlacingStrategy s = PlacingStrategy::empty(2, 1);
  s.placed_on[0][0] = 1;
  // object 1 unplaced -> coverage violation
  CHECK_THROWS_WITH_AS(strategy_score(scene, cands, s),
                       doctest::Contains("InfeasibleStrategy"), Error);
}
