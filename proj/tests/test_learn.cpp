#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "placekit/geometry.hpp"
#include "placekit/learn.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <sstream>

using namespace placekit;

namespace {

TrainingSet separable_2d(std::uint64_t seed, int n_per_class = 30) {
  TrainingSet data;
  data.feature_fingerprint = "toy2";
  std::mt19937_64 rng(seed);
  for (int i = 0; i < n_per_class; ++i) {
    TrainingExample pos;
    pos.features = {uniform_in(rng, 1.0, 2.0), uniform_in(rng, -1.0, 1.0)};
    pos.label = 1;
    data.examples.push_back(pos);
    TrainingExample neg;
    neg.features = {uniform_in(rng, -2.0, -1.0), uniform_in(rng, -1.0, 1.0)};
    neg.label = -1;
    data.examples.push_back(neg);
  }
  return data;
}

double primal_objective(const LinearModel& m, const TrainingSet& data, double C) {
  double obj = 0.0;
  for (double w : m.weights) obj += 0.5 * w * w;
  for (const auto& e : data.examples) {
    obj += C * std::max(0.0, 1.0 - e.label * score(m, e.features));
  }
  return obj;
}

}  // namespace

// =============================================================================
// Linear SVM
// =============================================================================

TEST_CASE("linear svm separates separable data with zero slack") {
  const TrainingSet data = separable_2d(1);
  const LinearModel m = train_svm(data, 1.0, 7);
  for (const auto& e : data.examples) {
    const double s = score(m, e.features);
    CHECK(e.label * s > 0.0);                  // 100% training accuracy
    CHECK(e.label * s >= 1.0 - 1e-6);          // slack below 1e-6
  }
}

TEST_CASE("linear svm weights shrink with C") {
  const TrainingSet data = separable_2d(2);
  double prev_norm = -1.0;
  for (double C : {1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
    const LinearModel m = train_svm(data, C, 7);
    double norm = 0.0;
    for (double w : m.weights) norm += w * w;
    norm = std::sqrt(norm);
    if (prev_norm >= 0.0) {
      CHECK(norm >= prev_norm - 1e-6);  // monotone growth in C
    }
    prev_norm = norm;
  }
  const LinearModel tiny = train_svm(data, 1e-6, 7);
  double norm = 0.0;
  for (double w : tiny.weights) norm += w * w;
  CHECK(std::sqrt(norm) < 1e-3);  // C -> 0+ drives the weights to zero
}

TEST_CASE("linear svm matches brute-force dual grid on 4 points") {
  TrainingSet data;
  data.feature_fingerprint = "toy2";
  data.examples.push_back({{1.0, 0.3}, 1, 0});
  data.examples.push_back({{0.4, 0.9}, 1, 0});
  data.examples.push_back({{-0.8, -0.2}, -1, 0});
  data.examples.push_back({{-0.1, -1.0}, -1, 0});
  const double C = 1.0;
  const LinearModel m = train_svm(data, C, 3);
  const double primal = primal_objective(m, data, C);

  // Oracle: coarse-to-fine grid over the dual simplex with the equality
  // constraint a1 + a2 = a3 + a4 eliminated through a4.
  const auto dual = [&](double a1, double a2, double a3, double a4) {
    const double alpha[4] = {a1, a2, a3, a4};
    double wx = 0.0, wy = 0.0, sum = 0.0;
    for (int i = 0; i < 4; ++i) {
      const double c = alpha[i] * data.examples[static_cast<std::size_t>(i)].label;
      wx += c * data.examples[static_cast<std::size_t>(i)].features[0];
      wy += c * data.examples[static_cast<std::size_t>(i)].features[1];
      sum += alpha[i];
    }
    return sum - 0.5 * (wx * wx + wy * wy);
  };
  double lo1 = 0, hi1 = C, lo2 = 0, hi2 = C, lo3 = 0, hi3 = C;
  double best = -1e30;
  for (int stage = 0; stage < 4; ++stage) {
    const int steps = 40;
    double b1 = lo1, b2 = lo2, b3 = lo3;
    for (int i = 0; i <= steps; ++i) {
      for (int j = 0; j <= steps; ++j) {
        for (int k = 0; k <= steps; ++k) {
          const double a1 = lo1 + (hi1 - lo1) * i / steps;
          const double a2 = lo2 + (hi2 - lo2) * j / steps;
          const double a3 = lo3 + (hi3 - lo3) * k / steps;
          const double a4 = a1 + a2 - a3;
          if (a4 < 0.0 || a4 > C) continue;
          const double d = dual(a1, a2, a3, a4);
          if (d > best) {
            best = d;
            b1 = a1;
            b2 = a2;
            b3 = a3;
          }
        }
      }
    }
    const auto zoom = [&](double center, double& lo, double& hi) {
      const double span = (hi - lo) / steps * 4.0;
      lo = std::max(0.0, center - span);
      hi = std::min(C, center + span);
    };
    zoom(b1, lo1, hi1);
    zoom(b2, lo2, hi2);
    zoom(b3, lo3, hi3);
  }
  CHECK(std::abs(primal - best) < 1e-4);
}

TEST_CASE("linear svm deterministic for a fixed seed") {
  const TrainingSet data = separable_2d(4, 15);
  const LinearModel a = train_svm(data, 0.7, 99);
  const LinearModel b = train_svm(data, 0.7, 99);
  CHECK(a.weights == b.weights);
  CHECK(a.bias == b.bias);
}

TEST_CASE("linear svm rejects bad inputs") {
  TrainingSet single;
  single.examples.push_back({{1.0}, 1, 0});
  single.examples.push_back({{2.0}, 1, 0});
  CHECK_THROWS_WITH_AS(train_svm(single, 1.0), doctest::Contains("SingleClass"), Error);

  TrainingSet bad;
  bad.examples.push_back({{std::nan("")}, 1, 0});
  bad.examples.push_back({{1.0}, -1, 0});
  CHECK_THROWS_WITH_AS(train_svm(bad, 1.0), doctest::Contains("BadFeature"), Error);
}

// =============================================================================
// Kernel SVM
// =============================================================================

TEST_CASE("kernel svm solves XOR") {
  TrainingSet data;
  data.feature_fingerprint = "xor";
  data.examples.push_back({{1.0, 1.0}, 1, 0});
  data.examples.push_back({{-1.0, -1.0}, 1, 0});
  data.examples.push_back({{1.0, -1.0}, -1, 0});
  data.examples.push_back({{-1.0, 1.0}, -1, 0});
  const KernelModel m = train_kernel_svm(data, 10.0);
  for (const auto& e : data.examples) {
    CHECK(e.label * score(m, e.features) > 0.0);
  }
  // dual feasibility 0 <= alpha <= C
  for (double coef : m.coefficients) {
    CHECK(std::abs(coef) <= 10.0 + 1e-6);
    CHECK(std::abs(coef) > 0.0);
  }
}

TEST_CASE("poly2 kernel matrix is PSD") {
  std::mt19937_64 rng(5);
  const int n = 40;
  std::vector<std::vector<double>> pts(n, std::vector<double>(3));
  for (auto& p : pts) {
    for (double& v : p) v = uniform_in(rng, -1, 1);
  }
  Eigen::MatrixXd gram(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double d = 0.0;
      for (int k = 0; k < 3; ++k) d += pts[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] * pts[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
      gram(i, j) = (d + 1.0) * (d + 1.0);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  CHECK(es.eigenvalues().minCoeff() >= -1e-8);
}

TEST_CASE("kernel svm matches explicit degree-2 feature map") {
  std::mt19937_64 rng(6);
  TrainingSet data;
  data.feature_fingerprint = "k2";
  for (int i = 0; i < 10; ++i) {
    TrainingExample e;
    e.features = {uniform_in(rng, -1, 1), uniform_in(rng, -1, 1)};
    e.label = (e.features[0] * e.features[1] > 0.0) ? 1 : -1;
    data.examples.push_back(e);
  }
  const double C = 5.0;
  const KernelModel km = train_kernel_svm(data, C);

  // explicit map of (x.y + 1)^2: [1, sqrt2 x1, sqrt2 x2, x1^2, x2^2, sqrt2 x1x2]
  const auto phi = [](const std::vector<double>& x) -> std::vector<double> {
    const double s2 = std::sqrt(2.0);
    return {1.0, s2 * x[0], s2 * x[1], x[0] * x[0], x[1] * x[1], s2 * x[0] * x[1]};
  };
  TrainingSet mapped;
  mapped.feature_fingerprint = "k2map";
  for (const auto& e : data.examples) {
    mapped.examples.push_back({phi(e.features), e.label, 0});
  }
  const LinearModel lm = train_svm(mapped, C, 11);
  for (const auto& e : data.examples) {
    const double dk = score(km, e.features);
    const double dl = score(lm, phi(e.features));
    CHECK(std::abs(dk - dl) < 1e-3);
  }
}

// =============================================================================
// Shared-sparsity multi-task SVM
// =============================================================================

namespace {

TrainingSet multitask_data(std::uint64_t seed, int tasks, int per_class, bool identical) {
  TrainingSet data;
  data.feature_fingerprint = "mt4";
  for (int t = 0; t < tasks; ++t) {
    std::mt19937_64 rng(identical ? seed : seed + static_cast<std::uint64_t>(t));
    for (int i = 0; i < per_class; ++i) {
      TrainingExample pos;
      pos.features = {uniform_in(rng, 0.5, 1.5), uniform_in(rng, -0.5, 0.5),
                      uniform_in(rng, -0.2, 0.2), uniform_in(rng, -0.2, 0.2)};
      pos.label = 1;
      pos.task = t;
      data.examples.push_back(pos);
      TrainingExample neg;
      neg.features = {uniform_in(rng, -1.5, -0.5), uniform_in(rng, -0.5, 0.5),
                      uniform_in(rng, -0.2, 0.2), uniform_in(rng, -0.2, 0.2)};
      neg.label = -1;
      neg.task = t;
      data.examples.push_back(neg);
    }
  }
  return data;
}

}  // namespace

TEST_CASE("shared sparsity: identical tasks agree and load the shared part") {
  const TrainingSet data = multitask_data(7, 3, 20, /*identical=*/true);
  const MultiTaskModel m = train_shared_sparsity(data, 1.0, 0.1, 0.1);
  REQUIRE(m.task_ids.size() == 3);
  // cosine distance between task weight vectors
  const auto cosdist = [](const std::vector<double>& a, const std::vector<double>& b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      ab += a[i] * b[i];
      aa += a[i] * a[i];
      bb += b[i] * b[i];
    }
    return 1.0 - ab / std::sqrt(std::max(aa * bb, 1e-300));
  };
  std::vector<std::vector<double>> thetas;
  for (int t = 0; t < 3; ++t) thetas.push_back(m.task_model(t).weights);
  CHECK(cosdist(thetas[0], thetas[1]) < 1e-2);
  CHECK(cosdist(thetas[0], thetas[2]) < 1e-2);
  double s_norm = 0.0, theta_norm = 0.0;
  for (const auto& row : m.task_specific) {
    for (double v : row) s_norm += std::abs(v);
  }
  for (const auto& th : thetas) {
    for (double v : th) theta_norm += std::abs(v);
  }
  CHECK(s_norm <= 0.1 * theta_norm);
}

TEST_CASE("shared sparsity: huge lambda_s kills the task-specific part") {
  const TrainingSet data = multitask_data(8, 2, 15, false);
  const MultiTaskModel m = train_shared_sparsity(data, 1.0, 1e6, 0.1);
  for (const auto& row : m.task_specific) {
    for (double v : row) CHECK(std::abs(v) <= 1e-6);
  }
  // the shared part still learns something
  double b_norm = 0.0;
  for (const auto& row : m.shared) {
    for (double v : row) b_norm += std::abs(v);
  }
  CHECK(b_norm > 1e-3);
}

TEST_CASE("shared sparsity: huge lambda_b kills the shared part") {
  const TrainingSet data = multitask_data(9, 2, 15, false);
  const MultiTaskModel m = train_shared_sparsity(data, 1.0, 0.1, 1e6);
  for (const auto& row : m.shared) {
    for (double v : row) CHECK(std::abs(v) <= 1e-6);
  }
}

TEST_CASE("shared sparsity: objective trace is non-increasing") {
  const TrainingSet data = multitask_data(10, 3, 12, false);
  const MultiTaskModel m = train_shared_sparsity(data, 1.0, 0.1, 0.1);
  REQUIRE(m.objective_trace.size() >= 2);
  for (std::size_t i = 1; i < m.objective_trace.size(); ++i) {
    CHECK(m.objective_trace[i] <= m.objective_trace[i - 1] + 1e-9);
  }
}

TEST_CASE("shared sparsity: single task rejected") {
  const TrainingSet data = multitask_data(11, 1, 10, false);
  CHECK_THROWS_WITH_AS(train_shared_sparsity(data, 1.0, 0.1, 0.1),
                       doctest::Contains("NeedMultipleTasks"), Error);
}

TEST_CASE("shared sparsity: deterministic") {
  const TrainingSet data = multitask_data(12, 2, 10, false);
  const MultiTaskModel a = train_shared_sparsity(data, 1.0, 0.1, 0.1);
  const MultiTaskModel b = train_shared_sparsity(data, 1.0, 0.1, 0.1);
  CHECK(a.task_specific == b.task_specific);
  CHECK(a.shared == b.shared);
  CHECK(a.intercepts == b.intercepts);
}

// =============================================================================
// Scoring and voting
// =============================================================================

TEST_CASE("score: analytic case") {
  LinearModel m;
  m.weights = {1.0, 0.0, 0.0};
  m.bias = 0.0;
  CHECK(score(m, {2.0, 0.0, 0.0}) == 2.0);
}

TEST_CASE("score: bias-adjusted linearity") {
  std::mt19937_64 rng(13);
  LinearModel m;
  m.weights = {0.3, -0.7, 1.1};
  m.bias = 0.42;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> p1(3), p2(3), mix(3);
    const double a = uniform_in(rng, -2, 2), b = uniform_in(rng, -2, 2);
    for (int i = 0; i < 3; ++i) {
      p1[static_cast<std::size_t>(i)] = uniform_in(rng, -1, 1);
      p2[static_cast<std::size_t>(i)] = uniform_in(rng, -1, 1);
      mix[static_cast<std::size_t>(i)] = a * p1[static_cast<std::size_t>(i)] + b * p2[static_cast<std::size_t>(i)];
    }
    const double lhs = score(m, mix);
    const double rhs = a * score(m, p1) + b * score(m, p2) + (a + b - 1.0) * m.bias;
    CHECK(std::abs(lhs - rhs) < 1e-9);
  }
}

TEST_CASE("score: fingerprint mismatch") {
  LinearModel m;
  m.weights = {1.0, 2.0};
  m.feature_fingerprint = "stab145";
  CHECK_THROWS_WITH_AS(score(m, {1.0, 2.0}, "sem801"), doctest::Contains("FeatureMismatch"),
                       Error);
  CHECK_THROWS_WITH_AS(score(m, {1.0, 2.0, 3.0}), doctest::Contains("FeatureMismatch"), Error);
}

TEST_CASE("vote_rank: single model equals its own ordering") {
  LinearModel m;
  m.weights = {1.0};
  std::vector<std::vector<double>> cands = {{0.2}, {0.9}, {-0.3}, {0.5}};
  const auto order = vote_rank({m}, cands);
  CHECK(order == std::vector<int>{1, 3, 0, 2});
}

TEST_CASE("vote_rank: opposite models tie to index order") {
  LinearModel up, down;
  up.weights = {1.0};
  down.weights = {-1.0};
  std::vector<std::vector<double>> cands = {{0.2}, {0.9}, {-0.3}, {0.5}};
  const auto order = vote_rank({up, down}, cands);
  CHECK(order == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("vote_rank: Borda oracle") {
  // three 1-d models scale scores differently but rank identically; a third
  // model with negated weights flips its ranking
  LinearModel m1, m2, m3;
  m1.weights = {1.0};
  m2.weights = {2.0};
  m3.weights = {-1.0};
  std::vector<std::vector<double>> cands = {{0.1}, {0.5}, {0.3}, {0.9}, {0.7}};
  // per-model ranks: m1/m2 rank candidates 3,4,1,2,0 -> ranks per candidate
  // m1: c0=5 c1=3 c2=4 c3=1 c4=2; m2 identical; m3 reversed: c0=1 c1=3 c2=2 c3=5 c4=4
  // mean: c0=11/3, c1=3, c2=10/3, c3=7/3, c4=8/3 -> order 3,4,1,2,0
  const auto order = vote_rank({m1, m2, m3}, cands);
  CHECK(order == std::vector<int>{3, 4, 1, 2, 0});
}

// =============================================================================
// Model files
// =============================================================================

TEST_CASE("model files round trip value-exactly") {
  const TrainingSet data = separable_2d(20, 10);
  ModelFile mf;
  mf.kind = "linear";
  mf.seed = 77;
  mf.linear = train_svm(data, 1.0, 77);
  std::stringstream ss;
  write_model(ss, mf);
  const ModelFile back = read_model(ss);
  CHECK(back.kind == "linear");
  CHECK(back.linear.weights == mf.linear.weights);
  CHECK(back.linear.bias == mf.linear.bias);
  CHECK(back.linear.feature_fingerprint == mf.linear.feature_fingerprint);

  ModelFile kf;
  kf.kind = "kernel";
  TrainingSet xo;
  xo.feature_fingerprint = "xor";
  xo.examples.push_back({{1.0, 1.0}, 1, 0});
  xo.examples.push_back({{-1.0, -1.0}, 1, 0});
  xo.examples.push_back({{1.0, -1.0}, -1, 0});
  xo.examples.push_back({{-1.0, 1.0}, -1, 0});
  kf.kernel = train_kernel_svm(xo, 10.0);
  std::stringstream ks;
  write_model(ks, kf);
  const ModelFile kback = read_model(ks);
  CHECK(kback.kernel.support_vectors == kf.kernel.support_vectors);
  CHECK(kback.kernel.coefficients == kf.kernel.coefficients);
  CHECK(kback.kernel.bias == kf.kernel.bias);

  ModelFile mtf;
  mtf.kind = "multitask";
  mtf.multitask = train_shared_sparsity(multitask_data(21, 2, 8, false), 1.0, 0.1, 0.1);
  std::stringstream ms;
  write_model(ms, mtf);
  const ModelFile mback = read_model(ms);
  CHECK(mback.multitask.task_specific == mtf.multitask.task_specific);
  CHECK(mback.multitask.shared == mtf.multitask.shared);
  CHECK(mback.multitask.intercepts == mtf.multitask.intercepts);
}
