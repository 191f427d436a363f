#include "placekit/semantic.hpp"

#include "placekit/geometry.hpp"
#include "placekit/kdtree.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace placekit {

// =============================================================================
// Minimal bounding sphere (Welzl, move-to-front, deterministic shuffle)
// =============================================================================

namespace {

struct Ball {
  Vec3 center = Vec3::Zero();
  double r2 = -1.0;  // squared radius, negative = invalid
  bool contains(const Vec3& p) const {
    return r2 >= 0.0 && (p - center).squaredNorm() <= r2 * (1.0 + 1e-12) + 1e-24;
  }
};

Ball ball_from(const Vec3& a) { return {a, 0.0}; }

Ball ball_from(const Vec3& a, const Vec3& b) {
  Ball out;
  out.center = 0.5 * (a + b);
  out.r2 = (a - out.center).squaredNorm();
  return out;
}

Ball ball_from(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 u = b - a, v = c - a, w = u.cross(v);
  Mat3 m;
  m.row(0) = u;
  m.row(1) = v;
  m.row(2) = w;
  if (std::abs(m.determinant()) < 1e-18) {
    // Collinear support: widest pair.
    Ball best = ball_from(a, b);
    for (const Ball& cand : {ball_from(a, c), ball_from(b, c)}) {
      if (cand.r2 > best.r2) best = cand;
    }
    return best;
  }
  const Vec3 rhs(0.5 * u.squaredNorm(), 0.5 * v.squaredNorm(), 0.0);
  Ball out;
  out.center = a + m.colPivHouseholderQr().solve(rhs).eval();
  out.r2 = (a - out.center).squaredNorm();
  return out;
}

Ball ball_from(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  Mat3 m;
  m.row(0) = b - a;
  m.row(1) = c - a;
  m.row(2) = d - a;
  if (std::abs(m.determinant()) < 1e-18) {
    Ball best;
    for (const Ball& cand :
         {ball_from(a, b, c), ball_from(a, b, d), ball_from(a, c, d), ball_from(b, c, d)}) {
      if (cand.contains(a) && cand.contains(b) && cand.contains(c) && cand.contains(d) &&
          (best.r2 < 0.0 || cand.r2 < best.r2)) {
        best = cand;
      }
    }
    if (best.r2 >= 0.0) return best;
    return ball_from(a, b, c);
  }
  const Vec3 rhs(0.5 * (b - a).squaredNorm(), 0.5 * (c - a).squaredNorm(),
                 0.5 * (d - a).squaredNorm());
  Ball out;
  out.center = a + m.colPivHouseholderQr().solve(rhs).eval();
  out.r2 = (a - out.center).squaredNorm();
  return out;
}

Ball minimal_ball(const std::vector<Vec3>& input) {
  std::vector<Vec3> pts = input;
  std::mt19937_64 rng(0x5eed);
  for (std::size_t i = pts.size(); i > 1; --i) {
    std::swap(pts[i - 1], pts[rng() % i]);
  }
  const std::size_t n = pts.size();
  Ball ball = ball_from(pts[0]);
  for (std::size_t i = 1; i < n; ++i) {
    if (ball.contains(pts[i])) continue;
    ball = ball_from(pts[i]);
    for (std::size_t j = 0; j < i; ++j) {
      if (ball.contains(pts[j])) continue;
      ball = ball_from(pts[i], pts[j]);
      for (std::size_t k = 0; k < j; ++k) {
        if (ball.contains(pts[k])) continue;
        ball = ball_from(pts[i], pts[j], pts[k]);
        for (std::size_t l = 0; l < k; ++l) {
          if (ball.contains(pts[l])) continue;
          ball = ball_from(pts[i], pts[j], pts[k], pts[l]);
        }
      }
    }
  }
  return ball;
}

}  // namespace

// =============================================================================
// 3D Zernike descriptor
// =============================================================================

namespace {

constexpr int kZernikeOrder = 11;
constexpr int kZernikeGrid = 64;
constexpr int kZernikeCount = 37;

double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double out = 1.0;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

// Radial polynomial: R_nl(r) = sum_v q[v] * r^(2v + l) with k = (n - l) / 2.
std::vector<double> radial_coeffs(int n, int l) {
  const int k = (n - l) / 2;
  std::vector<double> q(static_cast<std::size_t>(k) + 1);
  const double lead = (k % 2 == 0 ? 1.0 : -1.0) / std::pow(4.0, k) *
                      std::sqrt((2.0 * l + 4.0 * k + 3.0) / 3.0) * binom(2 * k, k);
  for (int v = 0; v <= k; ++v) {
    const double term = (v % 2 == 0 ? 1.0 : -1.0) * binom(k, v) *
                        binom(2 * (k + l + v) + 1, 2 * k) / binom(k + l + v, k);
    q[static_cast<std::size_t>(v)] = lead * term;
  }
  return q;
}

// Associated Legendre P_l^m(x) for l <= lmax, 0 <= m <= l (Condon-Shortley).
void legendre_table(int lmax, double x, std::vector<std::vector<double>>& p) {
  const double somx2 = std::sqrt(std::max(0.0, 1.0 - x * x));
  p.assign(static_cast<std::size_t>(lmax) + 1, {});
  for (int l = 0; l <= lmax; ++l) p[static_cast<std::size_t>(l)].assign(static_cast<std::size_t>(l) + 1, 0.0);
  p[0][0] = 1.0;
  for (int m = 1; m <= lmax; ++m) {
    p[static_cast<std::size_t>(m)][static_cast<std::size_t>(m)] =
        -p[static_cast<std::size_t>(m - 1)][static_cast<std::size_t>(m - 1)] * (2 * m - 1) * somx2;
  }
  for (int m = 0; m < lmax; ++m) {
    p[static_cast<std::size_t>(m + 1)][static_cast<std::size_t>(m)] =
        x * (2 * m + 1) * p[static_cast<std::size_t>(m)][static_cast<std::size_t>(m)];
  }
  for (int m = 0; m <= lmax; ++m) {
    for (int l = m + 2; l <= lmax; ++l) {
      p[static_cast<std::size_t>(l)][static_cast<std::size_t>(m)] =
          (x * (2 * l - 1) * p[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(m)] -
           (l + m - 1) * p[static_cast<std::size_t>(l - 2)][static_cast<std::size_t>(m)]) /
          (l - m);
    }
  }
}

}  // namespace

std::vector<double> zernike_descriptor(const PointCloud& cloud) {
  if (cloud.size() < 10) {
    throw Error("TooSparse", "zernike descriptor needs at least 10 points");
  }
  const Ball ball = minimal_ball(cloud.points);
  const double radius = std::max(std::sqrt(std::max(ball.r2, 0.0)), 1e-9);
  const Vec3 origin = ball.center - Vec3::Constant(radius);
  const double cell = 2.0 * radius / kZernikeGrid;

  // Trilinear mass splat onto voxel centers. Binary occupancy aliases whole
  // faces by up to half a voxel under rotation, which breaks the descriptor's
  // invariance; the splat reproduces each point's position exactly in the
  // first-order moments.
  std::vector<double> mass(
      static_cast<std::size_t>(kZernikeGrid) * kZernikeGrid * kZernikeGrid, 0.0);
  for (const Vec3& p : cloud.points) {
    double g[3];
    int base[3];
    double frac[3];
    for (int a = 0; a < 3; ++a) {
      g[a] = (p[a] - origin[a]) / cell - 0.5;
      base[a] = std::clamp(static_cast<int>(std::floor(g[a])), 0, kZernikeGrid - 2);
      frac[a] = std::clamp(g[a] - base[a], 0.0, 1.0);
    }
    for (int dx = 0; dx < 2; ++dx) {
      for (int dy = 0; dy < 2; ++dy) {
        for (int dz = 0; dz < 2; ++dz) {
          const double w = (dx ? frac[0] : 1.0 - frac[0]) * (dy ? frac[1] : 1.0 - frac[1]) *
                           (dz ? frac[2] : 1.0 - frac[2]);
          if (w <= 0.0) continue;
          mass[(static_cast<std::size_t>(base[0] + dx) * kZernikeGrid + base[1] + dy) *
                   kZernikeGrid +
               base[2] + dz] += w;
        }
      }
    }
  }

  // (n, l) pairs in lexicographic order, n <= 11, n - l even.
  std::vector<std::pair<int, int>> pairs;
  for (int n = 0; n <= kZernikeOrder; ++n) {
    for (int l = (n % 2 == 0) ? 0 : 1; l <= n; l += 2) pairs.emplace_back(n, l);
  }
  std::vector<std::vector<double>> qcoef;
  qcoef.reserve(pairs.size());
  for (const auto& [n, l] : pairs) qcoef.push_back(radial_coeffs(n, l));

  // Orthonormal spherical harmonic prefactors.
  std::vector<std::vector<double>> nlm(static_cast<std::size_t>(kZernikeOrder) + 1);
  for (int l = 0; l <= kZernikeOrder; ++l) {
    nlm[static_cast<std::size_t>(l)].assign(static_cast<std::size_t>(l) + 1, 0.0);
    for (int m = 0; m <= l; ++m) {
      double logfac = 0.0;
      for (int i = l - m + 1; i <= l + m; ++i) logfac += std::log(static_cast<double>(i));
      nlm[static_cast<std::size_t>(l)][static_cast<std::size_t>(m)] =
          std::sqrt((2.0 * l + 1.0) / (4.0 * M_PI) * std::exp(-logfac));
    }
  }

  std::vector<std::vector<std::complex<double>>> omega(pairs.size());
  for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
    omega[pi].assign(static_cast<std::size_t>(pairs[pi].second) + 1, {0.0, 0.0});
  }
  double total_mass = 0.0;
  for (const double m : mass) total_mass += m;
  if (total_mass <= 0.0) throw Error("TooSparse", "no occupied voxels");

  std::vector<std::vector<double>> leg;
  double cos_m[kZernikeOrder + 1], sin_m[kZernikeOrder + 1], rpow[kZernikeOrder + 1];
  for (int ix = 0; ix < kZernikeGrid; ++ix) {
    for (int iy = 0; iy < kZernikeGrid; ++iy) {
      for (int iz = 0; iz < kZernikeGrid; ++iz) {
        const double voxel_mass =
            mass[(static_cast<std::size_t>(ix) * kZernikeGrid + iy) * kZernikeGrid + iz];
        if (voxel_mass <= 0.0) continue;
        const double weight = voxel_mass / total_mass;
        const double x = (ix + 0.5) * cell + origin.x() - ball.center.x();
        const double y = (iy + 0.5) * cell + origin.y() - ball.center.y();
        const double z = (iz + 0.5) * cell + origin.z() - ball.center.z();
        const double rr = std::sqrt(x * x + y * y + z * z);
        const double r = rr / radius;
        if (r > 1.0) continue;
        const double ct = rr > 1e-15 ? std::clamp(z / rr, -1.0, 1.0) : 1.0;
        const double phi = std::atan2(y, x);
        legendre_table(kZernikeOrder, ct, leg);
        for (int m = 0; m <= kZernikeOrder; ++m) {
          cos_m[m] = std::cos(m * phi);
          sin_m[m] = std::sin(m * phi);
        }
        rpow[0] = 1.0;
        for (int i = 1; i <= kZernikeOrder; ++i) rpow[i] = rpow[i - 1] * r;
        for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
          const auto& [n, l] = pairs[pi];
          const auto& q = qcoef[pi];
          double rb = 0.0;
          for (std::size_t v = 0; v < q.size(); ++v) {
            rb += q[v] * rpow[2 * static_cast<int>(v) + l];
          }
          for (int m = 0; m <= l; ++m) {
            const double mag =
                rb * nlm[static_cast<std::size_t>(l)][static_cast<std::size_t>(m)] *
                leg[static_cast<std::size_t>(l)][static_cast<std::size_t>(m)] * weight;
            // conj(Y_lm) carries e^{-i m phi}
            omega[pi][static_cast<std::size_t>(m)] +=
                std::complex<double>(mag * cos_m[m], -mag * sin_m[m]);
          }
        }
      }
    }
  }

  std::vector<double> out;
  out.reserve(kZernikeCount);
  const double scale = 3.0 / (4.0 * M_PI);
  for (std::size_t pi = 0; pi < pairs.size() && out.size() < kZernikeCount; ++pi) {
    const int l = pairs[pi].second;
    double sum = std::norm(omega[pi][0]);
    for (int m = 1; m <= l; ++m) sum += 2.0 * std::norm(omega[pi][static_cast<std::size_t>(m)]);
    out.push_back(scale * std::sqrt(sum));
  }
  return out;
}

// =============================================================================
// FPFH
// =============================================================================

namespace {

constexpr int kFpfhBins = 11;
constexpr int kNormalK = 10;

std::vector<Vec3> estimate_normals(const PointCloud& cloud, const KdTree3& tree) {
  std::vector<Vec3> normals(cloud.size(), Vec3::UnitZ());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nn = tree.knn(cloud.points[i], kNormalK, static_cast<int>(i));
    if (nn.size() < 2) continue;
    Vec3 mean = cloud.points[i];
    for (int id : nn) mean += cloud.points[static_cast<std::size_t>(id)];
    mean /= static_cast<double>(nn.size() + 1);
    Mat3 cov = Mat3::Zero();
    const Vec3 d0 = cloud.points[i] - mean;
    cov += d0 * d0.transpose();
    for (int id : nn) {
      const Vec3 d = cloud.points[static_cast<std::size_t>(id)] - mean;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> solver(cov);
    Vec3 n = solver.eigenvectors().col(0);
    // Deterministic hemisphere orientation; the pair features below neutralize
    // the remaining per-point sign ambiguity.
    if (n.z() < 0.0 || (n.z() == 0.0 && (n.x() < 0.0 || (n.x() == 0.0 && n.y() < 0.0)))) {
      n = -n;
    }
    normals[i] = n;
  }
  return normals;
}

// Darboux-frame pair features, invariant to either raw normal flipping sign.
bool pair_features(const Vec3& ps, const Vec3& ns_raw, const Vec3& pt, const Vec3& nt_raw,
                   double& alpha, double& phi, double& theta) {
  Vec3 d = pt - ps;
  const double dist = d.norm();
  if (dist < 1e-12) return false;
  d /= dist;
  Vec3 n1 = ns_raw, n2 = nt_raw;
  // Source = the point whose normal aligns better with the connecting line.
  if (std::abs(n2.dot(d)) > std::abs(n1.dot(d))) {
    std::swap(n1, n2);
    d = -d;
  }
  const Vec3 u = (n1.dot(d) >= 0.0) ? n1 : Vec3(-n1);
  Vec3 v = d.cross(u);
  const double vn = v.norm();
  if (vn < 1e-9) return false;  // normal parallel to the line
  v /= vn;
  const Vec3 w = u.cross(v);
  const Vec3 nt = (n2.dot(u) >= 0.0) ? n2 : Vec3(-n2);
  alpha = v.dot(nt);
  phi = u.dot(d);
  theta = std::atan2(w.dot(nt), u.dot(nt));
  return true;
}

void bin_pair(double alpha, double phi, double theta, std::vector<double>& hist) {
  const auto bin_of = [](double val, double lo, double hi) {
    const int b = static_cast<int>((val - lo) / (hi - lo) * kFpfhBins);
    return std::clamp(b, 0, kFpfhBins - 1);
  };
  hist[static_cast<std::size_t>(bin_of(alpha, -1.0, 1.0))] += 1.0;
  hist[static_cast<std::size_t>(kFpfhBins + bin_of(phi, -1.0, 1.0))] += 1.0;
  hist[static_cast<std::size_t>(2 * kFpfhBins + bin_of(theta, -M_PI, M_PI))] += 1.0;
}

}  // namespace

double median_nn_spacing(const PointCloud& cloud) {
  if (cloud.size() < 2) return 0.0;
  const KdTree3 tree(cloud.points);
  std::vector<double> d;
  d.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nn = tree.knn(cloud.points[i], 1, static_cast<int>(i));
    if (!nn.empty()) {
      d.push_back((cloud.points[i] - cloud.points[static_cast<std::size_t>(nn[0])]).norm());
    }
  }
  std::sort(d.begin(), d.end());
  return d[d.size() / 2];
}

double default_fpfh_radius(const PointCloud& cloud) { return 2.5 * median_nn_spacing(cloud); }

std::vector<std::vector<double>> fpfh_signatures(const PointCloud& cloud, double radius) {
  if (cloud.size() < 10) {
    throw Error("TooSparse", "FPFH needs at least 10 points");
  }
  if (!(radius > 0.0)) {
    throw Error("BadParams", "FPFH radius must be positive");
  }
  const KdTree3 tree(cloud.points);
  const std::vector<Vec3> normals = estimate_normals(cloud, tree);
  const std::size_t n = cloud.size();

  std::vector<std::vector<int>> neighbors(n);
  std::vector<std::vector<double>> spfh(n, std::vector<double>(kFpfhDim, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    auto ids = tree.radius_search(cloud.points[i], radius);
    ids.erase(std::remove(ids.begin(), ids.end(), static_cast<int>(i)), ids.end());
    neighbors[i] = std::move(ids);
    for (int j : neighbors[i]) {
      double a, p, t;
      if (pair_features(cloud.points[i], normals[i], cloud.points[static_cast<std::size_t>(j)],
                        normals[static_cast<std::size_t>(j)], a, p, t)) {
        bin_pair(a, p, t, spfh[i]);
      }
    }
  }

  std::vector<std::vector<double>> fpfh(n, std::vector<double>(kFpfhDim, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    if (neighbors[i].empty()) continue;  // isolated point keeps a zero row
    std::vector<double> acc = spfh[i];
    const double kinv = 1.0 / static_cast<double>(neighbors[i].size());
    for (int j : neighbors[i]) {
      const double w =
          std::max((cloud.points[i] - cloud.points[static_cast<std::size_t>(j)]).norm(), 1e-9);
      const double scale = kinv / w;
      const auto& s = spfh[static_cast<std::size_t>(j)];
      for (int b = 0; b < kFpfhDim; ++b) {
        acc[static_cast<std::size_t>(b)] += scale * s[static_cast<std::size_t>(b)];
      }
    }
    // Percentage-normalize each of the three sub-histograms.
    for (int h = 0; h < 3; ++h) {
      double sum = 0.0;
      for (int b = 0; b < kFpfhBins; ++b) sum += acc[static_cast<std::size_t>(h * kFpfhBins + b)];
      if (sum > 0.0) {
        for (int b = 0; b < kFpfhBins; ++b) {
          fpfh[i][static_cast<std::size_t>(h * kFpfhBins + b)] =
              acc[static_cast<std::size_t>(h * kFpfhBins + b)] * 100.0 / sum;
        }
      }
    }
  }
  return fpfh;
}

// =============================================================================
// Bag of words
// =============================================================================

namespace {

double dist2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

int nearest_center(const std::vector<double>& x, const std::vector<std::vector<double>>& centers) {
  int best = 0;
  double best_d = dist2(x, centers[0]);
  for (std::size_t c = 1; c < centers.size(); ++c) {
    const double d = dist2(x, centers[c]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

std::string fnv1a_hex(const std::vector<std::vector<double>>& centers) {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& row : centers) {
    for (double v : row) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xff;
        h *= 1099511628211ull;
      }
    }
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace

BowVocabulary train_bow_vocabulary(const std::vector<PointCloud>& corpus, std::uint64_t seed) {
  std::vector<std::vector<double>> rows;
  for (const PointCloud& cloud : corpus) {
    if (cloud.size() < 10) continue;
    const auto sig = fpfh_signatures(cloud, default_fpfh_radius(cloud));
    for (const auto& row : sig) rows.push_back(row);
  }
  if (rows.size() < static_cast<std::size_t>(kBowCenters)) {
    throw Error("TooSparse", "need at least 100 FPFH rows to train a vocabulary");
  }

  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> centers;
  centers.reserve(kBowCenters);

  // k-means++ seeding.
  centers.push_back(rows[rng() % rows.size()]);
  std::vector<double> min_d2(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) min_d2[i] = dist2(rows[i], centers[0]);
  while (centers.size() < static_cast<std::size_t>(kBowCenters)) {
    double total = 0.0;
    for (double d : min_d2) total += d;
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        acc += min_d2[i];
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng() % rows.size();
    }
    centers.push_back(rows[pick]);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      min_d2[i] = std::min(min_d2[i], dist2(rows[i], centers.back()));
    }
  }

  std::vector<int> assign(rows.size(), -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const int c = nearest_center(rows[i], centers);
      if (c != assign[i]) {
        assign[i] = c;
        changed = true;
      }
    }
    std::vector<std::vector<double>> sums(kBowCenters, std::vector<double>(kFpfhDim, 0.0));
    std::vector<int> counts(kBowCenters, 0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      ++counts[static_cast<std::size_t>(assign[i])];
      for (int b = 0; b < kFpfhDim; ++b) {
        sums[static_cast<std::size_t>(assign[i])][static_cast<std::size_t>(b)] +=
            rows[i][static_cast<std::size_t>(b)];
      }
    }
    for (int c = 0; c < kBowCenters; ++c) {
      if (counts[static_cast<std::size_t>(c)] == 0) {
        // Reseed an empty cluster at the point farthest from its center.
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
          const double d = dist2(rows[i], centers[static_cast<std::size_t>(assign[i])]);
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centers[static_cast<std::size_t>(c)] = rows[far];
        assign[far] = c;
        changed = true;
        continue;
      }
      for (int b = 0; b < kFpfhDim; ++b) {
        centers[static_cast<std::size_t>(c)][static_cast<std::size_t>(b)] =
            sums[static_cast<std::size_t>(c)][static_cast<std::size_t>(b)] /
            counts[static_cast<std::size_t>(c)];
      }
    }
    if (!changed) break;
  }

  BowVocabulary vocab;
  vocab.centers = std::move(centers);
  vocab.seed = seed;
  vocab.fingerprint = fnv1a_hex(vocab.centers);
  return vocab;
}

std::vector<double> bow_histogram(const PointCloud& cloud, const BowVocabulary& vocab) {
  if (!vocab.trained()) {
    throw Error("VocabularyMissing", "bow_histogram requires a trained vocabulary");
  }
  const auto sig = fpfh_signatures(cloud, default_fpfh_radius(cloud));
  std::vector<double> hist(vocab.centers.size(), 0.0);
  for (const auto& row : sig) {
    hist[static_cast<std::size_t>(nearest_center(row, vocab.centers))] += 1.0;
  }
  const double total = static_cast<double>(sig.size());
  for (double& v : hist) v /= total;
  return hist;
}

void write_vocabulary(std::ostream& out, const BowVocabulary& vocab) {
  out << "bow-vocab v1 " << vocab.centers.size() << ' ' << kFpfhDim << ' ' << vocab.seed << '\n';
  out << std::setprecision(17);
  for (const auto& row : vocab.centers) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? " " : "") << row[i];
    }
    out << '\n';
  }
}

BowVocabulary read_vocabulary(std::istream& in) {
  std::string magic, version;
  int k = 0, dim = 0;
  std::uint64_t seed = 0;
  in >> magic >> version >> k >> dim >> seed;
  if (magic != "bow-vocab" || version != "v1" || k != kBowCenters || dim != kFpfhDim) {
    throw Error("BadVocabFile", "bad header");
  }
  BowVocabulary vocab;
  vocab.seed = seed;
  vocab.centers.assign(static_cast<std::size_t>(k),
                       std::vector<double>(static_cast<std::size_t>(dim), 0.0));
  for (auto& row : vocab.centers) {
    for (double& v : row) {
      if (!(in >> v) || !std::isfinite(v)) throw Error("BadVocabFile", "bad center value");
    }
  }
  vocab.fingerprint = fnv1a_hex(vocab.centers);
  return vocab;
}

void write_vocabulary_file(const std::string& path, const BowVocabulary& vocab) {
  std::ofstream f(path);
  if (!f) throw Error("BadVocabFile", "cannot open " + path);
  write_vocabulary(f, vocab);
}

BowVocabulary read_vocabulary_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("BadVocabFile", "cannot open " + path);
  return read_vocabulary(f);
}

// =============================================================================
// Color, curvature, overall shape
// =============================================================================

ColorHistogram color_histogram(const PointCloud& cloud) {
  ColorHistogram out;
  out.values.assign(46, 0.0);
  if (!cloud.has_colors()) {
    return out;  // all zeros, has_color stays false
  }
  out.has_color = true;
  for (const Vec3& c : cloud.colors) {
    const double r = c.x(), g = c.y(), b = c.z();
    const double v = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double delta = v - mn;
    const double s = v > 0.0 ? delta / v : 0.0;
    double h = 0.0;  // hue undefined -> bin 0 by convention
    if (delta > 1e-12) {
      if (v == r) h = 60.0 * std::fmod((g - b) / delta + 6.0, 6.0);
      else if (v == g) h = 60.0 * ((b - r) / delta + 2.0);
      else h = 60.0 * ((r - g) / delta + 4.0);
    }
    const int hi = std::clamp(static_cast<int>(h / 60.0), 0, 5);
    const int si = std::clamp(static_cast<int>(s * 6.0), 0, 5);
    const int vi = std::clamp(static_cast<int>(v * 10.0), 0, 9);
    out.values[static_cast<std::size_t>(hi * 6 + si)] += 1.0;
    out.values[static_cast<std::size_t>(36 + vi)] += 1.0;
  }
  double hs_sum = 0.0, int_sum = 0.0;
  for (int i = 0; i < 36; ++i) hs_sum += out.values[static_cast<std::size_t>(i)];
  for (int i = 36; i < 46; ++i) int_sum += out.values[static_cast<std::size_t>(i)];
  if (hs_sum > 0.0) {
    for (int i = 0; i < 36; ++i) out.values[static_cast<std::size_t>(i)] /= hs_sum;
  }
  if (int_sum > 0.0) {
    for (int i = 36; i < 46; ++i) out.values[static_cast<std::size_t>(i)] /= int_sum;
  }
  return out;
}

std::vector<double> curvature_histogram(const PointCloud& cloud, int k_neighbors) {
  if (cloud.size() < static_cast<std::size_t>(k_neighbors) + 1) {
    throw Error("TooSparse", "curvature histogram needs k_neighbors + 1 points");
  }
  const KdTree3 tree(cloud.points);
  std::vector<double> hist(12, 0.0);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto nn = tree.knn(cloud.points[i], k_neighbors, static_cast<int>(i));
    std::vector<Vec3> pts;
    pts.reserve(nn.size() + 1);
    pts.push_back(cloud.points[i]);
    for (int id : nn) pts.push_back(cloud.points[static_cast<std::size_t>(id)]);
    const auto ev = covariance_eigenvalues(pts);
    const double sum = ev[0] + ev[1] + ev[2];
    const double sigma = sum > 1e-18 ? ev[2] / sum : 0.0;
    const int bin = std::clamp(static_cast<int>(sigma * 36.0), 0, 11);
    hist[static_cast<std::size_t>(bin)] += 1.0;
  }
  for (double& v : hist) v /= static_cast<double>(cloud.size());
  return hist;
}

std::vector<double> overall_shape(const PointCloud& cloud) {
  const auto ev = covariance_eigenvalues(cloud.points);
  std::vector<double> out(5, 0.0);
  out[0] = ev[0];
  out[1] = ev[1];
  out[2] = ev[2];
  out[3] = ev[0] > 1e-12 ? ev[1] / ev[0] : 0.0;
  out[4] = ev[1] > 1e-12 ? ev[2] / ev[1] : 0.0;
  return out;
}

// =============================================================================
// Combined semantic vector
// =============================================================================

SemanticFeatures semantic_vector(const PointCloud& object, const PointCloud& base,
                                 const BowVocabulary& vocab, double base_height) {
  object.validate();
  base.validate();

  SemanticFeatures out;
  out.values.reserve(kSemanticDim);

  const auto color_o = color_histogram(object);
  const auto color_b = color_histogram(base);
  out.object_has_color = color_o.has_color;
  out.base_has_color = color_b.has_color;

  const auto append_group = [&out](const std::string& name, const std::vector<double>& go,
                                   const std::vector<double>& gb) {
    const int start = static_cast<int>(out.values.size());
    out.values.insert(out.values.end(), go.begin(), go.end());
    out.values.insert(out.values.end(), gb.begin(), gb.end());
    for (std::size_t i = 0; i < go.size(); ++i) out.values.push_back(go[i] * gb[i]);
    for (std::size_t i = 0; i < go.size(); ++i) out.values.push_back(std::min(go[i], gb[i]));
    out.group_offsets[name] = {start, static_cast<int>(4 * go.size())};
  };

  append_group("zernike", zernike_descriptor(object), zernike_descriptor(base));
  append_group("bow", bow_histogram(object, vocab), bow_histogram(base, vocab));
  append_group("color", color_o.values, color_b.values);
  append_group("curvature", curvature_histogram(object), curvature_histogram(base));
  append_group("shape", overall_shape(object), overall_shape(base));

  out.group_offsets["base_height"] = {static_cast<int>(out.values.size()), 1};
  out.values.push_back(base_height);

  if (out.values.size() != static_cast<std::size_t>(kSemanticDim)) {
    throw Error("Internal", "semantic feature length mismatch");
  }
  for (double v : out.values) {
    if (!std::isfinite(v)) throw Error("Internal", "non-finite semantic feature");
  }
  return out;
}

}  // namespace placekit
