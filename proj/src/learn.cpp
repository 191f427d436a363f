#include "placekit/learn.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace placekit {

using nlohmann::json;

// =============================================================================
// TrainingSet
// =============================================================================

std::vector<int> TrainingSet::task_ids() const {
  std::set<int> ids;
  for (const auto& e : examples) ids.insert(e.task);
  return {ids.begin(), ids.end()};
}

void TrainingSet::validate() const {
  if (examples.empty()) {
    throw Error("EmptyTrainingSet", "no examples");
  }
  const std::size_t dim = examples[0].features.size();
  for (const auto& e : examples) {
    if (e.features.size() != dim) {
      throw Error("BadFeature", "inconsistent feature dimensions");
    }
    if (e.label != 1 && e.label != -1) {
      throw Error("BadLabel", "labels must be +1 or -1");
    }
    for (double v : e.features) {
      if (!std::isfinite(v)) throw Error("BadFeature", "non-finite feature value");
    }
  }
}

namespace {

void require_both_classes(const TrainingSet& data) {
  bool pos = false, neg = false;
  for (const auto& e : data.examples) {
    (e.label > 0 ? pos : neg) = true;
  }
  if (!pos || !neg) {
    throw Error("SingleClass", "training needs both labels");
  }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// =============================================================================
// Shared SMO core over a cached Gram matrix, maintaining sum(alpha*y) = 0
// =============================================================================

struct SmoProblem {
  const TrainingSet* data = nullptr;
  std::vector<double> gram;  // n x n
  std::vector<double> alpha;
  std::vector<double> h;  // h_i = sum_j alpha_j y_j K_ij
  double C = 1.0;
  std::size_t n = 0;

  double k(std::size_t i, std::size_t j) const { return gram[i * n + j]; }
  double y(std::size_t i) const { return static_cast<double>(data->examples[i].label); }
  // gradient of the dual objective 1/2 aQa - sum a
  double grad(std::size_t i) const { return y(i) * h[i] - 1.0; }
  bool in_up(std::size_t i) const {
    return (y(i) > 0 && alpha[i] < C - 1e-12) || (y(i) < 0 && alpha[i] > 1e-12);
  }
  bool in_low(std::size_t i) const {
    return (y(i) < 0 && alpha[i] < C - 1e-12) || (y(i) > 0 && alpha[i] > 1e-12);
  }

  // classic two-variable update keeping the equality constraint; returns the
  // change magnitude
  double update_pair(std::size_t i, std::size_t j) {
    const double yi = y(i), yj = y(j);
    const double old_i = alpha[i], old_j = alpha[j];
    // curvature along the feasible pair direction; equals K_ii + K_jj - 2K_ij
    // for both label combinations
    double quad = k(i, i) + k(j, j) - 2.0 * k(i, j);
    if (quad < 1e-12) quad = 1e-12;
    if (yi != yj) {
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else {
        if (alpha[i] < 0) {
          alpha[i] = 0;
          alpha[j] = -diff;
        }
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = C + diff;
        }
      }
    } else {
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = sum;
        }
        if (alpha[i] < 0) {
          alpha[i] = 0;
          alpha[j] = sum;
        }
      }
    }
    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    if (di == 0.0 && dj == 0.0) return 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      h[t] += di * yi * k(i, t) + dj * yj * k(j, t);
    }
    return std::abs(di) + std::abs(dj);
  }

  // (m, M, argmax, argmin) of the KKT violation measure
  void kkt_extremes(double& m, std::size_t& arg_up, double& M, std::size_t& arg_low) const {
    m = -std::numeric_limits<double>::infinity();
    M = std::numeric_limits<double>::infinity();
    arg_up = arg_low = n;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = -y(i) * grad(i);
      if (in_up(i) && v > m) {
        m = v;
        arg_up = i;
      }
      if (in_low(i) && v < M) {
        M = v;
        arg_low = i;
      }
    }
  }

  double dual_objective() const {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += alpha[i] - 0.5 * alpha[i] * y(i) * h[i];
    return s;
  }
};

SmoProblem make_smo(const TrainingSet& data, double C, bool poly_kernel) {
  SmoProblem p;
  p.data = &data;
  p.C = C;
  p.n = data.size();
  p.alpha.assign(p.n, 0.0);
  p.h.assign(p.n, 0.0);
  p.gram.resize(p.n * p.n);
  for (std::size_t i = 0; i < p.n; ++i) {
    for (std::size_t j = i; j < p.n; ++j) {
      double v = dot(data.examples[i].features, data.examples[j].features);
      if (poly_kernel) {
        v = (v + 1.0) * (v + 1.0);
      }
      p.gram[i * p.n + j] = v;
      p.gram[j * p.n + i] = v;
    }
  }
  return p;
}

// Exact intercept: minimizes sum of hinge losses of (y * (f + b)) over b.
double optimal_intercept(const std::vector<double>& f, const std::vector<int>& labels) {
  // hinge active sets change at b = 1 - f_i for y=+1 and b = -1 - f_i for y=-1
  std::vector<std::pair<double, int>> bps;  // (breakpoint, slope change)
  long long slope = 0;                      // d(sum xi)/db at b -> -inf
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (labels[i] > 0) {
      // xi = max(0, 1 - f - b): active for b < 1 - f, slope -1 while active
      slope -= 1;
      bps.emplace_back(1.0 - f[i], +1);
    } else {
      // xi = max(0, 1 + f + b): active for b > -1 - f, slope +1 once active
      bps.emplace_back(-1.0 - f[i], +1);
    }
  }
  std::sort(bps.begin(), bps.end());
  double best = bps.empty() ? 0.0 : bps.front().first;
  for (const auto& [b, ds] : bps) {
    if (slope >= 0) break;
    slope += ds;
    best = b;
  }
  return best;
}

double primal_objective_linear(const std::vector<double>& w, double intercept,
                               const TrainingSet& data, double C) {
  double obj = 0.5 * dot(w, w);
  for (const auto& e : data.examples) {
    const double margin = e.label * (dot(w, e.features) + intercept);
    obj += C * std::max(0.0, 1.0 - margin);
  }
  return obj;
}

}  // namespace

// =============================================================================
// Linear SVM
// =============================================================================

LinearModel train_svm(const TrainingSet& data, double C, std::uint64_t seed) {
  data.validate();
  require_both_classes(data);
  if (!(C > 0.0)) throw Error("BadParams", "C must be positive");

  SmoProblem p = make_smo(data, C, /*poly_kernel=*/false);
  const std::size_t n = p.n;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);

  const int max_epochs = 400;
  double intercept = 0.0;
  std::vector<double> w(static_cast<std::size_t>(data.feature_dim()), 0.0);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = data.examples[i].label;

  bool converged = false;
  for (int epoch = 0; epoch < max_epochs && !converged; ++epoch) {
    for (std::size_t i = n; i > 1; --i) {
      std::swap(perm[i - 1], perm[rng() % i]);
    }
    for (std::size_t pi = 0; pi < n; ++pi) {
      const std::size_t i = perm[pi];
      double m, M;
      std::size_t arg_up, arg_low;
      p.kkt_extremes(m, arg_up, M, arg_low);
      if (m - M <= 1e-6 || arg_up >= n || arg_low >= n) {
        converged = true;
        break;
      }
      const double v = -p.y(i) * p.grad(i);
      if (p.in_up(i) && v - M > 1e-6) {
        p.update_pair(i, arg_low);
      } else if (p.in_low(i) && m - v > 1e-6) {
        p.update_pair(arg_up, i);
      }
    }
    // duality gap on the true primal (with the exact optimal intercept)
    w.assign(w.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (p.alpha[i] == 0.0) continue;
      const double c = p.alpha[i] * p.y(i);
      const auto& x = data.examples[i].features;
      for (std::size_t d = 0; d < w.size(); ++d) w[d] += c * x[d];
    }
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = dot(w, data.examples[i].features);
    intercept = optimal_intercept(f, labels);
    const double primal = primal_objective_linear(w, intercept, data, C);
    if (primal - p.dual_objective() <= 1e-6 * (1.0 + std::abs(primal))) break;
  }

  LinearModel model;
  model.weights = std::move(w);
  model.bias = -intercept;  // score() = w.x - bias = w.x + intercept
  model.feature_fingerprint = data.feature_fingerprint;
  return model;
}

// =============================================================================
// Kernel SVM
// =============================================================================

KernelModel train_kernel_svm(const TrainingSet& data, double C) {
  data.validate();
  require_both_classes(data);
  if (!(C > 0.0)) throw Error("BadParams", "C must be positive");

  SmoProblem p = make_smo(data, C, /*poly_kernel=*/true);
  const std::size_t n = p.n;
  const long max_iters = 200000;
  double m = 0.0, M = 0.0;
  for (long it = 0; it < max_iters; ++it) {
    std::size_t arg_up, arg_low;
    p.kkt_extremes(m, arg_up, M, arg_low);
    if (arg_up >= n || arg_low >= n || m - M <= 1e-3) break;
    p.update_pair(arg_up, arg_low);
  }
  {
    std::size_t arg_up, arg_low;
    p.kkt_extremes(m, arg_up, M, arg_low);
  }

  KernelModel model;
  model.C = C;
  model.bias = (m + M) / 2.0;
  model.feature_fingerprint = data.feature_fingerprint;
  for (std::size_t i = 0; i < n; ++i) {
    if (p.alpha[i] > 1e-12) {
      model.support_vectors.push_back(data.examples[i].features);
      model.coefficients.push_back(p.alpha[i] * p.y(i));
    }
  }
  return model;
}

// =============================================================================
// Shared-sparsity multi-task SVM
// =============================================================================

namespace {

// prox of t * ||.||_inf via Moreau: v - projection of v onto the l1 ball of
// radius t (projection by sorting magnitudes).
void prox_linf_row(std::vector<double>& row, double t) {
  if (t <= 0.0) return;
  double norm1 = 0.0;
  for (double v : row) norm1 += std::abs(v);
  if (norm1 <= t) {
    std::fill(row.begin(), row.end(), 0.0);
    return;
  }
  std::vector<double> mags(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) mags[i] = std::abs(row[i]);
  std::sort(mags.begin(), mags.end(), std::greater<double>());
  double acc = 0.0, tau = 0.0;
  for (std::size_t k = 0; k < mags.size(); ++k) {
    acc += mags[k];
    const double cand = (acc - t) / static_cast<double>(k + 1);
    if (k + 1 == mags.size() || cand >= mags[k + 1]) {
      tau = cand;
      break;
    }
  }
  // subtract the projection; each entry shrinks toward tau in magnitude
  for (double& v : row) {
    const double mag = std::abs(v);
    const double proj = mag > tau ? (mag - tau) : 0.0;  // projected magnitude...
    // projection onto l1 ball keeps sign and clips magnitude at tau? No:
    // proj_l1(v)_i = sign(v_i) * max(|v_i| - tau, 0) is the SOFT THRESHOLD,
    // which is exactly the l1-ball projection residue we need to subtract.
    // prox result = v - proj = sign(v) * min(|v|, tau).
    (void)proj;
    v = (v >= 0.0 ? 1.0 : -1.0) * std::min(mag, tau);
  }
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

struct MtState {
  std::vector<std::vector<double>> S, B;
  std::vector<double> b;
};

double mt_objective(const MtState& st, const std::vector<std::vector<const TrainingExample*>>& tasks,
                    double C, double ls, double lb) {
  const std::size_t r = tasks.size();
  const std::size_t p = st.S[0].size();
  double obj = 0.0;
  for (std::size_t t = 0; t < r; ++t) {
    double sq = 0.0;
    for (std::size_t d = 0; d < p; ++d) {
      const double th = st.S[t][d] + st.B[t][d];
      sq += th * th;
    }
    obj += 0.5 * sq;
    for (const TrainingExample* e : tasks[t]) {
      double f = st.b[t];
      for (std::size_t d = 0; d < p; ++d) f += (st.S[t][d] + st.B[t][d]) * e->features[d];
      obj += C * std::max(0.0, 1.0 - e->label * f);
    }
  }
  for (std::size_t t = 0; t < r; ++t) {
    for (std::size_t d = 0; d < p; ++d) obj += ls * std::abs(st.S[t][d]);
  }
  for (std::size_t d = 0; d < p; ++d) {
    double mx = 0.0;
    for (std::size_t t = 0; t < r; ++t) mx = std::max(mx, std::abs(st.B[t][d]));
    obj += lb * mx;
  }
  return obj;
}

// subgradient of the smooth+hinge part w.r.t. theta_t (same for S and B)
std::vector<std::vector<double>> mt_subgrad(
    const MtState& st, const std::vector<std::vector<const TrainingExample*>>& tasks, double C) {
  const std::size_t r = tasks.size();
  const std::size_t p = st.S[0].size();
  std::vector<std::vector<double>> g(r, std::vector<double>(p, 0.0));
  for (std::size_t t = 0; t < r; ++t) {
    for (std::size_t d = 0; d < p; ++d) g[t][d] = st.S[t][d] + st.B[t][d];
    for (const TrainingExample* e : tasks[t]) {
      double f = st.b[t];
      for (std::size_t d = 0; d < p; ++d) f += (st.S[t][d] + st.B[t][d]) * e->features[d];
      if (e->label * f < 1.0) {
        for (std::size_t d = 0; d < p; ++d) g[t][d] -= C * e->label * e->features[d];
      }
    }
  }
  return g;
}

}  // namespace

MultiTaskModel train_shared_sparsity(const TrainingSet& data, double C, double lambda_s,
                                     double lambda_b, std::uint64_t seed) {
  data.validate();
  if (!(C > 0.0) || !(lambda_s > 0.0) || !(lambda_b > 0.0)) {
    throw Error("BadParams", "C, lambda_s, lambda_b must be positive");
  }
  const std::vector<int> ids = data.task_ids();
  if (ids.size() < 2) {
    throw Error("NeedMultipleTasks", "shared-sparsity training needs >= 2 tasks");
  }
  const std::size_t r = ids.size();
  const std::size_t p = static_cast<std::size_t>(data.feature_dim());
  std::vector<std::vector<const TrainingExample*>> tasks(r);
  for (const auto& e : data.examples) {
    const std::size_t t = static_cast<std::size_t>(
        std::lower_bound(ids.begin(), ids.end(), e.task) - ids.begin());
    tasks[t].push_back(&e);
  }
  for (std::size_t t = 0; t < r; ++t) {
    bool pos = false, neg = false;
    for (const TrainingExample* e : tasks[t]) (e->label > 0 ? pos : neg) = true;
    if (!pos || !neg) throw Error("SingleClass", "task " + std::to_string(ids[t]) + " needs both labels");
  }
  (void)seed;  // alternation is deterministic; seed kept for interface parity

  MtState st;
  st.S.assign(r, std::vector<double>(p, 0.0));
  st.B.assign(r, std::vector<double>(p, 0.0));
  st.b.assign(r, 0.0);

  double obj = mt_objective(st, tasks, C, lambda_s, lambda_b);
  std::vector<double> trace{obj};
  double total_examples = 0.0;
  for (const auto& t : tasks) total_examples += static_cast<double>(t.size());
  double step_s = 1.0 / (1.0 + C * total_examples);
  double step_b = step_s;

  const int max_outer = 500;
  for (int outer = 0; outer < max_outer; ++outer) {
    // --- B block (shared weights move first) ---
    {
      const auto g = mt_subgrad(st, tasks, C);
      bool accepted = false;
      for (int bt = 0; bt < 40 && !accepted; ++bt) {
        MtState trial = st;
        for (std::size_t t = 0; t < r; ++t) {
          for (std::size_t d = 0; d < p; ++d) {
            trial.B[t][d] = st.B[t][d] - step_b * g[t][d];
          }
        }
        std::vector<double> row(r);
        for (std::size_t d = 0; d < p; ++d) {
          for (std::size_t t = 0; t < r; ++t) row[t] = trial.B[t][d];
          prox_linf_row(row, step_b * lambda_b);
          for (std::size_t t = 0; t < r; ++t) trial.B[t][d] = row[t];
        }
        const double trial_obj = mt_objective(trial, tasks, C, lambda_s, lambda_b);
        if (trial_obj <= obj) {
          st = std::move(trial);
          obj = trial_obj;
          step_b *= 1.2;
          accepted = true;
        } else {
          step_b *= 0.5;
        }
      }
    }
    // --- S block ---
    {
      const auto g = mt_subgrad(st, tasks, C);
      bool accepted = false;
      for (int bt = 0; bt < 40 && !accepted; ++bt) {
        MtState trial = st;
        for (std::size_t t = 0; t < r; ++t) {
          for (std::size_t d = 0; d < p; ++d) {
            trial.S[t][d] = soft_threshold(st.S[t][d] - step_s * g[t][d], step_s * lambda_s);
          }
        }
        const double trial_obj = mt_objective(trial, tasks, C, lambda_s, lambda_b);
        if (trial_obj <= obj) {
          st = std::move(trial);
          obj = trial_obj;
          step_s *= 1.2;
          accepted = true;
        } else {
          step_s *= 0.5;
        }
      }
    }
    // --- exact intercepts ---
    for (std::size_t t = 0; t < r; ++t) {
      std::vector<double> f(tasks[t].size());
      std::vector<int> labels(tasks[t].size());
      for (std::size_t j = 0; j < tasks[t].size(); ++j) {
        const TrainingExample* e = tasks[t][j];
        double v = 0.0;
        for (std::size_t d = 0; d < p; ++d) v += (st.S[t][d] + st.B[t][d]) * e->features[d];
        f[j] = v;
        labels[j] = e->label;
      }
      st.b[t] = optimal_intercept(f, labels);
    }
    // --- exact S/B re-split with theta fixed ---
    // Only the penalties depend on the split; per feature the best split is
    // s_t = sign(theta_t) * max(|theta_t| - m, 0) for the m minimizing
    // lambda_s * sum_t max(|theta_t| - m, 0) + lambda_b * m over the
    // breakpoints m in {0} u {|theta_t|}.
    {
      std::vector<double> theta(r), mags(r);
      for (std::size_t d = 0; d < p; ++d) {
        for (std::size_t t = 0; t < r; ++t) {
          theta[t] = st.S[t][d] + st.B[t][d];
          mags[t] = std::abs(theta[t]);
        }
        std::vector<double> bps = mags;
        bps.push_back(0.0);
        std::sort(bps.begin(), bps.end());
        double best_m = 0.0, best_cost = std::numeric_limits<double>::infinity();
        for (double m : bps) {
          double cost = lambda_b * m;
          for (std::size_t t = 0; t < r; ++t) cost += lambda_s * std::max(mags[t] - m, 0.0);
          if (cost < best_cost - 1e-15) {
            best_cost = cost;
            best_m = m;
          }
        }
        for (std::size_t t = 0; t < r; ++t) {
          const double sgn = theta[t] >= 0.0 ? 1.0 : -1.0;
          st.S[t][d] = sgn * std::max(mags[t] - best_m, 0.0);
          st.B[t][d] = theta[t] - st.S[t][d];
        }
      }
    }
    obj = mt_objective(st, tasks, C, lambda_s, lambda_b);

    const double prev = trace.back();
    trace.push_back(obj);
    if (prev - obj < 1e-5 * std::max(1.0, std::abs(prev))) break;
  }

  MultiTaskModel model;
  model.task_ids = ids;
  model.task_specific = st.S;
  model.shared = st.B;
  model.intercepts = st.b;
  model.C = C;
  model.lambda_s = lambda_s;
  model.lambda_b = lambda_b;
  model.objective_trace = std::move(trace);
  model.feature_fingerprint = data.feature_fingerprint;
  return model;
}

LinearModel MultiTaskModel::task_model(int position) const {
  const std::size_t t = static_cast<std::size_t>(position);
  LinearModel m;
  m.weights.resize(task_specific[t].size());
  for (std::size_t d = 0; d < m.weights.size(); ++d) {
    m.weights[d] = task_specific[t][d] + shared[t][d];
  }
  m.bias = -intercepts[t];  // score() adds the intercept back
  m.feature_fingerprint = feature_fingerprint;
  return m;
}

// =============================================================================
// Scoring
// =============================================================================

namespace {

void check_features(const std::string& model_fp, std::size_t model_dim,
                    const std::vector<double>& features, const std::string& feature_fp) {
  if (features.size() != model_dim ||
      (!model_fp.empty() && !feature_fp.empty() && model_fp != feature_fp)) {
    throw Error("FeatureMismatch", "model expects " + std::to_string(model_dim) + " features (" +
                                       model_fp + "), got " + std::to_string(features.size()) +
                                       (feature_fp.empty() ? "" : " (" + feature_fp + ")"));
  }
  for (double v : features) {
    if (!std::isfinite(v)) throw Error("BadFeature", "non-finite feature value");
  }
}

}  // namespace

double score(const LinearModel& model, const std::vector<double>& features,
             const std::string& feature_fingerprint) {
  check_features(model.feature_fingerprint, model.weights.size(), features, feature_fingerprint);
  return dot(model.weights, features) - model.bias;
}

double score(const KernelModel& model, const std::vector<double>& features,
             const std::string& feature_fingerprint) {
  if (model.support_vectors.empty()) {
    throw Error("BadModel", "kernel model has no support vectors");
  }
  check_features(model.feature_fingerprint, model.support_vectors[0].size(), features,
                 feature_fingerprint);
  double s = model.bias;
  for (std::size_t i = 0; i < model.support_vectors.size(); ++i) {
    const double d = dot(model.support_vectors[i], features) + 1.0;
    s += model.coefficients[i] * d * d;
  }
  return s;
}

std::vector<int> vote_rank(const std::vector<LinearModel>& models,
                           const std::vector<std::vector<double>>& candidates) {
  if (models.empty()) {
    throw Error("BadParams", "vote_rank needs at least one model");
  }
  const std::size_t n = candidates.size();
  std::vector<double> mean_rank(n, 0.0);
  for (const LinearModel& m : models) {
    std::vector<std::pair<double, int>> scored(n);
    for (std::size_t i = 0; i < n; ++i) {
      scored[i] = {-score(m, candidates[i]), static_cast<int>(i)};  // descending score
    }
    std::sort(scored.begin(), scored.end());
    for (std::size_t r = 0; r < n; ++r) {
      mean_rank[static_cast<std::size_t>(scored[r].second)] += static_cast<double>(r + 1);
    }
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (mean_rank[static_cast<std::size_t>(a)] != mean_rank[static_cast<std::size_t>(b)]) {
      return mean_rank[static_cast<std::size_t>(a)] < mean_rank[static_cast<std::size_t>(b)];
    }
    return a < b;
  });
  return order;
}

// =============================================================================
// Model files
// =============================================================================

namespace {

json linear_to_json(const LinearModel& m) {
  return json{{"weights", m.weights}, {"bias", m.bias}, {"feature_config", m.feature_fingerprint}};
}

LinearModel linear_from_json(const json& j) {
  LinearModel m;
  m.weights = j.at("weights").get<std::vector<double>>();
  m.bias = j.at("bias").get<double>();
  m.feature_fingerprint = j.at("feature_config").get<std::string>();
  return m;
}

}  // namespace

void write_model(std::ostream& out, const ModelFile& m) {
  json j;
  j["format_version"] = 1;
  j["kind"] = m.kind;
  j["seed"] = m.seed;
  if (m.kind == "linear") {
    j["model"] = linear_to_json(m.linear);
    j["feature_config"] = m.linear.feature_fingerprint;
  } else if (m.kind == "kernel") {
    j["model"] = {{"support_vectors", m.kernel.support_vectors},
                  {"coefficients", m.kernel.coefficients},
                  {"bias", m.kernel.bias},
                  {"kernel", "poly2"},
                  {"C", m.kernel.C}};
    j["feature_config"] = m.kernel.feature_fingerprint;
  } else if (m.kind == "multitask") {
    j["model"] = {{"task_ids", m.multitask.task_ids},
                  {"task_specific", m.multitask.task_specific},
                  {"shared", m.multitask.shared},
                  {"intercepts", m.multitask.intercepts},
                  {"hyperparameters",
                   {{"C", m.multitask.C},
                    {"lambda_s", m.multitask.lambda_s},
                    {"lambda_b", m.multitask.lambda_b}}}};
    j["feature_config"] = m.multitask.feature_fingerprint;
  } else {
    throw Error("BadModel", "unknown model kind " + m.kind);
  }
  out << j.dump(2) << '\n';
}

ModelFile read_model(std::istream& in) {
  json j;
  in >> j;
  if (j.at("format_version").get<int>() != 1) {
    throw Error("BadModelFile", "unsupported format version");
  }
  ModelFile m;
  m.kind = j.at("kind").get<std::string>();
  m.seed = j.value("seed", 0ull);
  const json& body = j.at("model");
  const std::string fp = j.at("feature_config").get<std::string>();
  if (m.kind == "linear") {
    m.linear = linear_from_json(body);
  } else if (m.kind == "kernel") {
    m.kernel.support_vectors = body.at("support_vectors").get<std::vector<std::vector<double>>>();
    m.kernel.coefficients = body.at("coefficients").get<std::vector<double>>();
    m.kernel.bias = body.at("bias").get<double>();
    m.kernel.C = body.at("C").get<double>();
    m.kernel.feature_fingerprint = fp;
  } else if (m.kind == "multitask") {
    m.multitask.task_ids = body.at("task_ids").get<std::vector<int>>();
    m.multitask.task_specific = body.at("task_specific").get<std::vector<std::vector<double>>>();
    m.multitask.shared = body.at("shared").get<std::vector<std::vector<double>>>();
    m.multitask.intercepts = body.at("intercepts").get<std::vector<double>>();
    m.multitask.C = body.at("hyperparameters").at("C").get<double>();
    m.multitask.lambda_s = body.at("hyperparameters").at("lambda_s").get<double>();
    m.multitask.lambda_b = body.at("hyperparameters").at("lambda_b").get<double>();
    m.multitask.feature_fingerprint = fp;
  } else {
    throw Error("BadModelFile", "unknown model kind " + m.kind);
  }
  return m;
}

void write_model_file(const std::string& path, const ModelFile& m) {
  std::ofstream f(path);
  if (!f) throw Error("BadModelFile", "cannot open " + path);
  write_model(f, m);
}

ModelFile read_model_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("BadModelFile", "cannot open " + path);
  return read_model(f);
}

}  // namespace placekit
