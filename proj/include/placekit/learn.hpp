#pragma once

#include "placekit/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace placekit {

// =============================================================================
// Training data
// =============================================================================

struct TrainingExample {
  std::vector<double> features;
  int label = 1;  // +1 or -1
  int task = 0;
};

struct TrainingSet {
  std::vector<TrainingExample> examples;
  std::string feature_fingerprint;  // e.g. "stab145", "stab178", "sem801"

  std::size_t size() const { return examples.size(); }
  int feature_dim() const {
    return examples.empty() ? 0 : static_cast<int>(examples[0].features.size());
  }
  std::vector<int> task_ids() const;
  void validate() const;  // dims consistent, finite, labels in {-1, +1}
};

// =============================================================================
// Models
// =============================================================================

/// Linear max-margin model; decision value = weights . x - bias.
struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  std::string feature_fingerprint;
};

/// Degree-2 polynomial kernel model; decision = sum coeff_i K(sv_i, x) + bias,
/// K(a, b) = (a.b + 1)^2, coeff_i = alpha_i * y_i.
struct KernelModel {
  std::vector<std::vector<double>> support_vectors;
  std::vector<double> coefficients;
  double bias = 0.0;
  double C = 1.0;
  std::string feature_fingerprint;
};

/// Shared-sparsity multi-task model: per task theta_i = S_i + B_i with
/// intercept b_i; decision for task i = (S_i + B_i) . x + b_i.
struct MultiTaskModel {
  std::vector<int> task_ids;
  std::vector<std::vector<double>> task_specific;  // S_i, one row per task
  std::vector<std::vector<double>> shared;         // B_i, one row per task
  std::vector<double> intercepts;                  // b_i
  double C = 1.0, lambda_s = 0.1, lambda_b = 0.1;
  std::vector<double> objective_trace;  // per outer iteration
  std::string feature_fingerprint;

  /// Task model as a LinearModel (bias stored so score() = theta.x + b_i).
  LinearModel task_model(int position) const;
};

// =============================================================================
// Training
// =============================================================================

/// Soft-margin linear SVM (paper formulation with an unregularized bias),
/// solved by seeded-permutation SMO pair updates on the dual; the returned
/// model's duality gap is below 1e-3 * (1 + |primal|).
LinearModel train_svm(const TrainingSet& data, double C, std::uint64_t seed = 1);

/// Degree-2 polynomial kernel SVM via maximal-violating-pair SMO
/// (KKT violation <= 1e-3 at exit).
KernelModel train_kernel_svm(const TrainingSet& data, double C);

/// Shared-sparsity multi-task SVM: alternating proximal steps (soft threshold
/// for the l1,1 part, max-norm prox via sorting for the l1,inf part, exact
/// intercept updates). The stored objective trace is non-increasing.
MultiTaskModel train_shared_sparsity(const TrainingSet& data, double C, double lambda_s,
                                     double lambda_b, std::uint64_t seed = 1);

// =============================================================================
// Scoring
// =============================================================================

/// Decision value; an explicit feature fingerprint (when non-empty) must match
/// the model's, otherwise Error("FeatureMismatch").
double score(const LinearModel& model, const std::vector<double>& features,
             const std::string& feature_fingerprint = "");
double score(const KernelModel& model, const std::vector<double>& features,
             const std::string& feature_fingerprint = "");

/// Mean-rank (Borda) aggregation: each model ranks candidates by decision
/// value, candidates are ordered by mean rank, ties break to the lower index.
std::vector<int> vote_rank(const std::vector<LinearModel>& models,
                           const std::vector<std::vector<double>>& candidates);

// =============================================================================
// Model files (versioned JSON)
// =============================================================================

struct ModelFile {
  std::string kind;  // "linear" | "kernel" | "multitask"
  LinearModel linear;
  KernelModel kernel;
  MultiTaskModel multitask;
  std::uint64_t seed = 0;
};

void write_model(std::ostream& out, const ModelFile& m);
ModelFile read_model(std::istream& in);
void write_model_file(const std::string& path, const ModelFile& m);
ModelFile read_model_file(const std::string& path);

}  // namespace placekit
