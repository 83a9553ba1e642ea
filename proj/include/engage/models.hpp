#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "engage/matrix.hpp"

namespace engage::models {

struct ColumnStats {
  double mean = 0.0;
  double sd = 1.0;  // stored as 1 for zero-variance columns
};

// Standardized feature matrix plus the training-data statistics needed to
// transform future rows the same way.
struct FeatureMatrix {
  std::vector<std::string> columns;  // ordered category names
  std::vector<ColumnStats> column_stats;
  Matrix values;  // z-scored
};

// Per-column z-scores from training mean/sd (sample sd). Zero-variance
// columns pass through as 0 with sd recorded as 1. Requires >= 2 rows.
FeatureMatrix standardize_fit(const Matrix& raw, std::vector<std::string> columns);
Matrix standardize_apply(std::span<const ColumnStats> stats, const Matrix& raw);

enum class ModelKind { ols, ridge, svr, logistic, gnb };
std::string kind_name(ModelKind kind);
ModelKind kind_from_name(const std::string& name);
bool is_regression_kind(ModelKind kind);

struct GnbClassStats {
  double prior = 0.0;
  std::vector<double> mean;
  std::vector<double> var;  // floored at 1e-9
};

struct Hyperparams {
  double lambda = 1e-6;         // ols conditioning ridge
  double ridge_lambda = 1.0;    // ridge penalty
  double svr_c = 1.0;
  double svr_epsilon = 0.01;
  int svr_epochs = 200;
  double svr_lr = 1.0;
  double svr_lr_decay = 0.1;
  int logistic_iterations = 500;
  double logistic_lr = 1.0;
  double logistic_l2 = 1e-4;
  uint64_t seed = 0;
};

struct TrainedModel {
  ModelKind kind = ModelKind::ols;
  std::vector<std::string> columns;
  std::vector<ColumnStats> column_stats;
  // Linear kinds.
  std::vector<double> weights;
  double intercept = 0.0;
  // Gaussian naive Bayes.
  GnbClassStats negative, positive;
  Hyperparams hyper;

  nlohmann::json to_json() const;
  static TrainedModel from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static TrainedModel load(const std::string& path);
};

// Ridge-regularized least squares via normal equations and a Cholesky solve;
// the intercept is not penalized. lambda = 0 requires a non-singular system.
// The same solver backs both the ols and ridge kinds.
TrainedModel fit_ols(const FeatureMatrix& features, std::span<const double> y,
                     double lambda, ModelKind kind = ModelKind::ols);

// Linear epsilon-insensitive regression trained by per-sample subgradient
// descent on 0.5*||w||^2 + C * sum(max(0, |residual| - epsilon)). Epoch-level
// objective is kept non-increasing by backtracking the step size.
TrainedModel fit_svr(const FeatureMatrix& features, std::span<const double> y,
                     const Hyperparams& hyper);

// Full-batch gradient descent on mean negative log-likelihood with L2 penalty
// on the weights; backtracks on overshoot so the loss never increases.
TrainedModel fit_logistic(const FeatureMatrix& features, std::span<const int> labels,
                          const Hyperparams& hyper);

// Per-class Gaussian maximum-likelihood stats (variance floored) plus priors.
TrainedModel fit_gnb(const FeatureMatrix& features, std::span<const int> labels);

// Scores for raw (unstandardized) feature rows; the model applies its own
// stored column stats. Regression outputs are clipped to [0, 1] when
// clip_rates is set; classifier outputs are probabilities in [0, 1].
std::vector<double> predict(const TrainedModel& model, const Matrix& raw,
                            bool clip_rates = true);

// Loss/gradient probes used by training and by finite-difference checks.
double logistic_loss(const Matrix& x, std::span<const int> y, std::span<const double> w,
                     double b, double l2);
void logistic_grad(const Matrix& x, std::span<const int> y, std::span<const double> w,
                   double b, double l2, std::span<double> gw, double& gb);
double svr_loss(const Matrix& x, std::span<const double> y, std::span<const double> w,
                double b, double c, double epsilon);
void svr_grad(const Matrix& x, std::span<const double> y, std::span<const double> w,
              double b, double c, double epsilon, std::span<double> gw, double& gb);

}  // namespace engage::models
