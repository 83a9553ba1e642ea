#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "engage/corpus.hpp"
#include "engage/models.hpp"
#include "engage/stats.hpp"

namespace engage::eval {

// k disjoint index sets covering 0..n-1 with sizes differing by at most one.
// With stratify_labels, each class is dealt across folds so per-fold class
// counts differ from a proportional share by at most one. Falls back to an
// unstratified split (flagging *stratified=false) when a class has fewer
// than k members.
std::vector<std::vector<size_t>> kfold_split(size_t n, size_t k, uint64_t seed,
                                             const std::vector<int>* stratify_labels = nullptr,
                                             bool* stratified = nullptr);

// 1 iff y_i is strictly above the median (midpoint rule for even n). Throws
// DataError("degenerate split") when one class would be empty.
std::vector<int> median_split(std::span<const double> y);

double mae(std::span<const double> pred, std::span<const double> actual);

// Mann-Whitney AUC via rank sums with midrank tie handling; identical to the
// pairwise concordance count (ties worth 1/2).
double auc(std::span<const double> scores, std::span<const int> labels);

enum class Task { regression, classification };
enum class FeatureMode { all, significant };
enum class SelectionScope { per_fold, global };

std::string task_name(Task t);
std::string feature_mode_name(FeatureMode m);
std::string selection_scope_name(SelectionScope s);

struct CvOptions {
  stats::Target target = stats::Target::retweet;
  Task task = Task::regression;
  models::ModelKind model_kind = models::ModelKind::svr;
  FeatureMode feature_mode = FeatureMode::all;
  SelectionScope selection_scope = SelectionScope::per_fold;
  size_t folds = 10;
  uint64_t seed = 0;
  models::Hyperparams hyper;
  unsigned threads = 1;
};

struct EvalReport {
  stats::Target target;
  Task task;
  models::ModelKind model_kind;
  FeatureMode feature_mode;
  SelectionScope selection_scope;
  std::vector<double> per_fold_metric;
  double mean_metric = 0.0;
  std::vector<std::vector<std::string>> selected_features;  // per fold
  std::vector<bool> fallback_to_all;  // fold had an empty significant set
  bool stratified = false;
  size_t n_used = 0;
  uint64_t seed = 0;

  nlohmann::json to_json() const;
};

// One k-fold pass: per fold, standardization and (optionally) significance
// feature selection are fit on the training portion only, the model is
// trained there, and the metric (MAE or AUC) is taken on the held-out fold.
EvalReport cross_validate(const ProfileSet& profiles, const CvOptions& options);

// Table-shaped TSV: one row per feature mode, one metric column per target.
void write_reports_tsv(std::ostream& os, std::span<const EvalReport> reports,
                       const ReportMeta& meta);

}  // namespace engage::eval
