#include "engage/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "engage/errors.hpp"
#include "engage/parallel.hpp"
#include "engage/rng.hpp"

namespace engage::eval {

std::vector<std::vector<size_t>> kfold_split(size_t n, size_t k, uint64_t seed,
                                             const std::vector<int>* stratify_labels,
                                             bool* stratified_out) {
  if (k < 2) throw DataError("kfold: need k >= 2");
  if (n < k) throw DataError("kfold: need n >= k");
  if (stratify_labels && stratify_labels->size() != n)
    throw DataError("kfold: label length mismatch");

  bool stratified = false;
  std::vector<std::vector<size_t>> folds(k);

  if (stratify_labels) {
    std::vector<size_t> cls0, cls1;
    for (size_t i = 0; i < n; ++i)
      ((*stratify_labels)[i] == 1 ? cls1 : cls0).push_back(i);
    if (cls0.size() >= k && cls1.size() >= k) {
      stratified = true;
      Rng rng(Rng::derive(seed, 0xf01d5));
      rng.shuffle(cls0);
      rng.shuffle(cls1);
      // Deal the classes from opposite ends so remainders do not pile onto
      // the same folds and sizes stay within one of each other.
      for (size_t i = 0; i < cls0.size(); ++i) folds[i % k].push_back(cls0[i]);
      for (size_t i = 0; i < cls1.size(); ++i)
        folds[k - 1 - (i % k)].push_back(cls1[i]);
    }
  }

  if (!stratified) {
    std::vector<size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(Rng::derive(seed, 0xf01d5));
    rng.shuffle(perm);
    const size_t base = n / k;
    const size_t extra = n % k;
    size_t pos = 0;
    for (size_t f = 0; f < k; ++f) {
      const size_t len = base + (f < extra ? 1 : 0);
      folds[f].assign(perm.begin() + pos, perm.begin() + pos + len);
      pos += len;
    }
  }

  for (auto& fold : folds) std::sort(fold.begin(), fold.end());
  if (stratified_out) *stratified_out = stratified;
  return folds;
}

std::vector<int> median_split(std::span<const double> y) {
  if (y.size() < 2) throw DataError("median_split: need n >= 2");
  std::vector<double> sorted(y.begin(), y.end());
  std::sort(sorted.begin(), sorted.end());
  const size_t n = sorted.size();
  const double median = (n % 2 == 1)
                            ? sorted[n / 2]
                            : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  std::vector<int> labels(n);
  size_t positives = 0;
  for (size_t i = 0; i < n; ++i) {
    labels[i] = (y[i] > median) ? 1 : 0;
    positives += labels[i];
  }
  if (positives == 0 || positives == n) throw DataError("degenerate split");
  return labels;
}

double mae(std::span<const double> pred, std::span<const double> actual) {
  if (pred.size() != actual.size()) throw DataError("mae: length mismatch");
  if (pred.empty()) throw DataError("mae: empty input");
  double s = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) s += std::fabs(pred[i] - actual[i]);
  return s / static_cast<double>(pred.size());
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DataError("auc: length mismatch");
  const size_t n = scores.size();
  size_t n_pos = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw DataError("auc: labels must be 0/1");
    n_pos += l;
  }
  const size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DataError("auc: single-class labels");

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // Midranks over tie runs; sum the positives' ranks.
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (size_t t = i; t <= j; ++t)
      if (labels[order[t]] == 1) rank_sum_pos += midrank;
    i = j + 1;
  }
  const double n1 = static_cast<double>(n_pos);
  const double n0 = static_cast<double>(n_neg);
  return (rank_sum_pos - n1 * (n1 + 1.0) / 2.0) / (n1 * n0);
}

std::string task_name(Task t) {
  return t == Task::regression ? "regression" : "classification";
}
std::string feature_mode_name(FeatureMode m) {
  return m == FeatureMode::all ? "all" : "significant";
}
std::string selection_scope_name(SelectionScope s) {
  return s == SelectionScope::per_fold ? "per-fold" : "global";
}

namespace {

struct Extracted {
  Matrix x;                       // raw (unstandardized) scores
  std::vector<double> y;          // target rate
  std::vector<Category> categories;
};

Extracted extract(const ProfileSet& set, stats::Target target) {
  Extracted ex;
  ex.categories = set.categories;
  std::vector<size_t> rows;
  for (size_t i = 0; i < set.profiles.size(); ++i) {
    const auto& p = set.profiles[i];
    if (target == stats::Target::response) {
      if (!p.response_rate) continue;
      ex.y.push_back(*p.response_rate);
    } else {
      ex.y.push_back(p.retweet_rate);
    }
    rows.push_back(i);
  }
  ex.x = Matrix(rows.size(), set.categories.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto& scores = set.profiles[rows[i]].scores.scores;
    for (size_t c = 0; c < scores.size(); ++c) ex.x.at(i, c) = scores[c];
  }
  return ex;
}

std::vector<size_t> significant_columns(const Matrix& x, std::span<const double> y,
                                        std::span<const Category> categories) {
  const auto results = stats::correlate_columns(x, y, categories);
  std::vector<size_t> cols;
  for (const auto& res : results) {
    if (res.zero_variance || res.p >= 0.05) continue;
    // Map back to column position to keep the original category order.
    for (size_t c = 0; c < categories.size(); ++c) {
      if (categories[c].id == res.category_id) {
        cols.push_back(c);
        break;
      }
    }
  }
  std::sort(cols.begin(), cols.end());
  return cols;
}

models::TrainedModel fit_for(const CvOptions& options, const models::FeatureMatrix& fm,
                             std::span<const double> y_train,
                             std::span<const int> labels_train, uint64_t fold_seed) {
  using models::ModelKind;
  models::Hyperparams hyper = options.hyper;
  hyper.seed = fold_seed;
  switch (options.model_kind) {
    case ModelKind::ols:
      return models::fit_ols(fm, y_train, hyper.lambda, ModelKind::ols);
    case ModelKind::ridge:
      return models::fit_ols(fm, y_train, hyper.ridge_lambda, ModelKind::ridge);
    case ModelKind::svr:
      return models::fit_svr(fm, y_train, hyper);
    case ModelKind::logistic:
      return models::fit_logistic(fm, labels_train, hyper);
    case ModelKind::gnb:
      return models::fit_gnb(fm, labels_train);
  }
  throw DataError("unknown model kind");
}

}  // namespace

EvalReport cross_validate(const ProfileSet& set, const CvOptions& options) {
  if (options.task == Task::regression && !models::is_regression_kind(options.model_kind))
    throw DataError("model kind does not fit a regression task");
  if (options.task == Task::classification && models::is_regression_kind(options.model_kind))
    throw DataError("model kind does not fit a classification task");

  Extracted ex = extract(set, options.target);
  const size_t n = ex.y.size();
  const size_t k = options.folds;
  if (k < 2) throw DataError("cv: need at least 2 folds");
  if (n < 5 * k) throw DataError("cv: need at least 5 profiles per fold");

  std::vector<int> labels;
  if (options.task == Task::classification) labels = median_split(ex.y);

  EvalReport report;
  report.target = options.target;
  report.task = options.task;
  report.model_kind = options.model_kind;
  report.feature_mode = options.feature_mode;
  report.selection_scope = options.selection_scope;
  report.seed = options.seed;
  report.n_used = n;
  report.per_fold_metric.resize(k);
  report.selected_features.resize(k);
  report.fallback_to_all.resize(k, false);

  const auto folds = kfold_split(
      n, k, options.seed,
      options.task == Task::classification ? &labels : nullptr, &report.stratified);
  {
    // Partition invariant, checked on every run: folds are disjoint and
    // cover 0..n-1 exactly.
    std::vector<char> seen(n, 0);
    size_t covered = 0;
    for (const auto& fold : folds) {
      for (size_t idx : fold) {
        if (idx >= n || seen[idx]) throw DataError("cv: fold partition broken");
        seen[idx] = 1;
        ++covered;
      }
    }
    if (covered != n) throw DataError("cv: fold partition incomplete");
  }

  std::vector<size_t> all_cols(ex.x.cols);
  std::iota(all_cols.begin(), all_cols.end(), 0);
  std::vector<size_t> global_cols;
  if (options.feature_mode == FeatureMode::significant &&
      options.selection_scope == SelectionScope::global) {
    global_cols = significant_columns(ex.x, ex.y, ex.categories);
  }

  std::vector<std::vector<std::string>> selected(k);
  std::vector<char> fallback(k, 0);
  std::vector<double> metrics(k, 0.0);

  parallel_for(k, options.threads, [&](size_t f) {
    std::vector<size_t> train_idx;
    train_idx.reserve(n - folds[f].size());
    for (size_t g = 0; g < k; ++g) {
      if (g == f) continue;
      train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    const auto& test_idx = folds[f];

    const Matrix x_train_full = ex.x.select_rows(train_idx);
    std::vector<double> y_train(train_idx.size());
    std::vector<int> lab_train(train_idx.size());
    for (size_t i = 0; i < train_idx.size(); ++i) {
      y_train[i] = ex.y[train_idx[i]];
      if (!labels.empty()) lab_train[i] = labels[train_idx[i]];
    }

    std::vector<size_t> cols = all_cols;
    if (options.feature_mode == FeatureMode::significant) {
      cols = options.selection_scope == SelectionScope::global
                 ? global_cols
                 : significant_columns(x_train_full, y_train, ex.categories);
      if (cols.empty()) {
        cols = all_cols;
        fallback[f] = 1;
      }
    }
    std::vector<std::string> col_names;
    for (size_t c : cols) col_names.push_back(ex.categories[c].name);
    selected[f] = col_names;
    const Matrix x_train = x_train_full.select_columns(cols);
    const auto fm = models::standardize_fit(x_train, std::move(col_names));

    const auto model = fit_for(options, fm, y_train, lab_train,
                               Rng::derive(options.seed, 0xcf0 + f));

    const Matrix x_test = ex.x.select_rows(test_idx).select_columns(cols);
    const auto scores = models::predict(model, x_test, /*clip_rates=*/true);

    if (options.task == Task::regression) {
      std::vector<double> y_test(test_idx.size());
      for (size_t i = 0; i < test_idx.size(); ++i) y_test[i] = ex.y[test_idx[i]];
      metrics[f] = mae(scores, y_test);
    } else {
      std::vector<int> lab_test(test_idx.size());
      for (size_t i = 0; i < test_idx.size(); ++i) lab_test[i] = labels[test_idx[i]];
      metrics[f] = auc(scores, lab_test);
    }
  });

  report.per_fold_metric = metrics;
  report.selected_features = std::move(selected);
  for (size_t f = 0; f < k; ++f) report.fallback_to_all[f] = fallback[f] != 0;
  report.mean_metric =
      std::accumulate(metrics.begin(), metrics.end(), 0.0) / static_cast<double>(k);
  return report;
}

nlohmann::json EvalReport::to_json() const {
  std::vector<int> fallback_int;
  for (bool b : fallback_to_all) fallback_int.push_back(b ? 1 : 0);
  return {{"target", stats::target_name(target)},
          {"task", task_name(task)},
          {"model", models::kind_name(model_kind)},
          {"feature_mode", feature_mode_name(feature_mode)},
          {"selection_scope", selection_scope_name(selection_scope)},
          {"folds", per_fold_metric.size()},
          {"per_fold_metric", per_fold_metric},
          {"mean_metric", mean_metric},
          {"selected_features", selected_features},
          {"fallback_to_all", fallback_int},
          {"stratified", stratified},
          {"n_used", n_used},
          {"seed", seed}};
}

void write_reports_tsv(std::ostream& os, std::span<const EvalReport> reports,
                       const ReportMeta& meta) {
  if (reports.empty()) throw DataError("no evaluation reports");
  write_meta_tsv(os, meta);
  os << "# task=" << task_name(reports[0].task)
     << " model=" << models::kind_name(reports[0].model_kind)
     << " metric=" << (reports[0].task == Task::regression ? "mae" : "auc")
     << " selection=" << selection_scope_name(reports[0].selection_scope) << "\n";

  std::vector<stats::Target> targets;
  std::vector<FeatureMode> modes;
  for (const auto& r : reports) {
    if (std::find(targets.begin(), targets.end(), r.target) == targets.end())
      targets.push_back(r.target);
    if (std::find(modes.begin(), modes.end(), r.feature_mode) == modes.end())
      modes.push_back(r.feature_mode);
  }
  os << "features";
  for (auto t : targets) os << '\t' << stats::target_name(t);
  os << '\n';
  for (auto m : modes) {
    os << feature_mode_name(m);
    for (auto t : targets) {
      const auto it = std::find_if(reports.begin(), reports.end(), [&](const auto& r) {
        return r.target == t && r.feature_mode == m;
      });
      os << '\t';
      if (it != reports.end()) os << format_fixed(it->mean_metric, 6);
    }
    os << '\n';
  }
}

}  // namespace engage::eval
