#include "engage/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "engage/errors.hpp"
#include "engage/rng.hpp"

namespace engage::models {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Solve A x = b for symmetric positive-definite A (in-place Cholesky).
std::vector<double> spd_solve(Matrix a, std::vector<double> b) {
  const size_t n = a.rows;
  for (size_t j = 0; j < n; ++j) {
    double d = a.at(j, j);
    for (size_t k = 0; k < j; ++k) d -= a.at(j, k) * a.at(j, k);
    if (d <= 1e-12) throw DataError("singular system");
    const double l = std::sqrt(d);
    a.at(j, j) = l;
    for (size_t i = j + 1; i < n; ++i) {
      double s = a.at(i, j);
      for (size_t k = 0; k < j; ++k) s -= a.at(i, k) * a.at(j, k);
      a.at(i, j) = s / l;
    }
  }
  // Forward then backward substitution.
  for (size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (size_t k = 0; k < i; ++k) s -= a.at(i, k) * b[k];
    b[i] = s / a.at(i, i);
  }
  for (size_t i = n; i-- > 0;) {
    double s = b[i];
    for (size_t k = i + 1; k < n; ++k) s -= a.at(k, i) * b[k];
    b[i] = s / a.at(i, i);
  }
  return b;
}

void check_feature_shape(const FeatureMatrix& fm, size_t y_size) {
  if (fm.values.rows != y_size) throw DataError("feature/target length mismatch");
  if (fm.values.cols != fm.columns.size() || fm.values.cols != fm.column_stats.size())
    throw DataError("feature matrix metadata mismatch");
}

void check_binary(std::span<const int> labels) {
  bool has0 = false, has1 = false;
  for (int v : labels) {
    if (v == 0) has0 = true;
    else if (v == 1) has1 = true;
    else throw DataError("labels must be 0/1");
  }
  if (!has0 || !has1) throw DataError("single-class labels");
}

TrainedModel linear_model(ModelKind kind, const FeatureMatrix& fm,
                          std::vector<double> w, double b, const Hyperparams& hyper) {
  TrainedModel m;
  m.kind = kind;
  m.columns = fm.columns;
  m.column_stats = fm.column_stats;
  m.weights = std::move(w);
  m.intercept = b;
  m.hyper = hyper;
  return m;
}

}  // namespace

FeatureMatrix standardize_fit(const Matrix& raw, std::vector<std::string> columns) {
  if (raw.rows < 2) throw DataError("standardize: need at least 2 rows");
  if (columns.size() != raw.cols) throw DataError("standardize: column name mismatch");
  FeatureMatrix fm;
  fm.columns = std::move(columns);
  fm.column_stats.resize(raw.cols);
  for (size_t c = 0; c < raw.cols; ++c) {
    double mean = 0.0;
    for (size_t r = 0; r < raw.rows; ++r) mean += raw.at(r, c);
    mean /= static_cast<double>(raw.rows);
    double ss = 0.0;
    for (size_t r = 0; r < raw.rows; ++r) {
      const double d = raw.at(r, c) - mean;
      ss += d * d;
    }
    double sd = std::sqrt(ss / static_cast<double>(raw.rows - 1));
    if (sd == 0.0) sd = 1.0;  // constant column passes through as zeros
    fm.column_stats[c] = {mean, sd};
  }
  fm.values = standardize_apply(fm.column_stats, raw);
  return fm;
}

Matrix standardize_apply(std::span<const ColumnStats> stats, const Matrix& raw) {
  if (stats.size() != raw.cols) throw DataError("standardize: column count mismatch");
  Matrix out(raw.rows, raw.cols);
  for (size_t r = 0; r < raw.rows; ++r)
    for (size_t c = 0; c < raw.cols; ++c)
      out.at(r, c) = (raw.at(r, c) - stats[c].mean) / stats[c].sd;
  return out;
}

std::string kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::ols: return "ols";
    case ModelKind::ridge: return "ridge";
    case ModelKind::svr: return "svr";
    case ModelKind::logistic: return "logistic";
    case ModelKind::gnb: return "gnb";
  }
  return "ols";
}

ModelKind kind_from_name(const std::string& name) {
  if (name == "ols") return ModelKind::ols;
  if (name == "ridge") return ModelKind::ridge;
  if (name == "svr") return ModelKind::svr;
  if (name == "logistic") return ModelKind::logistic;
  if (name == "gnb") return ModelKind::gnb;
  throw ParseError("unknown model kind '" + name + "'");
}

bool is_regression_kind(ModelKind kind) {
  return kind == ModelKind::ols || kind == ModelKind::ridge || kind == ModelKind::svr;
}

TrainedModel fit_ols(const FeatureMatrix& fm, std::span<const double> y, double lambda,
                     ModelKind kind) {
  check_feature_shape(fm, y.size());
  if (lambda < 0.0) throw DataError("lambda must be non-negative");
  if (!is_regression_kind(kind) || kind == ModelKind::svr)
    throw DataError("fit_ols: kind must be ols or ridge");
  const Matrix& x = fm.values;
  const size_t d = x.cols;

  // Normal equations over [X | 1]; the intercept column is unpenalized.
  Matrix g(d + 1, d + 1);
  std::vector<double> rhs(d + 1, 0.0);
  for (size_t r = 0; r < x.rows; ++r) {
    const auto row = x.row(r);
    for (size_t i = 0; i < d; ++i) {
      for (size_t j = i; j < d; ++j) g.at(i, j) += row[i] * row[j];
      g.at(i, d) += row[i];
      rhs[i] += row[i] * y[r];
    }
    rhs[d] += y[r];
  }
  g.at(d, d) = static_cast<double>(x.rows);
  for (size_t i = 0; i < d + 1; ++i)
    for (size_t j = 0; j < i; ++j) g.at(i, j) = g.at(j, i);
  for (size_t i = 0; i < d; ++i) g.at(i, i) += lambda;

  auto sol = spd_solve(std::move(g), std::move(rhs));
  std::vector<double> w(sol.begin(), sol.begin() + d);
  Hyperparams hyper;
  (kind == ModelKind::ridge ? hyper.ridge_lambda : hyper.lambda) = lambda;
  return linear_model(kind, fm, std::move(w), sol[d], hyper);
}

double svr_loss(const Matrix& x, std::span<const double> y, std::span<const double> w,
                double b, double c, double epsilon) {
  double hinge = 0.0;
  for (size_t r = 0; r < x.rows; ++r) {
    const double res = std::fabs(dot(x.row(r), w) + b - y[r]) - epsilon;
    if (res > 0.0) hinge += res;
  }
  const double reg = 0.5 * dot(w, w);
  return (reg + c * hinge) / static_cast<double>(x.rows);
}

void svr_grad(const Matrix& x, std::span<const double> y, std::span<const double> w,
              double b, double c, double epsilon, std::span<double> gw, double& gb) {
  const double n = static_cast<double>(x.rows);
  for (size_t i = 0; i < w.size(); ++i) gw[i] = w[i] / n;
  gb = 0.0;
  for (size_t r = 0; r < x.rows; ++r) {
    const auto row = x.row(r);
    const double res = dot(row, w) + b - y[r];
    if (std::fabs(res) <= epsilon) continue;
    const double s = (res > 0.0 ? 1.0 : -1.0) * c / n;
    for (size_t i = 0; i < w.size(); ++i) gw[i] += s * row[i];
    gb += s;
  }
}

TrainedModel fit_svr(const FeatureMatrix& fm, std::span<const double> y,
                     const Hyperparams& hyper) {
  check_feature_shape(fm, y.size());
  if (hyper.svr_c <= 0.0) throw DataError("svr: C must be positive");
  if (hyper.svr_epsilon < 0.0) throw DataError("svr: epsilon must be non-negative");
  const Matrix& x = fm.values;
  const size_t n = x.rows;
  const size_t d = x.cols;
  if (n == 0) throw DataError("svr: empty training set");

  std::vector<double> w(d, 0.0);
  double b = 0.0;
  double lr = hyper.svr_lr;
  double best = svr_loss(x, y, w, b, hyper.svr_c, hyper.svr_epsilon);

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < hyper.svr_epochs; ++epoch) {
    Rng rng(Rng::derive(hyper.seed, static_cast<uint64_t>(epoch)));
    rng.shuffle(order);

    bool accepted = false;
    for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
      const double step = lr / (static_cast<double>(n) *
                                (1.0 + hyper.svr_lr_decay * static_cast<double>(epoch)));
      std::vector<double> wt = w;
      double bt = b;
      for (size_t idx : order) {
        const auto row = x.row(idx);
        const double res = dot(row, wt) + bt - y[idx];
        // Regularizer part of the per-sample subgradient.
        for (size_t i = 0; i < d; ++i) wt[i] -= step * wt[i] / static_cast<double>(n);
        if (std::fabs(res) > hyper.svr_epsilon) {
          const double s = (res > 0.0 ? 1.0 : -1.0) * hyper.svr_c;
          for (size_t i = 0; i < d; ++i) wt[i] -= step * s * row[i];
          bt -= step * s;
        }
      }
      const double loss = svr_loss(x, y, wt, bt, hyper.svr_c, hyper.svr_epsilon);
      if (loss <= best) {
        w = std::move(wt);
        b = bt;
        best = loss;
        accepted = true;
      } else {
        lr *= 0.5;  // epoch overshot; retry the same pass with a smaller step
      }
    }
    if (!accepted) break;  // step underflow, converged
  }
  return linear_model(ModelKind::svr, fm, std::move(w), b, hyper);
}

double logistic_loss(const Matrix& x, std::span<const int> y, std::span<const double> w,
                     double b, double l2) {
  double nll = 0.0;
  for (size_t r = 0; r < x.rows; ++r) {
    const double z = dot(x.row(r), w) + b;
    const double m = (y[r] == 1 ? z : -z);
    nll += std::max(0.0, -m) + std::log1p(std::exp(-std::fabs(m)));
  }
  return nll / static_cast<double>(x.rows) + 0.5 * l2 * dot(w, w);
}

void logistic_grad(const Matrix& x, std::span<const int> y, std::span<const double> w,
                   double b, double l2, std::span<double> gw, double& gb) {
  const double n = static_cast<double>(x.rows);
  std::fill(gw.begin(), gw.end(), 0.0);
  gb = 0.0;
  for (size_t r = 0; r < x.rows; ++r) {
    const auto row = x.row(r);
    const double err = sigmoid(dot(row, w) + b) - static_cast<double>(y[r]);
    for (size_t i = 0; i < w.size(); ++i) gw[i] += err * row[i];
    gb += err;
  }
  for (size_t i = 0; i < w.size(); ++i) gw[i] = gw[i] / n + l2 * w[i];
  gb /= n;
}

TrainedModel fit_logistic(const FeatureMatrix& fm, std::span<const int> labels,
                          const Hyperparams& hyper) {
  check_feature_shape(fm, labels.size());
  check_binary(labels);
  const Matrix& x = fm.values;
  const size_t d = x.cols;

  std::vector<double> w(d, 0.0);
  double b = 0.0;
  double loss = logistic_loss(x, labels, w, b, hyper.logistic_l2);
  std::vector<double> gw(d);
  double gb = 0.0;
  double lr = hyper.logistic_lr;

  for (int it = 0; it < hyper.logistic_iterations; ++it) {
    logistic_grad(x, labels, w, b, hyper.logistic_l2, gw, gb);
    bool accepted = false;
    for (int attempt = 0; attempt < 50 && !accepted; ++attempt) {
      std::vector<double> wt(d);
      for (size_t i = 0; i < d; ++i) wt[i] = w[i] - lr * gw[i];
      const double bt = b - lr * gb;
      const double lt = logistic_loss(x, labels, wt, bt, hyper.logistic_l2);
      if (lt <= loss) {
        w = std::move(wt);
        b = bt;
        loss = lt;
        accepted = true;
        lr = std::min(lr * 1.2, hyper.logistic_lr * 16.0);
      } else {
        lr *= 0.5;
      }
    }
    if (!accepted) break;
  }

  TrainedModel m = linear_model(ModelKind::logistic, fm, std::move(w), b, hyper);
  return m;
}

TrainedModel fit_gnb(const FeatureMatrix& fm, std::span<const int> labels) {
  check_feature_shape(fm, labels.size());
  check_binary(labels);
  const Matrix& x = fm.values;
  const size_t d = x.cols;

  TrainedModel m;
  m.kind = ModelKind::gnb;
  m.columns = fm.columns;
  m.column_stats = fm.column_stats;
  for (int cls = 0; cls <= 1; ++cls) {
    GnbClassStats& st = (cls == 1 ? m.positive : m.negative);
    st.mean.assign(d, 0.0);
    st.var.assign(d, 0.0);
    size_t count = 0;
    for (size_t r = 0; r < x.rows; ++r) {
      if (labels[r] != cls) continue;
      ++count;
      for (size_t c = 0; c < d; ++c) st.mean[c] += x.at(r, c);
    }
    for (double& v : st.mean) v /= static_cast<double>(count);
    for (size_t r = 0; r < x.rows; ++r) {
      if (labels[r] != cls) continue;
      for (size_t c = 0; c < d; ++c) {
        const double dev = x.at(r, c) - st.mean[c];
        st.var[c] += dev * dev;
      }
    }
    for (double& v : st.var) v = std::max(v / static_cast<double>(count), 1e-9);
    st.prior = static_cast<double>(count) / static_cast<double>(x.rows);
  }
  return m;
}

namespace {

double gnb_log_joint(const GnbClassStats& st, std::span<const double> row) {
  double lp = std::log(st.prior);
  for (size_t c = 0; c < row.size(); ++c) {
    const double dev = row[c] - st.mean[c];
    lp += -0.5 * std::log(2.0 * M_PI * st.var[c]) - dev * dev / (2.0 * st.var[c]);
  }
  return lp;
}

}  // namespace

std::vector<double> predict(const TrainedModel& model, const Matrix& raw, bool clip_rates) {
  if (raw.cols != model.column_stats.size())
    throw DataError("predict: feature column mismatch");
  const Matrix x = standardize_apply(model.column_stats, raw);
  std::vector<double> out(x.rows);
  switch (model.kind) {
    case ModelKind::ols:
    case ModelKind::ridge:
    case ModelKind::svr:
      for (size_t r = 0; r < x.rows; ++r) {
        double v = dot(x.row(r), model.weights) + model.intercept;
        if (clip_rates) v = std::clamp(v, 0.0, 1.0);
        out[r] = v;
      }
      break;
    case ModelKind::logistic:
      for (size_t r = 0; r < x.rows; ++r)
        out[r] = sigmoid(dot(x.row(r), model.weights) + model.intercept);
      break;
    case ModelKind::gnb:
      for (size_t r = 0; r < x.rows; ++r) {
        const double lp0 = gnb_log_joint(model.negative, x.row(r));
        const double lp1 = gnb_log_joint(model.positive, x.row(r));
        const double m = std::max(lp0, lp1);
        const double e0 = std::exp(lp0 - m);
        const double e1 = std::exp(lp1 - m);
        out[r] = e1 / (e0 + e1);
      }
      break;
  }
  return out;
}

nlohmann::json TrainedModel::to_json() const {
  nlohmann::json stats = nlohmann::json::array();
  for (const auto& cs : column_stats)
    stats.push_back({{"mean", cs.mean}, {"sd", cs.sd}});

  nlohmann::json params;
  if (kind == ModelKind::gnb) {
    auto cls = [](const GnbClassStats& st) {
      return nlohmann::json{{"prior", st.prior}, {"mean", st.mean}, {"var", st.var}};
    };
    params = {{"negative", cls(negative)}, {"positive", cls(positive)}};
  } else {
    params = {{"weights", weights}, {"intercept", intercept}};
  }

  const nlohmann::json hyperparams = {
      {"lambda", hyper.lambda},
      {"ridge_lambda", hyper.ridge_lambda},
      {"svr_c", hyper.svr_c},
      {"svr_epsilon", hyper.svr_epsilon},
      {"svr_epochs", hyper.svr_epochs},
      {"svr_lr", hyper.svr_lr},
      {"svr_lr_decay", hyper.svr_lr_decay},
      {"logistic_iterations", hyper.logistic_iterations},
      {"logistic_lr", hyper.logistic_lr},
      {"logistic_l2", hyper.logistic_l2},
      {"seed", hyper.seed},
  };

  return {{"format_version", 1},
          {"kind", kind_name(kind)},
          {"columns", columns},
          {"column_stats", stats},
          {"parameters", params},
          {"hyperparameters", hyperparams}};
}

TrainedModel TrainedModel::from_json(const nlohmann::json& j) {
  if (j.at("format_version").get<int>() != 1)
    throw ParseError("unsupported model format_version");
  TrainedModel m;
  m.kind = kind_from_name(j.at("kind").get<std::string>());
  m.columns = j.at("columns").get<std::vector<std::string>>();
  for (const auto& cs : j.at("column_stats"))
    m.column_stats.push_back({cs.at("mean").get<double>(), cs.at("sd").get<double>()});

  const auto& params = j.at("parameters");
  if (m.kind == ModelKind::gnb) {
    auto cls = [](const nlohmann::json& c) {
      GnbClassStats st;
      st.prior = c.at("prior").get<double>();
      st.mean = c.at("mean").get<std::vector<double>>();
      st.var = c.at("var").get<std::vector<double>>();
      return st;
    };
    m.negative = cls(params.at("negative"));
    m.positive = cls(params.at("positive"));
  } else {
    m.weights = params.at("weights").get<std::vector<double>>();
    m.intercept = params.at("intercept").get<double>();
  }

  const size_t d = m.columns.size();
  if (m.column_stats.size() != d ||
      (m.kind == ModelKind::gnb
           ? (m.negative.mean.size() != d || m.negative.var.size() != d ||
              m.positive.mean.size() != d || m.positive.var.size() != d)
           : m.weights.size() != d))
    throw ParseError("model file: parameter dimensionality mismatch");

  const auto& h = j.at("hyperparameters");
  m.hyper.lambda = h.at("lambda").get<double>();
  m.hyper.ridge_lambda = h.at("ridge_lambda").get<double>();
  m.hyper.svr_c = h.at("svr_c").get<double>();
  m.hyper.svr_epsilon = h.at("svr_epsilon").get<double>();
  m.hyper.svr_epochs = h.at("svr_epochs").get<int>();
  m.hyper.svr_lr = h.at("svr_lr").get<double>();
  m.hyper.svr_lr_decay = h.at("svr_lr_decay").get<double>();
  m.hyper.logistic_iterations = h.at("logistic_iterations").get<int>();
  m.hyper.logistic_lr = h.at("logistic_lr").get<double>();
  m.hyper.logistic_l2 = h.at("logistic_l2").get<double>();
  m.hyper.seed = h.at("seed").get<uint64_t>();
  return m;
}

void TrainedModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write model file: " + path);
  out << to_json().dump(2) << '\n';
}

TrainedModel TrainedModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open model file: " + path);
  nlohmann::json j;
  in >> j;
  return TrainedModel::from_json(j);
}

}  // namespace engage::models
