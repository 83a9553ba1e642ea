#include "engage/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "engage/errors.hpp"

namespace engage::stats {
namespace {

// Continued fraction for the incomplete beta function (modified Lentz).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("pearson: length mismatch");
  const size_t n = x.size();
  if (n < 3) throw DataError("pearson: need at least 3 samples");

  long double mx = 0.0L, my = 0.0L;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  long double sxy = 0.0L, sxx = 0.0L, syy = 0.0L;
  for (size_t i = 0; i < n; ++i) {
    const long double dx = x[i] - mx;
    const long double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0L || syy == 0.0L) throw DataError("pearson: zero variance");
  const double r = static_cast<double>(sxy / std::sqrt(sxx * syy));
  return std::clamp(r, -1.0, 1.0);
}

double incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw DataError("incomplete_beta: a, b must be positive");
  if (x < 0.0 || x > 1.0) throw DataError("incomplete_beta: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;

  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  // The continued fraction converges fast below the distribution mean;
  // use the reflection I_x(a,b) = 1 - I_{1-x}(b,a) above it.
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double p_two_tailed(double r, size_t n) {
  if (n < 3) throw DataError("p_two_tailed: need n >= 3");
  if (std::fabs(r) > 1.0) throw DataError("p_two_tailed: |r| > 1");
  const double nu = static_cast<double>(n - 2);
  const double r2 = r * r;
  if (r2 >= 1.0) return 0.0;  // degenerate limit
  const double t2 = r2 * nu / (1.0 - r2);
  const double p = incomplete_beta(nu / (nu + t2), 0.5 * nu, 0.5);
  return std::clamp(p, 0.0, 1.0);
}

SignificanceTier tier_for(double p) {
  if (p < 0.01) return SignificanceTier::double_star;
  if (p < 0.05) return SignificanceTier::star;
  return SignificanceTier::ns;
}

std::string tier_label(SignificanceTier tier) {
  switch (tier) {
    case SignificanceTier::star: return "*";
    case SignificanceTier::double_star: return "**";
    default: return "";
  }
}

std::string target_name(Target t) {
  return t == Target::response ? "response" : "retweet";
}

std::vector<CorrelationResult> correlate_columns(const Matrix& x,
                                                 std::span<const double> y,
                                                 std::span<const Category> categories) {
  if (x.rows != y.size() || x.cols != categories.size())
    throw DataError("correlate: shape mismatch");
  if (x.rows < 3) throw DataError("too few usable profiles");

  const double y0 = y.empty() ? 0.0 : y[0];
  if (std::all_of(y.begin(), y.end(), [y0](double v) { return v == y0; }))
    throw DataError("target rate is constant");

  std::vector<CorrelationResult> results;
  results.reserve(x.cols);
  for (size_t c = 0; c < x.cols; ++c) {
    CorrelationResult res;
    res.category_id = categories[c].id;
    res.category_name = categories[c].name;
    res.n = x.rows;
    const auto col = x.column(c);
    const double c0 = col[0];
    if (std::all_of(col.begin(), col.end(), [c0](double v) { return v == c0; })) {
      res.zero_variance = true;
      res.r = 0.0;
      res.p = 1.0;
      res.tier = SignificanceTier::ns;
    } else {
      res.r = pearson(col, y);
      res.p = p_two_tailed(res.r, res.n);
      res.tier = tier_for(res.p);
    }
    results.push_back(std::move(res));
  }
  std::stable_sort(results.begin(), results.end(), [](const auto& a, const auto& b) {
    return std::fabs(a.r) > std::fabs(b.r);
  });
  return results;
}

std::vector<CorrelationResult> correlate_all(const ProfileSet& set, Target target) {
  std::vector<double> y;
  std::vector<size_t> rows;
  for (size_t i = 0; i < set.profiles.size(); ++i) {
    const auto& p = set.profiles[i];
    if (target == Target::response) {
      if (!p.response_rate) continue;
      y.push_back(*p.response_rate);
    } else {
      y.push_back(p.retweet_rate);
    }
    rows.push_back(i);
  }
  if (rows.size() < 3) throw DataError("too few usable profiles");

  Matrix x(rows.size(), set.categories.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto& scores = set.profiles[rows[i]].scores.scores;
    for (size_t c = 0; c < scores.size(); ++c) x.at(i, c) = scores[c];
  }
  return correlate_columns(x, y, set.categories);
}

void write_correlations_tsv(std::ostream& os, std::span<const CorrelationResult> results,
                            const ReportMeta& meta, Target target) {
  write_meta_tsv(os, meta);
  os << "# target=" << target_name(target) << "\n";
  os << "category\tr\tp\tn\ttier\tflags\n";
  for (const auto& res : results) {
    os << res.category_name << '\t' << format_fixed(res.r, 6) << '\t'
       << format_fixed(res.p, 6) << '\t' << res.n << '\t' << tier_label(res.tier) << '\t'
       << (res.zero_variance ? "zero_variance" : "") << '\n';
  }
}

}  // namespace engage::stats
