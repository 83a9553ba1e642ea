#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "engage/corpus.hpp"
#include "engage/matrix.hpp"
#include "engage/report.hpp"

namespace engage::stats {

// Pearson correlation from sample moments, clamped to [-1, 1]. Throws
// DataError on length mismatch, n < 3, or zero variance in either vector.
double pearson(std::span<const double> x, std::span<const double> y);

// Regularized incomplete beta I_x(a, b) via continued fraction.
double incomplete_beta(double x, double a, double b);

// Two-tailed significance of a Pearson r at sample size n, from the exact
// t distribution with nu = n-2 degrees of freedom:
//   t = r * sqrt(nu / (1 - r^2)),  p = I_{nu/(nu+t^2)}(nu/2, 1/2)
double p_two_tailed(double r, size_t n);

enum class SignificanceTier { ns, star, double_star };
SignificanceTier tier_for(double p);
std::string tier_label(SignificanceTier tier);

struct CorrelationResult {
  int category_id = 0;
  std::string category_name;
  double r = 0.0;
  double p = 1.0;
  size_t n = 0;
  SignificanceTier tier = SignificanceTier::ns;
  bool zero_variance = false;
};

enum class Target { response, retweet };
std::string target_name(Target t);

// One result per column of X against y, sorted by |r| descending. Constant
// columns are flagged zero_variance with r=0, p=1 instead of being dropped.
// Throws DataError when n < 3 or the target itself is constant.
std::vector<CorrelationResult> correlate_columns(const Matrix& x,
                                                 std::span<const double> y,
                                                 std::span<const Category> categories);

// Category scores vs. the chosen engagement rate over all profiles where the
// target is defined.
std::vector<CorrelationResult> correlate_all(const ProfileSet& profiles, Target target);

// TSV: category, r (6 decimals), p (6 decimals), n, tier (''/'*'/'**').
void write_correlations_tsv(std::ostream& os, std::span<const CorrelationResult> results,
                            const ReportMeta& meta, Target target);

}  // namespace engage::stats
