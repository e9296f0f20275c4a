#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace devmine::stats {

// ---- distribution plumbing ----

double normal_cdf(double x);
double normal_quantile(double p);  // inverse of normal_cdf, p in (0,1)

// Regularized incomplete beta I_x(a, b).
double reg_inc_beta(double a, double b, double x);

// Survival function of the F distribution: P(F' > f).
double f_survival(double f, double df1, double df2);

// CDF of Student's t.
double t_cdf(double t, double df);

// CDF of the studentized range of k groups with df error degrees of
// freedom, by double Gauss-Legendre quadrature (outer integral over the
// pooled-SD chi distribution, inner over the range of k standard normals).
// Result clamped to [0, 1]. df may be huge (treated as infinite).
double studentized_range_cdf(double q, int k, double df);

// Inverse of the above in q, by bisection.
double studentized_range_quantile(double p, int k, double df);

// ---- Shapiro-Wilk (Royston's AS R94 approximation, complete samples) ----

struct SwResult {
  double w = 0.0;
  double p = 0.0;
  std::size_t n = 0;
};

// Requires 3 <= n <= 5000 and a non-degenerate sample.
SwResult shapiro_wilk(std::span<const double> sample);

// ---- one-way ANOVA ----

struct AnovaResult {
  std::size_t df_between = 0;
  std::size_t df_within = 0;
  double ss_between = 0.0;
  double ss_within = 0.0;
  double ss_total = 0.0;
  double ms_between = 0.0;
  double ms_within = 0.0;
  double f = 0.0;
  double p = 1.0;
};

AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups);

// ---- Tukey HSD (Tukey-Kramer for unbalanced groups) ----

struct TukeyPair {
  std::size_t i = 0;           // group indices, i < j
  std::size_t j = 0;
  std::string label;           // "<group j>-<group i>"
  double diff = 0.0;           // mean_j - mean_i
  double lower = 0.0;
  double upper = 0.0;
  double p_adj = 1.0;
};

struct TukeyResult {
  double alpha = 0.05;
  double q_critical = 0.0;
  std::size_t df_within = 0;
  std::vector<TukeyPair> pairs;
};

TukeyResult tukey_hsd(const std::vector<std::vector<double>>& groups,
                      const std::vector<std::string>& names, double alpha = 0.05);

}  // namespace devmine::stats
