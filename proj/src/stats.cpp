#include "devmine/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <unordered_map>

#include "devmine/util.hpp"

namespace devmine::stats {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0) || !(p < 1.0))
    throw std::invalid_argument("normal_quantile: p must lie in (0,1)");
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (normal_cdf(mid) < p)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-15) break;
  }
  return 0.5 * (lo + hi);
}

namespace {

// Continued fraction for the incomplete beta function (Lentz's method).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double reg_inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                 b * std::log(1.0 - x);
  double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

double f_survival(double f, double df1, double df2) {
  if (f <= 0.0) return 1.0;
  return reg_inc_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f));
}

double t_cdf(double t, double df) {
  double x = df / (df + t * t);
  double tail = 0.5 * reg_inc_beta(df / 2.0, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

// ---- Gauss-Legendre ----

namespace {

struct GaussLegendre {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

// Nodes and weights by Newton iteration on the Legendre polynomial.
GaussLegendre gauss_legendre(int n) {
  GaussLegendre gl;
  gl.nodes.resize(static_cast<std::size_t>(n));
  gl.weights.resize(static_cast<std::size_t>(n));
  int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    gl.nodes[static_cast<std::size_t>(i)] = -x;
    gl.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    double w = 2.0 / ((1.0 - x * x) * pp * pp);
    gl.weights[static_cast<std::size_t>(i)] = w;
    gl.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  return gl;
}

const GaussLegendre& cached_gl(int n) {
  static std::mutex mu;
  static std::unordered_map<int, GaussLegendre> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, gauss_legendre(n)).first;
  return it->second;
}

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }

// P(range of k iid standard normals <= w), inner integral of the
// studentized range CDF. 128-point Gauss-Legendre over the effective
// support of the normal density.
double range_cdf(double w, int k) {
  if (w <= 0.0) return 0.0;
  const GaussLegendre& gl = cached_gl(128);
  const double lo = -8.5, hi = 8.5;
  double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
  double sum = 0.0;
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    double z = mid + half * gl.nodes[i];
    double inner = normal_cdf(z) - normal_cdf(z - w);
    if (inner <= 0.0) continue;
    sum += gl.weights[i] * normal_pdf(z) * std::pow(inner, k - 1);
  }
  double value = k * half * sum;
  return std::clamp(value, 0.0, 1.0);
}

}  // namespace

double studentized_range_cdf(double q, int k, double df) {
  if (k < 2) throw std::invalid_argument("studentized_range_cdf: k must be >= 2");
  if (df < 1.0) throw std::invalid_argument("studentized_range_cdf: df must be >= 1");
  if (q <= 0.0) return 0.0;
  if (df > 1e7) return range_cdf(q, k);

  // Outer integral over s = pooled SD / sigma, with density
  // f(s) = 2 (df/2)^(df/2) / Gamma(df/2) * s^(df-1) exp(-df s^2 / 2).
  const GaussLegendre& gl = cached_gl(64);
  double spread = 12.0 / std::sqrt(2.0 * df);
  double lo = std::max(0.0, 1.0 - spread);
  double hi = 1.0 + spread;
  double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
  double ln_norm = 0.5 * df * std::log(df / 2.0) + std::log(2.0) - std::lgamma(df / 2.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    double s = mid + half * gl.nodes[i];
    if (s <= 0.0) continue;
    double ln_f = ln_norm + (df - 1.0) * std::log(s) - 0.5 * df * s * s;
    sum += gl.weights[i] * std::exp(ln_f) * range_cdf(q * s, k);
  }
  return std::clamp(half * sum, 0.0, 1.0);
}

double studentized_range_quantile(double p, int k, double df) {
  if (!(p > 0.0) || !(p < 1.0))
    throw std::invalid_argument("studentized_range_quantile: p must lie in (0,1)");
  double lo = 0.0, hi = 100.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (studentized_range_cdf(mid, k, df) < p)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-10) break;
  }
  return 0.5 * (lo + hi);
}

// ---- Shapiro-Wilk ----

namespace {

// Polynomial with coefficients in ascending order, c[0] + c[1] x + ...
double poly(const double* c, int n, double x) {
  double value = c[0];
  double xn = 1.0;
  for (int i = 1; i < n; ++i) {
    xn *= x;
    value += c[i] * xn;
  }
  return value;
}

}  // namespace

SwResult shapiro_wilk(std::span<const double> sample) {
  const std::size_t n = sample.size();
  if (n < 3 || n > 5000)
    throw std::invalid_argument("shapiro_wilk: sample size must be in [3, 5000]");
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double range = x.back() - x.front();
  if (!(range > 0.0)) throw NumericalError("shapiro_wilk: sample has zero range");

  // Royston (1995) coefficient corrections.
  static const double c1[6] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
  static const double c2[6] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  static const double c3[4] = {0.544, -0.39978, 0.025054, -6.714e-4};
  static const double c4[4] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static const double c5[4] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static const double c6[3] = {-0.4803, -0.082676, 0.0030302};
  static const double g[2] = {-2.273, 0.459};

  const double an = static_cast<double>(n);
  const std::size_t n2 = n / 2;
  std::vector<double> a(n2, 0.0);
  if (n == 3) {
    a[0] = std::sqrt(0.5);
  } else {
    double an25 = an + 0.25;
    double summ2 = 0.0;
    for (std::size_t i = 1; i <= n2; ++i) {
      a[i - 1] = normal_quantile((static_cast<double>(i) - 0.375) / an25);
      summ2 += a[i - 1] * a[i - 1];
    }
    summ2 *= 2.0;
    double ssumm2 = std::sqrt(summ2);
    double rsn = 1.0 / std::sqrt(an);
    double a1 = poly(c1, 6, rsn) - a[0] / ssumm2;
    std::size_t i1;
    double fac;
    if (n > 5) {
      i1 = 3;
      double a2 = -a[1] / ssumm2 + poly(c2, 6, rsn);
      fac = std::sqrt((summ2 - 2.0 * a[0] * a[0] - 2.0 * a[1] * a[1]) /
                      (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[0] = a1;
      a[1] = a2;
    } else {
      i1 = 2;
      fac = std::sqrt((summ2 - 2.0 * a[0] * a[0]) / (1.0 - 2.0 * a1 * a1));
      a[0] = a1;
    }
    for (std::size_t i = i1; i <= n2; ++i) a[i - 1] = -a[i - 1] / fac;
  }

  // W as the squared correlation between the ordered data and the
  // coefficients; computed via 1-W to keep precision near W = 1.
  double sa = 0.0, sx = 0.0;
  {
    std::size_t j = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      sx += x[i] / range;
      if (i != j) sa += (i < j ? -1.0 : 1.0) * a[std::min(i, j)];
      if (j == 0) break;
      --j;
    }
  }
  sa /= an;
  sx /= an;
  double ssa = 0.0, ssx = 0.0, sax = 0.0;
  {
    std::size_t j = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      double asa = (i != j) ? (i < j ? -1.0 : 1.0) * a[std::min(i, j)] - sa : -sa;
      double xsx = x[i] / range - sx;
      ssa += asa * asa;
      ssx += xsx * xsx;
      sax += asa * xsx;
      if (j == 0) break;
      --j;
    }
  }
  double ssassx = std::sqrt(ssa * ssx);
  double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
  double w = 1.0 - w1;

  SwResult result;
  result.n = n;
  result.w = w;
  if (n == 3) {
    const double pi6 = 6.0 / kPi;
    const double stqr = std::asin(std::sqrt(0.75));
    result.p = std::clamp(pi6 * (std::asin(std::sqrt(w)) - stqr), 0.0, 1.0);
    return result;
  }
  double y = std::log(w1);
  double xx = std::log(an);
  double m, s;
  if (n <= 11) {
    double gamma = poly(g, 2, an);
    if (y >= gamma) {
      result.p = 1e-99;
      return result;
    }
    y = -std::log(gamma - y);
    m = poly(c3, 4, an);
    s = std::exp(poly(c4, 4, an));
  } else {
    m = poly(c5, 4, xx);
    s = std::exp(poly(c6, 3, xx));
  }
  result.p = 1.0 - normal_cdf((y - m) / s);  // upper tail
  return result;
}

// ---- ANOVA ----

AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw std::invalid_argument("anova_oneway: need at least 2 groups");
  std::size_t total_n = 0;
  for (const auto& grp : groups) {
    if (grp.size() < 2)
      throw std::invalid_argument("anova_oneway: every group needs at least 2 observations");
    total_n += grp.size();
  }
  double grand = 0.0;
  for (const auto& grp : groups)
    for (double v : grp) grand += v;
  grand /= static_cast<double>(total_n);

  AnovaResult r;
  r.df_between = groups.size() - 1;
  r.df_within = total_n - groups.size();
  for (const auto& grp : groups) {
    double mean = 0.0;
    for (double v : grp) mean += v;
    mean /= static_cast<double>(grp.size());
    r.ss_between += static_cast<double>(grp.size()) * (mean - grand) * (mean - grand);
    for (double v : grp) r.ss_within += (v - mean) * (v - mean);
  }
  r.ss_total = r.ss_between + r.ss_within;
  r.ms_between = r.ss_between / static_cast<double>(r.df_between);
  r.ms_within = r.ss_within / static_cast<double>(r.df_within);
  if (r.ms_within <= 0.0) {
    if (r.ss_between <= 0.0)
      throw NumericalError("anova_oneway: zero variance within and between groups");
    r.f = std::numeric_limits<double>::infinity();
    r.p = 0.0;
    return r;
  }
  r.f = r.ms_between / r.ms_within;
  r.p = f_survival(r.f, static_cast<double>(r.df_between), static_cast<double>(r.df_within));
  return r;
}

// ---- Tukey HSD ----

TukeyResult tukey_hsd(const std::vector<std::vector<double>>& groups,
                      const std::vector<std::string>& names, double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw std::invalid_argument("tukey_hsd: alpha must lie in (0,1)");
  if (!names.empty() && names.size() != groups.size())
    throw std::invalid_argument("tukey_hsd: names/groups size mismatch");
  AnovaResult aov = anova_oneway(groups);
  const int k = static_cast<int>(groups.size());
  const double df_w = static_cast<double>(aov.df_within);

  TukeyResult result;
  result.alpha = alpha;
  result.df_within = aov.df_within;
  result.q_critical = studentized_range_quantile(1.0 - alpha, k, df_w);

  std::vector<double> means(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    double m = 0.0;
    for (double v : groups[i]) m += v;
    means[i] = m / static_cast<double>(groups[i].size());
  }
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t j = i + 1; j < groups.size(); ++j) {
      TukeyPair pair;
      pair.i = i;
      pair.j = j;
      std::string gi = names.empty() ? "g" + std::to_string(i + 1) : names[i];
      std::string gj = names.empty() ? "g" + std::to_string(j + 1) : names[j];
      pair.label = gj + "-" + gi;
      pair.diff = means[j] - means[i];
      // Tukey-Kramer standard error for possibly unbalanced groups.
      double se = std::sqrt(aov.ms_within / 2.0 *
                            (1.0 / static_cast<double>(groups[i].size()) +
                             1.0 / static_cast<double>(groups[j].size())));
      double q_obs = se > 0.0 ? std::fabs(pair.diff) / se : 0.0;
      pair.p_adj = std::clamp(1.0 - studentized_range_cdf(std::max(q_obs, 1e-300), k, df_w),
                              0.0, 1.0);
      if (q_obs == 0.0) pair.p_adj = 1.0;
      pair.lower = pair.diff - result.q_critical * se;
      pair.upper = pair.diff + result.q_critical * se;
      result.pairs.push_back(std::move(pair));
    }
  }
  return result;
}

}  // namespace devmine::stats
