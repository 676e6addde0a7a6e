#include <cmath>
#include <limits>

#include "finespan/error.hpp"
#include "finespan/stats.hpp"

namespace finespan::stats {

namespace {

constexpr double kEps = 1e-15;
constexpr double kTiny = 1e-300;
constexpr int kMaxIter = 10000;

// Series expansion of P(a, x), valid for x < a + 1.
double gamma_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < kMaxIter; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lentz continued fraction for Q(a, x), valid for x >= a + 1.
double gamma_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// Continued fraction for the incomplete beta function.
double beta_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m < kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return h;
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

}  // namespace

double gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw DataError("gamma_p needs a > 0 and x >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_series(a, x);
  return 1.0 - gamma_fraction(a, x);
}

double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw DataError("gamma_q needs a > 0 and x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_series(a, x);
  return gamma_fraction(a, x);
}

double beta_inc(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || x < 0.0 || x > 1.0) throw DataError("beta_inc needs a, b > 0 and x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double front =
      std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_fraction(a, b, x) / a;
  return 1.0 - front * beta_fraction(b, a, 1.0 - x) / b;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double chi2_sf(double x, double df) {
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return gamma_q(df / 2.0, x / 2.0);
}

double f_sf(double x, double df1, double df2) {
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return beta_inc(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * x));
}

double studentized_range_cdf(double q, double k) {
  if (q <= 0.0) return 0.0;
  if (std::isinf(q)) return 1.0;
  // k * integral of phi(z) * (Phi(z) - Phi(z - q))^(k-1) dz, composite Simpson.
  constexpr double lo = -9.0;
  constexpr double hi = 9.0;
  constexpr int intervals = 4000;
  const double h = (hi - lo) / intervals;
  double sum = 0.0;
  for (int i = 0; i <= intervals; ++i) {
    const double z = lo + i * h;
    const double f = normal_pdf(z) * std::pow(normal_cdf(z) - normal_cdf(z - q), k - 1.0);
    const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    sum += w * f;
  }
  const double cdf = k * sum * h / 3.0;
  return std::min(1.0, std::max(0.0, cdf));
}

double studentized_range_sf(double q, double k) { return 1.0 - studentized_range_cdf(q, k); }

double studentized_range_quantile(double p, double k) {
  if (!(p > 0.0 && p < 1.0)) throw DataError("studentized range quantile needs p in (0, 1)");
  double lo = 0.0;
  double hi = 1.0;
  while (studentized_range_cdf(hi, k) < p) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    (studentized_range_cdf(mid, k) < p ? lo : hi) = mid;
  }
  return hi;
}

}  // namespace finespan::stats
