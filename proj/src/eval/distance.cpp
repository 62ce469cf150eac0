#include "eval/distance.hpp"

#include <cmath>
#include <stdexcept>

#include "core/error.hpp"

namespace schedsyn::eval {

double emd_masses(std::span<const double> p, std::span<const double> q, double spacing) {
  const size_t n = std::max(p.size(), q.size());
  double cdf_p = 0.0, cdf_q = 0.0, work = 0.0;
  for (size_t i = 0; i < n; ++i) {
    cdf_p += i < p.size() ? p[i] : 0.0;
    cdf_q += i < q.size() ? q[i] : 0.0;
    if (i + 1 < n) work += std::abs(cdf_p - cdf_q) * spacing;
  }
  return work;
}

double emd(const RateDistribution& p, const RateDistribution& q) {
  return emd_masses(p.mass, q.mass, 1.0);
}

double emd(const TimeDistribution& p, const TimeDistribution& q) {
  return emd_masses(p.mass, q.mass, 1.0 / TimeDistribution::kBins);
}

double l1_bivariate(const BivariateTimeDistribution& p, const BivariateTimeDistribution& q) {
  if (p.mass.size() != q.mass.size()) {
    throw DataError("l1_bivariate: grids of different size");
  }
  double total = 0.0;
  for (size_t i = 0; i < p.mass.size(); ++i) total += std::abs(p.mass[i] - q.mass[i]);
  return total;
}

namespace {

// Lentz continued fraction for the incomplete beta, standard formulation.
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-14;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
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
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log(1.0 - x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw DataError("welch_t_test: need at least two observations per side");
  }
  const auto stats = [](std::span<const double> v) {
    double mean = 0.0;
    for (const double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (const double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size() - 1);
    return std::make_pair(mean, var);
  };
  const auto [m1, v1] = stats(a);
  const auto [m2, v2] = stats(b);
  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());
  const double se1 = v1 / n1;
  const double se2 = v2 / n2;

  WelchResult r;
  if (se1 + se2 == 0.0) {
    // identical constant samples: no evidence of difference
    r.t = 0.0;
    r.df = n1 + n2 - 2.0;
    r.p_value = 1.0;
    return r;
  }
  r.t = (m1 - m2) / std::sqrt(se1 + se2);
  r.df = (se1 + se2) * (se1 + se2) /
         (se1 * se1 / (n1 - 1.0) + se2 * se2 / (n2 - 1.0));
  const double x = r.df / (r.df + r.t * r.t);
  r.p_value = incomplete_beta(0.5 * r.df, 0.5, x);
  return r;
}

}  // namespace schedsyn::eval
