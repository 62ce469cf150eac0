#pragma once

#include <span>

#include "eval/marginals.hpp"

namespace schedsyn::eval {

// 1-D earth mover's distance as the integral of |CDF_p - CDF_q| with the
// given ground spacing between adjacent support points. Shorter supports are
// zero-padded.
double emd_masses(std::span<const double> p, std::span<const double> q, double spacing);

// Rates: ground distance is the count difference.
double emd(const RateDistribution& p, const RateDistribution& q);
// Times: ground distance in days (five-minute bins).
double emd(const TimeDistribution& p, const TimeDistribution& q);

// Sum of absolute cell differences over the joint grid.
double l1_bivariate(const BivariateTimeDistribution& p, const BivariateTimeDistribution& q);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;
};

// Independent-samples Welch's t-test (unequal variances) with a two-sided
// p-value from the Student-t CDF.
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

// Regularised incomplete beta function I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);

}  // namespace schedsyn::eval
