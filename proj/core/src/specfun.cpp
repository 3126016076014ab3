#include "nhdp/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "nhdp/errors.hpp"

namespace nhdp {

double digamma(double x) {
  if (!(x > 0.0)) {
    throw NumericError("digamma: argument must be positive, got " + std::to_string(x));
  }
  double acc = 0.0;
  while (x < 10.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  // Bernoulli terms B_2k / (2k) for k = 1..7.
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      inv2 * (1.0 / 12.0 -
              inv2 * (1.0 / 120.0 -
                      inv2 * (1.0 / 252.0 -
                              inv2 * (1.0 / 240.0 -
                                      inv2 * (1.0 / 132.0 -
                                              inv2 * (691.0 / 32760.0 - inv2 * (1.0 / 12.0)))))));
  return acc + std::log(x) - 0.5 * inv - series;
}

BetaLogExpectation expect_log_beta(double a, double b) {
  const double total = digamma(a + b);
  return {digamma(a) - total, digamma(b) - total};
}

void expect_log_dirichlet(std::span<const double> lambda, std::span<double> out) {
  double sum = 0.0;
  for (double v : lambda) {
    if (!(v > 0.0)) throw NumericError("expect_log_dirichlet: nonpositive parameter");
    sum += v;
  }
  const double total = digamma(sum);
  for (std::size_t w = 0; w < lambda.size(); ++w) out[w] = digamma(lambda[w]) - total;
}

std::vector<double> expect_log_dirichlet(std::span<const double> lambda) {
  std::vector<double> out(lambda.size());
  expect_log_dirichlet(lambda, out);
  return out;
}

double log_sum_exp(std::span<const double> values) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) hi = std::max(hi, v);
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double v : values) s += std::exp(v - hi);
  return hi + std::log(s);
}

void normalize_log_inplace(std::span<double> values) {
  const double lse = log_sum_exp(values);
  if (!std::isfinite(lse)) throw NumericError("normalize_log: no admissible node");
  for (double& v : values) v -= lse;
}

std::vector<double> normalize_log(std::span<const double> values) {
  std::vector<double> out(values.begin(), values.end());
  normalize_log_inplace(out);
  return out;
}

double log_beta_function(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double kl_beta(double a, double b, double a0, double b0) {
  const double psi_ab = digamma(a + b);
  return log_beta_function(a0, b0) - log_beta_function(a, b) + (a - a0) * (digamma(a) - psi_ab) +
         (b - b0) * (digamma(b) - psi_ab);
}

}  // namespace nhdp
