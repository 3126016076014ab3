#pragma once

#include <span>
#include <vector>

namespace nhdp {

/// Digamma function psi(x) for x > 0. Shifts the argument above 10 with the
/// recurrence psi(x) = psi(x + 1) - 1/x and finishes with the asymptotic
/// series through x^-14. Absolute error below 1e-13 for x >= 1e-4.
/// Throws NumericError for x <= 0 or NaN.
double digamma(double x);

struct BetaLogExpectation {
  double e_log;    // E[ln Y]
  double e_log1m;  // E[ln (1 - Y)]
};

/// Y ~ Beta(a, b).
BetaLogExpectation expect_log_beta(double a, double b);

/// Elementwise psi(lambda_w) - psi(sum lambda).
std::vector<double> expect_log_dirichlet(std::span<const double> lambda);
void expect_log_dirichlet(std::span<const double> lambda, std::span<double> out);

double log_sum_exp(std::span<const double> values);

/// Subtracts log-sum-exp. -inf entries stay -inf; throws NumericError when
/// every entry is -inf ("no admissible node").
std::vector<double> normalize_log(std::span<const double> values);
void normalize_log_inplace(std::span<double> values);

/// ln B(a, b).
double log_beta_function(double a, double b);

/// KL(Beta(a, b) || Beta(a0, b0)).
double kl_beta(double a, double b, double a0, double b0);

}  // namespace nhdp
