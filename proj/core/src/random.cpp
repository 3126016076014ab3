#include "nhdp/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nhdp/errors.hpp"
#include "nhdp/specfun.hpp"

namespace nhdp {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> coords) {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t c : coords) h = splitmix64(h ^ splitmix64(c + 0x632be59bd9b4e019ULL));
  return h;
}

double sample_log_gamma(Rng& rng, double shape) {
  if (!(shape > 0.0)) throw NumericError("sample_log_gamma: shape must be positive");
  if (shape >= 1.0) {
    std::gamma_distribution<double> gamma(shape, 1.0);
    double g = gamma(rng);
    while (g <= 0.0) g = gamma(rng);
    return std::log(g);
  }
  // Gamma(a) = Gamma(a + 1) * U^(1/a)
  std::gamma_distribution<double> gamma(shape + 1.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double g = gamma(rng);
  while (g <= 0.0) g = gamma(rng);
  double u = unif(rng);
  while (u <= 0.0) u = unif(rng);
  return std::log(g) + std::log(u) / shape;
}

double sample_beta(Rng& rng, double a, double b) {
  const double la = sample_log_gamma(rng, a);
  const double lb = sample_log_gamma(rng, b);
  // a / (a + b) evaluated in log space
  return 1.0 / (1.0 + std::exp(lb - la));
}

std::vector<double> sample_dirichlet(Rng& rng, std::span<const double> alpha) {
  std::vector<double> out(alpha.size());
  for (std::size_t k = 0; k < alpha.size(); ++k) out[k] = sample_log_gamma(rng, alpha[k]);
  normalize_log_inplace(out);
  for (double& v : out) v = std::exp(v);
  return out;
}

std::vector<double> sample_symmetric_dirichlet(Rng& rng, double alpha, std::size_t dim) {
  const std::vector<double> params(dim, alpha);
  return sample_dirichlet(rng, params);
}

std::size_t sample_categorical(Rng& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw NumericError("sample_categorical: weights sum to zero");
  std::uniform_real_distribution<double> unif(0.0, total);
  const double target = unif(rng);
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] > 0.0) last_positive = k;
    acc += weights[k];
    if (target < acc) return k;
  }
  return last_positive;
}

}  // namespace nhdp
