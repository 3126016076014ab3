#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace nhdp {

using Rng = std::mt19937_64;

/// Mixes a base seed with stream coordinates (step, document index, ...)
/// into an independent seed. Every random stream in the library is derived
/// this way so results do not depend on thread scheduling.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> coords);

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> coords) {
  return Rng(derive_seed(base, coords));
}

/// ln G for G ~ Gamma(shape, 1). Stable for shapes far below 1 where the
/// draw itself underflows.
double sample_log_gamma(Rng& rng, double shape);

double sample_beta(Rng& rng, double a, double b);

/// Dirichlet(alpha) draw; exact zeros are possible only through underflow.
std::vector<double> sample_dirichlet(Rng& rng, std::span<const double> alpha);
std::vector<double> sample_symmetric_dirichlet(Rng& rng, double alpha, std::size_t dim);

/// Index drawn with probability proportional to weights (need not sum to 1).
std::size_t sample_categorical(Rng& rng, std::span<const double> weights);

}  // namespace nhdp
