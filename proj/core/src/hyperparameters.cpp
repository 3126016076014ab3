#include "nhdp/hyperparameters.hpp"

#include "nhdp/errors.hpp"

namespace nhdp {

void Hyperparameters::validate() const {
  if (!(alpha > 0 && beta > 0 && gamma1 > 0 && gamma2 > 0 && lambda0 > 0)) {
    throw ConfigError("hyperparameters must all be strictly positive");
  }
}

}  // namespace nhdp
