#include "nstab/rng.hpp"

#include <cmath>

namespace nstab {

double SeededStream::next_normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller.  next_uniform() returns [0, 1); shift to (0, 1] for the log.
  const double u1 = 1.0 - next_uniform();
  const double u2 = next_uniform();
  const double mag = std::sqrt(-2.0 * std::log(u1));
  spare_ = mag * std::sin(2.0 * M_PI * u2);
  has_spare_ = true;
  return mag * std::cos(2.0 * M_PI * u2);
}

}  // namespace nstab
