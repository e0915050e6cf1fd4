#pragma once

#include <cmath>
#include <stdexcept>

namespace chseg {

/// Bessel function of the first kind, orders 0 and 1, for x in [0, 50].
/// Backed by the standard-library implementation; negative orders via the
/// identity J_{-n}(x) = (-1)^n J_n(x).
inline double bessel_j(int n, double x) {
  if (x < 0.0 || x > 50.0) throw std::invalid_argument("bessel_j: x outside [0, 50]");
  switch (n) {
    case 0: return std::cyl_bessel_j(0, x);
    case 1: return std::cyl_bessel_j(1, x);
    case -1: return -std::cyl_bessel_j(1, x);
    default: throw std::invalid_argument("bessel_j: order must be in {-1, 0, 1}");
  }
}

}  // namespace chseg
