#pragma once

#include <cstddef>
#include <vector>

namespace qcd::math {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Legendre nodes/weights on [0,1] by Newton iteration on the Legendre
// recurrence (classic gauleg). Rules are cached per order.
const QuadratureRule& gauss_legendre_01(std::size_t n);

}  // namespace qcd::math
