#pragma once

#include <cstddef>
#include <vector>

namespace nsslice {

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const noexcept { return nodes.size(); }
};

// n-point Gauss-Legendre rule on [a, b]; exact for polynomials of degree 2n-1.
GaussRule gauss_legendre(std::size_t n, double a = -1.0, double b = 1.0);

}  // namespace nsslice
