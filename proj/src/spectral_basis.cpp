#include <algorithm>
#include <cmath>
#include <numbers>

#include "nsslice/error.hpp"
#include "nsslice/galerkin.hpp"

namespace nsslice {

SpectralBasis::SpectralBasis(std::array<int, 2> nmodes, std::array<double, 2> extents)
    : nmodes_(nmodes), extents_(extents) {
  require(nmodes[0] >= 1 && nmodes[1] >= 1, ErrorCode::invalid_argument,
          "basis: mode counts must be >= 1");
  require(extents[0] > 0.0 && extents[1] > 0.0 && std::isfinite(extents[0]) &&
              std::isfinite(extents[1]),
          ErrorCode::invalid_argument, "basis: extents must be positive");
  constexpr double pi = std::numbers::pi;
  for (int n = 1; n <= nmodes[1]; ++n) {
    for (int m = 1; m <= nmodes[0]; ++m) {
      const double km = m * pi / extents[0];
      const double kn = n * pi / extents[1];
      modes_.push_back({m, n, km * km + kn * kn});
    }
  }
  std::stable_sort(modes_.begin(), modes_.end(), [](const Mode& a, const Mode& b) {
    if (a.lambda != b.lambda) return a.lambda < b.lambda;
    if (a.m != b.m) return a.m < b.m;
    return a.n < b.n;
  });
  lookup_.assign(modes_.size(), 0);
  for (std::size_t i = 0; i < modes_.size(); ++i)
    lookup_[std::size_t(modes_[i].m - 1) + std::size_t(nmodes[0]) * std::size_t(modes_[i].n - 1)] = i;
}

double SpectralBasis::lambda1() const noexcept {
  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  return pi2 * (1.0 / (extents_[0] * extents_[0]) + 1.0 / (extents_[1] * extents_[1]));
}

double SpectralBasis::evaluate(const double* coeffs, double x, double y) const {
  constexpr double pi = std::numbers::pi;
  std::vector<double> sx(static_cast<std::size_t>(nmodes_[0]));
  std::vector<double> sy(static_cast<std::size_t>(nmodes_[1]));
  for (int m = 1; m <= nmodes_[0]; ++m) sx[std::size_t(m - 1)] = std::sin(m * pi * x / extents_[0]);
  for (int n = 1; n <= nmodes_[1]; ++n) sy[std::size_t(n - 1)] = std::sin(n * pi * y / extents_[1]);
  double acc = 0.0;
  for (std::size_t i = 0; i < modes_.size(); ++i)
    acc += coeffs[i] * sx[std::size_t(modes_[i].m - 1)] * sy[std::size_t(modes_[i].n - 1)];
  return acc;
}

// Gauss-Legendre is not exact on trigonometric products; this order reaches
// round-off for triple products up to at least 32 modes per direction.
std::size_t minimum_quadrature_order(const SpectralBasis& basis) {
  return std::size_t(3 * basis.max_mode() + 16);
}

std::size_t default_quadrature_order(const SpectralBasis& basis) {
  return minimum_quadrature_order(basis);
}

}  // namespace nsslice
