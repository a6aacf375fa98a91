#pragma once

#include <array>
#include <cstddef>

#include <Eigen/Dense>

#include "nsslice/galerkin.hpp"

namespace nsslice {

// u*(t, x, y) = g(t) U(x, y), g(t) = 1 + sin(2t)/2. With S(s) = sin^p(pi s / L),
// U~ = (S(x) S'(y), -S'(x) S(y)), U3 = S(x) S(y) and U_i = U~_i - c_i U3, so the
// projected divergence of U vanishes pointwise and U is zero on the boundary.
class ManufacturedSolution {
 public:
  ManufacturedSolution(std::array<double, 2> extents, ProjectedGradient gradient, int power = 7);

  struct PointTerms {
    std::array<double, 3> u{};
    std::array<double, 3> a1u{};   // A1 U
    std::array<double, 3> b1uu{};  // (U~ . grad) U
  };
  PointTerms terms(double x, double y) const;

  static double g(double t);
  static double dg(double t);

  const std::array<double, 2>& extents() const noexcept { return extents_; }
  int power() const noexcept { return power_; }

 private:
  std::array<double, 2> extents_;
  ProjectedGradient gradient_;
  int power_;
};

struct MmsProblem {
  Eigen::VectorXd u_hat;     // L2 projection of U
  Eigen::VectorXd a1u_hat;   // of A1 U
  Eigen::VectorXd b1uu_hat;  // of B1(U, U)
  Eigen::VectorXd initial;   // divergence-free projection of g(0) U
  ForcingFn forcing(double nu) const;
};

// Projections use a Gauss rule of `order` points per axis (0: automatic).
MmsProblem build_mms(const OperatorTensors& t, const ManufacturedSolution& ms, std::size_t order = 0);

// L2 distance between the Galerkin state and u*(time).
double mms_error(const OperatorTensors& t, const ManufacturedSolution& ms, const Eigen::VectorXd& coeffs,
                 double time, std::size_t order = 0);

}  // namespace nsslice
