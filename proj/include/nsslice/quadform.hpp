#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "nsslice/field.hpp"

namespace nsslice {

using Mat3 = Eigen::Matrix3d;

struct StrainMatrixField {
  std::vector<std::size_t> dims;
  std::vector<double> extents;
  std::vector<Mat3> gradient;  // gradient[p](i, k) = D_i v_k
  std::vector<Mat3> strain;    // (G + G^T) / 2

  std::size_t size() const noexcept { return strain.size(); }
};

// Second-order differences (one-sided at the boundary, first order when an
// axis has only two nodes), then symmetrized.
StrainMatrixField strain_field(const Field& v);
// Strain field from explicit per-point gradients on the grid of `shape`.
StrainMatrixField strain_from_gradients(const Field& shape, std::vector<Mat3> gradients);

struct Inertia {
  int positive = 0;
  int zero = 0;
  int negative = 0;
  friend bool operator==(const Inertia&, const Inertia&) = default;
  friend bool operator<(const Inertia& a, const Inertia& b) {
    return std::tie(a.positive, a.zero, a.negative) < std::tie(b.positive, b.zero, b.negative);
  }
};

enum class QuadMethod { jacobi, eigen_fallback };

struct PointDecomposition {
  QuadMethod method = QuadMethod::jacobi;
  // Jacobi path: b = (a11, det2/det1, det3/det2). Fallback: ascending eigenvalues.
  std::array<double, 3> b{};
  // Unit lower-triangular factor entries of A = L diag(b) L^T (Jacobi path).
  double l21 = 0.0;
  double l31 = 0.0;
  double l32 = 0.0;
  Inertia inertia;
};

// Leading minors are accepted as pivots when |det M_k| > rel_tol * max|a|^k.
PointDecomposition canonicalize_point(const Mat3& a, double rel_tol = 1e-8);

struct QuadFormDecomposition {
  std::vector<PointDecomposition> points;
  std::size_t degenerate_count = 0;
  std::map<Inertia, std::size_t> inertia_histogram;

  double degenerate_fraction() const {
    return points.empty() ? 0.0 : double(degenerate_count) / double(points.size());
  }
};

QuadFormDecomposition canonicalize(const StrainMatrixField& strain, double rel_tol = 1e-8);

// Closed-form eigenvalues of a symmetric 3x3 matrix, ascending.
std::array<double, 3> symmetric_eigenvalues(const Mat3& a);

double quadform_value(const Mat3& a, const Eigen::Vector3d& w);
// y = L^T w for the Jacobi factorization.
Eigen::Vector3d canonical_variables(const PointDecomposition& d, const Eigen::Vector3d& w);
// sum_j b_j y_j^2.
double canonical_value(const PointDecomposition& d, const Eigen::Vector3d& w);

// Signed integral of w^T A w over the grid; each cell contributes the mean of
// its corner values times its volume.
double signed_integral(const StrainMatrixField& strain, const Field& w);

// norms[i][j] = ||D_i v_j||_2 over the domain.
using GradientNormMatrix = std::array<std::array<double, 3>, 3>;

struct GradientNormTable {
  std::vector<double> times;
  std::vector<GradientNormMatrix> norms;
};

// Finite-difference gradients integrated with the composite trapezoid rule.
GradientNormMatrix gradient_norms_from_field(const Field& v);
GradientNormTable gradient_norms_from_series(const TimeSeriesField& series);

// v_j = sum a_j[klm] sin(k pi x/L1) sin(l pi y/L2) sin(m pi z/L3), index
// (k-1) + N1 ((l-1) + N2 (m-1)).
struct SineSeries3D {
  std::array<int, 3> nmodes{1, 1, 1};
  std::array<double, 3> extents{1.0, 1.0, 1.0};
  std::array<std::vector<double>, 3> coeffs;
};
// Parseval sums, exact for the series.
GradientNormMatrix gradient_norms_from_sine(const SineSeries3D& v);

double box_lambda1(const std::vector<double>& extents);

struct CriterionRow {
  double time = 0.0;
  std::array<double, 3> rhs{};  // c^2 sum_i ||D_i v_j||
  std::array<bool, 3> satisfied{};
  double aggregate_rhs = 0.0;   // c^2 sum_ij ||D_i v_j||
  bool aggregate_satisfied = false;
};

struct CriterionReport {
  double nu = 0.0;
  double lambda1 = 0.0;
  double c_gn = 1.0;
  double lhs = 0.0;  // nu lambda1^(1/4)
  std::vector<CriterionRow> rows;
  bool all_components_satisfied = true;
  bool aggregate_satisfied = true;
};

// Closed inequality nu lambda1^(1/4) >= rhs, allowing a few ulps for the
// rounding of the two sides.
CriterionReport uniqueness_criterion(const GradientNormTable& table, double nu, double lambda1, double c_gn = 1.0);

}  // namespace nsslice
