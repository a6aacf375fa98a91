#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "nsslice/field.hpp"
#include "nsslice/geometry.hpp"

namespace nsslice {

// Tensor-product Dirichlet sine basis w_mn = sin(m pi x / L1) sin(n pi y / L2),
// 1 <= m <= N1, 1 <= n <= N2, ordered by eigenvalue (ties by m, then n).
// A state holds three velocity components: coeffs[c * size() + i].
class SpectralBasis {
 public:
  struct Mode {
    int m = 1;
    int n = 1;
    double lambda = 0.0;
  };

  SpectralBasis(std::array<int, 2> nmodes, std::array<double, 2> extents);

  const std::array<int, 2>& nmodes() const noexcept { return nmodes_; }
  const std::array<double, 2>& extents() const noexcept { return extents_; }
  std::size_t size() const noexcept { return modes_.size(); }
  std::size_t state_size() const noexcept { return 3 * modes_.size(); }
  const Mode& mode(std::size_t i) const { return modes_[i]; }
  const std::vector<Mode>& modes() const noexcept { return modes_; }
  // Basis index of wavenumbers (m, n), 1-based.
  std::size_t index_of(int m, int n) const { return lookup_[std::size_t(m - 1) + std::size_t(nmodes_[0]) * std::size_t(n - 1)]; }

  double lambda1() const noexcept;
  double mass_scale() const noexcept { return 0.25 * extents_[0] * extents_[1]; }
  int max_mode() const noexcept { return std::max(nmodes_[0], nmodes_[1]); }

  // Value of one scalar component at (x, y).
  double evaluate(const double* coeffs, double x, double y) const;

 private:
  std::array<int, 2> nmodes_;
  std::array<double, 2> extents_;
  std::vector<Mode> modes_;
  std::vector<std::size_t> lookup_;
};

std::size_t minimum_quadrature_order(const SpectralBasis& basis);
std::size_t default_quadrature_order(const SpectralBasis& basis);

// Sparse trilinear tables T1[a][b][c] = <w_a D1 w_b, w_c> and T2 with D2.
struct SparseTrilinear {
  struct Entry {
    int a;
    int b;
    int c;
    double value;
  };
  std::vector<Entry> t1;
  std::vector<Entry> t2;
};

// Pseudo-spectral evaluation of the convective forms on a tensor Gauss grid.
class ConvectionEvaluator {
 public:
  ConvectionEvaluator(const SpectralBasis& basis, ProjectedGradient coeffs,
                      std::size_t quadrature_order);

  // Entry I of the result is bs(a, b, Phi_I) where
  // bs(a, b, c) = (b(a, b, c) - b(a, c, b)) / 2 and b(a, b, c) = <a~ . grad b, c>,
  // a~ = (a1 + c1 a3, a2 + c2 a3).
  Eigen::VectorXd skew_load(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;

  double skew_form(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                   const Eigen::VectorXd& c) const {
    return skew_load(a, b).dot(c);
  }

 private:
  Eigen::MatrixXd to_grid(const Eigen::VectorXd& coeffs, std::size_t comp) const;

  SpectralBasis basis_;
  ProjectedGradient coeffs_;
  Eigen::MatrixXd sx_, cx_, sy_, cy_;  // quadrature points x modes
  Eigen::MatrixXd weights_;            // Qx x Qy
};

struct AssemblyOptions {
  std::size_t quadrature_order = 0;  // 0 selects default_quadrature_order
  double chart_tolerance = kDefaultChartTolerance;
  double coupling = 0.5;
  // Build the sparse trilinear tables when basis.size() <= this limit.
  std::size_t sparse_tensor_limit = 144;
};

struct OperatorTensors {
  SpectralBasis basis;
  SliceChart chart;
  ProjectedGradient gradient;
  std::size_t quadrature_order = 0;

  // Per-component blocks (basis.size() square); the full operators are
  // block diagonal over the three velocity components.
  Eigen::MatrixXd mass;
  Eigen::MatrixXd s11, s22, s12, s33;  // <D_p w_j, D_q w_i>, s33 for D3 = c1 D1 + c2 D2
  Eigen::MatrixXd stiffness;           // -(s11 + s22 + s33)

  // Discrete projected divergence tested against cos(p pi x/L1) cos(q pi y/L2).
  Eigen::MatrixXd constraint;
  Eigen::VectorXd constraint_weights;  // squared L2 norms of the cosine test functions
  Eigen::MatrixXd range_basis;         // orthonormal basis of range(constraint^T)
  Eigen::Index constraint_rank = 0;

  std::shared_ptr<const SparseTrilinear> trilinear;  // null above the size limit
  std::shared_ptr<const ConvectionEvaluator> convection;

  // Block-diagonal application of the stiffness to a full state.
  Eigen::VectorXd apply_stiffness(const Eigen::VectorXd& u) const;
};

OperatorTensors assemble(const SpectralBasis& basis, const SliceChart& chart,
                         const AssemblyOptions& options = {});

// Raw and skew trilinear forms from the sparse tables.
double trilinear_raw(const OperatorTensors& t, const Eigen::VectorXd& a,
                     const Eigen::VectorXd& b, const Eigen::VectorXd& c);
double trilinear_skew(const OperatorTensors& t, const Eigen::VectorXd& a,
                      const Eigen::VectorXd& b, const Eigen::VectorXd& c);
Eigen::VectorXd skew_load_sparse(const OperatorTensors& t, const Eigen::VectorXd& a,
                                 const Eigen::VectorXd& b);

// Mass-orthogonal projection onto the null space of the constraint.
Eigen::VectorXd project_divfree(const OperatorTensors& t, const Eigen::VectorXd& u);
// L2 norm of the discrete projected divergence.
double divergence_norm(const OperatorTensors& t, const Eigen::VectorXd& u);

// Parseval sums: ||D1 u||^2, ||D2 u||^2, ||D3 u||^2 over all three components.
struct GradientNorms {
  double d1 = 0.0;
  double d2 = 0.0;
  double dcross = 0.0;
};
GradientNorms gradient_norms(const OperatorTensors& t, const Eigen::VectorXd& u);
double energy(const OperatorTensors& t, const Eigen::VectorXd& u);
double l2_norm(const OperatorTensors& t, const Eigen::VectorXd& u);

// Smallest eigenvalue of -stiffness restricted to the divergence-free
// subspace, divided by the mass scale.
double coercivity_check(const OperatorTensors& t);

struct DivFreeMode {
  double eigenvalue = 0.0;  // divided by the mass scale
  Eigen::VectorXd coeffs;   // unit L2 norm
};
// Eigenpair of the smallest eigenvalue in coercivity_check.
DivFreeMode lowest_divfree_mode(const OperatorTensors& t);
// Largest eigenvalue of -M^{-1} K (one component block).
double max_eigenvalue(const OperatorTensors& t);

// Forcing in basis coordinates (expansion coefficients, not load vector).
using ForcingFn = std::function<Eigen::VectorXd(double)>;

struct GalerkinState {
  Eigen::VectorXd coeffs;
  double time = 0.0;
};

struct DynamicsOptions {
  double nu = 1.0;
  bool nonlinear = true;
  double blowup_threshold = 1e12;
};

// du/dt = P[nu M^{-1} K u - M^{-1} bs(u, u, .) + f].
Eigen::VectorXd rhs(const OperatorTensors& t, const Eigen::VectorXd& u,
                    const Eigen::VectorXd* forcing, const DynamicsOptions& opts);

struct Rk4Stages {
  std::array<Eigen::VectorXd, 4> states;
  std::array<Eigen::VectorXd, 4> derivatives;
  std::array<double, 4> times;
  std::array<Eigen::VectorXd, 4> forcing;  // empty vectors when unforced
};
Rk4Stages rk4_stages(const OperatorTensors& t, const Eigen::VectorXd& u, double time,
                     double dt, const ForcingFn& forcing, const DynamicsOptions& opts);

GalerkinState step(const GalerkinState& state, const OperatorTensors& t,
                   const ForcingFn& forcing, double dt, const DynamicsOptions& opts);

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  double dt = 0.0;
};

struct SolveOptions {
  DynamicsOptions dynamics;
  double dt = 1e-3;
  double final_time = 1.0;
  // Called after every step with the step index (1-based); may modify the state.
  std::function<void(std::size_t, double, Eigen::VectorXd&)> post_step;
};

std::size_t step_count(double final_time, double dt);

Trajectory solve(const OperatorTensors& t, const Eigen::VectorXd& u0, const ForcingFn& forcing,
                 const SolveOptions& options);

// L2 projection of a 2D field (ncomp 3, extents equal to the basis extents)
// onto the basis, by bilinear interpolation at the quadrature nodes.
Eigen::VectorXd project_field(const OperatorTensors& t, const Field& field);
// Samples the state on a dims grid over the basis rectangle.
Field synthesize(const OperatorTensors& t, const Eigen::VectorXd& coeffs,
                 std::array<std::size_t, 2> dims);
// Piecewise-linear-in-time forcing from per-frame projections; constant
// extrapolation outside the frame times.
ForcingFn forcing_from_series(const OperatorTensors& t, const TimeSeriesField& series);

// Full pipeline: project u0, make it divergence-free, integrate.
Trajectory solve(const OperatorTensors& t, const Field& u0, const TimeSeriesField* forcing,
                 const SolveOptions& options);

}  // namespace nsslice
