#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "nsslice/galerkin.hpp"

namespace nsslice {

struct LedgerRow {
  double time = 0.0;
  double energy = 0.0;  // E = ||u||^2 / 2
  double d1 = 0.0;      // ||D1 u||^2
  double d2 = 0.0;      // ||D2 u||^2
  double dcross = 0.0;  // ||D3 u||^2 = (1/4) ||(a1^-1 D1 + a2^-1 D2) u||^2
  double work = 0.0;    // <f, u>
  double dedt = 0.0;    // finite-difference dE/dt
  double residual = 0.0;
  // Running integrals from 0 to time.
  double int_dissipation = 0.0;  // of D1 + D2 + Dcross
  double int_work = 0.0;
  double int_abs_work = 0.0;
};

struct EnergyLedger {
  double nu = 0.0;
  double dt = 0.0;
  std::vector<LedgerRow> rows;

  double initial_energy() const { return rows.empty() ? 0.0 : rows.front().energy; }
  double max_abs_residual() const;
};

// Norms come from Parseval sums; the running integrals reuse the RK4 stages of
// each step so they carry the integrator's order.
EnergyLedger ledger_from_run(const Trajectory& trajectory, const OperatorTensors& t, const ForcingFn& forcing,
                             const DynamicsOptions& dynamics);

struct CumulativeCheck {
  bool ok = true;
  double worst_excess = 0.0;  // max over t of lhs - rhs (<= tol when ok)
  std::size_t worst_row = 0;
};
// E(t) + nu int (D1 + D2 + Dcross) <= E(0) + int |W| + 1e-8 (E(0) + int |W|).
CumulativeCheck check_cumulative(const EnergyLedger& ledger, double rel_tol = 1e-8);

struct MonotoneCheck {
  bool ok = true;
  double worst_increase = 0.0;
  std::size_t worst_row = 0;
};
// E(t_{k+1}) <= E(t_k) + slack * E(0) for every step.
MonotoneCheck check_monotone(const EnergyLedger& ledger, double slack = 1e-12);

struct AprioriBounds {
  double sup_norm = 0.0;       // sup_t ||u||
  double int_gradient = 0.0;   // int (D1 + D2)
  double constant = 0.0;       // C = E(0) + int |W|
  double norm_bound = 0.0;     // sqrt(2 C)
  double gradient_bound = 0.0; // C / nu
};
// Throws bound_violation when either statistic exceeds its bound (relative slack 1e-8).
AprioriBounds apriori_bounds(const EnergyLedger& ledger);

struct ContractionReport {
  double delta = 0.0;
  double scale = 0.0;  // ||u(0)||
  std::vector<double> times;
  std::vector<double> w_norm;         // ||u - v||
  std::vector<double> grad_sq;        // ||grad u||^2 = D1 + D2
  std::vector<double> grad_integral;  // int_0^t ||grad u||^2
  std::vector<double> bound;          // delta exp(2 C int ||grad u||^2)
  double fitted_c = 0.0;
  bool fit_defined = false;
  double max_w = 0.0;
  bool envelope_ok = false;
  // Residual of (1/2) d/dt ||w||^2 + nu (D1 w + D2 w + D3 w) + bs(w, u, w) = 0.
  std::vector<double> identity_residual;
  double identity_scale = 0.0;
  double identity_tolerance = 0.0;
  bool identity_ok = false;
  bool pass = false;  // envelope_ok; identity_ok is reported separately
};

ContractionReport contraction_report(const OperatorTensors& t, const Trajectory& u, const Trajectory& v, double delta,
                                     const DynamicsOptions& dynamics, double identity_rel_tol = 1e-2);

struct UniquenessSetup {
  Eigen::VectorXd u0;
  ForcingFn forcing;
  SolveOptions options;
  double delta = 0.0;
  Eigen::VectorXd direction;  // perturbation direction, normalized after projection;
                              // empty selects lowest_divfree_mode
  double corrupt = 0.0;       // jump added to the second run at mid time
  double identity_rel_tol = 1e-2;
};

// Runs u from u0 and v from u0 + delta d concurrently and compares them.
ContractionReport uniqueness_experiment(const OperatorTensors& t, const UniquenessSetup& setup);

}  // namespace nsslice
