#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nsslice/analysis.hpp"
#include "nsslice/error.hpp"

namespace nsslice {

double EnergyLedger::max_abs_residual() const {
  double r = 0.0;
  for (const auto& row : rows) r = std::max(r, std::abs(row.residual));
  return r;
}

namespace {

double work(const OperatorTensors& t, const Eigen::VectorXd& f, const Eigen::VectorXd& u) {
  return f.size() == 0 ? 0.0 : t.basis.mass_scale() * f.dot(u);
}

double dissipation(const OperatorTensors& t, const Eigen::VectorXd& u) {
  const GradientNorms g = gradient_norms(t, u);
  return g.d1 + g.d2 + g.dcross;
}

}  // namespace

EnergyLedger ledger_from_run(const Trajectory& trajectory, const OperatorTensors& t, const ForcingFn& forcing,
                             const DynamicsOptions& dynamics) {
  require(!trajectory.states.empty(), ErrorCode::invalid_argument, "ledger_from_run: empty trajectory");
  EnergyLedger ledger;
  ledger.nu = dynamics.nu;
  ledger.dt = trajectory.dt;
  const std::size_t n = trajectory.states.size();
  ledger.rows.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto& row = ledger.rows[k];
    const auto& u = trajectory.states[k];
    row.time = trajectory.times[k];
    row.energy = energy(t, u);
    const GradientNorms g = gradient_norms(t, u);
    row.d1 = g.d1;
    row.d2 = g.d2;
    row.dcross = g.dcross;
    if (forcing) row.work = work(t, forcing(row.time), u);
  }

  const double dt = trajectory.dt;
  if (n >= 3) {
    for (std::size_t k = 1; k + 1 < n; ++k)
      ledger.rows[k].dedt = (ledger.rows[k + 1].energy - ledger.rows[k - 1].energy) / (2.0 * dt);
    ledger.rows[0].dedt =
        (-3.0 * ledger.rows[0].energy + 4.0 * ledger.rows[1].energy - ledger.rows[2].energy) / (2.0 * dt);
    ledger.rows[n - 1].dedt =
        (3.0 * ledger.rows[n - 1].energy - 4.0 * ledger.rows[n - 2].energy + ledger.rows[n - 3].energy) / (2.0 * dt);
  } else if (n == 2) {
    const double d = (ledger.rows[1].energy - ledger.rows[0].energy) / dt;
    ledger.rows[0].dedt = ledger.rows[1].dedt = d;
  }
  for (auto& row : ledger.rows)
    row.residual = row.dedt + dynamics.nu * (row.d1 + row.d2 + row.dcross) - row.work;

  static constexpr double kWeights[4] = {1.0, 2.0, 2.0, 1.0};
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double h = trajectory.times[k + 1] - trajectory.times[k];
    const Rk4Stages s = rk4_stages(t, trajectory.states[k], trajectory.times[k], h, forcing, dynamics);
    double di = 0.0, wi = 0.0, awi = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      const double w = work(t, s.forcing[j], s.states[j]);
      di += kWeights[j] * dissipation(t, s.states[j]);
      wi += kWeights[j] * w;
      awi += kWeights[j] * std::abs(w);
    }
    auto& next = ledger.rows[k + 1];
    const auto& prev = ledger.rows[k];
    next.int_dissipation = prev.int_dissipation + h / 6.0 * di;
    next.int_work = prev.int_work + h / 6.0 * wi;
    next.int_abs_work = prev.int_abs_work + h / 6.0 * awi;
  }
  return ledger;
}

CumulativeCheck check_cumulative(const EnergyLedger& ledger, double rel_tol) {
  CumulativeCheck check;
  check.worst_excess = -std::numeric_limits<double>::infinity();
  const double e0 = ledger.initial_energy();
  for (std::size_t k = 0; k < ledger.rows.size(); ++k) {
    const auto& row = ledger.rows[k];
    const double lhs = row.energy + ledger.nu * row.int_dissipation;
    const double rhs = e0 + row.int_abs_work;
    const double excess = lhs - rhs;
    if (excess > check.worst_excess) {
      check.worst_excess = excess;
      check.worst_row = k;
    }
    if (excess > rel_tol * (e0 + row.int_abs_work)) check.ok = false;
  }
  return check;
}

MonotoneCheck check_monotone(const EnergyLedger& ledger, double slack) {
  MonotoneCheck check;
  const double e0 = ledger.initial_energy();
  for (std::size_t k = 1; k < ledger.rows.size(); ++k) {
    const double inc = ledger.rows[k].energy - ledger.rows[k - 1].energy;
    if (k == 1 || inc > check.worst_increase) {
      check.worst_increase = inc;
      check.worst_row = k;
    }
    if (inc > slack * e0) check.ok = false;
  }
  return check;
}

AprioriBounds apriori_bounds(const EnergyLedger& ledger) {
  require(!ledger.rows.empty(), ErrorCode::invalid_argument, "apriori_bounds: empty ledger");
  require(ledger.nu > 0.0, ErrorCode::invalid_argument, "apriori_bounds: nu must be positive");
  AprioriBounds b;
  const auto& last = ledger.rows.back();
  b.constant = ledger.initial_energy() + last.int_abs_work;
  b.norm_bound = std::sqrt(2.0 * b.constant);
  b.gradient_bound = b.constant / ledger.nu;
  double prev_grad = ledger.rows.front().d1 + ledger.rows.front().d2;
  for (std::size_t k = 0; k < ledger.rows.size(); ++k) {
    const auto& row = ledger.rows[k];
    b.sup_norm = std::max(b.sup_norm, std::sqrt(2.0 * row.energy));
    if (k > 0) {
      const double g = row.d1 + row.d2;
      b.int_gradient += 0.5 * (row.time - ledger.rows[k - 1].time) * (g + prev_grad);
      prev_grad = g;
    }
  }
  const double slack = 1.0 + 1e-8;
  if (b.sup_norm > b.norm_bound * slack)
    fail(ErrorCode::bound_violation, "apriori_bounds: sup ||u|| = " + std::to_string(b.sup_norm) +
                                         " exceeds sqrt(2C) = " + std::to_string(b.norm_bound));
  if (b.int_gradient > b.gradient_bound * slack)
    fail(ErrorCode::bound_violation, "apriori_bounds: int ||grad u||^2 = " + std::to_string(b.int_gradient) +
                                         " exceeds C/nu = " + std::to_string(b.gradient_bound));
  return b;
}

}  // namespace nsslice
