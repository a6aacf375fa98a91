#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

#include "nsslice/analysis.hpp"
#include "nsslice/error.hpp"
#include "nsslice/log.hpp"

namespace nsslice {

ContractionReport contraction_report(const OperatorTensors& t, const Trajectory& u, const Trajectory& v, double delta,
                                     const DynamicsOptions& dynamics, double identity_rel_tol) {
  require(u.states.size() == v.states.size() && !u.states.empty(), ErrorCode::invalid_argument,
          "contraction_report: trajectories must have equal, nonzero length");
  require(delta >= 0.0, ErrorCode::invalid_argument, "contraction_report: delta must be >= 0");
  const std::size_t n = u.states.size();
  ContractionReport r;
  r.delta = delta;
  r.scale = l2_norm(t, u.states.front());
  r.times = u.times;
  r.w_norm.resize(n);
  r.grad_sq.resize(n);
  r.grad_integral.assign(n, 0.0);
  std::vector<Eigen::VectorXd> w(n);
  for (std::size_t k = 0; k < n; ++k) {
    w[k] = u.states[k] - v.states[k];
    r.w_norm[k] = l2_norm(t, w[k]);
    const GradientNorms g = gradient_norms(t, u.states[k]);
    r.grad_sq[k] = g.d1 + g.d2;
    if (k > 0)
      r.grad_integral[k] =
          r.grad_integral[k - 1] + 0.5 * (r.times[k] - r.times[k - 1]) * (r.grad_sq[k] + r.grad_sq[k - 1]);
    r.max_w = std::max(r.max_w, r.w_norm[k]);
  }

  if (delta > 0.0) {
    double c = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      if (r.grad_integral[k] <= 0.0 || r.w_norm[k] <= 0.0) continue;
      c = std::max(c, std::log(r.w_norm[k] / delta) / (2.0 * r.grad_integral[k]));
    }
    r.fit_defined = std::isfinite(c);
    r.fitted_c = r.fit_defined ? c : 0.0;
    r.envelope_ok = true;
    r.bound.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      r.bound[k] = delta * std::exp(2.0 * r.fitted_c * r.grad_integral[k]);
      if (!(r.w_norm[k] <= r.bound[k] * (1.0 + 1e-6))) r.envelope_ok = false;
    }
  } else {
    r.bound.assign(n, 0.0);
    r.envelope_ok = r.max_w <= 1e-12 * r.scale;
  }

  // Difference identity, with centered time differences of ||w||^2 / 2.
  std::vector<double> half_sq(n), diss(n), conv(n);
  for (std::size_t k = 0; k < n; ++k) {
    half_sq[k] = 0.5 * r.w_norm[k] * r.w_norm[k];
    const GradientNorms g = gradient_norms(t, w[k]);
    diss[k] = dynamics.nu * (g.d1 + g.d2 + g.dcross);
    conv[k] = dynamics.nonlinear ? t.convection->skew_load(w[k], u.states[k]).dot(w[k]) : 0.0;
  }
  r.identity_residual.assign(n, 0.0);
  if (n >= 3) {
    const double dt = u.dt;
    for (std::size_t k = 0; k < n; ++k) {
      double d;
      if (k == 0)
        d = (-3.0 * half_sq[0] + 4.0 * half_sq[1] - half_sq[2]) / (2.0 * dt);
      else if (k + 1 == n)
        d = (3.0 * half_sq[k] - 4.0 * half_sq[k - 1] + half_sq[k - 2]) / (2.0 * dt);
      else
        d = (half_sq[k + 1] - half_sq[k - 1]) / (2.0 * dt);
      r.identity_residual[k] = d + diss[k] + conv[k];
      r.identity_scale = std::max({r.identity_scale, std::abs(d), diss[k], std::abs(conv[k])});
    }
  }
  r.identity_tolerance = identity_rel_tol * r.identity_scale;
  r.identity_ok = std::all_of(r.identity_residual.begin(), r.identity_residual.end(),
                              [&](double x) { return std::abs(x) <= r.identity_tolerance; });
  r.pass = r.envelope_ok;
  return r;
}

ContractionReport uniqueness_experiment(const OperatorTensors& t, const UniquenessSetup& setup) {
  require(setup.delta >= 0.0 && std::isfinite(setup.delta), ErrorCode::invalid_argument,
          "uniqueness: delta must be >= 0");
  const Eigen::VectorXd u0 = project_divfree(t, setup.u0);
  Eigen::VectorXd dir = Eigen::VectorXd::Zero(u0.size());
  if (setup.direction.size() == 0) {
    dir = lowest_divfree_mode(t).coeffs;
  } else {
    require(setup.direction.size() == u0.size(), ErrorCode::invalid_argument,
            "uniqueness: perturbation direction size mismatch");
    dir = project_divfree(t, setup.direction);
    const double nrm = l2_norm(t, dir);
    if (nrm > 0.0) dir /= nrm;
  }
  require(setup.delta == 0.0 || l2_norm(t, dir) > 0.0, ErrorCode::invalid_argument,
          "uniqueness: perturbation direction has no divergence-free part");
  const Eigen::VectorXd v0 = u0 + setup.delta * dir;

  SolveOptions second = setup.options;
  if (setup.corrupt != 0.0) {
    const std::size_t mid = step_count(setup.options.final_time, setup.options.dt) / 2;
    Eigen::VectorXd kick = dir;
    if (l2_norm(t, kick) == 0.0) {
      kick = project_divfree(t, Eigen::VectorXd::Ones(u0.size()));
      kick /= l2_norm(t, kick);
    }
    second.post_step = [mid, kick, c = setup.corrupt](std::size_t k, double, Eigen::VectorXd& s) {
      if (k == mid) s += c * kick;
    };
  }
  auto fu = std::async(std::launch::async, [&] { return solve(t, u0, setup.forcing, setup.options); });
  auto fv = std::async(std::launch::async, [&] { return solve(t, v0, setup.forcing, second); });
  const Trajectory tu = fu.get();
  const Trajectory tv = fv.get();
  log::debug("uniqueness: both runs finished");
  return contraction_report(t, tu, tv, setup.delta, setup.options.dynamics, setup.identity_rel_tol);
}

}  // namespace nsslice
