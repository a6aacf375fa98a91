#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <string>

#include "nsslice/error.hpp"
#include "nsslice/galerkin.hpp"
#include "nsslice/log.hpp"
#include "nsslice/quadrature.hpp"

namespace nsslice {

Eigen::VectorXd rhs(const OperatorTensors& t, const Eigen::VectorXd& u, const Eigen::VectorXd* forcing,
                    const DynamicsOptions& opts) {
  const double inv_mass = 1.0 / t.basis.mass_scale();
  Eigen::VectorXd r = (opts.nu * inv_mass) * t.apply_stiffness(u);
  if (opts.nonlinear) r.noalias() -= inv_mass * t.convection->skew_load(u, u);
  if (forcing != nullptr && forcing->size() > 0) r += *forcing;
  return project_divfree(t, r);
}

Rk4Stages rk4_stages(const OperatorTensors& t, const Eigen::VectorXd& u, double time, double dt,
                     const ForcingFn& forcing, const DynamicsOptions& opts) {
  Rk4Stages s;
  s.times = {time, time + 0.5 * dt, time + 0.5 * dt, time + dt};
  for (std::size_t k = 0; k < 4; ++k)
    if (forcing) s.forcing[k] = forcing(s.times[k]);
  // Stages 2 and 3 share a time; avoid evaluating the forcing twice.
  auto f = [&](std::size_t k) { return forcing ? &s.forcing[k] : nullptr; };
  s.states[0] = u;
  s.derivatives[0] = rhs(t, s.states[0], f(0), opts);
  s.states[1] = u + (0.5 * dt) * s.derivatives[0];
  s.derivatives[1] = rhs(t, s.states[1], f(1), opts);
  s.states[2] = u + (0.5 * dt) * s.derivatives[1];
  s.derivatives[2] = rhs(t, s.states[2], f(2), opts);
  s.states[3] = u + dt * s.derivatives[2];
  s.derivatives[3] = rhs(t, s.states[3], f(3), opts);
  return s;
}

GalerkinState step(const GalerkinState& state, const OperatorTensors& t, const ForcingFn& forcing,
                   double dt, const DynamicsOptions& opts) {
  require(dt > 0.0 && std::isfinite(dt), ErrorCode::invalid_argument, "step: dt must be positive");
  require(opts.nu > 0.0, ErrorCode::invalid_argument, "step: nu must be positive");
  const Rk4Stages s = rk4_stages(t, state.coeffs, state.time, dt, forcing, opts);
  GalerkinState next;
  next.coeffs = state.coeffs + (dt / 6.0) * (s.derivatives[0] + 2.0 * s.derivatives[1] +
                                             2.0 * s.derivatives[2] + s.derivatives[3]);
  next.coeffs = project_divfree(t, next.coeffs);
  next.time = state.time + dt;
  const double peak = next.coeffs.size() ? next.coeffs.cwiseAbs().maxCoeff() : 0.0;
  if (!std::isfinite(peak) || peak > opts.blowup_threshold) {
    const double suggested = 2.78 / (opts.nu * max_eigenvalue(t));
    std::ostringstream msg;
    msg << std::setprecision(4) << "step: coefficients blew up at t=" << next.time << " (max |coeff| " << peak
        << "); try dt <= " << suggested;
    fail(ErrorCode::blow_up, msg.str());
  }
  return next;
}

std::size_t step_count(double final_time, double dt) {
  require(final_time > 0.0 && std::isfinite(final_time), ErrorCode::invalid_argument,
          "solve: final time must be positive");
  require(dt > 0.0 && std::isfinite(dt), ErrorCode::invalid_argument, "solve: dt must be positive");
  return std::max<std::size_t>(1, std::size_t(std::ceil(final_time / dt - 1e-12)));
}

Trajectory solve(const OperatorTensors& t, const Eigen::VectorXd& u0, const ForcingFn& forcing,
                 const SolveOptions& options) {
  require(u0.size() == Eigen::Index(t.basis.state_size()), ErrorCode::invalid_argument,
          "solve: initial state size mismatch");
  const std::size_t nsteps = step_count(options.final_time, options.dt);
  Trajectory traj;
  traj.dt = options.final_time / double(nsteps);
  traj.times.reserve(nsteps + 1);
  traj.states.reserve(nsteps + 1);
  GalerkinState s{u0, 0.0};
  traj.times.push_back(0.0);
  traj.states.push_back(s.coeffs);
  for (std::size_t k = 1; k <= nsteps; ++k) {
    s = step(s, t, forcing, traj.dt, options.dynamics);
    s.time = double(k) * traj.dt;
    if (options.post_step) options.post_step(k, s.time, s.coeffs);
    traj.times.push_back(s.time);
    traj.states.push_back(s.coeffs);
  }
  log::debug("solve: " + std::to_string(nsteps) + " steps, dt=" + std::to_string(traj.dt));
  return traj;
}

Eigen::VectorXd project_field(const OperatorTensors& t, const Field& field) {
  require(field.ndims() == 2 && field.ncomp() == 3, ErrorCode::invalid_argument,
          "project_field: need a 2D three-component field");
  const auto& ext = t.basis.extents();
  for (std::size_t a = 0; a < 2; ++a)
    require(std::abs(field.extents()[a] - ext[a]) <= 1e-12 * ext[a], ErrorCode::invalid_argument,
            "project_field: field extents differ from the basis rectangle");
  const GaussRule rx = gauss_legendre(t.quadrature_order, 0.0, ext[0]);
  const GaussRule ry = gauss_legendre(t.quadrature_order, 0.0, ext[1]);
  const auto& nm = t.basis.nmodes();
  Eigen::MatrixXd sx(Eigen::Index(rx.size()), nm[0]), sy(Eigen::Index(ry.size()), nm[1]);
  for (std::size_t i = 0; i < rx.size(); ++i)
    for (int m = 1; m <= nm[0]; ++m)
      sx(Eigen::Index(i), m - 1) = rx.weights[i] * std::sin(m * std::numbers::pi * rx.nodes[i] / ext[0]);
  for (std::size_t j = 0; j < ry.size(); ++j)
    for (int n = 1; n <= nm[1]; ++n)
      sy(Eigen::Index(j), n - 1) = ry.weights[j] * std::sin(n * std::numbers::pi * ry.nodes[j] / ext[1]);

  std::array<Eigen::MatrixXd, 3> vals;
  for (auto& v : vals) v.resize(Eigen::Index(rx.size()), Eigen::Index(ry.size()));
  std::array<double, 3> out{};
  for (std::size_t i = 0; i < rx.size(); ++i)
    for (std::size_t j = 0; j < ry.size(); ++j) {
      const double x[2] = {std::min(rx.nodes[i], field.extents()[0]), std::min(ry.nodes[j], field.extents()[1])};
      field.interpolate(x, out);
      for (std::size_t c = 0; c < 3; ++c) vals[c](Eigen::Index(i), Eigen::Index(j)) = out[c];
    }
  const std::size_t nb = t.basis.size();
  Eigen::VectorXd coeffs(3 * nb);
  for (std::size_t c = 0; c < 3; ++c) {
    const Eigen::MatrixXd g = sx.transpose() * vals[c] * sy;
    for (std::size_t i = 0; i < nb; ++i) {
      const auto& md = t.basis.mode(i);
      coeffs(Eigen::Index(c * nb + i)) = g(md.m - 1, md.n - 1) / t.basis.mass_scale();
    }
  }
  return coeffs;
}

Field synthesize(const OperatorTensors& t, const Eigen::VectorXd& coeffs, std::array<std::size_t, 2> dims) {
  const auto& ext = t.basis.extents();
  const auto& nm = t.basis.nmodes();
  const std::size_t nb = t.basis.size();
  Eigen::MatrixXd sx(static_cast<Eigen::Index>(dims[0]), nm[0]), sy(static_cast<Eigen::Index>(dims[1]), nm[1]);
  for (std::size_t i = 0; i < dims[0]; ++i)
    for (int m = 1; m <= nm[0]; ++m)
      sx(Eigen::Index(i), m - 1) = std::sin(m * std::numbers::pi * double(i) / double(dims[0] - 1));
  for (std::size_t j = 0; j < dims[1]; ++j)
    for (int n = 1; n <= nm[1]; ++n)
      sy(Eigen::Index(j), n - 1) = std::sin(n * std::numbers::pi * double(j) / double(dims[1] - 1));
  std::vector<double> data(3 * dims[0] * dims[1]);
  const std::size_t np = dims[0] * dims[1];
  for (std::size_t c = 0; c < 3; ++c) {
    Eigen::MatrixXd a(nm[0], nm[1]);
    for (std::size_t i = 0; i < nb; ++i) {
      const auto& md = t.basis.mode(i);
      a(md.m - 1, md.n - 1) = coeffs(Eigen::Index(c * nb + i));
    }
    const Eigen::MatrixXd v = sx * a * sy.transpose();
    for (std::size_t j = 0; j < dims[1]; ++j)
      for (std::size_t i = 0; i < dims[0]; ++i) data[c * np + i + dims[0] * j] = v(Eigen::Index(i), Eigen::Index(j));
  }
  return Field({dims[0], dims[1]}, {ext[0], ext[1]}, 3, std::move(data));
}

ForcingFn forcing_from_series(const OperatorTensors& t, const TimeSeriesField& series) {
  auto frames = std::make_shared<std::vector<Eigen::VectorXd>>();
  for (const Field& f : series.frames()) frames->push_back(project_field(t, f));
  auto times = std::make_shared<std::vector<double>>(series.times());
  return [frames, times](double time) -> Eigen::VectorXd {
    const auto& ts = *times;
    if (time <= ts.front()) return frames->front();
    if (time >= ts.back()) return frames->back();
    const auto it = std::upper_bound(ts.begin(), ts.end(), time);
    const std::size_t k = std::size_t(it - ts.begin());
    const double s = (time - ts[k - 1]) / (ts[k] - ts[k - 1]);
    return (1.0 - s) * (*frames)[k - 1] + s * (*frames)[k];
  };
}

Trajectory solve(const OperatorTensors& t, const Field& u0, const TimeSeriesField* forcing,
                 const SolveOptions& options) {
  const Eigen::VectorXd c0 = project_divfree(t, project_field(t, u0));
  ForcingFn f;
  if (forcing != nullptr) f = forcing_from_series(t, *forcing);
  return solve(t, c0, f, options);
}

}  // namespace nsslice
