#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include <Eigen/Dense>

#include "nsslice/error.hpp"
#include "nsslice/galerkin.hpp"
#include "nsslice/manufactured.hpp"
#include "nsslice/quadrature.hpp"

using namespace nsslice;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double pi = std::numbers::pi;

VectorXd random_coeffs(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  VectorXd v(Eigen::Index(n), 1);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = g(rng);
  return v;
}

OperatorTensors tensors(int n, double a1, double a2, std::array<double, 2> ext = {1, 1},
                        std::size_t sparse_limit = 144) {
  AssemblyOptions o;
  o.sparse_tensor_limit = sparse_limit;
  return assemble(SpectralBasis({n, n}, ext), SliceChart::from_alphas(a1, a2), o);
}

// Orthonormal basis of null(C) from a full SVD.
MatrixXd null_space(const MatrixXd& c) {
  Eigen::JacobiSVD<MatrixXd> svd(c, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) rank += s[i] > 1e-10 * s[0];
  return svd.matrixV().rightCols(c.cols() - rank);
}

}  // namespace

TEST_SUITE("galerkin") {

TEST_CASE("sine basis ordering and eigenvalues") {
  const SpectralBasis b({5, 3}, {1.0, 2.0});
  CHECK(b.size() == 15);
  CHECK(b.lambda1() == pi * pi * (1.0 / 1.0 + 1.0 / 4.0));
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto& m = b.mode(i);
    CHECK(m.lambda == doctest::Approx(pi * pi * (m.m * m.m / 1.0 + m.n * m.n / 4.0)).epsilon(1e-15));
    CHECK(b.index_of(m.m, m.n) == i);
    if (i > 0) CHECK(b.mode(i - 1).lambda <= m.lambda);
  }
  VectorXd c = VectorXd::Zero(15);
  c[Eigen::Index(b.index_of(2, 3))] = 1.5;
  CHECK(b.evaluate(c.data(), 0.3, 1.1) == doctest::Approx(1.5 * std::sin(2 * pi * 0.3) * std::sin(3 * pi * 1.1 / 2)));
  CHECK(b.evaluate(c.data(), 1.0, 0.7) == doctest::Approx(0.0));
}

TEST_CASE("gauss legendre rules") {
  for (std::size_t n : {1, 2, 5, 12, 40}) {
    const GaussRule r = gauss_legendre(n, 0.0, 2.0);
    double s = 0, s_poly = 0;
    for (std::size_t i = 0; i < n; ++i) {
      s += r.weights[i];
      s_poly += r.weights[i] * std::pow(r.nodes[i], double(2 * n - 1));
    }
    CHECK(s == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(s_poly == doctest::Approx(std::pow(2.0, double(2 * n)) / double(2 * n)).epsilon(1e-12));
  }
}

TEST_CASE("mass and axis-aligned stiffness") {
  const OperatorTensors t = tensors(2, 0, 0, {1.0, 2.0});
  const double ms = 0.5;
  const auto nb = Eigen::Index(t.basis.size());
  for (Eigen::Index i = 0; i < nb; ++i)
    for (Eigen::Index j = 0; j < nb; ++j) {
      const double lam = t.basis.mode(std::size_t(i)).lambda;
      CHECK(t.mass(i, j) == doctest::Approx(i == j ? ms : 0.0).epsilon(1e-13));
      CHECK(std::abs(t.stiffness(i, j) - (i == j ? -lam * ms : 0.0)) <= 1e-12 * lam);
    }
  CHECK(t.s33.norm() == 0.0);
}

TEST_CASE("stiffness is symmetric negative semidefinite") {
  for (auto [a1, a2] : {std::pair{1.0, 1.0}, {2.0, -1.0}, {0.3, 0.0}}) {
    const OperatorTensors t = tensors(6, a1, a2);
    CHECK((t.stiffness - t.stiffness.transpose()).norm() <= 1e-12 * t.stiffness.norm());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(t.stiffness);
    CHECK(es.eigenvalues().maxCoeff() <= 1e-10 * t.stiffness.norm());
  }
}

TEST_CASE("constraint rank and divergence-free projection") {
  std::mt19937_64 rng(5);
  for (auto [a1, a2] : {std::pair{0.0, 0.0}, {1.0, 1.0}, {2.0, -1.0}}) {
    const OperatorTensors t = tensors(8, a1, a2);
    CHECK(t.constraint_rank == 63);
    for (int trial = 0; trial < 5; ++trial) {
      const VectorXd u = random_coeffs(t.basis.state_size(), rng);
      const VectorXd p = project_divfree(t, u);
      CHECK(divergence_norm(t, p) <= 1e-10 * u.norm());
      CHECK((project_divfree(t, p) - p).norm() <= 1e-13 * u.norm());

      // Least-squares oracle: minimize ||x - u|| subject to C x = 0 through the
      // normal equations of the Lagrange system.
      const MatrixXd& c = t.constraint;
      const VectorXd lambda = (c * c.transpose()).completeOrthogonalDecomposition().solve(c * u);
      const VectorXd x = u - c.transpose() * lambda;
      CHECK((x - p).norm() <= 1e-10 * u.norm());

      // Mass self-adjointness.
      const VectorXd v = random_coeffs(t.basis.state_size(), rng);
      CHECK(std::abs(project_divfree(t, v).dot(u) - v.dot(p)) <= 1e-12 * u.norm() * v.norm());

      // Row-space state projects to zero.
      const VectorXd g = c.transpose() * random_coeffs(std::size_t(c.rows()), rng);
      CHECK(project_divfree(t, g).norm() <= 1e-10 * g.norm());
    }
  }
}

TEST_CASE("skew trilinear form annihilates the diagonal") {
  std::mt19937_64 rng(17);
  const OperatorTensors t = tensors(8, 1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd u = project_divfree(t, random_coeffs(t.basis.state_size(), rng));
    const VectorXd v = random_coeffs(t.basis.state_size(), rng);
    const double scale = std::pow(u.norm(), 3);
    CHECK(std::abs(trilinear_skew(t, u, u, u)) <= 1e-10 * scale);
    CHECK(std::abs(t.convection->skew_form(u, u, u)) <= 1e-10 * scale);
    CHECK(std::abs(t.convection->skew_form(u, v, v)) <= 1e-10 * u.norm() * v.squaredNorm());
    const VectorXd ls = skew_load_sparse(t, u, v);
    const VectorXd lq = t.convection->skew_load(u, v);
    CHECK((ls - lq).norm() <= 1e-11 * u.norm() * v.norm());
  }
  // The unsymmetrized form does not vanish on a generic state.
  const VectorXd u = project_divfree(t, random_coeffs(t.basis.state_size(), rng));
  CHECK(std::abs(trilinear_raw(t, u, u, u)) > 1e-6 * std::pow(u.norm(), 3));
}

TEST_CASE("default quadrature order resolves the triple products") {
  std::mt19937_64 rng(8);
  for (int modes : {1, 4, 8, 12, 24}) {
    const SpectralBasis b({modes, modes}, {1, 1.5});
    const ProjectedGradient g{-0.5, -0.5};
    const ConvectionEvaluator lo(b, g, default_quadrature_order(b));
    const ConvectionEvaluator hi(b, g, 2 * default_quadrature_order(b));
    for (int trial = 0; trial < 3; ++trial) {
      const VectorXd a = random_coeffs(b.state_size(), rng);
      const VectorXd c = random_coeffs(b.state_size(), rng);
      const double scale = a.norm() * c.norm();
      const VectorXd ref = hi.skew_load(a, c);
      CHECK((lo.skew_load(a, c) - ref).norm() <= 1e-12 * scale);
    }
  }
}

TEST_CASE("coercivity") {
  const double lam1 = 2 * pi * pi;
  CHECK(coercivity_check(tensors(8, 0, 0)) == doctest::Approx(lam1).epsilon(1e-10));
  const double oblique = coercivity_check(tensors(8, 1, 1));
  CHECK(oblique >= lam1 * (1 - 1e-12));

  for (auto [a1, a2] : {std::pair{1.0, 1.0}, {2.0, -1.0}, {0.5, 3.0}, {0.0, 1.0}}) {
    for (int n : {2, 4, 8}) {
      const OperatorTensors t = tensors(n, a1, a2);
      const MatrixXd z = null_space(t.constraint);
      const std::size_t nb = t.basis.size();
      MatrixXd k = MatrixXd::Zero(Eigen::Index(3 * nb), Eigen::Index(3 * nb));
      for (Eigen::Index c = 0; c < 3; ++c)
        k.block(c * Eigen::Index(nb), c * Eigen::Index(nb), Eigen::Index(nb), Eigen::Index(nb)) = -t.stiffness;
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(z.transpose() * k * z);
      const double oracle = es.eigenvalues().minCoeff() / t.basis.mass_scale();
      CHECK(oracle > 0.0);
      CHECK(coercivity_check(t) == doctest::Approx(oracle).epsilon(1e-10));
    }
  }
}

TEST_CASE("time stepping fixed point and heat mode") {
  const OperatorTensors t = tensors(4, 0, 0);
  DynamicsOptions dyn;
  dyn.nu = 0.7;
  const GalerkinState zero{VectorXd::Zero(Eigen::Index(t.basis.state_size())), 0.0};
  const GalerkinState z1 = step(zero, t, {}, 1e-2, dyn);
  CHECK(z1.coeffs.norm() == 0.0);
  CHECK(z1.time == doctest::Approx(0.01));

  // A third-component mode is a passive scalar for the axis-aligned chart and
  // decays like the heat equation even with the convective term switched on.
  for (bool nonlinear : {false, true}) {
    dyn.nonlinear = nonlinear;
    const std::size_t i = t.basis.index_of(2, 1);
    const double lam = t.basis.mode(i).lambda;
    GalerkinState s{VectorXd::Zero(Eigen::Index(t.basis.state_size())), 0.0};
    s.coeffs[Eigen::Index(2 * t.basis.size() + i)] = 1.0;
    for (double dt : {1e-2, 5e-3}) {
      const GalerkinState n = step(s, t, {}, dt, dyn);
      const double z = dyn.nu * lam * dt;
      CHECK(std::abs(n.coeffs[Eigen::Index(2 * t.basis.size() + i)] - std::exp(-z)) <= std::pow(z, 5) / 100);
    }
  }
}

TEST_CASE("zero data gives a zero trajectory") {
  const OperatorTensors t = tensors(4, 1, 1);
  SolveOptions o;
  o.dt = 1e-2;
  o.final_time = 0.2;
  const Trajectory tr = solve(t, VectorXd::Zero(Eigen::Index(t.basis.state_size())), {}, o);
  CHECK(tr.states.size() == 21);
  for (const auto& s : tr.states) CHECK(s.norm() == 0.0);
  CHECK(tr.times.back() == doctest::Approx(0.2));
}

TEST_CASE("nonlinear run keeps the divergence and decays without forcing") {
  std::mt19937_64 rng(21);
  const OperatorTensors t = tensors(8, 1, 1);
  VectorXd u0 = project_divfree(t, random_coeffs(t.basis.state_size(), rng));
  u0 *= 5.0 / l2_norm(t, u0);
  SolveOptions o;
  o.dynamics.nu = 0.1;
  o.dt = 1e-3;
  o.final_time = 0.1;
  const Trajectory tr = solve(t, u0, {}, o);
  for (std::size_t k = 0; k < tr.states.size(); ++k) {
    const auto gn = gradient_norms(t, tr.states[k]);
    CHECK(divergence_norm(t, tr.states[k]) <= std::max(1e-9, 1e-10 * std::sqrt(gn.d1 + gn.d2 + gn.dcross)));
    if (k > 0) CHECK(energy(t, tr.states[k]) <= energy(t, tr.states[k - 1]) + 1e-12 * energy(t, u0));
  }
}

TEST_CASE("unstable step size reports blow-up") {
  const OperatorTensors t = tensors(8, 1, 1);
  SolveOptions o;
  o.dynamics.nu = 1.0;
  o.dt = 0.05;
  o.final_time = 1.0;
  try {
    solve(t, lowest_divfree_mode(t).coeffs, {}, o);
    FAIL("no blow-up");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::blow_up);
    CHECK(std::string(e.what()).find("dt") != std::string::npos);
  }
}

TEST_CASE("field projection and synthesis") {
  std::mt19937_64 rng(4);
  const OperatorTensors t = tensors(4, 1, 1, {1.0, 0.5});
  const VectorXd u = random_coeffs(t.basis.state_size(), rng);
  const Field f = synthesize(t, u, {257, 257});
  CHECK(f.extents() == std::vector<double>{1.0, 0.5});
  const double x[2] = {0.3, 0.2};
  double v[3];
  f.interpolate(x, v);
  CHECK(v[1] == doctest::Approx(t.basis.evaluate(u.data() + t.basis.size(), 0.3, 0.2)).epsilon(1e-3));
  CHECK((project_field(t, f) - u).norm() <= 1e-3 * u.norm());
}

TEST_CASE("manufactured solution converges spectrally") {
  std::vector<double> errors;
  for (int n : {8, 16}) {
    const OperatorTensors t = tensors(n, 1, 1, {1, 1}, 0);
    const ManufacturedSolution ms({1, 1}, t.gradient);
    const MmsProblem prob = build_mms(t, ms);
    SolveOptions o;
    o.dynamics.nu = 0.1;
    o.dt = 1e-3;
    o.final_time = 0.5;
    const Trajectory tr = solve(t, prob.initial, prob.forcing(0.1), o);
    errors.push_back(mms_error(t, ms, tr.states.back(), 0.5));
  }
  CHECK(errors[0] / errors[1] >= 10.0);
}

TEST_CASE("self-convergence between 16 and 24 modes") {
  std::vector<VectorXd> finals;
  std::vector<OperatorTensors> ts;
  for (auto [n, dt] : {std::pair{16, 1e-3}, {24, 5e-4}}) {
    ts.push_back(tensors(n, 0, 0, {1, 1}, 0));
    const OperatorTensors& t = ts.back();
    const ManufacturedSolution ms({1, 1}, t.gradient);
    const MmsProblem prob = build_mms(t, ms);
    SolveOptions o;
    o.dynamics.nu = 0.1;
    o.dt = dt;
    o.final_time = 0.5;
    finals.push_back(solve(t, prob.initial, prob.forcing(0.1), o).states.back());
  }
  // Embed the coarse coefficients in the fine basis.
  const OperatorTensors& fine = ts[1];
  const SpectralBasis& cb = ts[0].basis;
  VectorXd coarse = VectorXd::Zero(Eigen::Index(fine.basis.state_size()));
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < cb.size(); ++i)
      coarse[Eigen::Index(c * fine.basis.size() + fine.basis.index_of(cb.mode(i).m, cb.mode(i).n))] =
          finals[0][Eigen::Index(c * cb.size() + i)];
  const double diff = l2_norm(fine, finals[1] - coarse);
  MESSAGE("L2 difference N=16 vs N=24: " << diff);
  CHECK(diff < 1e-6);
}

}  // TEST_SUITE
