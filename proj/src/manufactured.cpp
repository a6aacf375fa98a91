#include "nsslice/manufactured.hpp"

#include <cmath>
#include <numbers>

#include "nsslice/error.hpp"
#include "nsslice/quadrature.hpp"

namespace nsslice {
namespace {

// S = sin^p(k s) and its first three derivatives.
std::array<double, 4> profile(int p, double k, double s) {
  const double sn = std::sin(k * s), cs = std::cos(k * s);
  auto pw = [&](int e) { return e <= 0 ? (e == 0 ? 1.0 : 0.0) : std::pow(sn, e); };
  const double dp = double(p);
  return {pw(p), dp * k * pw(p - 1) * cs, dp * k * k * ((dp - 1.0) * pw(p - 2) * cs * cs - pw(p)),
          dp * k * k * k *
              ((dp - 1.0) * ((dp - 2.0) * pw(p - 3) * cs * cs * cs - 2.0 * pw(p - 1) * cs) -
               dp * pw(p - 1) * cs)};
}

struct Deriv {
  double v = 0, dx = 0, dy = 0, dxx = 0, dyy = 0, dxy = 0;
};

Deriv product(const std::array<double, 4>& a, int ia, const std::array<double, 4>& b, int ib, double scale) {
  const auto A = [&](int k) { return scale * a[std::size_t(ia + k)]; };
  const auto B = [&](int k) { return b[std::size_t(ib + k)]; };
  return {A(0) * B(0), A(1) * B(0), A(0) * B(1), A(2) * B(0), A(0) * B(2), A(1) * B(1)};
}

Deriv combine(const Deriv& a, const Deriv& b, double s) {
  return {a.v + s * b.v, a.dx + s * b.dx, a.dy + s * b.dy, a.dxx + s * b.dxx, a.dyy + s * b.dyy, a.dxy + s * b.dxy};
}

std::size_t auto_order(const OperatorTensors& t, const ManufacturedSolution& ms) {
  return std::size_t(2 * (t.basis.max_mode() + 2 * ms.power()) + 40);
}

}  // namespace

ManufacturedSolution::ManufacturedSolution(std::array<double, 2> extents, ProjectedGradient gradient, int power)
    : extents_(extents), gradient_(gradient), power_(power) {
  require(power >= 3, ErrorCode::invalid_argument, "manufactured solution: power must be >= 3");
  require(extents[0] > 0.0 && extents[1] > 0.0, ErrorCode::invalid_argument,
          "manufactured solution: extents must be positive");
}

double ManufacturedSolution::g(double t) { return 1.0 + 0.5 * std::sin(2.0 * t); }
double ManufacturedSolution::dg(double t) { return std::cos(2.0 * t); }

ManufacturedSolution::PointTerms ManufacturedSolution::terms(double x, double y) const {
  constexpr double pi = std::numbers::pi;
  const auto px = profile(power_, pi / extents_[0], x);
  const auto py = profile(power_, pi / extents_[1], y);
  const std::array<double, 4> X = px, Y = py;
  const std::array<double, 4> Xs{X[1], X[2], X[3], 0.0};  // S' and its derivatives
  const std::array<double, 4> Ys{Y[1], Y[2], Y[3], 0.0};

  const Deriv t1 = product(X, 0, Ys, 0, 1.0);
  const Deriv t2 = product(Xs, 0, Y, 0, -1.0);
  const Deriv u3 = product(X, 0, Y, 0, 1.0);
  const double c1 = gradient_.c1, c2 = gradient_.c2;
  const std::array<Deriv, 3> u{combine(t1, u3, -c1), combine(t2, u3, -c2), u3};

  PointTerms out;
  for (std::size_t c = 0; c < 3; ++c) {
    out.u[c] = u[c].v;
    out.a1u[c] = (1.0 + c1 * c1) * u[c].dxx + (1.0 + c2 * c2) * u[c].dyy + 2.0 * c1 * c2 * u[c].dxy;
    out.b1uu[c] = t1.v * u[c].dx + t2.v * u[c].dy;
  }
  return out;
}

ForcingFn MmsProblem::forcing(double nu) const {
  const Eigen::VectorXd u = u_hat, a = a1u_hat, b = b1uu_hat;
  return [u, a, b, nu](double t) -> Eigen::VectorXd {
    const double g = ManufacturedSolution::g(t);
    return ManufacturedSolution::dg(t) * u - (nu * g) * a + (g * g) * b;
  };
}

MmsProblem build_mms(const OperatorTensors& t, const ManufacturedSolution& ms, std::size_t order) {
  if (order == 0) order = auto_order(t, ms);
  const auto& ext = t.basis.extents();
  const GaussRule rx = gauss_legendre(order, 0.0, ext[0]);
  const GaussRule ry = gauss_legendre(order, 0.0, ext[1]);
  const auto& nm = t.basis.nmodes();
  Eigen::MatrixXd sx(Eigen::Index(order), nm[0]), sy(Eigen::Index(order), nm[1]);
  for (std::size_t i = 0; i < order; ++i) {
    for (int m = 1; m <= nm[0]; ++m)
      sx(Eigen::Index(i), m - 1) = rx.weights[i] * std::sin(m * std::numbers::pi * rx.nodes[i] / ext[0]);
    for (int n = 1; n <= nm[1]; ++n)
      sy(Eigen::Index(i), n - 1) = ry.weights[i] * std::sin(n * std::numbers::pi * ry.nodes[i] / ext[1]);
  }
  std::array<std::array<Eigen::MatrixXd, 3>, 3> vals;
  for (auto& kind : vals)
    for (auto& v : kind) v.resize(Eigen::Index(order), Eigen::Index(order));
  for (std::size_t i = 0; i < order; ++i)
    for (std::size_t j = 0; j < order; ++j) {
      const auto p = ms.terms(rx.nodes[i], ry.nodes[j]);
      for (std::size_t c = 0; c < 3; ++c) {
        vals[0][c](Eigen::Index(i), Eigen::Index(j)) = p.u[c];
        vals[1][c](Eigen::Index(i), Eigen::Index(j)) = p.a1u[c];
        vals[2][c](Eigen::Index(i), Eigen::Index(j)) = p.b1uu[c];
      }
    }
  const std::size_t nb = t.basis.size();
  std::array<Eigen::VectorXd, 3> coeffs;
  for (std::size_t kind = 0; kind < 3; ++kind) {
    coeffs[kind].resize(Eigen::Index(3 * nb));
    for (std::size_t c = 0; c < 3; ++c) {
      const Eigen::MatrixXd g = sx.transpose() * vals[kind][c] * sy;
      for (std::size_t i = 0; i < nb; ++i) {
        const auto& md = t.basis.mode(i);
        coeffs[kind](Eigen::Index(c * nb + i)) = g(md.m - 1, md.n - 1) / t.basis.mass_scale();
      }
    }
  }
  MmsProblem prob{coeffs[0], coeffs[1], coeffs[2], {}};
  prob.initial = project_divfree(t, ManufacturedSolution::g(0.0) * prob.u_hat);
  return prob;
}

double mms_error(const OperatorTensors& t, const ManufacturedSolution& ms, const Eigen::VectorXd& coeffs,
                 double time, std::size_t order) {
  if (order == 0) order = auto_order(t, ms);
  const auto& ext = t.basis.extents();
  const GaussRule rx = gauss_legendre(order, 0.0, ext[0]);
  const GaussRule ry = gauss_legendre(order, 0.0, ext[1]);
  const auto& nm = t.basis.nmodes();
  Eigen::MatrixXd sx(Eigen::Index(order), nm[0]), sy(Eigen::Index(order), nm[1]);
  for (std::size_t i = 0; i < order; ++i) {
    for (int m = 1; m <= nm[0]; ++m) sx(Eigen::Index(i), m - 1) = std::sin(m * std::numbers::pi * rx.nodes[i] / ext[0]);
    for (int n = 1; n <= nm[1]; ++n) sy(Eigen::Index(i), n - 1) = std::sin(n * std::numbers::pi * ry.nodes[i] / ext[1]);
  }
  const std::size_t nb = t.basis.size();
  std::array<Eigen::MatrixXd, 3> uh;
  for (std::size_t c = 0; c < 3; ++c) {
    Eigen::MatrixXd a(nm[0], nm[1]);
    for (std::size_t i = 0; i < nb; ++i) {
      const auto& md = t.basis.mode(i);
      a(md.m - 1, md.n - 1) = coeffs(Eigen::Index(c * nb + i));
    }
    uh[c] = sx * a * sy.transpose();
  }
  const double g = ManufacturedSolution::g(time);
  double acc = 0.0;
  for (std::size_t i = 0; i < order; ++i)
    for (std::size_t j = 0; j < order; ++j) {
      const auto p = ms.terms(rx.nodes[i], ry.nodes[j]);
      for (std::size_t c = 0; c < 3; ++c) {
        const double d = uh[c](Eigen::Index(i), Eigen::Index(j)) - g * p.u[c];
        acc += rx.weights[i] * ry.weights[j] * d * d;
      }
    }
  return std::sqrt(acc);
}

}  // namespace nsslice
