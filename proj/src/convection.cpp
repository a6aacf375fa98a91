#include <cmath>
#include <numbers>

#include "nsslice/error.hpp"
#include "nsslice/galerkin.hpp"
#include "nsslice/quadrature.hpp"

namespace nsslice {
namespace {

void axis_tables(int nmodes, double length, const GaussRule& rule, Eigen::MatrixXd& s,
                 Eigen::MatrixXd& d) {
  const auto q = Eigen::Index(rule.size());
  s.resize(q, nmodes);
  d.resize(q, nmodes);
  for (Eigen::Index i = 0; i < q; ++i)
    for (int k = 1; k <= nmodes; ++k) {
      const double kk = k * std::numbers::pi / length;
      s(i, k - 1) = std::sin(kk * rule.nodes[std::size_t(i)]);
      d(i, k - 1) = kk * std::cos(kk * rule.nodes[std::size_t(i)]);
    }
}

}  // namespace

ConvectionEvaluator::ConvectionEvaluator(const SpectralBasis& basis, ProjectedGradient coeffs,
                                         std::size_t quadrature_order)
    : basis_(basis), coeffs_(coeffs) {
  const auto& nm = basis.nmodes();
  const auto& ext = basis.extents();
  const GaussRule rx = gauss_legendre(quadrature_order, 0.0, ext[0]);
  const GaussRule ry = gauss_legendre(quadrature_order, 0.0, ext[1]);
  axis_tables(nm[0], ext[0], rx, sx_, cx_);
  axis_tables(nm[1], ext[1], ry, sy_, cy_);
  weights_.resize(Eigen::Index(rx.size()), Eigen::Index(ry.size()));
  for (std::size_t i = 0; i < rx.size(); ++i)
    for (std::size_t j = 0; j < ry.size(); ++j)
      weights_(Eigen::Index(i), Eigen::Index(j)) = rx.weights[i] * ry.weights[j];
}

Eigen::MatrixXd ConvectionEvaluator::to_grid(const Eigen::VectorXd& coeffs, std::size_t comp) const {
  const auto& nm = basis_.nmodes();
  Eigen::MatrixXd a(nm[0], nm[1]);
  const std::size_t nb = basis_.size();
  for (std::size_t i = 0; i < nb; ++i) {
    const auto& md = basis_.mode(i);
    a(md.m - 1, md.n - 1) = coeffs(Eigen::Index(comp * nb + i));
  }
  return a;
}

Eigen::VectorXd ConvectionEvaluator::skew_load(const Eigen::VectorXd& a,
                                               const Eigen::VectorXd& b) const {
  const std::size_t nb = basis_.size();
  require(a.size() == Eigen::Index(3 * nb) && b.size() == Eigen::Index(3 * nb),
          ErrorCode::invalid_argument, "skew_load: state size mismatch");

  // Point values of a~.
  Eigen::MatrixXd at1 = sx_ * to_grid(a, 0) * sy_.transpose();
  Eigen::MatrixXd at2 = sx_ * to_grid(a, 1) * sy_.transpose();
  if (coeffs_.c1 != 0.0 || coeffs_.c2 != 0.0) {
    const Eigen::MatrixXd a3 = sx_ * to_grid(a, 2) * sy_.transpose();
    at1 += coeffs_.c1 * a3;
    at2 += coeffs_.c2 * a3;
  }
  const Eigen::MatrixXd w1 = weights_.cwiseProduct(at1);
  const Eigen::MatrixXd w2 = weights_.cwiseProduct(at2);

  Eigen::VectorXd out(3 * nb);
  for (std::size_t c = 0; c < 3; ++c) {
    const Eigen::MatrixXd bc = to_grid(b, c);
    const Eigen::MatrixXd sxb = sx_ * bc;
    const Eigen::MatrixXd bv = sxb * sy_.transpose();
    const Eigen::MatrixXd b1 = cx_ * bc * sy_.transpose();
    const Eigen::MatrixXd b2 = sxb * cy_.transpose();
    const Eigen::MatrixXd g = w1.cwiseProduct(b1) + w2.cwiseProduct(b2);
    const Eigen::MatrixXd term1 = sx_.transpose() * g * sy_;
    const Eigen::MatrixXd term2 =
        cx_.transpose() * w1.cwiseProduct(bv) * sy_ + sx_.transpose() * w2.cwiseProduct(bv) * cy_;
    const Eigen::MatrixXd r = 0.5 * (term1 - term2);
    for (std::size_t i = 0; i < nb; ++i) {
      const auto& md = basis_.mode(i);
      out(Eigen::Index(c * nb + i)) = r(md.m - 1, md.n - 1);
    }
  }
  return out;
}

namespace {

// a~ coefficient vectors (length nb).
std::pair<Eigen::VectorXd, Eigen::VectorXd> tilde(const OperatorTensors& t, const Eigen::VectorXd& a) {
  const auto nb = Eigen::Index(t.basis.size());
  Eigen::VectorXd a1 = a.segment(0, nb) + t.gradient.c1 * a.segment(2 * nb, nb);
  Eigen::VectorXd a2 = a.segment(nb, nb) + t.gradient.c2 * a.segment(2 * nb, nb);
  return {a1, a2};
}

const SparseTrilinear& tables(const OperatorTensors& t) {
  require(t.trilinear != nullptr, ErrorCode::invalid_argument,
          "sparse trilinear tables were not built for this basis size");
  return *t.trilinear;
}

}  // namespace

double trilinear_raw(const OperatorTensors& t, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                     const Eigen::VectorXd& c) {
  const auto& tab = tables(t);
  const auto nb = Eigen::Index(t.basis.size());
  const auto [a1, a2] = tilde(t, a);
  double acc = 0.0;
  for (Eigen::Index comp = 0; comp < 3; ++comp) {
    const auto bc = b.segment(comp * nb, nb);
    const auto cc = c.segment(comp * nb, nb);
    for (const auto& e : tab.t1) acc += a1(e.a) * e.value * bc(e.b) * cc(e.c);
    for (const auto& e : tab.t2) acc += a2(e.a) * e.value * bc(e.b) * cc(e.c);
  }
  return acc;
}

double trilinear_skew(const OperatorTensors& t, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                      const Eigen::VectorXd& c) {
  return 0.5 * (trilinear_raw(t, a, b, c) - trilinear_raw(t, a, c, b));
}

Eigen::VectorXd skew_load_sparse(const OperatorTensors& t, const Eigen::VectorXd& a,
                                 const Eigen::VectorXd& b) {
  const auto& tab = tables(t);
  const auto nb = Eigen::Index(t.basis.size());
  const auto [a1, a2] = tilde(t, a);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(3 * nb);
  for (Eigen::Index comp = 0; comp < 3; ++comp) {
    const auto bc = b.segment(comp * nb, nb);
    auto oc = out.segment(comp * nb, nb);
    auto visit = [&](const std::vector<SparseTrilinear::Entry>& entries, const Eigen::VectorXd& at) {
      for (const auto& e : entries) {
        const double v = at(e.a) * e.value;
        oc(e.c) += 0.5 * v * bc(e.b);
        oc(e.b) -= 0.5 * v * bc(e.c);
      }
    };
    visit(tab.t1, a1);
    visit(tab.t2, a2);
  }
  return out;
}

}  // namespace nsslice
