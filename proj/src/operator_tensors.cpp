#include <algorithm>
#include <cmath>
#include <numbers>

#include "nsslice/error.hpp"
#include "nsslice/galerkin.hpp"
#include "nsslice/log.hpp"
#include "nsslice/quadrature.hpp"

namespace nsslice {
namespace {

// Orthonormal bases of the row space of `c` and of its orthogonal complement.
Eigen::Index split_constraint(const Eigen::MatrixXd& c, Eigen::MatrixXd& range, Eigen::MatrixXd& null) {
  const Eigen::Index n = c.cols();
  if (c.rows() == 0) {
    range.resize(n, 0);
    null = Eigen::MatrixXd::Identity(n, n);
    return 0;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(c.transpose());
  const Eigen::Index rank = qr.rank();
  const Eigen::MatrixXd q_full = qr.householderQ();
  range = q_full.leftCols(rank);
  null = q_full.rightCols(n - rank);
  return rank;
}

constexpr double kPi = std::numbers::pi;

// Sampled 1D sine/derivative/cosine tables on one axis.
struct AxisTables {
  GaussRule rule;
  Eigen::MatrixXd s;  // rule.size() x N : sin(k pi x / L)
  Eigen::MatrixXd d;  // derivative of s
  Eigen::MatrixXd c;  // rule.size() x N : cos(k pi x / L), k = 0..N-1

  AxisTables(int nmodes, double length, std::size_t order) : rule(gauss_legendre(order, 0.0, length)) {
    const auto q = Eigen::Index(rule.size());
    s.resize(q, nmodes);
    d.resize(q, nmodes);
    c.resize(q, nmodes);
    for (Eigen::Index i = 0; i < q; ++i) {
      const double x = rule.nodes[std::size_t(i)];
      for (int k = 1; k <= nmodes; ++k) {
        const double kk = k * kPi / length;
        s(i, k - 1) = std::sin(kk * x);
        d(i, k - 1) = kk * std::cos(kk * x);
      }
      for (int k = 0; k < nmodes; ++k) c(i, k) = std::cos(k * kPi * x / length);
    }
  }

  Eigen::VectorXd w() const {
    return Eigen::Map<const Eigen::VectorXd>(rule.weights.data(), Eigen::Index(rule.size()));
  }
  // Gram matrix int f_a g_b.
  Eigen::MatrixXd gram(const Eigen::MatrixXd& f, const Eigen::MatrixXd& g) const {
    return f.transpose() * w().asDiagonal() * g;
  }
};

std::shared_ptr<SparseTrilinear> build_trilinear(const SpectralBasis& basis, std::size_t order) {
  const auto& nm = basis.nmodes();
  const auto& ext = basis.extents();
  const AxisTables ax(nm[0], ext[0], order);
  const AxisTables ay(nm[1], ext[1], order);
  auto triple = [](const AxisTables& t, const Eigen::MatrixXd& mid) {
    const int n = int(t.s.cols());
    std::vector<double> out(std::size_t(n * n * n));
    const Eigen::VectorXd w = t.w();
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        const Eigen::VectorXd ab = w.cwiseProduct(t.s.col(a)).cwiseProduct(mid.col(b));
        for (int c = 0; c < n; ++c) out[std::size_t((a * n + b) * n + c)] = ab.dot(t.s.col(c));
      }
    return out;
  };
  const auto px = triple(ax, ax.s), qx = triple(ax, ax.d);
  const auto py = triple(ay, ay.s), qy = triple(ay, ay.d);
  const int n1 = nm[0], n2 = nm[1];
  auto at = [](const std::vector<double>& v, int n, int a, int b, int c) {
    return v[std::size_t(((a - 1) * n + (b - 1)) * n + (c - 1))];
  };

  const std::size_t nb = basis.size();
  double vmax = 0.0;
  for (std::size_t i = 0; i < nb; ++i)
    for (std::size_t j = 0; j < nb; ++j)
      for (std::size_t k = 0; k < nb; ++k) {
        const auto &mi = basis.mode(i), &mj = basis.mode(j), &mk = basis.mode(k);
        vmax = std::max({vmax, std::abs(at(qx, n1, mi.m, mj.m, mk.m) * at(py, n2, mi.n, mj.n, mk.n)),
                         std::abs(at(px, n1, mi.m, mj.m, mk.m) * at(qy, n2, mi.n, mj.n, mk.n))});
      }
  const double cut = 1e-14 * vmax;
  auto out = std::make_shared<SparseTrilinear>();
  for (std::size_t i = 0; i < nb; ++i)
    for (std::size_t j = 0; j < nb; ++j)
      for (std::size_t k = 0; k < nb; ++k) {
        const auto &mi = basis.mode(i), &mj = basis.mode(j), &mk = basis.mode(k);
        const double v1 = at(qx, n1, mi.m, mj.m, mk.m) * at(py, n2, mi.n, mj.n, mk.n);
        const double v2 = at(px, n1, mi.m, mj.m, mk.m) * at(qy, n2, mi.n, mj.n, mk.n);
        if (std::abs(v1) > cut) out->t1.push_back({int(i), int(j), int(k), v1});
        if (std::abs(v2) > cut) out->t2.push_back({int(i), int(j), int(k), v2});
      }
  return out;
}

}  // namespace

Eigen::VectorXd OperatorTensors::apply_stiffness(const Eigen::VectorXd& u) const {
  const auto nb = Eigen::Index(basis.size());
  Eigen::VectorXd out(u.size());
  for (Eigen::Index c = 0; c < 3; ++c) out.segment(c * nb, nb).noalias() = stiffness * u.segment(c * nb, nb);
  return out;
}

OperatorTensors assemble(const SpectralBasis& basis, const SliceChart& chart,
                         const AssemblyOptions& options) {
  const std::size_t order =
      options.quadrature_order == 0 ? default_quadrature_order(basis) : options.quadrature_order;
  require(order >= minimum_quadrature_order(basis), ErrorCode::invalid_argument,
          "assemble: quadrature order below (3 * max mode + 2) / 2");

  OperatorTensors t{basis, chart, projected_gradient_coeffs(chart, options.chart_tolerance, options.coupling),
                    order, {}, {}, {}, {}, {}, {}, {}, {}, {}, 0, nullptr, nullptr};
  const auto& nm = basis.nmodes();
  const auto& ext = basis.extents();
  const AxisTables ax(nm[0], ext[0], order);
  const AxisTables ay(nm[1], ext[1], order);

  const Eigen::MatrixXd mxx = ax.gram(ax.s, ax.s), dxx = ax.gram(ax.d, ax.d), sdx = ax.gram(ax.s, ax.d);
  const Eigen::MatrixXd myy = ay.gram(ay.s, ay.s), dyy = ay.gram(ay.d, ay.d), sdy = ay.gram(ay.s, ay.d);

  const auto nb = Eigen::Index(basis.size());
  t.mass.resize(nb, nb);
  t.s11.resize(nb, nb);
  t.s22.resize(nb, nb);
  t.s12.resize(nb, nb);
  for (Eigen::Index i = 0; i < nb; ++i) {
    const auto& a = basis.mode(std::size_t(i));
    for (Eigen::Index j = 0; j < nb; ++j) {
      const auto& b = basis.mode(std::size_t(j));
      const int ma = a.m - 1, na = a.n - 1, mb = b.m - 1, nb_ = b.n - 1;
      t.mass(i, j) = mxx(ma, mb) * myy(na, nb_);
      t.s11(i, j) = dxx(ma, mb) * myy(na, nb_);
      t.s22(i, j) = mxx(ma, mb) * dyy(na, nb_);
      // <D1 w_j, D2 w_i>
      t.s12(i, j) = sdx(ma, mb) * sdy(nb_, na);
    }
  }
  const double c1 = t.gradient.c1, c2 = t.gradient.c2;
  t.s33 = c1 * c1 * t.s11 + c2 * c2 * t.s22 + c1 * c2 * (t.s12 + t.s12.transpose());
  t.stiffness = -(t.s11 + t.s22 + t.s33);

  // Constraint rows: cos(p pi x/L1) cos(q pi y/L2), (p, q) != (0, 0).
  const Eigen::MatrixXd dcx = ax.gram(ax.c, ax.d), scx = ax.gram(ax.c, ax.s);
  const Eigen::MatrixXd dcy = ay.gram(ay.c, ay.d), scy = ay.gram(ay.c, ay.s);
  const Eigen::Index rows = Eigen::Index(nm[0]) * nm[1] - 1;
  t.constraint = Eigen::MatrixXd::Zero(rows, 3 * nb);
  t.constraint_weights.resize(rows);
  Eigen::Index r = 0;
  for (int q = 0; q < nm[1]; ++q)
    for (int p = 0; p < nm[0]; ++p) {
      if (p == 0 && q == 0) continue;
      t.constraint_weights(r) = (p == 0 ? ext[0] : 0.5 * ext[0]) * (q == 0 ? ext[1] : 0.5 * ext[1]);
      for (Eigen::Index i = 0; i < nb; ++i) {
        const auto& md = basis.mode(std::size_t(i));
        const double e1 = dcx(p, md.m - 1) * scy(q, md.n - 1);
        const double e2 = scx(p, md.m - 1) * dcy(q, md.n - 1);
        t.constraint(r, i) = e1;
        t.constraint(r, nb + i) = e2;
        t.constraint(r, 2 * nb + i) = c1 * e1 + c2 * e2;
      }
      ++r;
    }

  Eigen::MatrixXd null_basis;
  t.constraint_rank = split_constraint(t.constraint, t.range_basis, null_basis);
  if (t.constraint_rank != rows)
    log::warn("assemble: constraint rank " + std::to_string(t.constraint_rank) + " differs from expected " +
              std::to_string(rows));

  if (basis.size() <= options.sparse_tensor_limit) t.trilinear = build_trilinear(basis, order);
  t.convection = std::make_shared<ConvectionEvaluator>(t.basis, t.gradient, order);
  return t;
}

Eigen::VectorXd project_divfree(const OperatorTensors& t, const Eigen::VectorXd& u) {
  require(u.size() == Eigen::Index(t.basis.state_size()), ErrorCode::invalid_argument,
          "project_divfree: state size mismatch");
  return u - t.range_basis * (t.range_basis.transpose() * u);
}

double divergence_norm(const OperatorTensors& t, const Eigen::VectorXd& u) {
  const Eigen::VectorXd cu = t.constraint * u;
  return std::sqrt((cu.array().square() / t.constraint_weights.array()).sum());
}

GradientNorms gradient_norms(const OperatorTensors& t, const Eigen::VectorXd& u) {
  const auto nb = Eigen::Index(t.basis.size());
  const double scale = t.basis.mass_scale();
  const auto& ext = t.basis.extents();
  GradientNorms g;
  for (Eigen::Index c = 0; c < 3; ++c) {
    const auto seg = u.segment(c * nb, nb);
    for (Eigen::Index i = 0; i < nb; ++i) {
      const auto& md = t.basis.mode(std::size_t(i));
      const double k1 = md.m * kPi / ext[0], k2 = md.n * kPi / ext[1];
      g.d1 += scale * k1 * k1 * seg(i) * seg(i);
      g.d2 += scale * k2 * k2 * seg(i) * seg(i);
    }
    g.dcross += seg.dot(t.s33 * seg);
  }
  g.dcross = std::max(g.dcross, 0.0);
  return g;
}

double energy(const OperatorTensors& t, const Eigen::VectorXd& u) {
  return 0.5 * t.basis.mass_scale() * u.squaredNorm();
}

double l2_norm(const OperatorTensors& t, const Eigen::VectorXd& u) {
  return std::sqrt(t.basis.mass_scale()) * u.norm();
}

namespace {

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> reduced_stiffness(const OperatorTensors& t, Eigen::MatrixXd& z,
                                                                 bool vectors) {
  const auto nb = Eigen::Index(t.basis.size());
  Eigen::MatrixXd range;
  split_constraint(t.constraint, range, z);
  Eigen::MatrixXd kz(z.rows(), z.cols());
  for (Eigen::Index c = 0; c < 3; ++c) kz.middleRows(c * nb, nb).noalias() = -t.stiffness * z.middleRows(c * nb, nb);
  Eigen::MatrixXd reduced = z.transpose() * kz;
  reduced = 0.5 * (reduced + reduced.transpose()).eval();
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(reduced, vectors ? Eigen::ComputeEigenvectors
                                                                          : Eigen::EigenvaluesOnly);
}

}  // namespace

double coercivity_check(const OperatorTensors& t) {
  Eigen::MatrixXd z;
  return reduced_stiffness(t, z, false).eigenvalues().minCoeff() / t.basis.mass_scale();
}

DivFreeMode lowest_divfree_mode(const OperatorTensors& t) {
  Eigen::MatrixXd z;
  const auto es = reduced_stiffness(t, z, true);
  DivFreeMode mode;
  mode.eigenvalue = es.eigenvalues()(0) / t.basis.mass_scale();
  mode.coeffs = z * es.eigenvectors().col(0);
  // Fix the sign so the largest-magnitude coefficient is positive.
  Eigen::Index imax = 0;
  mode.coeffs.cwiseAbs().maxCoeff(&imax);
  if (mode.coeffs(imax) < 0.0) mode.coeffs = -mode.coeffs;
  mode.coeffs /= l2_norm(t, mode.coeffs);
  return mode;
}

double max_eigenvalue(const OperatorTensors& t) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-t.stiffness, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff() / t.basis.mass_scale();
}

}  // namespace nsslice
