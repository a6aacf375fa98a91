#include "nsslice/quadform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "nsslice/error.hpp"

namespace nsslice {
namespace {

// d/dx_axis of component `comp` at grid multi-index `idx`.
double difference(const Field& f, std::size_t comp, std::size_t axis, const std::array<std::size_t, 3>& idx) {
  const std::size_t n = f.dims()[axis];
  const double h = f.spacing(axis);
  auto at = [&](std::size_t i) {
    auto j = idx;
    j[axis] = i;
    return f.value(comp, f.index(j[0], j[1], j[2]));
  };
  const std::size_t i = idx[axis];
  if (n == 2) return (at(1) - at(0)) / h;
  if (i == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
  if (i == n - 1) return (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h);
  return (at(i + 1) - at(i - 1)) / (2.0 * h);
}

std::vector<double> trapezoid_weights(const std::vector<std::size_t>& dims, const std::vector<double>& extents) {
  std::size_t total = 1;
  for (auto d : dims) total *= d;
  std::vector<double> w(total, 1.0);
  for (std::size_t p = 0; p < total; ++p) {
    std::size_t rest = p;
    for (std::size_t a = 0; a < dims.size(); ++a) {
      const std::size_t i = rest % dims[a];
      rest /= dims[a];
      const double h = extents[a] / double(dims[a] - 1);
      w[p] *= (i == 0 || i == dims[a] - 1) ? 0.5 * h : h;
    }
  }
  return w;
}

std::vector<Mat3> gradients(const Field& v) {
  require(v.ndims() == 3 && v.ncomp() == 3, ErrorCode::invalid_argument,
          "strain_field: need a 3D three-component field");
  std::vector<Mat3> g(v.npoints());
  for (std::size_t p = 0; p < v.npoints(); ++p) {
    const auto idx = v.unflatten(p);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t k = 0; k < 3; ++k) g[p](Eigen::Index(i), Eigen::Index(k)) = difference(v, k, i, idx);
  }
  return g;
}

Inertia inertia_of(const std::array<double, 3>& values, const std::array<double, 3>& zero_tol) {
  Inertia in;
  for (std::size_t k = 0; k < 3; ++k) {
    if (std::abs(values[k]) <= zero_tol[k])
      ++in.zero;
    else if (values[k] > 0.0)
      ++in.positive;
    else
      ++in.negative;
  }
  return in;
}

}  // namespace

StrainMatrixField strain_from_gradients(const Field& shape, std::vector<Mat3> grads) {
  require(grads.size() == shape.npoints(), ErrorCode::invalid_argument,
          "strain_from_gradients: one gradient per grid point required");
  StrainMatrixField s;
  s.dims = shape.dims();
  s.extents = shape.extents();
  s.gradient = std::move(grads);
  s.strain.resize(s.gradient.size());
  for (std::size_t p = 0; p < s.gradient.size(); ++p) s.strain[p] = 0.5 * (s.gradient[p] + s.gradient[p].transpose());
  return s;
}

StrainMatrixField strain_field(const Field& v) { return strain_from_gradients(v, gradients(v)); }

std::array<double, 3> symmetric_eigenvalues(const Mat3& a) {
  const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
  const double q = a.trace() / 3.0;
  const double p2 = (a(0, 0) - q) * (a(0, 0) - q) + (a(1, 1) - q) * (a(1, 1) - q) + (a(2, 2) - q) * (a(2, 2) - q) +
                    2.0 * p1;
  if (p2 == 0.0) return {q, q, q};
  const double p = std::sqrt(p2 / 6.0);
  const Mat3 b = (a - q * Mat3::Identity()) / p;
  const double r = std::clamp(b.determinant() / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double e1 = q + 2.0 * p * std::cos(phi);
  const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
  const double e2 = 3.0 * q - e1 - e3;
  std::array<double, 3> e{e3, e2, e1};
  std::sort(e.begin(), e.end());
  return e;
}

PointDecomposition canonicalize_point(const Mat3& a, double rel_tol) {
  require(rel_tol > 0.0, ErrorCode::invalid_argument, "canonicalize: pivot tolerance must be positive");
  const double amax = a.cwiseAbs().maxCoeff();
  const double det1 = a(0, 0);
  const double det2 = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  const double det3 = a.determinant();
  PointDecomposition d;
  const bool ok = amax > 0.0 && std::abs(det1) > rel_tol * amax && std::abs(det2) > rel_tol * amax * amax;
  if (ok) {
    d.method = QuadMethod::jacobi;
    d.b = {det1, det2 / det1, det3 / det2};
    d.l21 = a(0, 1) / a(0, 0);
    d.l31 = a(0, 2) / a(0, 0);
    d.l32 = (a(1, 2) - a(0, 2) * a(0, 1) / a(0, 0)) / d.b[1];
    const double t3 = rel_tol * amax * amax * amax / std::abs(det2);
    d.inertia = inertia_of(d.b, {0.0, 0.0, t3});
  } else {
    d.method = QuadMethod::eigen_fallback;
    d.b = symmetric_eigenvalues(a);
    const double t = rel_tol * amax;
    d.inertia = inertia_of(d.b, {t, t, t});
  }
  return d;
}

QuadFormDecomposition canonicalize(const StrainMatrixField& strain, double rel_tol) {
  QuadFormDecomposition out;
  out.points.reserve(strain.size());
  for (const Mat3& a : strain.strain) {
    out.points.push_back(canonicalize_point(a, rel_tol));
    const auto& d = out.points.back();
    if (d.method == QuadMethod::eigen_fallback) ++out.degenerate_count;
    ++out.inertia_histogram[d.inertia];
  }
  return out;
}

double quadform_value(const Mat3& a, const Eigen::Vector3d& w) { return w.dot(a * w); }

Eigen::Vector3d canonical_variables(const PointDecomposition& d, const Eigen::Vector3d& w) {
  return {w(0) + d.l21 * w(1) + d.l31 * w(2), w(1) + d.l32 * w(2), w(2)};
}

double canonical_value(const PointDecomposition& d, const Eigen::Vector3d& w) {
  require(d.method == QuadMethod::jacobi, ErrorCode::invalid_argument,
          "canonical_value: point has no Jacobi factorization");
  const Eigen::Vector3d y = canonical_variables(d, w);
  return d.b[0] * y(0) * y(0) + d.b[1] * y(1) * y(1) + d.b[2] * y(2) * y(2);
}

double signed_integral(const StrainMatrixField& strain, const Field& w) {
  require(w.ncomp() == 3 && w.dims() == strain.dims && w.extents() == strain.extents, ErrorCode::invalid_argument,
          "signed_integral: w must be a three-component field on the strain grid");
  // Summing corner means over cells equals the tensor trapezoid rule on nodes.
  const auto weights = trapezoid_weights(strain.dims, strain.extents);
  double acc = 0.0;
  for (std::size_t p = 0; p < strain.size(); ++p) {
    const Eigen::Vector3d wp(w.value(0, p), w.value(1, p), w.value(2, p));
    acc += weights[p] * quadform_value(strain.strain[p], wp);
  }
  return acc;
}

GradientNormMatrix gradient_norms_from_field(const Field& v) {
  const auto g = gradients(v);
  const auto weights = trapezoid_weights(v.dims(), v.extents());
  GradientNormMatrix n{};
  for (std::size_t p = 0; p < g.size(); ++p)
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        const double d = g[p](Eigen::Index(i), Eigen::Index(j));
        n[i][j] += weights[p] * d * d;
      }
  for (auto& row : n)
    for (double& x : row) x = std::sqrt(x);
  return n;
}

GradientNormTable gradient_norms_from_series(const TimeSeriesField& series) {
  GradientNormTable t;
  t.times = series.times();
  for (const Field& f : series.frames()) t.norms.push_back(gradient_norms_from_field(f));
  return t;
}

GradientNormMatrix gradient_norms_from_sine(const SineSeries3D& v) {
  const auto& nm = v.nmodes;
  const std::size_t total = std::size_t(nm[0]) * std::size_t(nm[1]) * std::size_t(nm[2]);
  const double vol = v.extents[0] * v.extents[1] * v.extents[2] / 8.0;
  GradientNormMatrix n{};
  for (std::size_t j = 0; j < 3; ++j) {
    require(v.coeffs[j].size() == total, ErrorCode::invalid_argument, "gradient_norms_from_sine: coefficient count");
    for (std::size_t p = 0; p < total; ++p) {
      const std::array<int, 3> k{int(p % std::size_t(nm[0])) + 1, int((p / std::size_t(nm[0])) % std::size_t(nm[1])) + 1,
                                 int(p / (std::size_t(nm[0]) * std::size_t(nm[1]))) + 1};
      const double a2 = v.coeffs[j][p] * v.coeffs[j][p];
      for (std::size_t i = 0; i < 3; ++i) {
        const double kk = k[i] * std::numbers::pi / v.extents[i];
        n[i][j] += vol * kk * kk * a2;
      }
    }
  }
  for (auto& row : n)
    for (double& x : row) x = std::sqrt(x);
  return n;
}

double box_lambda1(const std::vector<double>& extents) {
  double s = 0.0;
  for (double l : extents) {
    require(l > 0.0, ErrorCode::invalid_argument, "box_lambda1: extents must be positive");
    s += 1.0 / (l * l);
  }
  return std::numbers::pi * std::numbers::pi * s;
}

CriterionReport uniqueness_criterion(const GradientNormTable& table, double nu, double lambda1, double c_gn) {
  require(nu > 0.0, ErrorCode::invalid_argument, "uniqueness_criterion: nu must be positive");
  require(lambda1 > 0.0, ErrorCode::invalid_argument, "uniqueness_criterion: lambda1 must be positive");
  require(c_gn > 0.0, ErrorCode::invalid_argument, "uniqueness_criterion: c_gn must be positive");
  require(table.times.size() == table.norms.size(), ErrorCode::invalid_argument,
          "uniqueness_criterion: one norm matrix per time");
  CriterionReport r;
  r.nu = nu;
  r.lambda1 = lambda1;
  r.c_gn = c_gn;
  r.lhs = nu * std::pow(lambda1, 0.25);
  const double c2 = c_gn * c_gn;
  const double slack = 1.0 - 8.0 * std::numeric_limits<double>::epsilon();
  for (std::size_t k = 0; k < table.times.size(); ++k) {
    CriterionRow row;
    row.time = table.times[k];
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < 3; ++i) s += table.norms[k][i][j];
      row.rhs[j] = c2 * s;
      row.satisfied[j] = r.lhs >= row.rhs[j] * slack;
      row.aggregate_rhs += row.rhs[j];
      r.all_components_satisfied = r.all_components_satisfied && row.satisfied[j];
    }
    row.aggregate_satisfied = r.lhs >= row.aggregate_rhs * slack;
    r.aggregate_satisfied = r.aggregate_satisfied && row.aggregate_satisfied;
    r.rows.push_back(row);
  }
  return r;
}

}  // namespace nsslice
