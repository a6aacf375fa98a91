#include "nsslice/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "nsslice/error.hpp"

namespace nsslice {
namespace {

double norm(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

double polygon_area(const std::vector<Point2>& poly) {
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % poly.size()];
    twice += a.p * b.q - b.p * a.q;
  }
  return 0.5 * twice;
}

// Keeps the part of `poly` where g >= 0 (g affine).
std::vector<Point2> clip(const std::vector<Point2>& poly,
                         const std::function<double(const Point2&)>& g) {
  std::vector<Point2> out;
  if (poly.empty()) return out;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % poly.size()];
    const double ga = g(a);
    const double gb = g(b);
    if (ga >= 0.0) out.push_back(a);
    if ((ga >= 0.0) != (gb >= 0.0)) {
      const double t = ga / (ga - gb);
      out.push_back({a.p + t * (b.p - a.p), a.q + t * (b.q - a.q)});
    }
  }
  // Drop consecutive duplicates produced by vertices lying on the cut line.
  std::vector<Point2> dedup;
  for (const Point2& v : out) {
    if (!dedup.empty() && std::abs(dedup.back().p - v.p) <= 1e-15 &&
        std::abs(dedup.back().q - v.q) <= 1e-15)
      continue;
    dedup.push_back(v);
  }
  while (dedup.size() > 1 && std::abs(dedup.front().p - dedup.back().p) <= 1e-15 &&
         std::abs(dedup.front().q - dedup.back().q) <= 1e-15)
    dedup.pop_back();
  return dedup;
}

}  // namespace

Hyperplane::Hyperplane(const Vec3& normal, double offset)
    : normal_(normal), offset_(offset) {
  const double n = norm(normal_);
  require(std::isfinite(n) && std::isfinite(offset_), ErrorCode::invalid_argument,
          "hyperplane: non-finite normal or offset");
  require(std::abs(n - 1.0) <= 1e-12, ErrorCode::invalid_argument,
          "hyperplane: normal must have unit length (got |n| = " + std::to_string(n) + ")");
  for (double c : normal_) {
    if (c == 0.0) continue;
    if (c < 0.0) {
      for (double& x : normal_) x = -x + 0.0;  // +0.0 avoids storing -0
      offset_ = -offset_;
    }
    break;
  }
}

Hyperplane Hyperplane::from_coefficients(const Vec3& a, double b) {
  const double n = norm(a);
  require(n > 0.0 && std::isfinite(n), ErrorCode::degenerate_normal,
          "hyperplane: zero normal vector");
  return Hyperplane({a[0] / n, a[1] / n, a[2] / n}, b / n);
}

double Hyperplane::signed_distance(const Vec3& x) const noexcept {
  return normal_[0] * x[0] + normal_[1] * x[1] + normal_[2] * x[2] - offset_;
}

SliceChart SliceChart::from_alphas(double alpha1, double alpha2, double affine_offset) {
  SliceChart chart;
  chart.alpha1 = alpha1;
  chart.alpha2 = alpha2;
  chart.affine_offset = affine_offset;
  return chart;
}

Vec3 SliceChart::lift(double p, double q) const noexcept {
  Vec3 x{};
  x[inplane_axes[0]] = p;
  x[inplane_axes[1]] = q;
  x[eliminated_axis] = eliminated_coordinate(p, q);
  return x;
}

SliceChart make_chart(const Hyperplane& plane, double tolerance) {
  const Vec3& n = plane.normal();
  int axis = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(n[i]) >= std::abs(n[axis])) axis = i;
  require(std::abs(n[axis]) >= tolerance, ErrorCode::degenerate_normal,
          "make_chart: all normal components below chart tolerance");

  SliceChart chart;
  chart.eliminated_axis = axis;
  int k = 0;
  for (int i = 0; i < 3; ++i)
    if (i != axis) chart.inplane_axes[k++] = i;
  const double pivot = n[axis];
  chart.alpha1 = n[chart.inplane_axes[0]] / pivot + 0.0;
  chart.alpha2 = n[chart.inplane_axes[1]] / pivot + 0.0;
  chart.affine_offset = plane.offset() / pivot + 0.0;
  return chart;
}

ProjectedGradient projected_gradient_coeffs(const SliceChart& chart, double tolerance,
                                            double coupling) {
  auto coeff = [&](double alpha) {
    if (alpha == 0.0) return 0.0;
    require(std::abs(alpha) >= tolerance, ErrorCode::chart_overflow,
            "projected_gradient_coeffs: |alpha| below chart tolerance would overflow");
    return -coupling / alpha;
  };
  return {coeff(chart.alpha1), coeff(chart.alpha2)};
}

bool Box3::contains(const Vec3& x, double slack) const noexcept {
  for (int i = 0; i < 3; ++i)
    if (x[i] < lo[i] - slack || x[i] > hi[i] + slack) return false;
  return true;
}

bool SliceDomain::is_rectangle(double rel_tol) const noexcept {
  if (empty()) return false;
  const double box_area = (hi.p - lo.p) * (hi.q - lo.q);
  return std::abs(box_area - area) <= rel_tol * box_area;
}

SliceDomain slice_domain(const Box3& box, const SliceChart& chart) {
  const int ip = chart.inplane_axes[0];
  const int iq = chart.inplane_axes[1];
  const int ie = chart.eliminated_axis;
  std::vector<Point2> poly = {{box.lo[ip], box.lo[iq]},
                              {box.hi[ip], box.lo[iq]},
                              {box.hi[ip], box.hi[iq]},
                              {box.lo[ip], box.hi[iq]}};
  const double lo_e = box.lo[ie];
  const double hi_e = box.hi[ie];
  poly = clip(poly, [&](const Point2& v) { return chart.eliminated_coordinate(v.p, v.q) - lo_e; });
  poly = clip(poly, [&](const Point2& v) { return hi_e - chart.eliminated_coordinate(v.p, v.q); });

  SliceDomain dom;
  if (poly.size() < 3) return dom;
  const double area = polygon_area(poly);
  if (!(area > 0.0)) return dom;
  dom.vertices = std::move(poly);
  dom.area = area;
  dom.lo = dom.hi = dom.vertices.front();
  for (const Point2& v : dom.vertices) {
    dom.lo.p = std::min(dom.lo.p, v.p);
    dom.lo.q = std::min(dom.lo.q, v.q);
    dom.hi.p = std::max(dom.hi.p, v.p);
    dom.hi.q = std::max(dom.hi.q, v.q);
  }
  return dom;
}

}  // namespace nsslice
