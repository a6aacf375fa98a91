#pragma once

#include <array>
#include <vector>

namespace nsslice {

using Vec3 = std::array<double, 3>;

inline constexpr double kDefaultChartTolerance = 1e-8;

// Plane {x : <normal, x> = offset} with a unit normal. The representative is
// canonical: the first nonzero normal component is positive, so (n, b) and
// (-n, -b) construct equal objects.
class Hyperplane {
 public:
  // Throws invalid_argument unless |normal| = 1 within 1e-12.
  Hyperplane(const Vec3& normal, double offset);

  // Scales (a, b) so that |a| = 1; throws degenerate_normal for a = 0.
  static Hyperplane from_coefficients(const Vec3& a, double b);

  const Vec3& normal() const noexcept { return normal_; }
  double offset() const noexcept { return offset_; }

  double signed_distance(const Vec3& x) const noexcept;

  friend bool operator==(const Hyperplane&, const Hyperplane&) = default;

 private:
  Vec3 normal_;
  double offset_;
};

// Graph parametrization of a plane over two retained coordinate axes:
//   x[eliminated] = affine_offset - alpha1 * x[inplane[0]] - alpha2 * x[inplane[1]].
// Axes are 0-based (0 = x, 1 = y, 2 = z).
struct SliceChart {
  int eliminated_axis = 2;
  std::array<int, 2> inplane_axes{0, 1};
  double alpha1 = 0.0;
  double alpha2 = 0.0;
  double affine_offset = 0.0;

  // Chart over (x, y) with the given coefficients; used for runs that start
  // directly on a slice rather than from a 3D plane.
  static SliceChart from_alphas(double alpha1, double alpha2,
                                double affine_offset = 0.0);

  double eliminated_coordinate(double p, double q) const noexcept {
    return affine_offset - alpha1 * p - alpha2 * q;
  }
  Vec3 lift(double p, double q) const noexcept;

  bool axis_aligned() const noexcept { return alpha1 == 0.0 && alpha2 == 0.0; }
};

// The eliminated axis is the largest-magnitude normal component, ties going
// to the larger index. Throws degenerate_normal when every component is below
// `tolerance`.
SliceChart make_chart(const Hyperplane& plane,
                      double tolerance = kDefaultChartTolerance);

// Coefficients of the eliminated derivative, D_e = c1 D_1 + c2 D_2, with
// c_i = -coupling / alpha_i and c_i = 0 for alpha_i == 0. The default coupling
// of 1/2 matches the halved relation 2 D_e = -(1/alpha1) D_1 - (1/alpha2) D_2.
// Throws chart_overflow when 0 < |alpha_i| < tolerance.
struct ProjectedGradient {
  double c1 = 0.0;
  double c2 = 0.0;
};

ProjectedGradient projected_gradient_coeffs(
    const SliceChart& chart, double tolerance = kDefaultChartTolerance,
    double coupling = 0.5);

struct Box3 {
  Vec3 lo{0.0, 0.0, 0.0};
  Vec3 hi{1.0, 1.0, 1.0};

  static Box3 with_extents(const Vec3& extents) { return {{0, 0, 0}, extents}; }
  bool contains(const Vec3& x, double slack = 0.0) const noexcept;
};

struct Point2 {
  double p = 0.0;
  double q = 0.0;
};

// Intersection of a box with a chart's plane, in the retained coordinates.
struct SliceDomain {
  std::vector<Point2> vertices;  // convex polygon, counter-clockwise
  Point2 lo;                     // bounding box
  Point2 hi;
  double area = 0.0;

  bool empty() const noexcept { return vertices.size() < 3 || area <= 0.0; }
  // True when the polygon is its own bounding rectangle.
  bool is_rectangle(double rel_tol = 1e-12) const noexcept;
};

SliceDomain slice_domain(const Box3& box, const SliceChart& chart);

}  // namespace nsslice
