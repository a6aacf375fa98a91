#include <cmath>
#include <functional>
#include <random>

#include <doctest.h>

#include "nsslice/error.hpp"
#include "nsslice/geometry.hpp"

using namespace nsslice;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an nsslice::Error");
  return ErrorCode::invalid_argument;
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("hyperplane normalizes and canonicalizes its sign") {
  const Hyperplane p = Hyperplane::from_coefficients({0, 0, 2}, 1.0);
  CHECK(p.normal()[2] == 1.0);
  CHECK(p.offset() == 0.5);
  CHECK(Hyperplane::from_coefficients({0, 0, -1}, -0.5) == p);
  CHECK(Hyperplane({-1, 0, 0}, 0.3) == Hyperplane({1, 0, 0}, -0.3));
  CHECK(code_of([] { Hyperplane::from_coefficients({0, 0, 0}, 1.0); }) == ErrorCode::degenerate_normal);
  CHECK(code_of([] { Hyperplane({1, 1, 0}, 0.0); }) == ErrorCode::invalid_argument);
  CHECK(p.signed_distance({0.3, 0.7, 0.5}) == doctest::Approx(0.0));
}

TEST_CASE("make_chart on axis-aligned planes") {
  const SliceChart z = make_chart(Hyperplane({0, 0, 1}, 0.0));
  CHECK(z.eliminated_axis == 2);
  CHECK(z.alpha1 == 0.0);
  CHECK(z.alpha2 == 0.0);
  CHECK(z.affine_offset == 0.0);
  CHECK(z.axis_aligned());

  const SliceChart y = make_chart(Hyperplane({0, 1, 0}, 0.5));
  CHECK(y.eliminated_axis == 1);
  CHECK(y.inplane_axes == std::array<int, 2>{0, 2});
  CHECK(y.alpha1 == 0.0);
  CHECK(y.alpha2 == 0.0);
  CHECK(y.affine_offset == 0.5);
}

TEST_CASE("make_chart breaks ties toward the last axis") {
  const SliceChart c = make_chart(Hyperplane::from_coefficients({1, 1, 1}, 3.0));
  CHECK(c.eliminated_axis == 2);
  CHECK(c.alpha1 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(c.alpha2 == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(c.affine_offset == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("chart lift stays on the plane and ignores the normal's sign") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 a{g(rng), g(rng), g(rng)};
    const double b = u(rng);
    const Hyperplane plane = Hyperplane::from_coefficients(a, b);
    const SliceChart chart = make_chart(plane);
    const SliceChart flipped = make_chart(Hyperplane::from_coefficients({-a[0], -a[1], -a[2]}, -b));
    CHECK(chart.eliminated_axis == flipped.eliminated_axis);
    CHECK(chart.alpha1 == flipped.alpha1);
    CHECK(chart.alpha2 == flipped.alpha2);
    CHECK(chart.affine_offset == flipped.affine_offset);
    for (int k = 0; k < 5; ++k) {
      const Vec3 x = chart.lift(u(rng), u(rng));
      CHECK(std::abs(plane.signed_distance(x)) <= 1e-10 * (1.0 + std::abs(b)));
    }
  }
}

TEST_CASE("projected gradient coefficients") {
  auto c = projected_gradient_coeffs(SliceChart::from_alphas(1, 1));
  CHECK(c.c1 == -0.5);
  CHECK(c.c2 == -0.5);
  c = projected_gradient_coeffs(SliceChart::from_alphas(0, 0));
  CHECK(c.c1 == 0.0);
  CHECK(c.c2 == 0.0);
  c = projected_gradient_coeffs(SliceChart::from_alphas(2, -1));
  CHECK(c.c1 == -0.25);
  CHECK(c.c2 == 0.5);
  c = projected_gradient_coeffs(SliceChart::from_alphas(2, -1), kDefaultChartTolerance, 1.0);
  CHECK(c.c1 == -0.5);
  CHECK(c.c2 == 1.0);
  CHECK(code_of([] { projected_gradient_coeffs(SliceChart::from_alphas(1e-10, 1)); }) == ErrorCode::chart_overflow);
}

TEST_CASE("slice domain of the unit cube") {
  const Box3 cube;
  const SliceDomain sq = slice_domain(cube, make_chart(Hyperplane({0, 0, 1}, 0.5)));
  CHECK(sq.area == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(sq.is_rectangle());
  CHECK(sq.lo.p == doctest::Approx(0.0));
  CHECK(sq.hi.q == doctest::Approx(1.0));

  CHECK(slice_domain(cube, make_chart(Hyperplane({0, 0, 1}, 2.0))).empty());
}

TEST_CASE("hexagonal section area against Monte Carlo") {
  const SliceChart chart = make_chart(Hyperplane::from_coefficients({1, 1, 1}, 1.5));
  const SliceDomain hex = slice_domain(Box3{}, chart);
  CHECK(hex.vertices.size() == 6);
  CHECK_FALSE(hex.is_rectangle());

  // Fraction of the (x, y) unit square whose lifted z lies in [0, 1].
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = 10'000'000;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = chart.eliminated_coordinate(u(rng), u(rng));
    hits += (z >= 0.0 && z <= 1.0);
  }
  const double p = double(hits) / double(n);
  const double sigma = std::sqrt(p * (1 - p) / double(n));
  CHECK(std::abs(hex.area - p) <= 3.0 * sigma);
}

TEST_CASE("box containment") {
  const Box3 b = Box3::with_extents({1, 2, 3});
  CHECK(b.contains({0.5, 1.5, 2.5}));
  CHECK_FALSE(b.contains({0.5, 2.5, 2.5}));
  CHECK(b.contains({1.0 + 1e-13, 1, 1}, 1e-12));
}

}  // TEST_SUITE
