#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>

#include "nsslice/error.hpp"
#include "nsslice/stratify.hpp"

using namespace nsslice;

namespace {

constexpr double pi = std::numbers::pi;

IndicatorGrid ball(std::size_t n, double r, std::array<double, 3> c = {0.5, 0.5, 0.5}) {
  return mask_from_predicate({n, n, n}, {1, 1, 1}, [=](std::span<const double> x) {
    const double dx = x[0] - c[0], dy = x[1] - c[1], dz = x[2] - c[2];
    return dx * dx + dy * dy + dz * dz < r * r;
  });
}

// Axes of a 3D mask reordered so that new axis a is old axis perm[a].
IndicatorGrid permuted(const IndicatorGrid& m, std::array<std::size_t, 3> perm) {
  IndicatorGrid out{{m.dims[perm[0]], m.dims[perm[1]], m.dims[perm[2]]},
                    {m.extents[perm[0]], m.extents[perm[1]], m.extents[perm[2]]},
                    std::vector<std::uint8_t>(m.mask.size()),
                    m.eps};
  for (std::size_t k = 0; k < m.dims[2]; ++k)
    for (std::size_t j = 0; j < m.dims[1]; ++j)
      for (std::size_t i = 0; i < m.dims[0]; ++i) {
        const std::array<std::size_t, 3> old{i, j, k};
        const std::array<std::size_t, 3> nw{old[perm[0]], old[perm[1]], old[perm[2]]};
        out.mask[nw[0] + out.dims[0] * (nw[1] + out.dims[1] * nw[2])] = m.mask[i + m.dims[0] * (j + m.dims[1] * k)];
      }
  return out;
}

}  // namespace

TEST_SUITE("stratify") {

TEST_CASE("masks from fields") {
  const Field zero = Field::zeros({4, 4, 4}, {1, 1, 1}, 3);
  CHECK(mask_from_field(zero, 0.0).count() == 0);
  const Field one = Field::sample({4, 5, 6}, {1, 1, 1}, 1, [](std::span<const double>, std::span<double> v) { v[0] = 1; });
  const IndicatorGrid full = mask_from_field(one, 0.5);
  CHECK(full.count() == 120);
  CHECK(full.volume() == doctest::Approx(1.0));

  // Bump 1 - |x - c|^2 / R^2 has superlevel set {> eps} equal to a ball of
  // radius R sqrt(1 - eps).
  const std::size_t n = 41;
  const double R = 0.4, eps = 0.3;
  const Field bump = Field::sample({n, n, n}, {1, 1, 1}, 1, [&](std::span<const double> x, std::span<double> v) {
    const double s = (x[0] - 0.5) * (x[0] - 0.5) + (x[1] - 0.5) * (x[1] - 0.5) + (x[2] - 0.5) * (x[2] - 0.5);
    v[0] = std::max(0.0, 1 - s / (R * R));
  });
  const IndicatorGrid m = mask_from_field(bump, eps);
  const double r = R * std::sqrt(1 - eps);
  const double h = 1.0 / double(n);
  const double exact = 4.0 / 3.0 * pi * r * r * r;
  CHECK(std::abs(m.volume() - exact) <= 4 * pi * r * r * std::sqrt(3.0) * h);
}

TEST_CASE("slice measures of forced geometries") {
  const IndicatorGrid full = mask_from_predicate({8, 8, 8}, {1, 1, 1}, [](std::span<const double>) { return true; });
  for (std::size_t ns : {0, 2, 5, 8}) {
    const SliceProfile p = slice_measures(full, {0, 0, 1}, ns);
    for (double a : p.areas) CHECK(a == doctest::Approx(1.0).epsilon(1e-12));
  }
  const IndicatorGrid empty = mask_from_predicate({8, 8, 8}, {1, 1, 1}, [](std::span<const double>) { return false; });
  for (double a : slice_measures(empty, {1, 2, 3}).areas) CHECK(a == 0.0);

  const IndicatorGrid half = mask_from_predicate({16, 16, 16}, {1, 1, 1}, [](std::span<const double> x) { return x[2] < 0.5; });
  const SliceProfile p = slice_measures(half, {0, 0, 1}, 10);
  for (std::size_t k = 0; k < p.offsets.size(); ++k) {
    if (std::abs(p.offsets[k] - 0.5) <= p.dbeta) continue;
    CHECK(p.areas[k] == doctest::Approx(p.offsets[k] < 0.5 ? 1.0 : 0.0).epsilon(1e-12));
  }
}

TEST_CASE("slice measures integrate to the voxel volume") {
  const IndicatorGrid b = ball(24, 0.31, {0.45, 0.5, 0.55});
  for (const auto& d : std::vector<std::vector<double>>{{1, 0, 0}, {1, 1, 0}, {1, -2, 3}, {0.2, 0.3, 0.9}}) {
    for (std::size_t ns : {0, 7, 50}) {
      const SliceProfile p = slice_measures(b, d, ns);
      double s = 0;
      for (double a : p.areas) s += a * p.dbeta;
      CHECK(s == doctest::Approx(b.volume()).epsilon(1e-12));
    }
  }
}

TEST_CASE("axis permutations leave slice measures unchanged") {
  std::mt19937_64 rng(5);
  std::bernoulli_distribution coin(0.3);
  IndicatorGrid m{{6, 7, 5}, {1.0, 1.4, 0.8}, std::vector<std::uint8_t>(210), 0.0};
  for (auto& v : m.mask) v = coin(rng);
  const std::vector<double> d{0.3, -0.5, 0.8};
  const SliceProfile ref = slice_measures(m, d, 9);
  for (std::array<std::size_t, 3> perm : {std::array<std::size_t, 3>{1, 2, 0}, {2, 0, 1}, {0, 2, 1}}) {
    const IndicatorGrid pm = permuted(m, perm);
    const SliceProfile p = slice_measures(pm, {d[perm[0]], d[perm[1]], d[perm[2]]}, 9);
    CHECK(p.areas == ref.areas);
    CHECK(p.offsets == ref.offsets);
  }
}

TEST_CASE("ball verdict") {
  const IndicatorGrid b = ball(40, 0.3);
  const StratificationVerdict v = stratification_verdict(b, {{1, 1, 1}});
  CHECK(v.positive);
  CHECK(v.axis_positive);
  CHECK(v.oracle_positive);
  for (const auto& d : v.directions) {
    CHECK(d.positive);
    CHECK(std::abs((d.best_hi - d.best_lo) - 0.6) <= 3 * d.profile.dbeta);
  }
}

TEST_CASE("single voxel layer is negative across the layer") {
  const std::size_t n = 20;
  const IndicatorGrid layer = mask_from_predicate({n, n, n}, {1, 1, 1}, [](std::span<const double> x) {
    return x[2] > 0.5 && x[2] < 0.55;
  });
  CHECK(layer.count() == n * n);
  const StratificationVerdict v = stratification_verdict(layer, {});
  CHECK_FALSE(v.directions[2].positive);
  CHECK(v.directions[2].interval_tol > v.directions[2].profile.dbeta);
  CHECK(v.directions[0].positive);
  CHECK(v.axis_positive == v.oracle_positive);
}

TEST_CASE("empty and single-voxel masks are negative") {
  const IndicatorGrid empty = mask_from_predicate({10, 10, 10}, {1, 1, 1}, [](std::span<const double>) { return false; });
  const StratificationVerdict v = stratification_verdict(empty, {{1, 1, 0}});
  CHECK_FALSE(v.positive);
  CHECK_FALSE(v.oracle_positive);
  for (const auto& d : v.directions) CHECK_FALSE(d.positive);

  IndicatorGrid one = empty;
  one.mask[555] = 1;
  const StratificationVerdict w = stratification_verdict(one, {});
  CHECK_FALSE(w.axis_positive);
  CHECK_FALSE(w.oracle_positive);
}

TEST_CASE("raising eps never creates a positive verdict") {
  const std::size_t n = 24;
  const Field bump = Field::sample({n, n, n}, {1, 1, 1}, 1, [](std::span<const double> x, std::span<double> v) {
    v[0] = std::exp(-20 * ((x[0] - 0.4) * (x[0] - 0.4) + (x[1] - 0.5) * (x[1] - 0.5) + (x[2] - 0.6) * (x[2] - 0.6)));
  });
  bool was_positive = true;
  for (double eps : {0.0, 0.2, 0.5, 0.8, 0.95, 0.99, 1.0}) {
    const StratificationVerdict v = stratification_verdict(mask_from_field(bump, eps), {});
    if (!was_positive) CHECK_FALSE(v.positive);
    was_positive = v.positive;
  }
  CHECK_FALSE(was_positive);
}

TEST_CASE("space-time masks") {
  std::vector<Field> frames;
  std::vector<double> times;
  for (int k = 0; k < 6; ++k) {
    times.push_back(0.1 * k);
    frames.push_back(Field::sample({8, 8, 8}, {1, 1, 1}, 1, [k](std::span<const double> x, std::span<double> v) {
      v[0] = x[0] < 0.5 && k >= 2 ? 1.0 : 0.0;
    }));
  }
  const IndicatorGrid m = mask_from_series(TimeSeriesField(times, frames), 0.5);
  CHECK(m.ndims() == 4);
  CHECK(m.extents[3] == doctest::Approx(0.6));
  const StratificationVerdict v = stratification_verdict(m, {});
  CHECK(v.axis_positive);
  CHECK(v.oracle_positive);
}

}  // TEST_SUITE
