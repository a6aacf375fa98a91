#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <doctest.h>

#include "nsslice/error.hpp"
#include "nsslice/field.hpp"

using namespace nsslice;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "nsslice_fieldio_tests";
  fs::create_directories(dir);
  return dir / name;
}

ErrorCode read_error(const fs::path& path) {
  try {
    read_field(path);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("read_field accepted " << path.string());
  return ErrorCode::invalid_argument;
}

Field random_field(std::vector<std::size_t> dims, std::size_t ncomp, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> extents(dims.size(), 1.0);
  extents[0] = 0.7;
  return Field::sample(dims, extents, ncomp, [&](std::span<const double>, std::span<double> out) {
    for (double& v : out) v = g(rng) * std::exp(g(rng));
  });
}

}  // namespace

TEST_SUITE("fieldio") {

TEST_CASE("binary and text round trips are bit exact") {
  const Field f = random_field({8, 8, 8}, 3, 11);
  write_field(f, scratch("rt.nsf"));
  CHECK(read_field(scratch("rt.nsf")) == f);
  write_field(f, scratch("rt_text.nsf"), Encoding::text);
  CHECK(read_field(scratch("rt_text.nsf")) == f);

  const Field g = random_field({5, 3}, 1, 12);
  write_field(g, scratch("rt2.nsf"), Encoding::text);
  CHECK(read_field(scratch("rt2.nsf")) == g);
}

TEST_CASE("time series round trip") {
  std::vector<Field> frames{random_field({4, 5}, 3, 1), random_field({4, 5}, 3, 2), random_field({4, 5}, 3, 3)};
  const TimeSeriesField s({0.0, 0.25, 1.0}, frames);
  write_time_series(s, scratch("series/u.json"));
  const TimeSeriesField r = read_time_series(scratch("series/u.json"));
  CHECK(r.times() == s.times());
  REQUIRE(r.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(r.frames()[i] == frames[i]);
  CHECK(fs::exists(scratch("series/u_00002.nsf")));
}

TEST_CASE("truncated, malformed and non-finite inputs") {
  {
    std::ofstream out(scratch("short.nsf"));
    out << "NSF1 2 4 4 1 1 1\ntext\n";
    for (int i = 0; i < 15; ++i) out << i << ' ';
  }
  CHECK(read_error(scratch("short.nsf")) == ErrorCode::truncated_payload);
  {
    std::ofstream out(scratch("short_bin.nsf"), std::ios::binary);
    out << "NSF1 2 2 2 1 1 1\nbinary\n";
    const double v[3] = {1, 2, 3};
    out.write(reinterpret_cast<const char*>(v), sizeof v);
  }
  CHECK(read_error(scratch("short_bin.nsf")) == ErrorCode::truncated_payload);
  {
    std::ofstream out(scratch("nan.nsf"));
    out << "NSF1 2 2 2 1 1 1\ntext\n0 1 nan 3\n";
  }
  CHECK(read_error(scratch("nan.nsf")) == ErrorCode::non_finite_sample);
  {
    std::ofstream out(scratch("bad.nsf"));
    out << "NSF2 2 2 2 1 1 1\ntext\n0 1 2 3\n";
  }
  CHECK(read_error(scratch("bad.nsf")) == ErrorCode::malformed_header);
  {
    std::ofstream out(scratch("bad_enc.nsf"));
    out << "NSF1 2 2 2 1 1 1\nascii\n0 1 2 3\n";
  }
  CHECK(read_error(scratch("bad_enc.nsf")) == ErrorCode::malformed_header);
  CHECK(read_error(scratch("missing.nsf")) == ErrorCode::io_failure);

  try {
    Field({2, 2}, {1, 1}, 1, {0, 1, NAN, 3});
    FAIL("accepted NaN");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::non_finite_sample);
  }
}

TEST_CASE("interpolation is exact on affine fields and refuses extrapolation") {
  const Field f = Field::sample({4, 5, 6}, {1, 2, 3}, 1, [](std::span<const double> x, std::span<double> v) {
    v[0] = 1 + 2 * x[0] - 3 * x[1] + 0.5 * x[2];
  });
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const double x[3] = {u(rng), 2 * u(rng), 3 * u(rng)};
    double v = 0;
    f.interpolate(x, std::span<double>(&v, 1));
    CHECK(v == doctest::Approx(1 + 2 * x[0] - 3 * x[1] + 0.5 * x[2]).epsilon(1e-13));
  }
  const double outside[3] = {1.5, 0.5, 0.5};
  double v = 0;
  CHECK_THROWS_AS(f.interpolate(outside, std::span<double>(&v, 1)), Error);
}

TEST_CASE("restriction of constant and linear fields") {
  const Field c = Field::sample({5, 5, 5}, {1, 1, 1}, 3, [](std::span<const double>, std::span<double> v) {
    v[0] = 2.5;
    v[1] = -1;
    v[2] = 0.125;
  });
  const SliceChart z05 = make_chart(Hyperplane({0, 0, 1}, 0.5));
  const Field s = restrict_to_slice(c, z05, {7, 9});
  CHECK(s.ndims() == 2);
  CHECK(s.extents() == std::vector<double>{1.0, 1.0});
  for (std::size_t i = 0; i < s.npoints(); ++i) {
    CHECK(s.value(0, i) == 2.5);
    CHECK(s.value(1, i) == -1.0);
    CHECK(s.value(2, i) == 0.125);
  }

  const Field zf = Field::sample({5, 5, 5}, {1, 1, 1}, 1, [](std::span<const double> x, std::span<double> v) {
    v[0] = x[2];
  });
  const Field zs = restrict_to_slice(zf, z05, {6, 6});
  for (std::size_t i = 0; i < zs.npoints(); ++i) CHECK(zs.value(0, i) == doctest::Approx(0.5).epsilon(1e-15));

  // Oblique plane z = 2 - x/2 - y/2 through a tall box: affine data is reproduced.
  const Field lin = Field::sample({6, 6, 17}, {1, 1, 4}, 1, [](std::span<const double> x, std::span<double> v) {
    v[0] = x[0] - 2 * x[1] + 3 * x[2];
  });
  const SliceChart oblique = make_chart(Hyperplane::from_coefficients({0.5, 0.5, 1}, 2.0));
  Point2 origin;
  const Field ls = restrict_to_slice(lin, oblique, {11, 13}, &origin);
  for (std::size_t j = 0; j < 13; ++j)
    for (std::size_t i = 0; i < 11; ++i) {
      const double p = origin.p + ls.coord(0, i);
      const double q = origin.q + ls.coord(1, j);
      const double z = 2 - 0.5 * p - 0.5 * q;
      CHECK(ls.value(0, ls.index(i, j)) == doctest::Approx(p - 2 * q + 3 * z).epsilon(1e-12));
    }
}

TEST_CASE("restriction of smooth data converges at second order") {
  const SliceChart oblique = make_chart(Hyperplane::from_coefficients({0.5, 0.5, 1}, 2.0));
  auto exact = [](double x, double y, double z) { return std::sin(3 * x) * std::cos(2 * y) * std::exp(0.5 * z); };
  std::vector<double> errors;
  for (std::size_t n : {9, 17, 33}) {
    const Field f = Field::sample({n, n, 4 * (n - 1) + 1}, {1, 1, 4}, 1,
                                  [&](std::span<const double> x, std::span<double> v) { v[0] = exact(x[0], x[1], x[2]); });
    Point2 origin;
    const Field s = restrict_to_slice(f, oblique, {21, 21}, &origin);
    double err = 0;
    for (std::size_t j = 0; j < 21; ++j)
      for (std::size_t i = 0; i < 21; ++i) {
        const double p = origin.p + s.coord(0, i);
        const double q = origin.q + s.coord(1, j);
        err = std::max(err, std::abs(s.value(0, s.index(i, j)) - exact(p, q, 2 - 0.5 * p - 0.5 * q)));
      }
    errors.push_back(err);
  }
  CHECK(std::log2(errors[0] / errors[1]) >= 1.9);
  CHECK(std::log2(errors[1] / errors[2]) >= 1.9);
}

TEST_CASE("restriction errors") {
  const Field f = Field::zeros({3, 3, 3}, {1, 1, 1}, 1);
  try {
    restrict_to_slice(f, make_chart(Hyperplane({0, 0, 1}, 2.0)), {4, 4});
    FAIL("restricted to a plane that misses the box");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::empty_slice);
  }
  try {
    restrict_to_slice(f, make_chart(Hyperplane::from_coefficients({1, 1, 1}, 1.5)), {4, 4});
    FAIL("restricted a hexagonal section");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::out_of_domain);
  }
}

}  // TEST_SUITE
