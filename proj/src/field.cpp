#include "nsslice/field.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <system_error>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>
#include <string>

#include <json.hpp>

#include "nsslice/error.hpp"

namespace nsslice {
namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

bool parse_double(std::string_view tok, double& out) {
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

bool parse_size(std::string_view tok, std::size_t& out) {
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  return {std::istream_iterator<std::string>(is), std::istream_iterator<std::string>()};
}

std::uint64_t byteswap64(std::uint64_t v) {
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
  return r;
}

}  // namespace

Field::Field(std::vector<std::size_t> dims, std::vector<double> extents, std::size_t ncomp,
             std::vector<double> data)
    : dims_(std::move(dims)), extents_(std::move(extents)), ncomp_(ncomp), data_(std::move(data)) {
  require(dims_.size() == 2 || dims_.size() == 3, ErrorCode::invalid_argument,
          "field: ndims must be 2 or 3");
  require(extents_.size() == dims_.size(), ErrorCode::invalid_argument,
          "field: one extent per axis required");
  require(ncomp_ == 1 || ncomp_ == 3, ErrorCode::invalid_argument,
          "field: component count must be 1 or 3");
  npoints_ = 1;
  for (std::size_t a = 0; a < dims_.size(); ++a) {
    require(dims_[a] >= 2, ErrorCode::invalid_argument, "field: every dim must be >= 2");
    require(std::isfinite(extents_[a]) && extents_[a] > 0.0, ErrorCode::invalid_argument,
            "field: extents must be positive");
    npoints_ *= dims_[a];
  }
  require(data_.size() == ncomp_ * npoints_, ErrorCode::invalid_argument,
          "field: data length does not match ncomp * prod(dims)");
  require(std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); }),
          ErrorCode::non_finite_sample, "field: non-finite sample");
}

Field Field::zeros(std::vector<std::size_t> dims, std::vector<double> extents, std::size_t ncomp) {
  std::size_t n = ncomp;
  for (auto d : dims) n *= d;
  return Field(std::move(dims), std::move(extents), ncomp, std::vector<double>(n, 0.0));
}

Field Field::sample(std::vector<std::size_t> dims, std::vector<double> extents,
                    std::size_t ncomp, const SampleFn& fn) {
  Field f = zeros(dims, extents, ncomp);
  std::vector<double> x(f.ndims());
  std::vector<double> vals(ncomp);
  for (std::size_t p = 0; p < f.npoints_; ++p) {
    const auto idx = f.unflatten(p);
    for (std::size_t a = 0; a < f.ndims(); ++a) x[a] = f.coord(a, idx[a]);
    fn(x, vals);
    for (std::size_t c = 0; c < ncomp; ++c) {
      require(std::isfinite(vals[c]), ErrorCode::non_finite_sample, "field: non-finite sample");
      f.data_[c * f.npoints_ + p] = vals[c];
    }
  }
  return f;
}

std::array<std::size_t, 3> Field::unflatten(std::size_t point) const {
  std::array<std::size_t, 3> idx{0, 0, 0};
  for (std::size_t a = 0; a < dims_.size(); ++a) {
    idx[a] = point % dims_[a];
    point /= dims_[a];
  }
  return idx;
}

void Field::interpolate(std::span<const double> x, std::span<double> out) const {
  const std::size_t nd = ndims();
  std::array<std::size_t, 3> cell{0, 0, 0};
  std::array<double, 3> frac{0, 0, 0};
  for (std::size_t a = 0; a < nd; ++a) {
    const double slack = 1e-12 * extents_[a];
    if (!(x[a] >= -slack && x[a] <= extents_[a] + slack))
      fail(ErrorCode::out_of_domain, "interpolate: point outside field domain");
    const double s = std::clamp(x[a], 0.0, extents_[a]) / spacing(a);
    std::size_t i = static_cast<std::size_t>(std::floor(s));
    i = std::min(i, dims_[a] - 2);
    cell[a] = i;
    frac[a] = s - double(i);
  }
  const std::size_t corners = std::size_t{1} << nd;
  for (std::size_t c = 0; c < ncomp_; ++c) {
    double acc = 0.0;
    for (std::size_t corner = 0; corner < corners; ++corner) {
      double w = 1.0;
      std::size_t flat = 0;
      std::size_t stride = 1;
      for (std::size_t a = 0; a < nd; ++a) {
        const bool up = (corner >> a) & 1u;
        w *= up ? frac[a] : 1.0 - frac[a];
        flat += (cell[a] + (up ? 1 : 0)) * stride;
        stride *= dims_[a];
      }
      acc += w * data_[c * npoints_ + flat];
    }
    out[c] = acc;
  }
}

TimeSeriesField::TimeSeriesField(std::vector<double> times, std::vector<Field> frames)
    : times_(std::move(times)), frames_(std::move(frames)) {
  require(!frames_.empty() && times_.size() == frames_.size(), ErrorCode::invalid_argument,
          "time series: need one time per frame and at least one frame");
  for (std::size_t i = 0; i < times_.size(); ++i) {
    require(std::isfinite(times_[i]), ErrorCode::invalid_argument, "time series: non-finite time");
    if (i > 0) {
      require(times_[i] > times_[i - 1], ErrorCode::invalid_argument,
              "time series: times must be strictly increasing");
      require(frames_[i].same_shape(frames_[0]), ErrorCode::invalid_argument,
              "time series: frames must share one shape");
    }
  }
}

Field read_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::io_failure, "read_field: cannot open " + path.string());

  std::string header;
  std::string mode;
  if (!std::getline(in, header) || !std::getline(in, mode))
    fail(ErrorCode::malformed_header, "read_field: missing header lines in " + path.string());
  const auto tok = split_ws(header);
  auto bad = [&](const std::string& why) {
    fail(ErrorCode::malformed_header, "read_field: " + why + " in " + path.string());
  };
  if (tok.size() < 2 || tok[0] != "NSF1") bad("missing NSF1 magic");
  std::size_t nd = 0;
  if (!parse_size(tok[1], nd) || (nd != 2 && nd != 3)) bad("ndims must be 2 or 3");
  if (tok.size() != 2 + nd + 1 + nd) bad("wrong header token count");
  std::vector<std::size_t> dims(nd);
  std::vector<double> ext(nd);
  std::size_t ncomp = 0;
  for (std::size_t a = 0; a < nd; ++a)
    if (!parse_size(tok[2 + a], dims[a]) || dims[a] < 2) bad("invalid dim");
  if (!parse_size(tok[2 + nd], ncomp) || (ncomp != 1 && ncomp != 3)) bad("invalid ncomp");
  for (std::size_t a = 0; a < nd; ++a)
    if (!parse_double(tok[3 + nd + a], ext[a]) || !(ext[a] > 0.0) || !std::isfinite(ext[a]))
      bad("invalid extent");

  std::size_t count = ncomp;
  for (auto d : dims) count *= d;
  std::vector<double> data(count);

  const auto mode_tok = split_ws(mode);
  if (mode_tok.size() != 1) bad("missing payload encoding");
  if (mode_tok[0] == "binary") {
    in.read(reinterpret_cast<char*>(data.data()), std::streamsize(count * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double))
      fail(ErrorCode::truncated_payload, "read_field: truncated binary payload in " + path.string());
    if (in.peek() != std::char_traits<char>::eof())
      fail(ErrorCode::malformed_header, "read_field: trailing bytes after payload in " + path.string());
    if constexpr (std::endian::native == std::endian::big) {
      for (double& v : data) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        bits = byteswap64(bits);
        std::memcpy(&v, &bits, 8);
      }
    }
  } else if (mode_tok[0] == "text") {
    std::string t;
    std::size_t n = 0;
    while (in >> t) {
      if (n == count)
        fail(ErrorCode::malformed_header, "read_field: extra values after payload in " + path.string());
      double v = 0.0;
      if (t == "nan" || t == "-nan" || t == "inf" || t == "-inf" || t == "NaN" || t == "Inf")
        fail(ErrorCode::non_finite_sample, "read_field: non-finite sample in " + path.string());
      if (!parse_double(t, v))
        fail(ErrorCode::malformed_header, "read_field: unparsable value '" + t + "'");
      data[n++] = v;
    }
    if (n != count)
      fail(ErrorCode::truncated_payload, "read_field: expected " + std::to_string(count) +
                                             " values, found " + std::to_string(n));
  } else {
    bad("unknown payload encoding '" + mode_tok[0] + "'");
  }
  for (double v : data)
    if (!std::isfinite(v))
      fail(ErrorCode::non_finite_sample, "read_field: non-finite sample in " + path.string());
  return Field(std::move(dims), std::move(ext), ncomp, std::move(data));
}

void write_field(const Field& field, const std::filesystem::path& path, Encoding encoding) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::io_failure, "write_field: cannot open " + path.string());
  out << "NSF1 " << field.ndims();
  for (auto d : field.dims()) out << ' ' << d;
  out << ' ' << field.ncomp();
  for (double e : field.extents()) out << ' ' << format_double(e);
  out << '\n';
  if (encoding == Encoding::binary) {
    out << "binary\n";
    for (double v : field.data()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      if constexpr (std::endian::native == std::endian::big) bits = byteswap64(bits);
      out.write(reinterpret_cast<const char*>(&bits), 8);
    }
  } else {
    out << "text\n";
    for (double v : field.data()) out << format_double(v) << '\n';
  }
  require(static_cast<bool>(out), ErrorCode::io_failure, "write_field: write failed for " + path.string());
}

TimeSeriesField read_time_series(const std::filesystem::path& index_path) {
  std::ifstream in(index_path);
  require(static_cast<bool>(in), ErrorCode::io_failure,
          "read_time_series: cannot open " + index_path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::malformed_header, std::string("read_time_series: ") + e.what());
  }
  if (!j.contains("times") || !j.contains("frames") || !j["times"].is_array() ||
      !j["frames"].is_array() || j["times"].size() != j["frames"].size())
    fail(ErrorCode::malformed_header, "read_time_series: index needs equal-length times/frames");
  std::vector<double> times;
  std::vector<Field> frames;
  const auto base = index_path.parent_path();
  for (std::size_t i = 0; i < j["times"].size(); ++i) {
    times.push_back(j["times"][i].get<double>());
    frames.push_back(read_field(base / j["frames"][i].get<std::string>()));
  }
  return TimeSeriesField(std::move(times), std::move(frames));
}

void write_time_series(const TimeSeriesField& series, const std::filesystem::path& index_path,
                       Encoding encoding) {
  const auto base = index_path.parent_path();
  const auto stem = index_path.stem().string();
  if (!base.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(base, ec);
    require(!ec, ErrorCode::io_failure, "write_time_series: cannot create " + base.string());
  }
  nlohmann::json j;
  j["times"] = series.times();
  j["frames"] = nlohmann::json::array();
  for (std::size_t i = 0; i < series.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "_%05zu.nsf", i);
    const std::string file = stem + name;
    write_field(series.frames()[i], base / file, encoding);
    j["frames"].push_back(file);
  }
  std::ofstream out(index_path, std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::io_failure,
          "write_time_series: cannot open " + index_path.string());
  out << j.dump(2) << '\n';
}

Field restrict_to_slice(const Field& field3d, const SliceChart& chart,
                        std::array<std::size_t, 2> slice_dims, Point2* origin) {
  require(field3d.ndims() == 3, ErrorCode::invalid_argument, "restrict_to_slice: field must be 3D");
  require(slice_dims[0] >= 2 && slice_dims[1] >= 2, ErrorCode::invalid_argument,
          "restrict_to_slice: slice dims must be >= 2");
  const auto& e = field3d.extents();
  const Box3 box = Box3::with_extents({e[0], e[1], e[2]});
  const SliceDomain dom = slice_domain(box, chart);
  require(!dom.empty(), ErrorCode::empty_slice, "restrict_to_slice: plane misses the field domain");

  const double lp = dom.hi.p - dom.lo.p;
  const double lq = dom.hi.q - dom.lo.q;
  require(lp > 0.0 && lq > 0.0, ErrorCode::empty_slice, "restrict_to_slice: degenerate cross-section");
  if (origin != nullptr) *origin = dom.lo;

  const std::size_t nc = field3d.ncomp();
  std::vector<double> data(nc * slice_dims[0] * slice_dims[1]);
  const std::size_t np = slice_dims[0] * slice_dims[1];
  std::array<double, 3> vals{};
  for (std::size_t j = 0; j < slice_dims[1]; ++j) {
    for (std::size_t i = 0; i < slice_dims[0]; ++i) {
      const double p = dom.lo.p + lp * double(i) / double(slice_dims[0] - 1);
      const double q = dom.lo.q + lq * double(j) / double(slice_dims[1] - 1);
      const Vec3 x = chart.lift(p, q);
      if (!box.contains(x, 1e-12 * std::max({e[0], e[1], e[2]})))
        fail(ErrorCode::out_of_domain,
             "restrict_to_slice: slice grid point lifts outside the 3D box "
             "(cross-section is not a full rectangle)");
      field3d.interpolate(x, std::span<double>(vals.data(), nc));
      for (std::size_t c = 0; c < nc; ++c) data[c * np + i + slice_dims[0] * j] = vals[c];
    }
  }
  return Field({slice_dims[0], slice_dims[1]}, {lp, lq}, nc, std::move(data));
}

TimeSeriesField restrict_to_slice(const TimeSeriesField& series3d, const SliceChart& chart,
                                  std::array<std::size_t, 2> slice_dims) {
  std::vector<Field> frames;
  frames.reserve(series3d.size());
  for (const Field& f : series3d.frames()) frames.push_back(restrict_to_slice(f, chart, slice_dims));
  return TimeSeriesField(series3d.times(), std::move(frames));
}

}  // namespace nsslice
