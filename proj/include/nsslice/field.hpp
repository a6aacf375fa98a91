#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "nsslice/geometry.hpp"

namespace nsslice {

// Structured-grid samples on [0, extents[0]] x ... with nodes at
// i * extents[a] / (dims[a] - 1), boundary nodes included. Storage is
// component-major, then x-fastest.
class Field {
 public:
  Field(std::vector<std::size_t> dims, std::vector<double> extents, std::size_t ncomp,
        std::vector<double> data);

  static Field zeros(std::vector<std::size_t> dims, std::vector<double> extents,
                     std::size_t ncomp);

  // fn(coords, values) fills `ncomp` values at the node with physical
  // coordinates `coords` (length ndims).
  using SampleFn = std::function<void(std::span<const double>, std::span<double>)>;
  static Field sample(std::vector<std::size_t> dims, std::vector<double> extents,
                      std::size_t ncomp, const SampleFn& fn);

  std::size_t ndims() const noexcept { return dims_.size(); }
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  const std::vector<double>& extents() const noexcept { return extents_; }
  std::size_t ncomp() const noexcept { return ncomp_; }
  std::size_t npoints() const noexcept { return npoints_; }
  double spacing(std::size_t axis) const { return extents_[axis] / double(dims_[axis] - 1); }
  double coord(std::size_t axis, std::size_t i) const { return double(i) * spacing(axis); }

  std::span<const double> data() const noexcept { return data_; }
  std::span<const double> component(std::size_t c) const {
    return std::span<const double>(data_).subspan(c * npoints_, npoints_);
  }
  double value(std::size_t c, std::size_t point) const { return data_[c * npoints_ + point]; }

  std::size_t index(std::size_t i, std::size_t j) const { return i + dims_[0] * j; }
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return i + dims_[0] * (j + dims_[1] * k);
  }
  // Multi-index of a flat point index.
  std::array<std::size_t, 3> unflatten(std::size_t point) const;

  bool same_shape(const Field& other) const noexcept {
    return dims_ == other.dims_ && extents_ == other.extents_ && ncomp_ == other.ncomp_;
  }

  // Multilinear interpolation at physical coordinates `x` (length ndims);
  // throws out_of_domain outside the grid (with relative slack 1e-12).
  void interpolate(std::span<const double> x, std::span<double> out) const;

  friend bool operator==(const Field&, const Field&) = default;

 private:
  std::vector<std::size_t> dims_;
  std::vector<double> extents_;
  std::size_t ncomp_ = 0;
  std::size_t npoints_ = 0;
  std::vector<double> data_;
};

class TimeSeriesField {
 public:
  TimeSeriesField(std::vector<double> times, std::vector<Field> frames);

  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<Field>& frames() const noexcept { return frames_; }
  std::size_t size() const noexcept { return frames_.size(); }

 private:
  std::vector<double> times_;
  std::vector<Field> frames_;
};

enum class Encoding { binary, text };

Field read_field(const std::filesystem::path& path);
void write_field(const Field& field, const std::filesystem::path& path,
                 Encoding encoding = Encoding::binary);

// A time series is stored as one NSF1 file per frame plus a JSON index
// {"times": [...], "frames": ["<file>", ...]} with paths relative to the index.
TimeSeriesField read_time_series(const std::filesystem::path& index_path);
void write_time_series(const TimeSeriesField& series, const std::filesystem::path& index_path,
                       Encoding encoding = Encoding::binary);

// Samples a 3D field on a slice_dims grid spanning the bounding box of the
// chart's cross-section of [0, extents]. The result is in local coordinates
// relative to the bounding-box lower corner (returned through `origin`).
Field restrict_to_slice(const Field& field3d, const SliceChart& chart,
                        std::array<std::size_t, 2> slice_dims, Point2* origin = nullptr);

TimeSeriesField restrict_to_slice(const TimeSeriesField& series3d, const SliceChart& chart,
                                  std::array<std::size_t, 2> slice_dims);

}  // namespace nsslice
