#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "nsslice/field.hpp"

namespace nsslice {

// Cell-centered voxel mask on [0, extents] with voxel size extents / dims.
struct IndicatorGrid {
  std::vector<std::size_t> dims;
  std::vector<double> extents;
  std::vector<std::uint8_t> mask;  // x-fastest
  double eps = 0.0;

  std::size_t ndims() const noexcept { return dims.size(); }
  double spacing(std::size_t a) const { return extents[a] / double(dims[a]); }
  double voxel_volume() const;
  std::size_t count() const;
  double volume() const { return double(count()) * voxel_volume(); }
};

// |w| > eps with the Euclidean norm over components, one voxel per sample.
IndicatorGrid mask_from_field(const Field& w, double eps);
// Time becomes the last axis, with extent nframes * mean frame spacing.
IndicatorGrid mask_from_series(const TimeSeriesField& w, double eps);
// Voxel is set when pred(center) holds.
IndicatorGrid mask_from_predicate(std::vector<std::size_t> dims, std::vector<double> extents,
                                  const std::function<bool(std::span<const double>)>& pred);

struct SliceProfile {
  std::vector<double> direction;
  double beta_min = 0.0;
  double beta_max = 0.0;
  double dbeta = 0.0;
  std::vector<double> offsets;  // slab centers
  std::vector<double> areas;    // slab mass / dbeta
};

// Each voxel's volume is spread uniformly over its projection interval on
// `direction`; nslices = 0 picks slabs as thick as one projected voxel.
SliceProfile slice_measures(const IndicatorGrid& mask, const std::vector<double>& direction, std::size_t nslices = 0);

struct StratifyOptions {
  std::size_t nslices = 0;
  double area_tol = -1.0;      // < 0: four of the largest voxel faces
  double interval_slabs = 2.0; // interval threshold in slab thicknesses
};

struct DirectionVerdict {
  SliceProfile profile;
  bool canonical_axis = false;
  bool positive = false;
  double interval_tol = 0.0;
  std::size_t best_run = 0;  // longest run of slabs with area >= area_tol
  double best_lo = 0.0;
  double best_hi = 0.0;
};

struct StratificationVerdict {
  std::vector<DirectionVerdict> directions;
  double area_tol = 0.0;
  double volume = 0.0;
  double volume_tol = 0.0;  // min over canonical axes of area_tol * interval_tol
  bool positive = false;       // some direction
  bool axis_positive = false;  // some canonical axis
  bool oracle_positive = false;  // volume >= volume_tol
};

// Canonical axes are always tested first, followed by `extra` directions.
// Throws inconsistency when a verdict contradicts the voxel volume.
StratificationVerdict stratification_verdict(const IndicatorGrid& mask, const std::vector<std::vector<double>>& extra,
                                             const StratifyOptions& options = {});

}  // namespace nsslice
