#include "nsslice/stratify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "nsslice/error.hpp"

namespace nsslice {
namespace {

constexpr double kRel = 1e-9;

// Order-independent sum and product, so permuted inputs give identical bits.
double sorted_sum(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

double sorted_product(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double p = 1.0;
  for (double x : v) p *= x;
  return p;
}

void validate(const IndicatorGrid& g) {
  require(g.dims.size() >= 2 && g.dims.size() <= 4 && g.extents.size() == g.dims.size(), ErrorCode::invalid_argument,
          "stratify: mask must have 2 to 4 axes");
  std::size_t total = 1;
  for (std::size_t a = 0; a < g.dims.size(); ++a) {
    require(g.dims[a] >= 2 && g.extents[a] > 0.0, ErrorCode::invalid_argument,
            "stratify: dims >= 2 and positive extents required");
    total *= g.dims[a];
  }
  require(g.mask.size() == total, ErrorCode::invalid_argument, "stratify: mask size mismatch");
}

std::vector<double> normalized(const std::vector<double>& d, std::size_t n) {
  require(d.size() == n, ErrorCode::invalid_argument, "stratify: direction length must match mask axes");
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = d[i] * d[i];
  const double norm = std::sqrt(sorted_sum(sq));
  require(norm > 0.0 && std::isfinite(norm), ErrorCode::invalid_argument, "stratify: zero direction");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = d[i] / norm;
  return out;
}

}  // namespace

double IndicatorGrid::voxel_volume() const {
  std::vector<double> h(dims.size());
  for (std::size_t a = 0; a < dims.size(); ++a) h[a] = spacing(a);
  return sorted_product(h);
}

std::size_t IndicatorGrid::count() const {
  return std::size_t(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

IndicatorGrid mask_from_field(const Field& w, double eps) {
  require(eps >= 0.0, ErrorCode::invalid_argument, "mask_from_field: eps must be >= 0");
  IndicatorGrid g{w.dims(), w.extents(), std::vector<std::uint8_t>(w.npoints()), eps};
  for (std::size_t p = 0; p < w.npoints(); ++p) {
    double s = 0.0;
    for (std::size_t c = 0; c < w.ncomp(); ++c) s += w.value(c, p) * w.value(c, p);
    g.mask[p] = std::sqrt(s) > eps ? 1 : 0;
  }
  return g;
}

IndicatorGrid mask_from_series(const TimeSeriesField& w, double eps) {
  require(w.size() >= 2, ErrorCode::invalid_argument, "mask_from_series: need at least two frames");
  const auto& t = w.times();
  const double mean_dt = (t.back() - t.front()) / double(t.size() - 1);
  IndicatorGrid g;
  g.eps = eps;
  g.dims = w.frames().front().dims();
  g.extents = w.frames().front().extents();
  g.dims.push_back(w.size());
  g.extents.push_back(mean_dt * double(w.size()));
  for (const Field& f : w.frames()) {
    const IndicatorGrid m = mask_from_field(f, eps);
    g.mask.insert(g.mask.end(), m.mask.begin(), m.mask.end());
  }
  validate(g);
  return g;
}

IndicatorGrid mask_from_predicate(std::vector<std::size_t> dims, std::vector<double> extents,
                                  const std::function<bool(std::span<const double>)>& pred) {
  IndicatorGrid g{std::move(dims), std::move(extents), {}, 0.0};
  std::size_t total = 1;
  for (auto d : g.dims) total *= d;
  g.mask.resize(total);
  validate(g);
  std::vector<double> x(g.ndims());
  for (std::size_t p = 0; p < total; ++p) {
    std::size_t rest = p;
    for (std::size_t a = 0; a < g.ndims(); ++a) {
      x[a] = (double(rest % g.dims[a]) + 0.5) * g.spacing(a);
      rest /= g.dims[a];
    }
    g.mask[p] = pred(x) ? 1 : 0;
  }
  return g;
}

SliceProfile slice_measures(const IndicatorGrid& mask, const std::vector<double>& direction, std::size_t nslices) {
  validate(mask);
  const std::size_t n = mask.ndims();
  SliceProfile prof;
  prof.direction = normalized(direction, n);
  const auto& d = prof.direction;

  std::vector<double> lo(n), hi(n), half(n), h(n);
  for (std::size_t a = 0; a < n; ++a) {
    h[a] = mask.spacing(a);
    lo[a] = std::min(0.0, d[a] * mask.extents[a]);
    hi[a] = std::max(0.0, d[a] * mask.extents[a]);
    half[a] = 0.5 * std::abs(d[a]) * h[a];
  }
  prof.beta_min = sorted_sum(lo);
  prof.beta_max = sorted_sum(hi);
  const double r = sorted_sum(half);
  const double range = prof.beta_max - prof.beta_min;
  if (nslices == 0) nslices = std::max<std::size_t>(2, std::size_t(std::llround(range / (2.0 * r))));
  require(nslices >= 2, ErrorCode::invalid_argument, "slice_measures: nslices must be >= 2");
  prof.dbeta = range / double(nslices);
  prof.offsets.resize(nslices);
  for (std::size_t k = 0; k < nslices; ++k) prof.offsets[k] = prof.beta_min + (double(k) + 0.5) * prof.dbeta;

  const double vol = mask.voxel_volume();
  std::vector<std::vector<double>> parts(nslices);
  std::vector<double> terms(n);
  std::vector<std::size_t> idx(n, 0);
  for (std::size_t p = 0; p < mask.mask.size(); ++p) {
    if (mask.mask[p]) {
      for (std::size_t a = 0; a < n; ++a) terms[a] = d[a] * (double(idx[a]) + 0.5) * h[a];
      const double c = sorted_sum(terms);
      const double a0 = c - r, a1 = c + r;
      const auto k0 = std::size_t(std::clamp(std::floor((a0 - prof.beta_min) / prof.dbeta), 0.0, double(nslices - 1)));
      const auto k1 = std::size_t(std::clamp(std::floor((a1 - prof.beta_min) / prof.dbeta), 0.0, double(nslices - 1)));
      for (std::size_t k = k0; k <= k1; ++k) {
        const double s0 = prof.beta_min + double(k) * prof.dbeta;
        const double s1 = k + 1 == nslices ? prof.beta_max : s0 + prof.dbeta;
        const double overlap = std::min(a1, s1) - std::max(a0, s0);
        if (overlap > 0.0) parts[k].push_back(vol * overlap / (2.0 * r));
      }
    }
    for (std::size_t a = 0; a < n; ++a) {
      if (++idx[a] < mask.dims[a]) break;
      idx[a] = 0;
    }
  }
  prof.areas.resize(nslices);
  for (std::size_t k = 0; k < nslices; ++k) prof.areas[k] = sorted_sum(std::move(parts[k])) / prof.dbeta;
  return prof;
}

StratificationVerdict stratification_verdict(const IndicatorGrid& mask, const std::vector<std::vector<double>>& extra,
                                             const StratifyOptions& options) {
  validate(mask);
  const std::size_t n = mask.ndims();
  StratificationVerdict v;
  const double vol = mask.voxel_volume();
  double largest_face = 0.0;
  for (std::size_t a = 0; a < n; ++a) largest_face = std::max(largest_face, vol / mask.spacing(a));
  v.area_tol = options.area_tol >= 0.0 ? options.area_tol : 4.0 * largest_face;
  require(options.interval_slabs > 0.0, ErrorCode::invalid_argument, "stratify: interval threshold must be positive");
  v.volume = mask.volume();
  v.volume_tol = std::numeric_limits<double>::infinity();

  std::vector<std::pair<std::vector<double>, bool>> dirs;
  for (std::size_t a = 0; a < n; ++a) {
    std::vector<double> e(n, 0.0);
    e[a] = 1.0;
    dirs.emplace_back(e, true);
  }
  for (const auto& d : extra) dirs.emplace_back(d, false);
  require(!dirs.empty(), ErrorCode::invalid_argument, "stratify: need at least one direction");

  for (const auto& [dir, axis] : dirs) {
    DirectionVerdict dv;
    dv.canonical_axis = axis;
    dv.profile = slice_measures(mask, dir, options.nslices);
    const auto& areas = dv.profile.areas;
    const double db = dv.profile.dbeta;
    dv.interval_tol = options.interval_slabs * db;
    const auto need = std::size_t(std::ceil(options.interval_slabs - kRel));
    std::size_t run = 0;
    for (std::size_t k = 0; k < areas.size(); ++k) {
      run = areas[k] >= v.area_tol * (1.0 - kRel) ? run + 1 : 0;
      if (run > dv.best_run) {
        dv.best_run = run;
        dv.best_hi = dv.profile.beta_min + double(k + 1) * db;
        dv.best_lo = dv.best_hi - double(run) * db;
      }
    }
    dv.positive = dv.best_run >= std::max<std::size_t>(need, 1);
    if (axis) v.volume_tol = std::min(v.volume_tol, v.area_tol * dv.interval_tol);

    // A positive run carries at least area_tol * interval_tol of volume.
    if (dv.positive && v.volume < v.area_tol * double(dv.best_run) * db * (1.0 - 1e-6))
      fail(ErrorCode::inconsistency, "stratify: positive verdict with insufficient voxel volume");
    v.positive = v.positive || dv.positive;
    if (axis) v.axis_positive = v.axis_positive || dv.positive;
    v.directions.push_back(std::move(dv));
  }
  v.oracle_positive = v.volume >= v.volume_tol * (1.0 - kRel);

  // Negative on every axis: among any `need` consecutive slabs one is below
  // area_tol, which caps the volume a negative mask can hold.
  if (!v.axis_positive && v.volume > 0.0) {
    for (const auto& dv : v.directions) {
      if (!dv.canonical_axis) continue;
      std::vector<std::uint8_t> full(mask.mask.size(), 1);
      IndicatorGrid box{mask.dims, mask.extents, std::move(full), 0.0};
      const SliceProfile cap = slice_measures(box, dv.profile.direction, dv.profile.areas.size());
      const auto need = std::max<std::size_t>(1, std::size_t(std::ceil(options.interval_slabs - kRel)));
      double bound = 0.0;
      for (std::size_t k0 = 0; k0 < cap.areas.size(); k0 += need) {
        const std::size_t k1 = std::min(cap.areas.size(), k0 + need);
        double loss = std::numeric_limits<double>::infinity();
        for (std::size_t k = k0; k < k1; ++k) {
          bound += cap.areas[k] * cap.dbeta;
          loss = std::min(loss, std::max(cap.areas[k] - v.area_tol, 0.0) * cap.dbeta);
        }
        if (k1 - k0 == need) bound -= loss;
      }
      if (v.volume > bound * (1.0 + 1e-6))
        fail(ErrorCode::inconsistency, "stratify: negative verdict although the voxel volume exceeds the bound");
    }
  }
  return v;
}

}  // namespace nsslice
