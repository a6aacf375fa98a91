#include "nsslice/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nsslice/error.hpp"

namespace nsslice {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(v))
    fail(ErrorCode::config_error, "config: '" + key + "' expects a finite number, got '" + text + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

}  // namespace

const std::vector<ConfigKey>& Config::registry() {
  static const std::vector<ConfigKey> keys = {
      {"seed", "0", "64-bit seed for every randomized choice"},
      {"out", "out", "output directory"},
      {"plane.normal", "", "plane normal a (three numbers); empty uses chart.alpha1/2"},
      {"plane.offset", "0", "plane offset b in <a, x> = b"},
      {"chart.alpha1", "0", "first renamed coefficient when no plane is given"},
      {"chart.alpha2", "0", "second renamed coefficient when no plane is given"},
      {"chart.tolerance", "1e-8", "smallest accepted nonzero |alpha|"},
      {"chart.coupling", "0.5", "factor k in D3 = -k (D1/alpha1 + D2/alpha2)"},
      {"project.input", "", "3D NSF1 field to restrict"},
      {"project.forcing", "", "optional 3D time-series index to restrict"},
      {"project.dims", "33,33", "slice grid size"},
      {"project.encoding", "binary", "binary or text"},
      {"solve.u0", "", "2D three-component NSF1 initial field"},
      {"solve.forcing", "", "2D time-series index with the forcing"},
      {"solve.init", "mode", "initial data without solve.u0: zero, mode or random"},
      {"solve.amplitude", "1", "L2 norm of generated initial data"},
      {"solve.extents", "1,1", "rectangle size without solve.u0"},
      {"solve.modes", "8,8", "sine modes per axis"},
      {"solve.random_forcing", "0", "L2 size of a seeded smooth forcing (0: none)"},
      {"solve.nu", "0.1", "viscosity"},
      {"solve.dt", "1e-3", "time step"},
      {"solve.T", "0.5", "final time"},
      {"solve.nonlinear", "true", "include the convective term"},
      {"solve.quadrature", "0", "Gauss points per axis (0: automatic)"},
      {"solve.frame_every", "50", "write a frame every this many steps (0: first and last only)"},
      {"solve.frame_dims", "33,33", "grid of written frames"},
      {"uniqueness.delta", "1e-8", "initial perturbation size"},
      {"uniqueness.direction", "mode", "perturbation direction: mode or random"},
      {"uniqueness.corrupt", "0", "jump added to the second run at mid time"},
      {"uniqueness.identity_tol", "1e-2", "relative tolerance of the difference identity"},
      {"quadform.input", "", "3D field or time-series index"},
      {"quadform.weight", "", "optional 3D field w for the signed integral"},
      {"quadform.nu", "1", "viscosity in the criterion"},
      {"quadform.c_gn", "1", "interpolation constant c"},
      {"quadform.pivot_tol", "1e-8", "relative pivot tolerance"},
      {"quadform.write_fields", "false", "write b1, b2, b3 as NSF1 fields"},
      {"quadform.require_criterion", "false", "fail unless the criterion holds"},
      {"stratify.input", "", "field or time-series index"},
      {"stratify.eps", "0", "mask threshold |w| > eps"},
      {"stratify.nslices", "0", "slabs per direction (0: one projected voxel thick)"},
      {"stratify.directions", "", "extra directions, e.g. 1,1,0;0,1,1"},
      {"stratify.area_tol", "-1", "slice-area threshold (< 0: four voxel faces)"},
      {"stratify.interval_slabs", "2", "interval threshold in slabs"},
      {"mms.modes", "8,16", "resolutions of the spatial study"},
      {"mms.extents", "1,1", "rectangle size"},
      {"mms.nu", "0.1", "viscosity"},
      {"mms.T", "0.5", "final time"},
      {"mms.dt", "1e-3", "time step of the spatial study"},
      {"mms.power", "7", "exponent p in sin^p"},
      {"mms.min_ratio", "10", "required error ratio between successive resolutions"},
      {"mms.temporal", "true", "run the time-step halving study"},
      {"mms.temporal_modes", "16", "resolution of the temporal study"},
      {"mms.temporal_dt", "2.5e-3", "largest step of the temporal study"},
      {"mms.min_order", "3.8", "required temporal order"},
  };
  return keys;
}

Config::Config() {
  for (const auto& k : registry()) values_[k.key] = k.default_value;
}

void Config::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::io_failure, "config: cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.find('=') == std::string::npos)
      fail(ErrorCode::config_error, "config: line " + std::to_string(lineno) + " is not key=value");
    assign(t);
  }
}

void Config::assign(const std::string& assignment) {
  const auto pos = assignment.find('=');
  if (pos == std::string::npos) fail(ErrorCode::config_error, "config: expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, pos)), trim(assignment.substr(pos + 1)));
}

void Config::set(const std::string& key, const std::string& value) {
  if (!values_.count(key)) fail(ErrorCode::config_error, "config: unknown key '" + key + "'");
  values_[key] = value;
}

bool Config::has(const std::string& key) const { return !str(key).empty(); }

const std::string& Config::str(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) fail(ErrorCode::config_error, "config: unknown key '" + key + "'");
  return it->second;
}

double Config::number(const std::string& key) const { return parse_number(key, str(key)); }

double Config::positive(const std::string& key) const {
  const double v = number(key);
  if (!(v > 0.0)) fail(ErrorCode::config_error, "config: '" + key + "' must be positive");
  return v;
}

double Config::nonnegative(const std::string& key) const {
  const double v = number(key);
  if (v < 0.0) fail(ErrorCode::config_error, "config: '" + key + "' must be >= 0");
  return v;
}

std::size_t Config::count(const std::string& key) const {
  const double v = nonnegative(key);
  if (v != std::floor(v)) fail(ErrorCode::config_error, "config: '" + key + "' must be an integer");
  return std::size_t(v);
}

bool Config::flag(const std::string& key) const {
  const std::string& v = str(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(ErrorCode::config_error, "config: '" + key + "' expects true or false");
}

std::uint64_t Config::seed() const {
  const std::string t = trim(str("seed"));
  std::uint64_t v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    fail(ErrorCode::config_error, "config: seed must be a non-negative 64-bit integer");
  return v;
}

std::vector<double> Config::numbers(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split(str(key), ',')) out.push_back(parse_number(key, item));
  return out;
}

std::vector<std::vector<double>> Config::vectors(const std::string& key) const {
  std::vector<std::vector<double>> out;
  for (const auto& group : split(str(key), ';')) {
    std::vector<double> v;
    for (const auto& item : split(group, ',')) v.push_back(parse_number(key, item));
    out.push_back(v);
  }
  return out;
}

}  // namespace nsslice
