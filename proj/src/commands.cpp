#include "nsslice/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsslice/analysis.hpp"
#include "nsslice/error.hpp"
#include "nsslice/field.hpp"
#include "nsslice/galerkin.hpp"
#include "nsslice/geometry.hpp"
#include "nsslice/log.hpp"
#include "nsslice/manufactured.hpp"
#include "nsslice/quadform.hpp"
#include "nsslice/stratify.hpp"

namespace nsslice {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using Eigen::VectorXd;

template <class... Args>
std::string cat(const Args&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

fs::path out_dir(const Config& cfg) {
  const fs::path dir = cfg.str("out");
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorCode::io_failure, "cannot create output directory " + dir.string());
  return dir;
}

void write_json(const fs::path& path, json j) {
  j["generated_at"] = timestamp();
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::io_failure, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  require(static_cast<bool>(out), ErrorCode::io_failure, "write failed: " + path.string());
  log::info("wrote " + path.string());
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::io_failure, "cannot write " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << num(row[i]);
    out << '\n';
  }
  require(static_cast<bool>(out), ErrorCode::io_failure, "write failed: " + path.string());
  log::info("wrote " + path.string());
}

json config_json(const Config& cfg) {
  json j = json::object();
  for (const auto& [k, v] : cfg.entries())
    if (k != "out") j[k] = v;
  return j;
}

std::vector<std::size_t> integers(const Config& cfg, const std::string& key, std::size_t expected,
                                  std::size_t min_value) {
  std::vector<std::size_t> out;
  for (double v : cfg.numbers(key)) {
    if (v != std::floor(v) || v < double(min_value))
      fail(ErrorCode::config_error, "config: '" + key + "' expects integers >= " + std::to_string(min_value));
    out.push_back(std::size_t(v));
  }
  if (expected > 0 && out.size() != expected)
    fail(ErrorCode::config_error, "config: '" + key + "' expects " + std::to_string(expected) + " values");
  if (out.empty()) fail(ErrorCode::config_error, "config: '" + key + "' is empty");
  return out;
}

std::array<double, 2> positive_pair(const Config& cfg, const std::string& key) {
  const auto v = cfg.numbers(key);
  if (v.size() != 2 || !(v[0] > 0.0) || !(v[1] > 0.0))
    fail(ErrorCode::config_error, "config: '" + key + "' expects two positive numbers");
  return {v[0], v[1]};
}

struct ChartSetup {
  SliceChart chart;
  bool from_plane = false;
  Vec3 normal{};
  double tolerance = kDefaultChartTolerance;
  double coupling = 0.5;
};

ChartSetup chart_setup(const Config& cfg) {
  ChartSetup s;
  s.tolerance = cfg.positive("chart.tolerance");
  s.coupling = cfg.positive("chart.coupling");
  const double offset = cfg.number("plane.offset");
  if (cfg.has("plane.normal")) {
    const auto n = cfg.numbers("plane.normal");
    if (n.size() != 3) fail(ErrorCode::config_error, "config: 'plane.normal' expects three numbers");
    const Hyperplane plane = Hyperplane::from_coefficients({n[0], n[1], n[2]}, offset);
    s.from_plane = true;
    s.normal = plane.normal();
    s.chart = make_chart(plane, s.tolerance);
  } else {
    s.chart = SliceChart::from_alphas(cfg.number("chart.alpha1"), cfg.number("chart.alpha2"), offset);
  }
  return s;
}

json chart_json(const ChartSetup& s, const ProjectedGradient& g) {
  json j;
  if (s.from_plane) j["normal"] = s.normal;
  j["eliminated_axis"] = s.chart.eliminated_axis;
  j["inplane_axes"] = s.chart.inplane_axes;
  j["alpha1"] = s.chart.alpha1;
  j["alpha2"] = s.chart.alpha2;
  j["affine_offset"] = s.chart.affine_offset;
  j["coupling"] = s.coupling;
  j["c1"] = g.c1;
  j["c2"] = g.c2;
  return j;
}

bool is_series_path(const std::string& path) { return fs::path(path).extension() == ".json"; }

// Smooth random state: Gaussian coefficients damped by 1/lambda.
VectorXd random_state(const SpectralBasis& basis, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t nb = basis.size();
  VectorXd v(basis.state_size());
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < nb; ++i) v[Eigen::Index(c * nb + i)] = normal(rng) / basis.mode(i).lambda;
  return v;
}

VectorXd scaled_to(const OperatorTensors& t, VectorXd v, double norm) {
  const double n = l2_norm(t, v);
  if (n > 0.0) v *= norm / n;
  return v;
}

struct Problem {
  ChartSetup chart;
  std::optional<OperatorTensors> tensors;
  VectorXd u0;
  ForcingFn forcing;
  std::string forcing_kind = "none";
  SolveOptions options;
  std::size_t frame_every = 0;
  std::array<std::size_t, 2> frame_dims{};
};

// Reads and validates every solve.* key, then assembles the operators and
// builds the initial data and forcing.
Problem build_problem(const Config& cfg, std::mt19937_64& rng) {
  Problem p;
  p.chart = chart_setup(cfg);
  const auto modes = integers(cfg, "solve.modes", 2, 1);
  p.options.dynamics.nu = cfg.positive("solve.nu");
  p.options.dynamics.nonlinear = cfg.flag("solve.nonlinear");
  p.options.dt = cfg.positive("solve.dt");
  p.options.final_time = cfg.positive("solve.T");
  const std::size_t quadrature = cfg.count("solve.quadrature");
  p.frame_every = cfg.count("solve.frame_every");
  const auto fd = integers(cfg, "solve.frame_dims", 2, 2);
  p.frame_dims = {fd[0], fd[1]};
  const std::string init = cfg.str("solve.init");
  if (init != "zero" && init != "mode" && init != "random")
    fail(ErrorCode::config_error, "config: 'solve.init' must be zero, mode or random");
  const double amplitude = cfg.nonnegative("solve.amplitude");
  const double random_forcing = cfg.nonnegative("solve.random_forcing");
  if (random_forcing > 0.0 && cfg.has("solve.forcing"))
    fail(ErrorCode::config_error, "config: 'solve.forcing' and 'solve.random_forcing' are exclusive");
  std::array<double, 2> extents = positive_pair(cfg, "solve.extents");

  std::optional<Field> u0_field;
  if (cfg.has("solve.u0")) {
    u0_field = read_field(cfg.str("solve.u0"));
    require(u0_field->ndims() == 2 && u0_field->ncomp() == 3, ErrorCode::invalid_argument,
            "solve.u0 must be a 2D field with three components");
    extents = {u0_field->extents()[0], u0_field->extents()[1]};
  }

  AssemblyOptions opts;
  opts.quadrature_order = quadrature;
  opts.chart_tolerance = p.chart.tolerance;
  opts.coupling = p.chart.coupling;
  const SpectralBasis basis({int(modes[0]), int(modes[1])}, extents);
  log::info(cat("assembling ", basis.size(), " modes on ", extents[0], " x ", extents[1]));
  p.tensors = assemble(basis, p.chart.chart, opts);
  const OperatorTensors& t = *p.tensors;

  if (u0_field) {
    p.u0 = project_divfree(t, project_field(t, *u0_field));
  } else if (init == "zero") {
    p.u0 = VectorXd::Zero(Eigen::Index(basis.state_size()));
  } else if (init == "mode") {
    p.u0 = amplitude * lowest_divfree_mode(t).coeffs;
  } else {
    p.u0 = scaled_to(t, project_divfree(t, random_state(basis, rng)), amplitude);
  }

  if (cfg.has("solve.forcing")) {
    const TimeSeriesField series = read_time_series(cfg.str("solve.forcing"));
    p.forcing = forcing_from_series(t, series);
    p.forcing_kind = "series";
  } else if (random_forcing > 0.0) {
    const VectorXd f0 = scaled_to(t, random_state(basis, rng), random_forcing);
    const VectorXd f1 = scaled_to(t, random_state(basis, rng), random_forcing);
    p.forcing = [f0, f1](double time) -> VectorXd { return f0 + std::sin(time) * f1; };
    p.forcing_kind = "random";
  }
  return p;
}

json basis_json(const OperatorTensors& t) {
  json j;
  j["modes"] = t.basis.nmodes();
  j["extents"] = t.basis.extents();
  j["size"] = t.basis.size();
  j["lambda1"] = t.basis.lambda1();
  j["quadrature_order"] = t.quadrature_order;
  j["constraint_rank"] = t.constraint_rank;
  return j;
}

void write_ledger(const fs::path& dir, const EnergyLedger& ledger) {
  json rows = json::array();
  std::vector<std::vector<double>> table;
  for (const auto& r : ledger.rows) {
    rows.push_back({{"time", r.time},
                    {"energy", r.energy},
                    {"d1", r.d1},
                    {"d2", r.d2},
                    {"dcross", r.dcross},
                    {"work", r.work},
                    {"dedt", r.dedt},
                    {"residual", r.residual},
                    {"int_dissipation", r.int_dissipation},
                    {"int_work", r.int_work},
                    {"int_abs_work", r.int_abs_work}});
    table.push_back({r.time, r.energy, r.d1, r.d2, r.dcross, r.work, r.dedt, r.residual, r.int_dissipation,
                     r.int_work, r.int_abs_work});
  }
  json j;
  j["nu"] = ledger.nu;
  j["dt"] = ledger.dt;
  j["initial_energy"] = ledger.initial_energy();
  j["max_abs_residual"] = ledger.max_abs_residual();
  j["rows"] = rows;
  write_json(dir / "energy_ledger.json", j);
  write_csv(dir / "energy_ledger.csv",
            {"time", "energy", "d1", "d2", "dcross", "work", "dedt", "residual", "int_dissipation", "int_work",
             "int_abs_work"},
            table);
}

// Discrete V* norm of du/dt: sqrt(sum_i |M r_i|^2 / (M lambda_i)) over all components.
double dual_norm(const OperatorTensors& t, const VectorXd& r) {
  const std::size_t nb = t.basis.size();
  double s = 0.0;
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < nb; ++i) {
      const double v = r[Eigen::Index(c * nb + i)];
      s += v * v / t.basis.mode(i).lambda;
    }
  return std::sqrt(t.basis.mass_scale() * s);
}

}  // namespace

int cmd_project(const Config& cfg) {
  if (!cfg.has("project.input")) fail(ErrorCode::config_error, "config: 'project.input' is required");
  const ChartSetup cs = chart_setup(cfg);
  const auto d = integers(cfg, "project.dims", 2, 2);
  const std::array<std::size_t, 2> dims{d[0], d[1]};
  const std::string enc = cfg.str("project.encoding");
  if (enc != "binary" && enc != "text") fail(ErrorCode::config_error, "config: 'project.encoding' must be binary or text");
  const Encoding encoding = enc == "binary" ? Encoding::binary : Encoding::text;
  const fs::path dir = out_dir(cfg);

  const Field field = read_field(cfg.str("project.input"));
  require(field.ndims() == 3, ErrorCode::invalid_argument, "project.input must be a 3D field");
  const Box3 box = Box3::with_extents({field.extents()[0], field.extents()[1], field.extents()[2]});
  const SliceDomain domain = slice_domain(box, cs.chart);
  if (domain.empty()) fail(ErrorCode::empty_slice, "plane does not intersect the field's box");

  Point2 origin;
  const Field slice = restrict_to_slice(field, cs.chart, dims, &origin);
  write_field(slice, dir / "u0_slice.nsf", encoding);

  json j;
  j["command"] = "project";
  j["input"] = cfg.str("project.input");
  const ProjectedGradient g = projected_gradient_coeffs(cs.chart, cs.tolerance, cs.coupling);
  j["chart"] = chart_json(cs, g);
  json verts = json::array();
  for (const auto& v : domain.vertices) verts.push_back({v.p, v.q});
  j["domain"] = {{"vertices", verts},
                 {"lo", {domain.lo.p, domain.lo.q}},
                 {"hi", {domain.hi.p, domain.hi.q}},
                 {"area", domain.area},
                 {"rectangle", domain.is_rectangle()}};
  j["slice"] = {{"dims", slice.dims()}, {"extents", slice.extents()}, {"origin", {origin.p, origin.q}},
                {"ncomp", slice.ncomp()}, {"file", "u0_slice.nsf"}};
  if (cfg.has("project.forcing")) {
    const TimeSeriesField series = read_time_series(cfg.str("project.forcing"));
    const TimeSeriesField fs2 = restrict_to_slice(series, cs.chart, dims);
    fs::create_directories(dir / "forcing");
    write_time_series(fs2, dir / "forcing" / "forcing_slice.json", encoding);
    j["forcing"] = {{"frames", fs2.size()}, {"index", "forcing/forcing_slice.json"}};
  }
  j["config"] = config_json(cfg);
  write_json(dir / "chart.json", j);
  return 0;
}

int cmd_solve(const Config& cfg) {
  std::mt19937_64 rng(cfg.seed());
  Problem p = build_problem(cfg, rng);
  const fs::path dir = out_dir(cfg);
  const OperatorTensors& t = *p.tensors;

  log::info(cat("solving nu=", p.options.dynamics.nu, " dt=", p.options.dt, " T=", p.options.final_time));
  const Trajectory traj = solve(t, p.u0, p.forcing, p.options);
  const EnergyLedger ledger = ledger_from_run(traj, t, p.forcing, p.options.dynamics);
  write_ledger(dir, ledger);

  // Frames.
  const std::size_t last = traj.states.size() - 1;
  std::vector<double> ftimes;
  std::vector<Field> frames;
  double max_div = 0.0;
  double worst_div_ratio = 0.0;
  double max_dual = 0.0;
  double dual_sq_integral = 0.0;
  std::vector<double> duals;
  for (std::size_t k = 0; k <= last; ++k) {
    const VectorXd& u = traj.states[k];
    const double div = divergence_norm(t, u);
    const GradientNorms gn = gradient_norms(t, u);
    const double tol = std::max(1e-9, 1e-10 * std::sqrt(gn.d1 + gn.d2 + gn.dcross));
    max_div = std::max(max_div, div);
    worst_div_ratio = std::max(worst_div_ratio, div / tol);
    VectorXd fk;
    if (p.forcing) fk = p.forcing(traj.times[k]);
    const double dn = dual_norm(t, rhs(t, u, p.forcing ? &fk : nullptr, p.options.dynamics));
    duals.push_back(dn);
    max_dual = std::max(max_dual, dn);
    const bool keep = k == 0 || k == last || (p.frame_every > 0 && k % p.frame_every == 0);
    if (keep) {
      ftimes.push_back(traj.times[k]);
      frames.push_back(synthesize(t, u, p.frame_dims));
    }
  }
  for (std::size_t k = 1; k <= last; ++k)
    dual_sq_integral += 0.5 * (duals[k - 1] * duals[k - 1] + duals[k] * duals[k]) * (traj.times[k] - traj.times[k - 1]);
  fs::create_directories(dir / "frames");
  write_time_series(TimeSeriesField(ftimes, frames), dir / "frames" / "u.json");

  const CumulativeCheck cum = check_cumulative(ledger);
  const bool forced = static_cast<bool>(p.forcing);
  const MonotoneCheck mono = forced ? MonotoneCheck{} : check_monotone(ledger);
  bool apriori_ok = true;
  std::string apriori_message;
  AprioriBounds bounds;
  try {
    bounds = apriori_bounds(ledger);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::bound_violation) throw;
    apriori_ok = false;
    apriori_message = e.what();
  }
  const bool div_ok = worst_div_ratio <= 1.0;

  json checks;
  checks["cumulative"] = {{"ok", cum.ok}, {"worst_excess", cum.worst_excess}, {"worst_time", ledger.rows[cum.worst_row].time}};
  if (!forced)
    checks["monotone"] = {{"ok", mono.ok}, {"worst_increase", mono.worst_increase}};
  checks["apriori"] = {{"ok", apriori_ok},
                       {"sup_norm", bounds.sup_norm},
                       {"int_gradient", bounds.int_gradient},
                       {"constant", bounds.constant},
                       {"norm_bound", bounds.norm_bound},
                       {"gradient_bound", bounds.gradient_bound}};
  if (!apriori_ok) checks["apriori"]["message"] = apriori_message;
  checks["divergence"] = {{"ok", div_ok}, {"max", max_div}};

  json j;
  j["command"] = "solve";
  j["seed"] = cfg.seed();
  j["basis"] = basis_json(t);
  j["chart"] = chart_json(p.chart, t.gradient);
  j["nu"] = p.options.dynamics.nu;
  j["nonlinear"] = p.options.dynamics.nonlinear;
  j["dt"] = p.options.dt;
  j["T"] = p.options.final_time;
  j["steps"] = last;
  j["forcing"] = p.forcing_kind;
  j["coercivity"] = coercivity_check(t);
  j["initial_norm"] = l2_norm(t, p.u0);
  j["final_norm"] = l2_norm(t, traj.states.back());
  j["dual_norm_dudt"] = {{"max", max_dual}, {"l2_in_time", std::sqrt(dual_sq_integral)}};
  j["ledger"] = "energy_ledger.json";
  j["frames"] = {{"index", "frames/u.json"}, {"count", frames.size()}, {"dims", p.frame_dims}};
  j["checks"] = checks;
  const bool ok = cum.ok && mono.ok && apriori_ok && div_ok;
  j["passed"] = ok;
  j["config"] = config_json(cfg);
  write_json(dir / "manifest.json", j);

  if (!apriori_ok) {
    log::error(apriori_message);
    return exit_status(ErrorCode::bound_violation);
  }
  if (!ok) log::error("solve: a check failed (see manifest.json)");
  return ok ? 0 : 1;
}

int cmd_uniqueness(const Config& cfg) {
  std::mt19937_64 rng(cfg.seed());
  const double delta = cfg.nonnegative("uniqueness.delta");
  const double corrupt = cfg.nonnegative("uniqueness.corrupt");
  const double identity_tol = cfg.positive("uniqueness.identity_tol");
  const std::string direction = cfg.str("uniqueness.direction");
  if (direction != "mode" && direction != "random")
    fail(ErrorCode::config_error, "config: 'uniqueness.direction' must be mode or random");
  Problem p = build_problem(cfg, rng);
  const fs::path dir = out_dir(cfg);
  const OperatorTensors& t = *p.tensors;

  UniquenessSetup setup;
  setup.u0 = p.u0;
  setup.forcing = p.forcing;
  setup.options = p.options;
  setup.delta = delta;
  setup.corrupt = corrupt;
  setup.identity_rel_tol = identity_tol;
  if (direction == "random") setup.direction = random_state(t.basis, rng);
  const ContractionReport r = uniqueness_experiment(t, setup);

  std::vector<std::vector<double>> table;
  for (std::size_t k = 0; k < r.times.size(); ++k)
    table.push_back({r.times[k], r.w_norm[k], r.bound[k], r.grad_sq[k], r.grad_integral[k], r.identity_residual[k]});
  write_csv(dir / "contraction_report.csv",
            {"time", "w_norm", "bound", "grad_sq", "grad_integral", "identity_residual"}, table);

  json j;
  j["command"] = "uniqueness";
  j["seed"] = cfg.seed();
  j["basis"] = basis_json(t);
  j["chart"] = chart_json(p.chart, t.gradient);
  j["nu"] = p.options.dynamics.nu;
  j["dt"] = p.options.dt;
  j["T"] = p.options.final_time;
  j["delta"] = r.delta;
  j["direction"] = direction;
  j["corrupt"] = corrupt;
  j["scale"] = r.scale;
  j["fitted_c"] = r.fitted_c;
  j["fit_defined"] = r.fit_defined;
  j["max_w"] = r.max_w;
  j["envelope_ok"] = r.envelope_ok;
  j["identity_scale"] = r.identity_scale;
  j["identity_tolerance"] = r.identity_tolerance;
  j["identity_ok"] = r.identity_ok;
  j["pass"] = r.pass;
  j["times"] = r.times;
  j["w_norm"] = r.w_norm;
  j["grad_sq"] = r.grad_sq;
  j["grad_integral"] = r.grad_integral;
  j["bound"] = r.bound;
  j["identity_residual"] = r.identity_residual;
  j["config"] = config_json(cfg);
  write_json(dir / "contraction_report.json", j);

  const bool ok = r.pass && r.identity_ok;
  if (!ok) log::error(cat("uniqueness: envelope_ok=", r.envelope_ok, " identity_ok=", r.identity_ok));
  return ok ? 0 : 1;
}

int cmd_quadform(const Config& cfg) {
  if (!cfg.has("quadform.input")) fail(ErrorCode::config_error, "config: 'quadform.input' is required");
  const double nu = cfg.positive("quadform.nu");
  const double c_gn = cfg.positive("quadform.c_gn");
  const double pivot_tol = cfg.positive("quadform.pivot_tol");
  const bool write_fields = cfg.flag("quadform.write_fields");
  const bool require_criterion = cfg.flag("quadform.require_criterion");
  const fs::path dir = out_dir(cfg);

  const std::string input = cfg.str("quadform.input");
  std::vector<double> times;
  std::vector<Field> frames;
  if (is_series_path(input)) {
    TimeSeriesField s = read_time_series(input);
    times = s.times();
    frames = s.frames();
  } else {
    times = {0.0};
    frames = {read_field(input)};
  }
  for (const auto& f : frames)
    require(f.ndims() == 3 && f.ncomp() == 3, ErrorCode::invalid_argument,
            "quadform.input must hold 3D fields with three components");
  std::optional<Field> weight;
  if (cfg.has("quadform.weight")) {
    weight = read_field(cfg.str("quadform.weight"));
    require(weight->same_shape(frames.front()), ErrorCode::invalid_argument,
            "quadform.weight must match the input grid");
  }

  GradientNormTable table;
  table.times = times;
  for (const auto& f : frames) table.norms.push_back(gradient_norms_from_field(f));
  const double lambda1 = box_lambda1(frames.front().extents());
  const CriterionReport crit = uniqueness_criterion(table, nu, lambda1, c_gn);

  json jframes = json::array();
  std::vector<std::vector<double>> inertia_rows;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const StrainMatrixField strain = strain_field(frames[k]);
    const QuadFormDecomposition dec = canonicalize(strain, pivot_tol);
    json hist = json::array();
    for (const auto& [in, count] : dec.inertia_histogram) {
      hist.push_back({{"positive", in.positive}, {"zero", in.zero}, {"negative", in.negative}, {"count", count}});
      inertia_rows.push_back({double(k), times[k], double(in.positive), double(in.zero), double(in.negative),
                              double(count)});
    }
    double max_trace = 0.0;
    double max_entry = 0.0;
    for (const auto& a : strain.strain) {
      max_trace = std::max(max_trace, std::abs(a.trace()));
      max_entry = std::max(max_entry, a.cwiseAbs().maxCoeff());
    }
    json jf;
    jf["time"] = times[k];
    jf["points"] = dec.points.size();
    jf["degenerate_count"] = dec.degenerate_count;
    jf["degenerate_fraction"] = dec.degenerate_fraction();
    jf["inertia_histogram"] = hist;
    jf["max_abs_trace"] = max_trace;
    jf["max_abs_entry"] = max_entry;
    if (weight) jf["signed_integral"] = signed_integral(strain, *weight);
    if (write_fields) {
      const Field& shape = frames[k];
      std::vector<double> bdata(3 * shape.npoints()), mdata(shape.npoints());
      for (std::size_t i = 0; i < shape.npoints(); ++i) {
        for (std::size_t c = 0; c < 3; ++c) bdata[c * shape.npoints() + i] = dec.points[i].b[c];
        mdata[i] = dec.points[i].method == QuadMethod::jacobi ? 0.0 : 1.0;
      }
      char name[64];
      std::snprintf(name, sizeof name, "quadform_b_%05zu.nsf", k);
      write_field(Field(shape.dims(), shape.extents(), 3, std::move(bdata)), dir / name);
      jf["b_field"] = name;
      std::snprintf(name, sizeof name, "quadform_method_%05zu.nsf", k);
      write_field(Field(shape.dims(), shape.extents(), 1, std::move(mdata)), dir / name);
      jf["method_field"] = name;
    }
    jframes.push_back(jf);
  }

  json rows = json::array();
  std::vector<std::vector<double>> crit_rows;
  for (const auto& r : crit.rows) {
    rows.push_back({{"time", r.time},
                    {"rhs", r.rhs},
                    {"satisfied", r.satisfied},
                    {"aggregate_rhs", r.aggregate_rhs},
                    {"aggregate_satisfied", r.aggregate_satisfied}});
    crit_rows.push_back({r.time, crit.lhs, r.rhs[0], r.rhs[1], r.rhs[2], double(r.satisfied[0]),
                         double(r.satisfied[1]), double(r.satisfied[2]), r.aggregate_rhs,
                         double(r.aggregate_satisfied)});
  }
  write_csv(dir / "criterion.csv",
            {"time", "lhs", "rhs_1", "rhs_2", "rhs_3", "satisfied_1", "satisfied_2", "satisfied_3", "aggregate_rhs",
             "aggregate_satisfied"},
            crit_rows);
  write_csv(dir / "inertia.csv", {"frame", "time", "positive", "zero", "negative", "count"}, inertia_rows);

  json j;
  j["command"] = "quadform";
  j["input"] = input;
  j["nu"] = nu;
  j["c_gn"] = c_gn;
  j["lambda1"] = lambda1;
  j["lhs"] = crit.lhs;
  j["pivot_tol"] = pivot_tol;
  j["criterion"] = rows;
  j["all_components_satisfied"] = crit.all_components_satisfied;
  j["aggregate_satisfied"] = crit.aggregate_satisfied;
  j["frames"] = jframes;
  j["require_criterion"] = require_criterion;
  const bool ok = !require_criterion || crit.all_components_satisfied;
  j["passed"] = ok;
  j["config"] = config_json(cfg);
  write_json(dir / "quadform_report.json", j);
  if (!ok) log::error("quadform: criterion violated");
  return ok ? 0 : 1;
}

int cmd_stratify(const Config& cfg) {
  if (!cfg.has("stratify.input")) fail(ErrorCode::config_error, "config: 'stratify.input' is required");
  const double eps = cfg.nonnegative("stratify.eps");
  StratifyOptions opts;
  opts.nslices = cfg.count("stratify.nslices");
  opts.area_tol = cfg.number("stratify.area_tol");
  opts.interval_slabs = cfg.positive("stratify.interval_slabs");
  const auto extra = cfg.vectors("stratify.directions");
  const fs::path dir = out_dir(cfg);

  const std::string input = cfg.str("stratify.input");
  const IndicatorGrid mask =
      is_series_path(input) ? mask_from_series(read_time_series(input), eps) : mask_from_field(read_field(input), eps);
  for (const auto& d : extra)
    if (d.size() != mask.ndims())
      fail(ErrorCode::config_error, "config: each stratify direction needs " + std::to_string(mask.ndims()) + " components");

  const StratificationVerdict v = stratification_verdict(mask, extra, opts);

  json dirs = json::array();
  std::vector<std::vector<double>> profile_rows;
  for (std::size_t i = 0; i < v.directions.size(); ++i) {
    const DirectionVerdict& d = v.directions[i];
    dirs.push_back({{"direction", d.profile.direction},
                    {"canonical_axis", d.canonical_axis},
                    {"positive", d.positive},
                    {"interval_tol", d.interval_tol},
                    {"best_run", d.best_run},
                    {"best_interval", {d.best_lo, d.best_hi}},
                    {"beta_min", d.profile.beta_min},
                    {"beta_max", d.profile.beta_max},
                    {"dbeta", d.profile.dbeta},
                    {"offsets", d.profile.offsets},
                    {"areas", d.profile.areas}});
    for (std::size_t s = 0; s < d.profile.offsets.size(); ++s)
      profile_rows.push_back({double(i), d.profile.offsets[s], d.profile.areas[s]});
  }
  write_csv(dir / "stratify_profiles.csv", {"direction", "offset", "area"}, profile_rows);

  const bool consistent = v.axis_positive == v.oracle_positive;
  json j;
  j["command"] = "stratify";
  j["input"] = input;
  j["dims"] = mask.dims;
  j["extents"] = mask.extents;
  j["eps"] = eps;
  j["voxels"] = mask.count();
  j["volume"] = v.volume;
  j["volume_tol"] = v.volume_tol;
  j["area_tol"] = v.area_tol;
  j["positive"] = v.positive;
  j["axis_positive"] = v.axis_positive;
  j["oracle_positive"] = v.oracle_positive;
  j["consistent"] = consistent;
  j["directions"] = dirs;
  j["config"] = config_json(cfg);
  write_json(dir / "stratify_report.json", j);
  if (!consistent) log::error("stratify: axis verdict disagrees with the voxel volume");
  return consistent ? 0 : 1;
}

int cmd_mms(const Config& cfg) {
  const ChartSetup cs = chart_setup(cfg);
  const auto modes = integers(cfg, "mms.modes", 0, 1);
  const auto extents = positive_pair(cfg, "mms.extents");
  const double nu = cfg.positive("mms.nu");
  const double T = cfg.positive("mms.T");
  const double dt = cfg.positive("mms.dt");
  const std::size_t power = cfg.count("mms.power");
  if (power < 2) fail(ErrorCode::config_error, "config: 'mms.power' must be >= 2");
  const double min_ratio = cfg.positive("mms.min_ratio");
  const bool temporal = cfg.flag("mms.temporal");
  const std::size_t temporal_modes = integers(cfg, "mms.temporal_modes", 1, 1)[0];
  const double temporal_dt = cfg.positive("mms.temporal_dt");
  const double min_order = cfg.number("mms.min_order");
  const fs::path dir = out_dir(cfg);

  AssemblyOptions aopts;
  aopts.chart_tolerance = cs.tolerance;
  aopts.coupling = cs.coupling;
  aopts.sparse_tensor_limit = 0;
  DynamicsOptions dyn;
  dyn.nu = nu;

  struct Run {
    std::vector<VectorXd> finals;
    std::vector<double> errors;
  };
  auto run = [&](std::size_t n, const std::vector<double>& steps, json* spatial_row) {
    const OperatorTensors t = assemble(SpectralBasis({int(n), int(n)}, extents), cs.chart, aopts);
    const ManufacturedSolution ms(extents, t.gradient, int(power));
    const MmsProblem prob = build_mms(t, ms);
    const ForcingFn f = prob.forcing(nu);
    Run r;
    for (double h : steps) {
      SolveOptions so;
      so.dynamics = dyn;
      so.dt = h;
      so.final_time = T;
      log::info(cat("mms: N=", n, " dt=", h));
      const Trajectory traj = solve(t, prob.initial, f, so);
      r.errors.push_back(mms_error(t, ms, traj.states.back(), T));
      if (spatial_row) {
        const EnergyLedger ledger = ledger_from_run(traj, t, f, dyn);
        const CumulativeCheck cum = check_cumulative(ledger);
        (*spatial_row)["cumulative_ok"] = cum.ok;
        (*spatial_row)["cumulative_worst_excess"] = cum.worst_excess;
        (*spatial_row)["max_abs_residual"] = ledger.max_abs_residual();
      }
      r.finals.push_back(traj.states.back());
    }
    std::vector<double> diffs;
    for (std::size_t i = 1; i < r.finals.size(); ++i) diffs.push_back(l2_norm(t, r.finals[i - 1] - r.finals[i]));
    return std::make_pair(r, diffs);
  };

  bool ok = true;
  json spatial = json::array();
  std::vector<std::vector<double>> spatial_rows;
  double prev = 0.0;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    json row;
    row["modes"] = modes[i];
    const auto [r, diffs] = run(modes[i], {dt}, &row);
    const double err = r.errors.front();
    row["error"] = err;
    double ratio = 0.0;
    if (i > 0) {
      ratio = prev / err;
      row["ratio"] = ratio;
      row["ratio_ok"] = ratio >= min_ratio;
      ok = ok && ratio >= min_ratio;
    }
    ok = ok && row["cumulative_ok"].get<bool>();
    spatial_rows.push_back({double(modes[i]), err, ratio, double(row["cumulative_ok"].get<bool>()),
                            row["cumulative_worst_excess"].get<double>()});
    spatial.push_back(row);
    prev = err;
  }
  write_csv(dir / "mms_spatial.csv", {"modes", "error", "ratio", "cumulative_ok", "cumulative_worst_excess"},
            spatial_rows);

  json j;
  j["command"] = "mms";
  j["chart"] = chart_json(cs, projected_gradient_coeffs(cs.chart, cs.tolerance, cs.coupling));
  j["extents"] = extents;
  j["nu"] = nu;
  j["T"] = T;
  j["dt"] = dt;
  j["power"] = power;
  j["min_ratio"] = min_ratio;
  j["spatial"] = spatial;
  if (temporal) {
    const std::vector<double> steps{temporal_dt, temporal_dt / 2, temporal_dt / 4};
    const auto [r, diffs] = run(temporal_modes, steps, nullptr);
    const double order = std::log2(diffs[0] / diffs[1]);
    const bool order_ok = std::isfinite(order) && order >= min_order;
    ok = ok && order_ok;
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < steps.size(); ++i)
      rows.push_back({steps[i], r.errors[i], i > 0 ? diffs[i - 1] : 0.0});
    write_csv(dir / "mms_temporal.csv", {"dt", "error", "self_difference"}, rows);
    j["temporal"] = {{"modes", temporal_modes}, {"dt", steps},        {"errors", r.errors},
                     {"self_differences", diffs}, {"order", order},   {"min_order", min_order},
                     {"order_ok", order_ok}};
  }
  j["passed"] = ok;
  j["config"] = config_json(cfg);
  write_json(dir / "mms_report.json", j);
  if (!ok) log::error("mms: a convergence check failed (see mms_report.json)");
  return ok ? 0 : 1;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"project", "solve", "uniqueness", "quadform", "stratify", "mms"};
  return names;
}

int run_command(const std::string& name, const Config& cfg) {
  if (name == "project") return cmd_project(cfg);
  if (name == "solve") return cmd_solve(cfg);
  if (name == "uniqueness") return cmd_uniqueness(cfg);
  if (name == "quadform") return cmd_quadform(cfg);
  if (name == "stratify") return cmd_stratify(cfg);
  if (name == "mms") return cmd_mms(cfg);
  fail(ErrorCode::invalid_argument, "unknown command '" + name + "'");
}

}  // namespace nsslice
