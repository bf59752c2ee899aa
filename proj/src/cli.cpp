#include "ncensus/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include "ncensus/engine.hpp"
#include "ncensus/field_io.hpp"
#include "ncensus/sampler.hpp"
#include "ncensus/specfn.hpp"

namespace ncensus::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

double parse_decimal(std::string_view s, std::string_view whole) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError("cannot parse length '" + std::string(whole) + "'");
  return v;
}

}  // namespace

double parse_length(std::string_view text) {
  if (text == "inf" || text == "infinity") return kUnbounded;
  if (text.empty()) throw ConfigError("empty length");
  std::string_view num = text, den;
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    num = text.substr(0, slash);
    den = text.substr(slash + 1);
    if (den.empty()) throw ConfigError("cannot parse length '" + std::string(text) + "'");
  }
  double value = 1.0;
  if (num.size() >= 2 && num.substr(num.size() - 2) == "pi") {
    const auto coef = num.substr(0, num.size() - 2);
    value = (coef.empty() ? 1.0 : parse_decimal(coef, text)) * kPi;
  } else {
    value = parse_decimal(num, text);
  }
  if (!den.empty()) {
    const double d = parse_decimal(den, text);
    if (d == 0.0) throw ConfigError("division by zero in length '" + std::string(text) + "'");
    value /= d;
  }
  return value;
}

GridSpec default_sphere_grid(int degree) {
  if (degree < 1) throw ConfigError("sphere degree must be >= 1");
  const double k = std::sqrt(static_cast<double>(degree) * (degree + 1));
  int n_theta = std::max({4 * degree, 16, static_cast<int>(std::ceil(5.0 * k))});
  n_theta += n_theta % 2;
  return GridSpec::sphere(n_theta, 2 * n_theta);
}

void write_step_svg(std::ostream& out, const EmpiricalCdf& cdf, const std::string& title) {
  constexpr double w = 640, h = 400, left = 50, right = 20, top = 30, bottom = 40;
  const double xmax = cdf.empty() ? 1.0 : std::max(1e-12, cdf.breakpoints.back() * 1.05);
  auto px = [&](double t) { return left + (w - left - right) * t / xmax; };
  auto py = [&](double v) { return top + (h - top - bottom) * (1.0 - std::clamp(v, 0.0, 1.0)); };
  char buf[128];
  auto pt = [&](double x, double y) {
    std::snprintf(buf, sizeof buf, "%.2f,%.2f", x, y);
    return std::string(buf);
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
  out << "<title>" << title << "</title>\n";
  out << "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";

  // stderr band as a stepped polygon: upper edge forwards, lower edge back
  std::string upper = pt(px(0), py(0)), lower;
  std::vector<std::string> lower_pts{pt(px(0), py(0))};
  double prev_hi = 0.0, prev_lo = 0.0;
  for (std::size_t i = 0; i < cdf.breakpoints.size(); ++i) {
    const double x = px(cdf.breakpoints[i]);
    const double hi = cdf.values[i] + cdf.std_error[i], lo = cdf.values[i] - cdf.std_error[i];
    upper += " " + pt(x, py(prev_hi)) + " " + pt(x, py(hi));
    lower_pts.push_back(pt(x, py(prev_lo)));
    lower_pts.push_back(pt(x, py(lo)));
    prev_hi = hi;
    prev_lo = lo;
  }
  upper += " " + pt(px(xmax), py(prev_hi));
  lower_pts.push_back(pt(px(xmax), py(prev_lo)));
  for (auto it = lower_pts.rbegin(); it != lower_pts.rend(); ++it) lower += " " + *it;
  out << "<polygon fill=\"#c6dbef\" stroke=\"none\" points=\"" << upper << lower << "\"/>\n";

  std::string path = "M" + pt(px(0), py(0));
  double prev = 0.0;
  for (std::size_t i = 0; i < cdf.breakpoints.size(); ++i) {
    const double x = px(cdf.breakpoints[i]);
    path += " L" + pt(x, py(prev)) + " L" + pt(x, py(cdf.values[i]));
    prev = cdf.values[i];
  }
  path += " L" + pt(px(xmax), py(prev));
  out << "<path fill=\"none\" stroke=\"#08519c\" stroke-width=\"1.5\" d=\"" << path << "\"/>\n";

  out << "<g stroke=\"black\" stroke-width=\"1\">\n";
  out << "<line x1=\"" << left << "\" y1=\"" << py(0) << "\" x2=\"" << w - right << "\" y2=\"" << py(0) << "\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << py(0) << "\" x2=\"" << left << "\" y2=\"" << py(1) << "\"/>\n";
  out << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (double frac : {0.0, 0.5, 1.0}) {
    std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\">%.4g</text>\n",
                  px(frac * xmax), py(0) + 15, frac * xmax);
    out << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"end\">%.1f</text>\n", left - 5,
                  py(frac) + 4, frac);
    out << buf;
  }
  out << "<text x=\"" << (left + w - right) / 2 << "\" y=\"" << h - 8 << "\" text-anchor=\"middle\">t</text>\n";
  out << "</g>\n</svg>\n";
}

namespace {

struct Options {
  // common
  std::uint64_t seed = 7;
  std::string out = ".";
  bool json = false;
  // model and grid
  std::string config_path;
  std::string model = "rpw";
  std::string window;
  std::string h = "2pi/10";
  int dim = 2;
  double alpha = 1.0;
  int degree = 80;
  int n_theta = 0;
  int n_phi = 0;
  // ensemble
  std::uint64_t m = 100;
  unsigned threads = 0;
  bool keep_fields = false;
  std::string estimator = "cell-count";
  bool resume = false;
  // command specific
  std::uint64_t index = 0;
  std::string in_path;
  std::string format = "svg";
  std::vector<std::string> radii;
  std::string r_small, r_big;
  std::vector<std::string> thresholds;
  double margin = 0.10;
  std::string planar_report;
  std::vector<std::string> checks;
};

void add_common(CLI::App* sub, Options& o) {
  // no "-h" alias: "--h" is the grid spacing
  sub->set_help_flag("--help", "print this help and exit");
  sub->add_option("--seed", o.seed, "master seed (realization i uses stream (seed, i))")->capture_default_str();
  sub->add_option("--out", o.out, "output directory")->capture_default_str();
  sub->add_flag("--json", o.json, "print the summary as JSON");
}

void add_model(CLI::App* sub, Options& o, bool window_default) {
  sub->add_option("--config", o.config_path, "EnsembleConfig JSON file (replaces the model flags)");
  sub->add_option("--model", o.model, "rpw | band | sphere")
      ->check(CLI::IsMember({"rpw", "band", "sphere"}))
      ->capture_default_str();
  auto* win = sub->add_option("--window", o.window, "window (or torus) side, e.g. 40pi");
  if (window_default) {
    o.window = "40pi";
    win->capture_default_str();
  }
  sub->add_option("--h", o.h, "grid spacing, e.g. 2pi/10")->capture_default_str();
  sub->add_option("--dim", o.dim, "dimension of the band-limited model")->capture_default_str();
  sub->add_option("--alpha", o.alpha, "inner radius of the spectral annulus")->capture_default_str();
  sub->add_option("--l", o.degree, "spherical harmonic degree")->capture_default_str();
  sub->add_option("--ntheta", o.n_theta, "sphere colatitude nodes (default: about 10 per wavelength)");
  sub->add_option("--nphi", o.n_phi, "sphere longitude nodes (default: 2 ntheta)");
  sub->add_option("--estimator", o.estimator, "area estimator: cell-count | subcell")
      ->check(CLI::IsMember({"cell-count", "subcell"}))
      ->capture_default_str();
}

void add_ensemble(CLI::App* sub, Options& o, std::uint64_t default_m) {
  o.m = default_m;
  sub->add_option("--M", o.m, "number of realizations")->capture_default_str();
  sub->add_option("--threads", o.threads, "worker threads (default: NODAL_CENSUS_THREADS or all cores)");
  sub->add_flag("--keep-fields", o.keep_fields, "also store every sampled field");
  sub->add_flag("--resume", o.resume, "reuse intact realizations already in --out");
}

GridSpec grid_from(const Options& o) {
  if (o.model == "sphere") {
    if (o.n_theta > 0) return GridSpec::sphere(o.n_theta, o.n_phi > 0 ? o.n_phi : 2 * o.n_theta);
    return default_sphere_grid(o.degree);
  }
  if (o.window.empty()) throw ConfigError("--window is required for the " + o.model + " model");
  const double side = parse_length(o.window), h = parse_length(o.h);
  if (o.model == "band") return GridSpec::torus(side, h, o.dim);
  return GridSpec::planar(side, h);
}

SpectralModel model_from(const Options& o) {
  if (o.model == "band") return SpectralModel::band_limited(o.dim, o.alpha);
  if (o.model == "sphere") return SpectralModel::spherical_harmonic(o.degree);
  return SpectralModel::plane_wave();
}

EnsembleConfig config_from(const Options& o, const CLI::App* sub) {
  EnsembleConfig c;
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw ConfigError("cannot read config " + o.config_path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config " + o.config_path + ": " + e.what());
    }
    c = config_from_json(j);
    if (sub->count("--seed")) c.master_seed = o.seed;
    if (sub->count("--M")) c.realizations = o.m;
  } else {
    c.model = model_from(o);
    c.grid = grid_from(o);
    c.realizations = o.m;
    c.master_seed = o.seed;
    c.area_estimator = o.estimator == "subcell" ? AreaEstimator::Subcell : AreaEstimator::CellCount;
    c.radii.clear();
    if (c.grid.geometry != Geometry::LatLongSphere && c.grid.dim == 2)
      for (double r : {10.0, 15.0, 20.0})
        if (r <= 0.5 * c.grid.side) c.radii.push_back(r);
  }
  if (sub->count("--threads") || c.threads == 0) c.threads = o.threads;
  if (sub->count("--keep-fields")) c.keep_fields = o.keep_fields;
  c.output_dir = o.out;
  return c;
}

// Checks the geometry supports; drops default sandwich pairs that do not fit.
std::set<Check> applicable_checks(EnsembleConfig& c) {
  if (c.grid.geometry == Geometry::LatLongSphere) return {Check::FaberKrahn, Check::Helmholtz};
  std::set<Check> s{Check::FaberKrahn, Check::Covariance};
  if (c.grid.dim == 2) s.insert({Check::Helmholtz, Check::Perturbation});
  if (c.grid.geometry == Geometry::PlanarWindow && c.grid.cells % 2 == 0) {
    std::erase_if(c.sandwich_pairs, [&](const auto& p) { return p.first + p.second > 0.5 * c.grid.side; });
    if (!c.sandwich_pairs.empty()) s.insert(Check::Sandwich);
  }
  if (c.realizations < 2) s.erase(Check::Covariance);
  return s;
}

void write_text(const fs::path& path, const std::function<void(std::ostream&)>& fn) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  fn(out);
  if (!out) throw FormatError("write failed: " + path.string());
}

EnsembleReport run(const EnsembleConfig& c, bool resume) {
  return resume ? resume_ensemble(c, c.output_dir) : run_ensemble(c);
}

void emit(std::ostream& out, const Options& o, const json& summary, const std::string& text) {
  if (o.json) out << summary.dump(2) << '\n';
  else out << text;
}

std::string fmt(double v) { return format_real(v); }

int cmd_sample(const Options& o, std::ostream& out) {
  const SpectralModel model = model_from(o);
  const GridSpec grid = grid_from(o);
  const FieldSample s = sample_field(model, grid, o.seed, o.index);
  fs::create_directories(o.out);
  const fs::path path = fs::path(o.out) / "sample.ncfs";
  write_field(path, s);
  json summary = {{"file", path.string()}, {"nodes", s.values().size()}, {"seed", o.seed}, {"index", o.index}};
  emit(out, o, summary, "wrote " + path.string() + " (" + std::to_string(s.values().size()) + " nodes)\n");
  return kExitOk;
}

int cmd_nodal(const Options& o, std::ostream& out) {
  const AreaEstimator est = o.estimator == "subcell" ? AreaEstimator::Subcell : AreaEstimator::CellCount;
  std::optional<FieldSample> sample;
  if (!o.in_path.empty()) sample.emplace(read_field(o.in_path));
  else sample.emplace(sample_field(model_from(o), grid_from(o), o.seed, o.index));
  const NodalDecomposition dec = decompose(*sample, est);
  fs::create_directories(o.out);
  const fs::path path = fs::path(o.out) / "domains.csv";
  write_text(path, [&](std::ostream& f) { write_domain_csv(f, dec); });
  std::size_t interior = 0;
  for (const auto& d : dec.domains) interior += !d.touches_window;
  json summary = {{"file", path.string()},
                  {"domains", dec.domains.size()},
                  {"interior_domains", interior},
                  {"nodal_length", dec.nodal_volume}};
  emit(out, o, summary,
       "domains=" + std::to_string(dec.domains.size()) + " interior=" + std::to_string(interior) +
           " nodal_length=" + fmt(dec.nodal_volume) + "\nwrote " + path.string() + "\n");
  return kExitOk;
}

void write_psi_outputs(const EnsembleReport& rep, const Options& o) {
  const fs::path dir = o.out;
  write_text(dir / "psi.csv", [&](std::ostream& f) { write_psi_csv(f, rep.psi); });
  if (o.format != "csv-only")
    write_text(dir / "psi.svg", [&](std::ostream& f) { write_step_svg(f, rep.psi, "empirical Psi(t)"); });
  write_text(dir / "joint.csv", [&](std::ostream& f) { write_joint_csv(f, rep.joint); });
  if (rep.ns) write_text(dir / "ns.csv", [&](std::ostream& f) { write_ns_csv(f, *rep.ns); });
}

int cmd_psi(const Options& o, const CLI::App* sub, std::ostream& out) {
  if (o.config_path.empty() && o.model != "sphere" && o.window.empty())
    throw ConfigError("--window is required (or give --config)");
  EnsembleConfig c = config_from(o, sub);
  c.validate();
  const EnsembleReport rep = run(c, o.resume);
  write_psi_outputs(rep, o);
  json summary = {{"domains", rep.psi.total_count},
                  {"realizations", rep.completed},
                  {"largest_jump", rep.psi.largest_jump()},
                  {"psi", json::object()}};
  std::string text = "interior domains=" + std::to_string(rep.psi.total_count) + "\n";
  for (double t : {17.0, 19.0, 20.0, 50.0}) {
    summary["psi"][fmt(t)] = rep.psi.eval(t);
    text += "psi(" + fmt(t) + ")=" + fmt(rep.psi.eval(t)) + "\n";
  }
  emit(out, o, summary, text);
  return kExitOk;
}

int cmd_ns(const Options& o, const CLI::App* sub, std::ostream& out) {
  EnsembleConfig c = config_from(o, sub);
  if (!o.radii.empty()) {
    c.radii.clear();
    for (const auto& r : o.radii) c.radii.push_back(parse_length(r));
  }
  if (c.radii.empty()) throw ConfigError("ns: no radii (needs a 2-D Euclidean window)");
  c.validate();
  const EnsembleReport rep = run(c, o.resume);
  write_text(fs::path(o.out) / "ns.csv", [&](std::ostream& f) { write_ns_csv(f, *rep.ns); });
  json per = json::array();
  std::string text;
  for (const auto& r : rep.ns->per_radius) {
    per.push_back({{"R", r.radius}, {"ratio_mean", r.ratio_mean}, {"ratio_stderr", r.ratio_std_error}});
    text += "R=" + fmt(r.radius) + " ratio=" + fmt(r.ratio_mean) + " stderr=" + fmt(r.ratio_std_error) + "\n";
  }
  const bool consistent = ns_radii_consistent(*rep.ns);
  json summary = {{"per_radius", per}, {"pooled", rep.ns->pooled}, {"stderr", rep.ns->std_error},
                  {"radii_consistent", consistent}};
  text += "pooled=" + fmt(rep.ns->pooled) + " consistent=" + (consistent ? "true" : "false") + "\n";
  emit(out, o, summary, text);
  return kExitOk;
}

int cmd_sandwich(const Options& o, const CLI::App* sub, std::ostream& out) {
  EnsembleConfig c = config_from(o, sub);
  c.checks = {Check::Sandwich};
  if (!o.r_small.empty() || !o.r_big.empty()) {
    if (o.r_small.empty() || o.r_big.empty()) throw ConfigError("sandwich: give both --r and --R");
    c.sandwich_pairs = {{parse_length(o.r_small), parse_length(o.r_big)}};
  }
  if (!o.thresholds.empty()) {
    c.thresholds.clear();
    for (const auto& t : o.thresholds) c.thresholds.push_back(parse_length(t));
  }
  c.validate();
  const EnsembleReport rep = run(c, o.resume);
  write_text(fs::path(o.out) / "sandwich.csv", [&](std::ostream& f) { write_sandwich_csv(f, rep.sandwich); });
  std::size_t holds = 0;
  std::string text;
  json rows = json::array();
  for (const auto& v : rep.sandwich) {
    holds += v.holds;
    rows.push_back({{"r", v.r}, {"R", v.radius}, {"t", fmt(v.t)}, {"lower", v.lower}, {"middle", v.middle},
                    {"upper", v.upper}, {"holds", v.holds}});
    text += "r=" + fmt(v.r) + " R=" + fmt(v.radius) + " t=" + fmt(v.t) + " lower=" + fmt(v.lower) +
            " middle=" + std::to_string(v.middle) + " upper=" + fmt(v.upper) + " holds=" + (v.holds ? "true" : "false") +
            "\n";
  }
  json summary = {{"evaluated", rep.sandwich.size()}, {"holds", holds}, {"rows", rows}};
  emit(out, o, summary, text);
  return kExitOk;
}

int cmd_faber_krahn(const Options& o, const CLI::App* sub, std::ostream& out) {
  EnsembleConfig c = config_from(o, sub);
  c.checks = {Check::FaberKrahn};
  c.fk_margin = o.margin;
  c.validate();
  const EnsembleReport rep = run(c, o.resume);
  const json& fk = rep.checks.at("faber_krahn");
  write_text(fs::path(o.out) / "faber_krahn.csv", [&](std::ostream& f) {
    f << "index,label,area\n";
    for (const auto& v : fk.at("violations"))
      f << v.at("index").get<std::uint64_t>() << ',' << v.at("label").get<int>() << ','
        << fmt(v.at("area").get<double>()) << '\n';
  });
  emit(out, o, fk,
       "floor=" + fmt(fk.at("floor").get<double>()) + " limit=" + fmt(fk.at("limit").get<double>()) +
           " min_area=" + (fk.at("min_area").is_null() ? "none" : fmt(fk.at("min_area").get<double>())) +
           " domains=" + std::to_string(fk.at("domains_checked").get<std::size_t>()) +
           " violations=" + std::to_string(fk.at("violation_count").get<std::size_t>()) + "\n");
  return kExitOk;
}

int cmd_sphere_compare(const Options& o, const CLI::App* sub, std::ostream& out, std::ostream& err) {
  json planar;
  {
    std::ifstream in(o.planar_report);
    if (!in) throw ConfigError("cannot read planar report " + o.planar_report);
    try {
      planar = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("planar report " + o.planar_report + ": " + e.what());
    }
  }
  const EmpiricalCdf planar_psi = psi_from_report(planar);
  const json* payload = planar.contains("payload") ? &planar.at("payload") : &planar;
  const std::string recorded = planar.value("payload_hash", std::string());
  if (recorded != hex64(fnv1a64(payload->dump())))
    err << "warning: planar report hash mismatch (recorded " << (recorded.empty() ? "none" : recorded)
        << "); comparing anyway\n";

  Options so = o;
  so.model = "sphere";
  EnsembleConfig c = config_from(so, sub);
  c.validate();
  const EnsembleReport rep = run(c, o.resume);
  const double ks = ks_distance(rep.psi, planar_psi);
  const fs::path dir = o.out;
  write_text(dir / "sphere_psi.csv", [&](std::ostream& f) { write_psi_csv(f, rep.psi); });
  write_text(dir / "planar_psi.csv", [&](std::ostream& f) { write_psi_csv(f, planar_psi); });
  json summary = {{"ks_distance", ks},
                  {"degree", c.model.degree},
                  {"volume_scale", c.model.volume_scale()},
                  {"sphere_domains", rep.psi.total_count},
                  {"sphere_breakpoints", rep.psi.breakpoints.size()},
                  {"planar_domains", planar_psi.total_count},
                  {"planar_breakpoints", planar_psi.breakpoints.size()},
                  {"planar_config_hash", payload->value("config_hash", std::string())}};
  write_text(dir / "compare.json", [&](std::ostream& f) { f << summary.dump(2) << '\n'; });
  emit(out, o, summary,
       "ks=" + fmt(ks) + " sphere_breakpoints=" + std::to_string(rep.psi.breakpoints.size()) +
           " planar_breakpoints=" + std::to_string(planar_psi.breakpoints.size()) + "\n");
  return kExitOk;
}

int cmd_report(const Options& o, const CLI::App* sub, std::ostream& out) {
  EnsembleConfig c = config_from(o, sub);
  if (!o.checks.empty()) {
    c.checks.clear();
    for (const auto& name : o.checks) c.checks.insert(check_from_string(name));
  } else if (o.config_path.empty()) {
    c.checks = applicable_checks(c);
  }
  c.validate();
  const EnsembleReport rep = run(c, o.resume);
  write_psi_outputs(rep, o);
  if (c.checks.contains(Check::Sandwich))
    write_text(fs::path(o.out) / "sandwich.csv", [&](std::ostream& f) { write_sandwich_csv(f, rep.sandwich); });
  const json payload = rep.payload();
  json summary = {{"report", (fs::path(o.out) / "report.json").string()},
                  {"realizations", rep.completed},
                  {"failures", rep.failures.size()},
                  {"checks", payload.at("checks")},
                  {"wall_seconds", rep.wall_seconds}};
  std::string text = "realizations=" + std::to_string(rep.completed) +
                     " failures=" + std::to_string(rep.failures.size()) + "\n";
  for (auto it = payload.at("checks").begin(); it != payload.at("checks").end(); ++it)
    text += it.key() + ": " + it.value().dump() + "\n";
  text += "wrote " + (fs::path(o.out) / "report.json").string() + "\n";
  emit(out, o, summary, text);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Monte Carlo census of nodal domains of Gaussian random waves", "nodal-census"};
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1);
  Options o_sample, o_nodal, o_psi, o_ns, o_sandwich, o_fk, o_sphere, o_report;

  auto* sample = app.add_subcommand("sample", "sample one field and save it as NCFS");
  add_common(sample, o_sample);
  add_model(sample, o_sample, true);
  sample->add_option("--index", o_sample.index, "realization index")->capture_default_str();

  auto* nodal = app.add_subcommand("nodal", "decompose one field into nodal domains");
  add_common(nodal, o_nodal);
  add_model(nodal, o_nodal, true);
  nodal->add_option("--in", o_nodal.in_path, "NCFS sample file (otherwise sample from the model flags)");
  nodal->add_option("--index", o_nodal.index, "realization index when sampling")->capture_default_str();

  auto* psi = app.add_subcommand("psi", "empirical Psi(t) over an ensemble");
  add_common(psi, o_psi);
  add_model(psi, o_psi, false);
  add_ensemble(psi, o_psi, 100);
  psi->add_option("--format", o_psi.format, "svg | csv-only")->check(CLI::IsMember({"svg", "csv-only"}))->capture_default_str();

  auto* ns = app.add_subcommand("ns", "domain density N(F;R)/Vol B(R) per radius");
  add_common(ns, o_ns);
  add_model(ns, o_ns, true);
  add_ensemble(ns, o_ns, 100);
  ns->add_option("--radii", o_ns.radii, "radii (default 10 15 20)");

  auto* sandwich = app.add_subcommand("sandwich", "integral-geometric sandwich check");
  add_common(sandwich, o_sandwich);
  add_model(sandwich, o_sandwich, true);
  add_ensemble(sandwich, o_sandwich, 1);
  sandwich->add_option("--r", o_sandwich.r_small, "inner radius r (default: pairs (5,15) and (8,20))");
  sandwich->add_option("--R", o_sandwich.r_big, "outer radius R");
  sandwich->add_option("--t", o_sandwich.thresholds, "area thresholds (default 20 50 inf)");

  auto* fk = app.add_subcommand("faber-krahn", "minimal domain area against the Faber-Krahn floor");
  add_common(fk, o_fk);
  add_model(fk, o_fk, true);
  add_ensemble(fk, o_fk, 100);
  fk->add_option("--margin", o_fk.margin, "relative grid margin below t0")->capture_default_str();

  auto* sphere = app.add_subcommand("sphere-compare", "KS distance between sphere and planar Psi");
  add_common(sphere, o_sphere);
  add_ensemble(sphere, o_sphere, 50);
  sphere->add_option("--l", o_sphere.degree, "spherical harmonic degree")->capture_default_str();
  sphere->add_option("--ntheta", o_sphere.n_theta, "colatitude nodes (default: about 10 per wavelength)");
  sphere->add_option("--nphi", o_sphere.n_phi, "longitude nodes (default: 2 ntheta)");
  sphere->add_option("--planar", o_sphere.planar_report, "planar report.json")->required();

  auto* report = app.add_subcommand("report", "full ensemble run with checks");
  add_common(report, o_report);
  add_model(report, o_report, true);
  add_ensemble(report, o_report, 100);
  report->add_option("--checks", o_report.checks,
                     "faber_krahn sandwich helmholtz covariance perturbation (default: all applicable)");
  report->add_option("--format", o_report.format, "svg | csv-only")->check(CLI::IsMember({"svg", "csv-only"}))->capture_default_str();

  std::vector<std::string> argv_store{"nodal-census"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*sample) return cmd_sample(o_sample, out);
    if (*nodal) return cmd_nodal(o_nodal, out);
    if (*psi) return cmd_psi(o_psi, psi, out);
    if (*ns) return cmd_ns(o_ns, ns, out);
    if (*sandwich) return cmd_sandwich(o_sandwich, sandwich, out);
    if (*fk) return cmd_faber_krahn(o_fk, fk, out);
    if (*sphere) return cmd_sphere_compare(o_sphere, sphere, out, err);
    if (*report) return cmd_report(o_report, report, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const specfn::DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const EnsembleFailure& e) {
    err << "ensemble failed: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace ncensus::cli
