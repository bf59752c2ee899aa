#include "ncensus/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "ncensus/field_io.hpp"
#include "ncensus/sampler.hpp"
#include "ncensus/specfn.hpp"

namespace ncensus {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

json real_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double real_from(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kUnbounded;
    if (s == "-inf") return -kUnbounded;
    throw ConfigError("expected a number or \"inf\", got \"" + s + "\"");
  }
  return j.get<double>();
}

std::string estimator_name(AreaEstimator e) { return e == AreaEstimator::Subcell ? "subcell" : "cell-count"; }

AreaEstimator estimator_from(const std::string& s) {
  if (s == "cell-count") return AreaEstimator::CellCount;
  if (s == "subcell") return AreaEstimator::Subcell;
  throw ConfigError("unknown area estimator '" + s + "'");
}

bool euclidean_2d(const GridSpec& g) { return g.geometry != Geometry::LatLongSphere && g.dim == 2; }

// Independent stream family for perturbation directions.
std::uint64_t direction_seed(std::uint64_t master_seed) { return master_seed ^ 0x9e3779b97f4a7c15ULL; }

std::string index_stem(std::uint64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05llu", static_cast<unsigned long long>(index));
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw FormatError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& p, const std::string& text) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out << text;
    if (!out) throw FormatError("write failed: " + tmp.string());
  }
  fs::rename(tmp, p);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::string to_string(Check check) {
  switch (check) {
    case Check::FaberKrahn: return "faber_krahn";
    case Check::Sandwich: return "sandwich";
    case Check::Helmholtz: return "helmholtz";
    case Check::Covariance: return "covariance";
    case Check::Perturbation: return "perturbation";
  }
  return "?";
}

Check check_from_string(const std::string& name) {
  for (Check c : {Check::FaberKrahn, Check::Sandwich, Check::Helmholtz, Check::Covariance, Check::Perturbation})
    if (to_string(c) == name) return c;
  throw ConfigError("unknown check '" + name + "'");
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void EnsembleConfig::validate() const {
  model.validate();
  grid.validate();
  if (realizations < 1) throw ConfigError("config: realizations must be >= 1");
  switch (model.kind) {
    case ModelKind::PlaneWave2D:
      if (grid.geometry != Geometry::PlanarWindow) throw ConfigError("config: rpw model needs a planar window");
      break;
    case ModelKind::BandLimitedTorus:
      if (grid.geometry != Geometry::Torus || grid.dim != model.dim)
        throw ConfigError("config: band-limited model needs a torus grid of the same dimension");
      if (minimal_band_limited_side(model.dim, model.alpha, grid.side) > grid.side)
        throw ConfigError("config: torus side too small for the spectral annulus (need side >= " +
                          format_real(minimal_band_limited_side(model.dim, model.alpha, grid.side)) + ")");
      break;
    case ModelKind::SphericalHarmonic:
      if (grid.geometry != Geometry::LatLongSphere) throw ConfigError("config: sphere model needs a sphere grid");
      if (grid.n_theta < 4 * model.degree || grid.n_phi < 4 * model.degree)
        throw ConfigError("config: sphere grid needs at least 4l nodes per direction");
      break;
    case ModelKind::Synthetic:
      throw ConfigError("config: synthetic models cannot be sampled by an ensemble");
  }

  for (double r : radii) {
    if (!(r > 0.0) || !std::isfinite(r)) throw ConfigError("config: radii must be positive");
    if (!euclidean_2d(grid)) throw ConfigError("config: ball counts need a two-dimensional Euclidean grid");
    if (r > 0.5 * grid.side * (1.0 + 1e-12)) throw ConfigError("config: radius " + format_real(r) + " exceeds the window");
  }
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (std::isnan(thresholds[i]) || thresholds[i] < 0.0) throw ConfigError("config: thresholds must be >= 0");
    if (i > 0 && !(thresholds[i] > thresholds[i - 1])) throw ConfigError("config: thresholds must increase strictly");
  }
  if (!(fk_margin > 0.0 && fk_margin < 1.0)) throw ConfigError("config: fk margin must lie in (0, 1)");
  if (area_estimator == AreaEstimator::Subcell && !euclidean_2d(grid))
    throw ConfigError("config: subcell areas need a two-dimensional Euclidean grid");

  if (checks.contains(Check::Sandwich)) {
    if (grid.geometry != Geometry::PlanarWindow) throw ConfigError("config: sandwich check needs a planar window");
    if (grid.cells % 2 != 0) throw ConfigError("config: sandwich check needs an even cell count");
    for (auto [r, R] : sandwich_pairs)
      if (!(r > 0.0) || !(R > r) || R + r > 0.5 * grid.side * (1.0 + 1e-12))
        throw ConfigError("config: sandwich pair (" + format_real(r) + ", " + format_real(R) +
                          ") needs 0 < r < R and B(R + r) inside the window");
  }
  if (checks.contains(Check::Helmholtz) && !euclidean_2d(grid) && grid.geometry != Geometry::LatLongSphere)
    throw ConfigError("config: helmholtz check needs a 2-D grid");
  if (checks.contains(Check::Covariance)) {
    if (grid.geometry == Geometry::LatLongSphere) throw ConfigError("config: covariance check needs a Euclidean grid");
    if (realizations < 2) throw ConfigError("config: covariance check needs at least two realizations");
    for (double lag : covariance_lags) {
      const double realized = realized_lag(grid, lag);
      if (!grid.periodic() && realized >= grid.side) throw ConfigError("config: covariance lag exceeds the window");
    }
  }
  if (checks.contains(Check::Perturbation)) {
    if (!euclidean_2d(grid)) throw ConfigError("config: perturbation check needs a 2-D Euclidean grid");
    if (!(perturbation_b > 0.0) || !std::isfinite(perturbation_b))
      throw ConfigError("config: perturbation b must be positive");
  }
}

json config_json(const EnsembleConfig& c) {
  json thresholds = json::array(), pairs = json::array(), checks = json::array();
  for (double t : c.thresholds) thresholds.push_back(real_json(t));
  for (auto [r, R] : c.sandwich_pairs) pairs.push_back({r, R});
  for (Check ch : c.checks) checks.push_back(to_string(ch));
  return {{"model", c.model},
          {"grid", c.grid},
          {"realizations", c.realizations},
          {"master_seed", c.master_seed},
          {"radii", c.radii},
          {"thresholds", thresholds},
          {"sandwich_pairs", pairs},
          {"covariance_lags", c.covariance_lags},
          {"perturbation_b", c.perturbation_b},
          {"fk_margin", c.fk_margin},
          {"area_estimator", estimator_name(c.area_estimator)},
          {"checks", checks}};
}

EnsembleConfig config_from_json(const json& j) {
  EnsembleConfig c;
  try {
    c.model = j.at("model").get<SpectralModel>();
    c.grid = j.at("grid").get<GridSpec>();
    c.realizations = j.value("realizations", c.realizations);
    c.master_seed = j.value("master_seed", c.master_seed);
    if (j.contains("radii")) c.radii = j.at("radii").get<std::vector<double>>();
    if (j.contains("thresholds")) {
      c.thresholds.clear();
      for (const auto& t : j.at("thresholds")) c.thresholds.push_back(real_from(t));
    }
    if (j.contains("sandwich_pairs")) {
      c.sandwich_pairs.clear();
      for (const auto& p : j.at("sandwich_pairs")) c.sandwich_pairs.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    }
    if (j.contains("covariance_lags")) c.covariance_lags = j.at("covariance_lags").get<std::vector<double>>();
    c.perturbation_b = j.value("perturbation_b", c.perturbation_b);
    c.fk_margin = j.value("fk_margin", c.fk_margin);
    if (j.contains("area_estimator")) c.area_estimator = estimator_from(j.at("area_estimator").get<std::string>());
    if (j.contains("checks"))
      for (const auto& ch : j.at("checks")) c.checks.insert(check_from_string(ch.get<std::string>()));
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    c.keep_fields = j.value("keep_fields", false);
    c.threads = j.value("threads", 0u);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

std::uint64_t config_hash(const EnsembleConfig& config) { return fnv1a64(config_json(config).dump()); }

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("NODAL_CENSUS_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<DomainRecord> parse_domain_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "label,sign,area,perimeter,boundary_components,touches_window")
    throw FormatError("domain table: bad header");
  std::vector<DomainRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t pos; (pos = line.find(',', start)) != std::string::npos; start = pos + 1)
      f.push_back(line.substr(start, pos - start));
    f.push_back(line.substr(start));
    if (f.size() != 6 || (f[1] != "+" && f[1] != "-") || (f[5] != "0" && f[5] != "1"))
      throw FormatError("domain table: malformed row '" + line + "'");
    DomainRecord d;
    try {
      d.label = std::stoi(f[0]);
      d.sign = f[1] == "+" ? 1 : -1;
      d.area = std::stod(f[2]);
      d.perimeter = std::stod(f[3]);
      d.boundary_components = std::stoi(f[4]);
    } catch (const std::exception&) {
      throw FormatError("domain table: malformed row '" + line + "'");
    }
    d.touches_window = f[5] == "1";
    out.push_back(d);
  }
  return out;
}

namespace {

json result_data(const RealizationResult& r) {
  json sandwich = json::array();
  for (const auto& v : r.sandwich)
    sandwich.push_back({{"r", v.r}, {"R", v.radius}, {"t", real_json(v.t)}, {"lower", v.lower},
                        {"middle", v.middle}, {"upper", v.upper}, {"holds", v.holds},
                        {"ball_lattice_count", v.ball_lattice_count}});
  json data = {{"nodal_length", r.nodal_length},
               {"interior_cycle", r.interior_cycle},
               {"ns_inside", r.ns_inside},
               {"sandwich", sandwich},
               {"helmholtz", r.helmholtz ? json(*r.helmholtz) : json(nullptr)},
               {"covariance", r.covariance},
               {"perturbation", nullptr}};
  if (r.perturbation)
    data["perturbation"] = {{"median_delta_full", r.perturbation->median_delta_full},
                            {"median_delta_half", r.perturbation->median_delta_half},
                            {"matched_fraction", r.perturbation->matched_fraction},
                            {"fitted_constant", r.perturbation->fitted_constant}};
  return data;
}

RealizationResult result_from(std::uint64_t index, const json& data, std::vector<DomainRecord> domains) {
  RealizationResult r;
  r.index = index;
  r.domains = std::move(domains);
  r.nodal_length = data.at("nodal_length").get<double>();
  r.interior_cycle = data.at("interior_cycle").get<bool>();
  r.ns_inside = data.at("ns_inside").get<std::vector<long long>>();
  for (const auto& v : data.at("sandwich")) {
    SandwichVerdict s;
    s.r = v.at("r").get<double>();
    s.radius = v.at("R").get<double>();
    s.t = real_from(v.at("t"));
    s.lower = v.at("lower").get<double>();
    s.middle = v.at("middle").get<long long>();
    s.upper = v.at("upper").get<double>();
    s.holds = v.at("holds").get<bool>();
    s.ball_lattice_count = v.at("ball_lattice_count").get<long long>();
    r.sandwich.push_back(s);
  }
  if (!data.at("helmholtz").is_null()) r.helmholtz = data.at("helmholtz").get<double>();
  r.covariance = data.at("covariance").get<std::vector<double>>();
  if (const auto& p = data.at("perturbation"); !p.is_null())
    r.perturbation = PerturbationSummary{p.at("median_delta_full").get<double>(), p.at("median_delta_half").get<double>(),
                                         p.at("matched_fraction").get<double>(), p.at("fitted_constant").get<double>()};
  return r;
}

std::string domain_table_text(const std::vector<DomainRecord>& domains) {
  NodalDecomposition shell;
  shell.domains = domains;
  std::ostringstream out;
  write_domain_csv(out, shell);
  return out.str();
}

class RunDirectory {
 public:
  explicit RunDirectory(fs::path root) : root_(std::move(root)) {}

  fs::path table(std::uint64_t i) const { return root_ / "realizations" / (index_stem(i) + ".csv"); }
  fs::path aggregates(std::uint64_t i) const { return root_ / "realizations" / (index_stem(i) + ".json"); }
  fs::path field(std::uint64_t i) const { return root_ / "fields" / (index_stem(i) + ".ncfs"); }
  fs::path manifest() const { return root_ / "manifest.json"; }
  fs::path report() const { return root_ / "report.json"; }

  void prepare(bool keep_fields) const {
    fs::create_directories(root_ / "realizations");
    if (keep_fields) fs::create_directories(root_ / "fields");
  }

  void write_manifest(const EnsembleConfig& config) const {
    const json m = {{"version", kEngineVersion},
                    {"config", config_json(config)},
                    {"config_hash", hex64(config_hash(config))}};
    write_file_atomic(manifest(), m.dump(2) + "\n");
  }

  void store(const RealizationResult& r) const {
    const std::string csv = domain_table_text(r.domains);
    const json data = result_data(r);
    const json agg = {{"index", r.index},
                      {"table_checksum", hex64(fnv1a64(csv))},
                      {"data", data},
                      {"checksum", hex64(fnv1a64(data.dump()))}};
    write_file_atomic(table(r.index), csv);
    // written last: its presence marks the realization complete
    write_file_atomic(aggregates(r.index), agg.dump() + "\n");
  }

  std::optional<RealizationResult> load(std::uint64_t i, const EnsembleConfig& config) const {
    try {
      if (!fs::exists(table(i)) || !fs::exists(aggregates(i))) return std::nullopt;
      const std::string csv = read_file(table(i));
      const json agg = json::parse(read_file(aggregates(i)));
      if (agg.at("index").get<std::uint64_t>() != i) return std::nullopt;
      if (agg.at("table_checksum").get<std::string>() != hex64(fnv1a64(csv))) return std::nullopt;
      const json& data = agg.at("data");
      if (agg.at("checksum").get<std::string>() != hex64(fnv1a64(data.dump()))) return std::nullopt;
      RealizationResult r = result_from(i, data, parse_domain_csv(csv));
      if (r.ns_inside.size() != config.radii.size()) return std::nullopt;
      return r;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }

 private:
  fs::path root_;
};

RealizationResult compute_realization(const EnsembleConfig& config, std::uint64_t index, const RunDirectory* dir) {
  const FieldSample sample = sample_field(config.model, config.grid, config.master_seed, index);
  if (dir && config.keep_fields) write_field(dir->field(index), sample);
  const NodalDecomposition dec = decompose(sample, config.area_estimator);

  RealizationResult r;
  r.index = index;
  r.domains = dec.domains;
  r.nodal_length = dec.nodal_volume;
  r.interior_cycle = nesting_graph(dec).interior_cycle;

  if (!config.radii.empty()) {
    const BallMembership ball(dec, Point2{});
    for (double R : config.radii) r.ns_inside.push_back(ball.counts(R).inside);
  }
  if (config.checks.contains(Check::Sandwich))
    for (auto [small, big] : config.sandwich_pairs) {
      const auto v = sandwich_check(dec, small, big, config.thresholds);
      r.sandwich.insert(r.sandwich.end(), v.begin(), v.end());
    }
  if (config.checks.contains(Check::Helmholtz))
    r.helmholtz = config.grid.geometry == Geometry::LatLongSphere ? sphere_eigen_residual(sample, config.model.degree)
                                                                   : helmholtz_residual(sample);
  if (config.checks.contains(Check::Covariance)) r.covariance = covariance_probe_means(sample, config.covariance_lags);
  if (config.checks.contains(Check::Perturbation)) {
    const FieldSample direction =
        sample_field(config.model, config.grid, direction_seed(config.master_seed), index);
    const auto full = perturbation_stability(sample, direction, config.perturbation_b);
    const auto half = perturbation_stability(sample, direction, 0.5 * config.perturbation_b);
    r.perturbation = PerturbationSummary{full.median_delta_area, half.median_delta_area, full.matched_fraction,
                                         full.fitted_constant};
  }
  return r;
}

double window_measure(const EnsembleConfig& c) {
  if (c.grid.geometry == Geometry::LatLongSphere) return 4.0 * kPi;
  return std::pow(c.grid.side, c.grid.dim);
}

double reference_covariance(const EnsembleConfig& c, double lag) {
  specfn::CovarianceKernel k;
  k.dim = c.model.dim;
  k.alpha = c.model.kind == ModelKind::PlaneWave2D ? 1.0 : c.model.alpha;
  return specfn::kernel_eval(k, lag);
}

EnsembleReport fold(const EnsembleConfig& config, std::vector<RealizationResult> results,
                    std::vector<RealizationFailure> failures) {
  EnsembleReport rep;
  rep.config = config;
  rep.config_hash = config_hash(config);
  rep.completed = results.size();
  rep.failures = std::move(failures);

  const double scale = config.model.volume_scale();
  const double length_scale = std::sqrt(scale);
  std::vector<double> areas, perimeters, lengths;
  for (const auto& r : results) {
    for (const auto& d : r.domains) {
      if (d.touches_window) continue;
      areas.push_back(d.area * scale);
      perimeters.push_back(d.perimeter * length_scale);
      rep.joint.area_perimeter.emplace_back(d.area * scale, d.perimeter * length_scale);
    }
    if (r.interior_cycle) rep.interior_cycle_realizations.push_back(r.index);
    lengths.push_back(r.nodal_length / window_measure(config) / length_scale);
    rep.sandwich.insert(rep.sandwich.end(), r.sandwich.begin(), r.sandwich.end());
  }
  rep.psi = EmpiricalCdf::from_observations(areas);
  rep.joint.perimeter = EmpiricalCdf::from_observations(perimeters);
  rep.nodal_length = mean_with_error(lengths);

  if (!config.radii.empty()) {
    NsEstimate est;
    std::size_t largest = 0;
    for (std::size_t k = 0; k < config.radii.size(); ++k) {
      std::vector<double> ratios;
      const double vol = kPi * config.radii[k] * config.radii[k];
      for (const auto& r : results) ratios.push_back(static_cast<double>(r.ns_inside[k]) / vol);
      const auto m = mean_with_error(ratios);
      est.per_radius.push_back({config.radii[k], m.mean, m.std_error});
      if (config.radii[k] > config.radii[largest]) largest = k;
    }
    est.pooled = est.per_radius[largest].ratio_mean;
    est.std_error = est.per_radius[largest].ratio_std_error;
    rep.ns = est;
  }

  rep.checks = json::object();
  if (config.checks.contains(Check::FaberKrahn)) {
    const double floor = specfn::faber_krahn_floor(config.grid.geometry == Geometry::LatLongSphere ? 2 : config.grid.dim);
    const double limit = (1.0 - config.fk_margin) * floor;
    double min_area = kUnbounded;
    std::size_t checked = 0;
    json violations = json::array();
    for (const auto& r : results)
      for (const auto& d : r.domains) {
        if (d.touches_window) continue;
        ++checked;
        const double a = d.area * scale;
        min_area = std::min(min_area, a);
        if (a < limit) violations.push_back({{"index", r.index}, {"label", d.label}, {"area", a}});
      }
    rep.checks["faber_krahn"] = {{"floor", floor},
                                 {"margin", config.fk_margin},
                                 {"limit", limit},
                                 {"domains_checked", checked},
                                 {"min_area", checked ? json(min_area) : json(nullptr)},
                                 {"violation_count", violations.size()},
                                 {"violations", violations}};
  }
  if (config.checks.contains(Check::Sandwich)) {
    std::size_t holds = 0;
    json fails = json::array();
    for (const auto& r : results)
      for (const auto& v : r.sandwich) {
        if (v.holds) ++holds;
        else fails.push_back({{"index", r.index}, {"r", v.r}, {"R", v.radius}, {"t", real_json(v.t)}});
      }
    const std::size_t total = holds + fails.size();
    rep.checks["sandwich"] = {{"evaluated", total}, {"holds", holds}, {"failures", fails}};
  }
  if (config.checks.contains(Check::Helmholtz)) {
    std::vector<double> res;
    for (const auto& r : results)
      if (r.helmholtz) res.push_back(*r.helmholtz);
    const auto m = mean_with_error(res);
    rep.checks["helmholtz"] = {{"mean_residual", m.mean}, {"stderr", m.std_error}, {"samples", m.samples}};
  }
  if (config.checks.contains(Check::Covariance)) {
    json lags = json::array();
    for (std::size_t k = 0; k < config.covariance_lags.size(); ++k) {
      std::vector<double> means;
      for (const auto& r : results) means.push_back(r.covariance.at(k));
      const auto m = mean_with_error(means);
      const double lag = realized_lag(config.grid, config.covariance_lags[k]);
      const double ref = reference_covariance(config, lag);
      lags.push_back({{"requested_lag", config.covariance_lags[k]},
                      {"lag", lag},
                      {"estimate", m.mean},
                      {"stderr", m.std_error},
                      {"reference", ref},
                      {"within_3_stderr", std::abs(m.mean - ref) <= 3.0 * m.std_error}});
    }
    rep.checks["covariance"] = {{"lags", lags}, {"samples", results.size()}};
  }
  if (config.checks.contains(Check::Perturbation)) {
    std::vector<double> full, half, frac, c;
    for (const auto& r : results)
      if (r.perturbation) {
        full.push_back(r.perturbation->median_delta_full);
        half.push_back(r.perturbation->median_delta_half);
        frac.push_back(r.perturbation->matched_fraction);
        c.push_back(r.perturbation->fitted_constant);
      }
    const double mf = median(full), mh = median(half);
    rep.checks["perturbation"] = {{"b", config.perturbation_b},
                                  {"median_delta_area_b", mf},
                                  {"median_delta_area_half_b", mh},
                                  {"ratio", mh > 0.0 ? json(mf / mh) : json(nullptr)},
                                  {"matched_fraction_median", median(frac)},
                                  {"fitted_constant_median", median(c)}};
  }
  return rep;
}

EnsembleReport execute(const EnsembleConfig& config, const RunHooks& hooks, const fs::path& dir_path, bool resume) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  const std::uint64_t m = config.realizations;

  std::optional<RunDirectory> dir;
  if (!dir_path.empty()) {
    dir.emplace(dir_path);
    if (resume) {
      json manifest;
      try {
        manifest = json::parse(read_file(dir->manifest()));
      } catch (const std::exception& e) {
        throw ConfigError("resume: cannot read manifest in " + dir_path.string() + ": " + e.what());
      }
      if (manifest.value("config_hash", std::string()) != hex64(config_hash(config)))
        throw ConfigError("resume: config hash mismatch with " + dir->manifest().string());
    }
    dir->prepare(config.keep_fields);
    dir->write_manifest(config);
  }

  std::vector<std::optional<RealizationResult>> results(m);
  std::vector<std::optional<std::string>> errors(m);
  std::uint64_t loaded = 0;
  if (resume && dir)
    for (std::uint64_t i = 0; i < m; ++i)
      if ((results[i] = dir->load(i, config))) ++loaded;

  std::vector<std::uint64_t> order;
  if (hooks.dispatch_order) order = hooks.dispatch_order(m);
  else
    for (std::uint64_t i = 0; i < m; ++i) order.push_back(i);
  std::vector<std::uint64_t> todo;
  for (std::uint64_t i : order)
    if (i < m && !results[i]) todo.push_back(i);

  const unsigned threads = std::max<unsigned>(1, std::min<std::uint64_t>(resolve_threads(config.threads), todo.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < todo.size();) {
      const std::uint64_t i = todo[k];
      try {
        if (hooks.before_realization) hooks.before_realization(i);
        RealizationResult r = compute_realization(config, i, dir ? &*dir : nullptr);
        if (dir) dir->store(r);
        results[i] = std::move(r);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      } catch (...) {
        errors[i] = "unknown failure";
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<RealizationResult> done;
  std::vector<RealizationFailure> failures;
  for (std::uint64_t i = 0; i < m; ++i) {
    if (results[i]) done.push_back(std::move(*results[i]));
    else failures.push_back({i, errors[i].value_or("not computed")});
  }
  if (failures.size() * 10 > m)
    throw EnsembleFailure(std::to_string(failures.size()) + " of " + std::to_string(m) +
                          " realizations failed (first: #" + std::to_string(failures.front().index) + ": " +
                          failures.front().message + ")");

  EnsembleReport rep = fold(config, std::move(done), std::move(failures));
  rep.loaded = loaded;
  rep.computed = todo.size();
  rep.threads = threads;
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (dir) write_file_atomic(dir->report(), rep.to_json().dump(2) + "\n");
  return rep;
}

}  // namespace

RealizationResult run_realization(const EnsembleConfig& config, std::uint64_t index) {
  config.validate();
  return compute_realization(config, index, nullptr);
}

EnsembleReport run_ensemble(const EnsembleConfig& config, const RunHooks& hooks) {
  return execute(config, hooks, config.output_dir, false);
}

EnsembleReport resume_ensemble(const EnsembleConfig& config, const fs::path& partial_dir, const RunHooks& hooks) {
  return execute(config, hooks, partial_dir, true);
}

json EnsembleReport::payload() const {
  json failures_json = json::array();
  for (const auto& f : failures) failures_json.push_back({{"index", f.index}, {"message", f.message}});

  json psi_json = {{"total_count", psi.total_count},
                   {"breakpoints", psi.breakpoints},
                   {"values", psi.values},
                   {"largest_jump", psi.largest_jump()}};
  json at = json::array();
  for (double t : config.thresholds) at.push_back({{"t", real_json(t)}, {"value", psi.eval(t)}});
  psi_json["at_thresholds"] = at;

  json ns_json = nullptr;
  if (ns) {
    json per = json::array();
    for (const auto& r : ns->per_radius)
      per.push_back({{"R", r.radius}, {"ratio_mean", r.ratio_mean}, {"ratio_stderr", r.ratio_std_error}});
    ns_json = {{"per_radius", per},
               {"pooled", ns->pooled},
               {"stderr", ns->std_error},
               {"radii_consistent", ns_radii_consistent(*ns)}};
  }

  return {{"version", kEngineVersion},
          {"config", config_json(config)},
          {"config_hash", hex64(config_hash)},
          {"realizations", {{"requested", config.realizations}, {"completed", completed}, {"failures", failures_json}}},
          {"psi", psi_json},
          {"perimeter", {{"total_count", joint.perimeter.total_count},
                         {"min", joint.perimeter.empty() ? json(nullptr) : json(joint.perimeter.breakpoints.front())}}},
          {"ns", ns_json},
          {"nodal_length_density", {{"mean", nodal_length.mean}, {"stderr", nodal_length.std_error}}},
          {"checks", checks},
          {"diagnostics", {{"interior_cycle_realizations", interior_cycle_realizations}}}};
}

json EnsembleReport::to_json() const {
  const json p = payload();
  return {{"payload", p},
          {"payload_hash", hex64(fnv1a64(p.dump()))},
          {"timing", {{"wall_seconds", wall_seconds}, {"threads", threads}, {"loaded", loaded}, {"computed", computed}}}};
}

EmpiricalCdf psi_from_report(const json& report) {
  const json& p = report.contains("payload") ? report.at("payload") : report;
  try {
    const json& psi = p.at("psi");
    EmpiricalCdf cdf;
    cdf.breakpoints = psi.at("breakpoints").get<std::vector<double>>();
    cdf.values = psi.at("values").get<std::vector<double>>();
    cdf.total_count = psi.at("total_count").get<std::size_t>();
    if (cdf.breakpoints.size() != cdf.values.size()) throw FormatError("report: psi arrays differ in length");
    const double n = static_cast<double>(cdf.total_count);
    for (double v : cdf.values) cdf.std_error.push_back(n > 0 ? std::sqrt(v * (1.0 - v) / n) : 0.0);
    return cdf;
  } catch (const json::exception& e) {
    throw FormatError(std::string("report: ") + e.what());
  }
}

}  // namespace ncensus
