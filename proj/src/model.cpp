#include "ncensus/model.hpp"

#include <cmath>
#include <numbers>

namespace ncensus {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

int cells_for(double side, double spacing) {
  if (!(side > 0.0) || !(spacing > 0.0) || !std::isfinite(side) || !std::isfinite(spacing))
    throw ConfigError("grid: side and spacing must be positive");
  const double ratio = side / spacing;
  const double cells = std::round(ratio);
  if (std::abs(ratio - cells) > 1e-9 * std::max(1.0, ratio))
    throw ConfigError("grid: side must be an integer multiple of the spacing");
  return static_cast<int>(cells);
}
}  // namespace

SpectralModel SpectralModel::plane_wave() { return {ModelKind::PlaneWave2D, 2, 1.0, 0}; }

SpectralModel SpectralModel::band_limited(int dim, double alpha) {
  SpectralModel m{ModelKind::BandLimitedTorus, dim, alpha, 0};
  m.validate();
  return m;
}

SpectralModel SpectralModel::spherical_harmonic(int degree) {
  SpectralModel m{ModelKind::SphericalHarmonic, 2, 1.0, degree};
  m.validate();
  return m;
}

SpectralModel SpectralModel::synthetic(int dim) { return {ModelKind::Synthetic, dim, 1.0, 0}; }

void SpectralModel::validate() const {
  switch (kind) {
    case ModelKind::PlaneWave2D:
      if (dim != 2) throw ConfigError("plane wave model is two-dimensional");
      break;
    case ModelKind::BandLimitedTorus:
      if (dim != 2 && dim != 3) throw ConfigError("band-limited model: dim must be 2 or 3");
      if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("band-limited model: alpha must lie in [0, 1]");
      break;
    case ModelKind::SphericalHarmonic:
      if (degree < 1) throw ConfigError("spherical harmonic model: degree must be >= 1");
      break;
    case ModelKind::Synthetic:
      if (dim != 2 && dim != 3) throw ConfigError("synthetic model: dim must be 2 or 3");
      break;
  }
}

SpectralAxioms SpectralModel::axioms() const {
  switch (kind) {
    case ModelKind::PlaneWave2D:
    case ModelKind::SphericalHarmonic:
      // circle measure: atomless, compact, not in a line; c > 0
      return {true, true, true, true};
    case ModelKind::BandLimitedTorus:
      return {true, true, true, true};
    case ModelKind::Synthetic:
      return {};
  }
  return {};
}

double SpectralModel::volume_scale() const {
  if (kind == ModelKind::SphericalHarmonic) return static_cast<double>(degree) * (degree + 1);
  return 1.0;
}

GridSpec GridSpec::planar(double side, double spacing) {
  GridSpec g{Geometry::PlanarWindow, 2, side, spacing, cells_for(side, spacing), 0, 0};
  g.validate();
  return g;
}

GridSpec GridSpec::torus(double side, double spacing, int dim) {
  GridSpec g{Geometry::Torus, dim, side, spacing, cells_for(side, spacing), 0, 0};
  g.validate();
  return g;
}

GridSpec GridSpec::sphere(int n_theta, int n_phi) {
  GridSpec g{Geometry::LatLongSphere, 2, 0.0, 0.0, 0, n_theta, n_phi};
  g.validate();
  return g;
}

void GridSpec::validate() const {
  if (geometry == Geometry::LatLongSphere) {
    if (n_theta < 4 || n_phi < 4) throw ConfigError("sphere grid: need at least 4 nodes per direction");
    if (n_phi % 2 != 0) throw ConfigError("sphere grid: n_phi must be even");
    return;
  }
  if (dim != 2 && dim != 3) throw ConfigError("grid: dim must be 2 or 3");
  if (geometry == Geometry::PlanarWindow && dim != 2) throw ConfigError("planar window grids are two-dimensional");
  if (cells_for(side, spacing) != cells) throw ConfigError("grid: cell count inconsistent with side/spacing");
  if (spacing > kTwoPi / kMinNodesPerWavelength * (1.0 + 1e-12))
    throw ConfigError("grid: spacing above 2pi/8 (fewer than 8 nodes per wavelength)");
  if (cells < 2) throw ConfigError("grid: need at least two cells per axis");
}

std::vector<std::size_t> GridSpec::extents() const {
  switch (geometry) {
    case Geometry::PlanarWindow:
      return {static_cast<std::size_t>(cells + 1), static_cast<std::size_t>(cells + 1)};
    case Geometry::Torus:
      return std::vector<std::size_t>(dim, static_cast<std::size_t>(cells));
    case Geometry::LatLongSphere:
      return {static_cast<std::size_t>(n_phi), static_cast<std::size_t>(n_theta)};
  }
  return {};
}

std::size_t GridSpec::node_count() const {
  std::size_t n = 1;
  for (auto e : extents()) n *= e;
  return n;
}

double GridSpec::coordinate(int i) const {
  if (geometry == Geometry::PlanarWindow) return -0.5 * side + i * spacing;
  if (geometry == Geometry::Torus) return i * spacing;
  throw ConfigError("grid: sphere nodes have angular coordinates");
}

double GridSpec::cell_volume() const {
  if (geometry == Geometry::LatLongSphere) throw ConfigError("grid: sphere cells have latitude-dependent area");
  return std::pow(spacing, dim);
}

double GridSpec::inscribed_radius() const {
  if (geometry == Geometry::LatLongSphere) throw ConfigError("grid: no Euclidean window on the sphere");
  return 0.5 * side;
}

FieldSample::FieldSample(SpectralModel model, GridSpec grid, std::vector<double> values, std::uint64_t seed,
                         std::uint64_t index)
    : model_(model), grid_(grid), values_(std::move(values)), seed_(seed), index_(index) {
  grid_.validate();
  if (values_.size() != grid_.node_count()) throw ConfigError("sample: value count does not match the grid");
  for (double v : values_)
    if (!std::isfinite(v)) throw ConfigError("sample: non-finite value");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::PlaneWave2D: return "rpw";
    case ModelKind::BandLimitedTorus: return "band";
    case ModelKind::SphericalHarmonic: return "sphere";
    case ModelKind::Synthetic: return "synthetic";
  }
  return "?";
}

std::string to_string(Geometry geometry) {
  switch (geometry) {
    case Geometry::PlanarWindow: return "planar";
    case Geometry::Torus: return "torus";
    case Geometry::LatLongSphere: return "sphere";
  }
  return "?";
}

namespace {
ModelKind model_kind_from(const std::string& s) {
  if (s == "rpw") return ModelKind::PlaneWave2D;
  if (s == "band") return ModelKind::BandLimitedTorus;
  if (s == "sphere") return ModelKind::SphericalHarmonic;
  if (s == "synthetic") return ModelKind::Synthetic;
  throw ConfigError("unknown model kind '" + s + "'");
}

Geometry geometry_from(const std::string& s) {
  if (s == "planar") return Geometry::PlanarWindow;
  if (s == "torus") return Geometry::Torus;
  if (s == "sphere") return Geometry::LatLongSphere;
  throw ConfigError("unknown geometry '" + s + "'");
}
}  // namespace

void to_json(nlohmann::json& j, const SpectralModel& m) {
  j = {{"kind", to_string(m.kind)}, {"dim", m.dim}, {"alpha", m.alpha}, {"degree", m.degree}};
}

void from_json(const nlohmann::json& j, SpectralModel& m) {
  m.kind = model_kind_from(j.at("kind").get<std::string>());
  m.dim = j.value("dim", 2);
  m.alpha = j.value("alpha", 1.0);
  m.degree = j.value("degree", 0);
  m.validate();
}

void to_json(nlohmann::json& j, const GridSpec& g) {
  j = {{"geometry", to_string(g.geometry)}, {"dim", g.dim},         {"side", g.side},
       {"spacing", g.spacing},              {"cells", g.cells},     {"n_theta", g.n_theta},
       {"n_phi", g.n_phi}};
}

void from_json(const nlohmann::json& j, GridSpec& g) {
  const Geometry geometry = geometry_from(j.at("geometry").get<std::string>());
  if (geometry == Geometry::LatLongSphere) {
    g = GridSpec::sphere(j.at("n_theta").get<int>(), j.at("n_phi").get<int>());
  } else if (geometry == Geometry::Torus) {
    g = GridSpec::torus(j.at("side").get<double>(), j.at("spacing").get<double>(), j.value("dim", 2));
  } else {
    g = GridSpec::planar(j.at("side").get<double>(), j.at("spacing").get<double>());
  }
}

}  // namespace ncensus
