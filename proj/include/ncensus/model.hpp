#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace ncensus {

/// Invalid model, grid or configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ModelKind {
  PlaneWave2D,        ///< random plane wave, covariance J0(|x-y|)
  BandLimitedTorus,   ///< spectral measure uniform on alpha <= |xi| <= 1, periodic
  SphericalHarmonic,  ///< random degree-l spherical harmonic on S^2
  Synthetic,          ///< externally supplied values (tests, loaded files)
};

/// Which structural properties of the spectral measure hold for a model.
struct SpectralAxioms {
  bool atomless = false;            // no atoms in the spectral measure
  bool finite_moments = false;      // integrable |xi|^p for some p > 4
  bool full_dimensional = false;    // support not in a hyperplane
  bool positive_ns_constant = false;
};

struct SpectralModel {
  ModelKind kind = ModelKind::PlaneWave2D;
  int dim = 2;         // ambient dimension of the Euclidean models
  double alpha = 1.0;  // inner radius of the spectral annulus
  int degree = 0;      // spherical harmonic degree l

  static SpectralModel plane_wave();
  static SpectralModel band_limited(int dim, double alpha);
  static SpectralModel spherical_harmonic(int degree);
  static SpectralModel synthetic(int dim = 2);

  /// Rejects alpha outside [0,1], dim outside {2,3}, degree < 1.
  void validate() const;
  SpectralAxioms axioms() const;
  /// Areas are multiplied by this before comparison with planar scales:
  /// l(l+1) on the sphere, 1 otherwise.
  double volume_scale() const;

  bool operator==(const SpectralModel&) const = default;
};

enum class Geometry { PlanarWindow, Torus, LatLongSphere };

/// Structured grid. Lengths are in units where the wavenumber is 1 (the
/// wavelength is 2 pi).
///
/// PlanarWindow: (cells+1)^dim nodes at -side/2 + i*spacing, window centred
/// at the origin. Torus: cells^dim nodes at i*spacing, periodic.
/// LatLongSphere: n_theta x n_phi nodes at colatitude (i+1/2) pi/n_theta
/// and longitude 2 pi j/n_phi.
struct GridSpec {
  Geometry geometry = Geometry::PlanarWindow;
  int dim = 2;
  double side = 0.0;
  double spacing = 0.0;
  int cells = 0;
  int n_theta = 0;
  int n_phi = 0;

  static GridSpec planar(double side, double spacing);
  static GridSpec torus(double side, double spacing, int dim = 2);
  static GridSpec sphere(int n_theta, int n_phi);

  void validate() const;
  bool periodic() const noexcept { return geometry == Geometry::Torus; }
  /// Nodes along each axis; axis 0 is the fastest-varying index.
  std::vector<std::size_t> extents() const;
  std::size_t node_count() const;
  /// Coordinate of node i along a Euclidean axis.
  double coordinate(int i) const;
  double cell_volume() const;
  /// Radius of the largest ball about the window centre that fits inside the
  /// window (planar) or half the side (torus).
  double inscribed_radius() const;

  bool operator==(const GridSpec&) const = default;
};

/// Minimal grid spacing admitted: 8 nodes per wavelength.
inline constexpr double kMinNodesPerWavelength = 8.0;

/// One realization on a grid. Immutable after construction.
class FieldSample {
 public:
  FieldSample(SpectralModel model, GridSpec grid, std::vector<double> values, std::uint64_t seed,
              std::uint64_t index);

  const SpectralModel& model() const noexcept { return model_; }
  const GridSpec& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t index() const noexcept { return index_; }

 private:
  SpectralModel model_;
  GridSpec grid_;
  std::vector<double> values_;
  std::uint64_t seed_;
  std::uint64_t index_;
};

std::string to_string(ModelKind kind);
std::string to_string(Geometry geometry);

void to_json(nlohmann::json& j, const SpectralModel& m);
void from_json(const nlohmann::json& j, SpectralModel& m);
void to_json(nlohmann::json& j, const GridSpec& g);
void from_json(const nlohmann::json& j, GridSpec& g);

}  // namespace ncensus
