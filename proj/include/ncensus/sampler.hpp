#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "ncensus/model.hpp"
#include "ncensus/rng.hpp"

namespace ncensus {

/// Numerical contract violated at run time (degenerate norms and the like).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Windows whose farthest node is further than this from the expansion centre
/// are rejected by the plane-wave sampler.
inline constexpr double kMaxPlaneWaveRadius = 300.0;

/// Number of Bessel modes kept for a window of radius r: ceil(r + 7 r^{1/3} + 10).
int plane_wave_truncation(double radius);

/// Random plane wave on a planar window, expanded about the window centre as
///   F = c_0 J_0(r) + sqrt(2) sum_{n>=1} (a_n cos n theta + b_n sin n theta) J_n(r),
/// which has unit variance and covariance J_0(|x - y|). The first Gaussian
/// draw is c_0, so F(centre) = c_0 exactly.
FieldSample sample_plane_wave(RngStream rng, const GridSpec& grid);

/// Trigonometric sum over the torus frequencies 2 pi m / L inside the
/// spectral annulus, one representative per +-m pair. Evaluation uses
/// integer phases (m . i mod cells), so values are exactly periodic.
class BandLimitedField {
 public:
  BandLimitedField(const SpectralModel& model, const GridSpec& grid, RngStream rng);

  std::size_t frequency_count() const noexcept { return count_; }
  /// Value at an arbitrary integer node (wrapped onto the torus).
  double value_at(std::span<const long long> node) const;
  std::vector<double> evaluate_grid() const;

 private:
  struct Coefficient {
    double re;
    double im;
  };
  // m1 -> m2 -> m3 -> a - i b
  using Spectrum = std::map<int, std::map<int, std::map<int, Coefficient>>>;

  GridSpec grid_;
  Spectrum spectrum_;
  std::size_t count_ = 0;
  std::vector<double> cos_table_;
  std::vector<double> sin_table_;
};

/// Smallest torus side >= side for which the annulus contains a lattice
/// frequency.
double minimal_band_limited_side(int dim, double alpha, double side);

FieldSample sample_band_limited(RngStream rng, const SpectralModel& model, const GridSpec& grid);

/// sqrt(4 pi / (2l+1)) sum_m c_m Y_{l,m} over real orthonormal harmonics.
FieldSample sample_spherical_harmonic(RngStream rng, int degree, const GridSpec& grid);

/// Dispatch on model kind with RngStream(seed, index).
FieldSample sample_field(const SpectralModel& model, const GridSpec& grid, std::uint64_t seed, std::uint64_t index);

/// Fully normalized associated Legendre values P_l^m(x) for m = 0..l, with
/// 2 pi int_{-1}^{1} P^2 dx = 1 (no Condon-Shortley phase).
std::vector<double> normalized_legendre_row(int degree, double x);

/// ||Delta_h F + F|| / ||F|| over interior nodes, 5-point Laplacian.
double helmholtz_residual(const FieldSample& sample);

/// Area-weighted ||Delta_S2 f + l(l+1) f|| / (l(l+1) ||f||) with the
/// conservative finite-volume Laplacian on the latitude-longitude grid.
double sphere_eigen_residual(const FieldSample& sample, int degree);

struct CovarianceEstimate {
  double requested_lag = 0.0;
  double lag = 0.0;  // realized lag: nearest multiple of the spacing
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Lag actually used on this grid: nearest multiple of the spacing.
double realized_lag(const GridSpec& grid, double lag);

/// Average of F(x) F(x + lag e1) over the probe lattice of one sample, per lag.
std::vector<double> covariance_probe_means(const FieldSample& sample, std::span<const double> lags);

/// Monte Carlo estimate of E[F(x) F(x + lag e1)] averaged over a fixed probe
/// lattice; the standard error comes from the per-sample probe averages.
std::vector<CovarianceEstimate> empirical_covariance(std::span<const FieldSample> samples,
                                                     std::span<const double> lags);

}  // namespace ncensus
