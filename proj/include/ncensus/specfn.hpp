#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ncensus::specfn {

/// Raised for arguments outside the supported domain (negative x, unsupported order, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when an iterative procedure cannot bracket or converge.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kMaxOrder = 200.0;

/// Order of a Bessel function of the first kind.
///
/// Integer and half-integer orders up to kMaxOrder are supported; any other
/// value is rejected at construction.
class BesselOrder {
 public:
  explicit BesselOrder(double nu);

  /// Order (n/2 - 1) attached to the unit sphere in R^n.
  static BesselOrder for_dimension(int dim);

  double value() const noexcept { return nu_; }
  bool is_integer() const noexcept { return twice_ % 2 == 0; }
  /// 2*nu, exact.
  int twice() const noexcept { return twice_; }

 private:
  double nu_;
  int twice_;
};

/// J_nu(x) for x >= 0. Absolute error below 1e-10 on [0, 1000].
double bessel_j(BesselOrder order, double x);

/// Fills out[k] = J_k(x) for k = 0 .. out.size()-1 with one backward
/// recurrence (Miller's algorithm). x >= 0.
void bessel_j_integer_sequence(double x, std::span<double> out);

/// k-th positive zero j_{nu,k} (k >= 1).
double bessel_zero(BesselOrder order, int index);

/// Volume of the ball in R^dim whose first Dirichlet eigenvalue is 1,
/// i.e. vol(B_1) * j_{dim/2-1,1}^dim. For dim = 2 this is pi * j_{0,1}^2.
double faber_krahn_floor(int dim);

/// Volume of the unit ball in R^dim.
double unit_ball_volume(int dim);

/// Gamma(nu+1) (2/r)^nu J_nu(r), the Fourier transform of the normalized
/// surface measure on the unit sphere of R^{2nu+2}. Equals 1 at r = 0.
double normalized_sphere_transform(BesselOrder order, double r);

enum class KernelConvention { UnitWavenumber };

/// Covariance of the unit-variance isotropic field whose spectral measure is
/// uniform on the annulus alpha <= |xi| <= 1 in R^dim (surface measure on
/// the unit sphere when alpha = 1).
struct CovarianceKernel {
  int dim = 2;
  double alpha = 1.0;
  KernelConvention convention = KernelConvention::UnitWavenumber;

  void validate() const;
};

double kernel_eval(const CovarianceKernel& kernel, double r);

}  // namespace ncensus::specfn
