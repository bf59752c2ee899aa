#include "ncensus/specfn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ncensus::specfn {

namespace {

constexpr double kPi = std::numbers::pi;

void require_argument(double x) {
  if (!std::isfinite(x)) throw DomainError("bessel: argument must be finite");
  if (x < 0.0) throw DomainError("bessel: argument must be non-negative");
}

// Ascending series. Only used where the terms decrease monotonically
// (x^2/4 < nu + 1) or x < 1, so there is no cancellation.
double ascending_series(double nu, double x) {
  if (x == 0.0) return nu == 0.0 ? 1.0 : 0.0;
  const double q = -0.25 * x * x;
  double term = std::exp(nu * std::log(0.5 * x) - std::lgamma(nu + 1.0));
  double sum = term;
  for (int k = 1; k < 500; ++k) {
    term *= q / (k * (k + nu));
    sum += term;
    if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

int miller_start(double order_max, double x) {
  const double big = std::max(order_max, x);
  int start = static_cast<int>(std::ceil(big + 15.0 * std::cbrt(big) + 30.0));
  if (start % 2 != 0) ++start;
  return start;
}

// Spherical Bessel j_m(x) for x outside the series region.
double spherical_j(int m, double x) {
  const double s = std::sin(x);
  const double c = std::cos(x);
  const double j0 = s / x;
  const double j1 = s / (x * x) - c / x;
  if (m == 0) return j0;
  if (m == 1) return j1;

  if (x >= m) {
    double prev = j0;
    double cur = j1;
    for (int k = 1; k < m; ++k) {
      const double next = (2.0 * k + 1.0) / x * cur - prev;
      prev = cur;
      cur = next;
    }
    return cur;
  }

  // Backward recurrence from well above m, normalized against whichever of
  // j0, j1 is further from a zero.
  const int start = miller_start(m, x);
  double above = 0.0;
  double cur = 1e-30;
  double at_m = 0.0;
  for (int k = start; k > 0; --k) {
    if (k == m) at_m = cur;
    const double below = (2.0 * k + 1.0) / x * cur - above;
    above = cur;
    cur = below;
    if (std::abs(cur) > 1e150) {
      cur *= 1e-150;
      above *= 1e-150;
      at_m *= 1e-150;
    }
  }
  // cur ~ j0, above ~ j1 (unnormalized)
  if (std::abs(j0) >= std::abs(j1)) return at_m * (j0 / cur);
  return at_m * (j1 / above);
}

}  // namespace

BesselOrder::BesselOrder(double nu) : nu_(nu), twice_(0) {
  if (!std::isfinite(nu) || nu < 0.0) throw DomainError("bessel: order must be finite and non-negative");
  if (nu > kMaxOrder) throw DomainError("bessel: order above supported maximum 200");
  const double t = 2.0 * nu;
  if (t != std::round(t)) throw DomainError("bessel: only integer and half-integer orders are supported");
  twice_ = static_cast<int>(std::lround(t));
}

BesselOrder BesselOrder::for_dimension(int dim) {
  if (dim < 2) throw DomainError("dimension must be at least 2");
  return BesselOrder(0.5 * dim - 1.0);
}

void bessel_j_integer_sequence(double x, std::span<double> out) {
  require_argument(x);
  if (out.empty()) return;
  const int n_max = static_cast<int>(out.size()) - 1;
  if (x < 1.0) {
    for (int k = 0; k <= n_max; ++k) out[k] = ascending_series(k, x);
    return;
  }

  const int start = miller_start(n_max, x);
  double sum_sq = 0.0;
  double sum_lin = 0.0;
  double above = 0.0;
  double cur = 1e-30;
  auto record = [&](int k, double v) {
    if (k <= n_max) out[k] = v;
    if (k == 0) {
      sum_sq += v * v;
      sum_lin += v;
    } else {
      sum_sq += 2.0 * v * v;
      if (k % 2 == 0) sum_lin += 2.0 * v;
    }
  };
  for (int k = start; k > 0; --k) {
    record(k, cur);
    const double below = (2.0 * k / x) * cur - above;
    above = cur;
    cur = below;
    if (std::abs(cur) > 1e150) {
      constexpr double s = 1e-150;
      cur *= s;
      above *= s;
      sum_sq *= s * s;
      sum_lin *= s;
      for (int j = k; j <= n_max; ++j) out[j] *= s;
    }
  }
  record(0, cur);

  // J_0^2 + 2 sum J_k^2 = 1 fixes the magnitude without cancellation;
  // J_0 + 2 sum J_2k = 1 fixes the sign.
  const double norm = std::copysign(std::sqrt(sum_sq), sum_lin);
  for (double& v : out) v /= norm;
}

double bessel_j(BesselOrder order, double x) {
  require_argument(x);
  const double nu = order.value();
  if (x == 0.0) return nu == 0.0 ? 1.0 : 0.0;
  if (x < 1.0 || 0.25 * x * x < nu + 1.0) return ascending_series(nu, x);

  if (order.is_integer()) {
    const int n = order.twice() / 2;
    std::vector<double> seq(n + 1);
    bessel_j_integer_sequence(x, seq);
    return seq[n];
  }
  const int m = (order.twice() - 1) / 2;
  return std::sqrt(2.0 * x / kPi) * spherical_j(m, x);
}

double bessel_zero(BesselOrder order, int index) {
  if (index < 1) throw DomainError("bessel_zero: index must be >= 1");
  // J_nu > 0 on (0, nu], and consecutive positive zeros are more than 2.4
  // apart, so a 0.5 scan brackets every zero exactly once.
  constexpr double kStep = 0.5;
  constexpr double kScanLimit = 1e5;
  auto f = [&](double x) { return bessel_j(order, x); };

  double a = order.value();
  double fa = f(a);
  int found = 0;
  while (true) {
    const double b = a + kStep;
    if (b > kScanLimit) throw ConvergenceError("bessel_zero: no bracket found below scan limit");
    const double fb = f(b);
    if (fb == 0.0) {
      if (++found == index) return b;
    } else if (fa != 0.0 && (fa < 0.0) != (fb < 0.0)) {
      if (++found == index) {
        // Safeguarded secant: every second step is a bisection.
        double lo = a, hi = b, flo = fa, fhi = fb;
        for (int it = 0; it < 400; ++it) {
          if (hi - lo <= 4e-16 * hi) break;
          double s = hi - fhi * (hi - lo) / (fhi - flo);
          if (it % 2 == 1 || !(s > lo && s < hi)) s = 0.5 * (lo + hi);
          const double fs = f(s);
          if (fs == 0.0) return s;
          if ((fs < 0.0) == (flo < 0.0)) {
            lo = s;
            flo = fs;
          } else {
            hi = s;
            fhi = fs;
          }
        }
        if (hi - lo > 1e-12 * hi) throw ConvergenceError("bessel_zero: refinement did not converge");
        return std::abs(flo) < std::abs(fhi) ? lo : hi;
      }
    }
    a = b;
    fa = fb;
  }
}

double unit_ball_volume(int dim) {
  if (dim < 1) throw DomainError("dimension must be positive");
  return std::pow(kPi, 0.5 * dim) / std::tgamma(0.5 * dim + 1.0);
}

double faber_krahn_floor(int dim) {
  if (dim < 2) throw DomainError("faber_krahn_floor: dimension must be at least 2");
  const double j = bessel_zero(BesselOrder::for_dimension(dim), 1);
  return unit_ball_volume(dim) * std::pow(j, dim);
}

double normalized_sphere_transform(BesselOrder order, double r) {
  require_argument(r);
  const double nu = order.value();
  if (r <= 8.0) {
    const double q = -0.25 * r * r;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 200; ++k) {
      term *= q / (k * (k + nu));
      sum += term;
      if (std::abs(term) <= 1e-18) break;
    }
    return sum;
  }
  return std::exp(std::lgamma(nu + 1.0) + nu * std::log(2.0 / r)) * bessel_j(order, r);
}

void CovarianceKernel::validate() const {
  if (dim < 2) throw DomainError("kernel: dimension must be at least 2");
  if (0.5 * dim > kMaxOrder) throw DomainError("kernel: dimension too large");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("kernel: alpha must lie in [0, 1]");
}

double kernel_eval(const CovarianceKernel& kernel, double r) {
  kernel.validate();
  require_argument(r);
  if (r == 0.0) return 1.0;
  const BesselOrder surface = BesselOrder::for_dimension(kernel.dim);
  if (kernel.alpha == 1.0) return normalized_sphere_transform(surface, r);

  // Radial average of the sphere transform with weight s^{n-1} on [alpha, 1]:
  //   int_0^a s^{n-1} L_nu(s r) ds = a^n L_{nu+1}(a r) / n.
  const BesselOrder solid(surface.value() + 1.0);
  const double an = std::pow(kernel.alpha, kernel.dim);
  const double outer = normalized_sphere_transform(solid, r);
  const double inner = an == 0.0 ? 0.0 : an * normalized_sphere_transform(solid, kernel.alpha * r);
  return (outer - inner) / (1.0 - an);
}

}  // namespace ncensus::specfn
