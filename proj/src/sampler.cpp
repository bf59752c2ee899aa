#include "ncensus/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "ncensus/specfn.hpp"

namespace ncensus {

namespace {

constexpr double kPi = std::numbers::pi;

std::size_t wrap(long long i, long long n) {
  const long long r = i % n;
  return static_cast<std::size_t>(r < 0 ? r + n : r);
}

void require_euclidean_2d(const GridSpec& grid, const char* what) {
  if (grid.geometry == Geometry::LatLongSphere || grid.dim != 2)
    throw ConfigError(std::string(what) + ": needs a two-dimensional planar or torus grid");
}

}  // namespace

int plane_wave_truncation(double radius) {
  return static_cast<int>(std::ceil(radius + 7.0 * std::cbrt(radius) + 10.0));
}

FieldSample sample_plane_wave(RngStream rng, const GridSpec& grid) {
  grid.validate();
  if (grid.geometry != Geometry::PlanarWindow) throw ConfigError("plane wave sampler: grid must be a planar window");
  const double r_max = 0.5 * grid.side * std::numbers::sqrt2;
  if (r_max > kMaxPlaneWaveRadius) {
    std::ostringstream os;
    os << "plane wave sampler: window half-diagonal " << r_max << " exceeds " << kMaxPlaneWaveRadius;
    throw ConfigError(os.str());
  }
  const int modes = plane_wave_truncation(r_max);

  const double c0 = rng.gaussian();
  std::vector<double> a(modes + 1, 0.0), b(modes + 1, 0.0);
  for (int n = 1; n <= modes; ++n) {
    a[n] = std::numbers::sqrt2 * rng.gaussian();
    b[n] = std::numbers::sqrt2 * rng.gaussian();
  }

  const auto ext = grid.extents();
  std::vector<double> values(grid.node_count());
  std::vector<double> bessel(modes + 1);
  for (std::size_t iy = 0; iy < ext[1]; ++iy) {
    const double y = grid.coordinate(static_cast<int>(iy));
    for (std::size_t ix = 0; ix < ext[0]; ++ix) {
      const double x = grid.coordinate(static_cast<int>(ix));
      const double r = std::hypot(x, y);
      specfn::bessel_j_integer_sequence(r, bessel);
      double sum = c0 * bessel[0];
      if (r > 0.0) {
        const double c1 = x / r;
        const double s1 = y / r;
        double cn = 1.0, sn = 0.0;
        for (int n = 1; n <= modes; ++n) {
          const double c = cn * c1 - sn * s1;
          sn = sn * c1 + cn * s1;
          cn = c;
          sum += bessel[n] * (a[n] * cn + b[n] * sn);
        }
      }
      values[iy * ext[0] + ix] = sum;
    }
  }
  return FieldSample(SpectralModel::plane_wave(), grid, std::move(values), rng.master_seed(), rng.stream_id());
}

double minimal_band_limited_side(int dim, double alpha, double side) {
  if (alpha == 0.0) return side;
  const int q_lim = static_cast<int>(std::ceil(side / (2.0 * kPi))) + 2;
  double best = std::numeric_limits<double>::infinity();
  const int z_lim = dim == 3 ? q_lim : 0;
  for (int m1 = 0; m1 <= q_lim; ++m1)
    for (int m2 = 0; m2 <= q_lim; ++m2)
      for (int m3 = 0; m3 <= z_lim; ++m3) {
        const double q = std::sqrt(double(m1) * m1 + double(m2) * m2 + double(m3) * m3);
        if (q == 0.0) continue;
        const double lo = 2.0 * kPi * q;
        const double hi = alpha < 1.0 ? lo / alpha : 2.0 * kPi * (q + 1.0);
        if (hi >= side) best = std::min(best, std::max(side, lo));
      }
  return best;
}

BandLimitedField::BandLimitedField(const SpectralModel& model, const GridSpec& grid, RngStream rng) : grid_(grid) {
  model.validate();
  grid.validate();
  if (model.kind != ModelKind::BandLimitedTorus) throw ConfigError("band-limited sampler: wrong model kind");
  if (grid.geometry != Geometry::Torus || grid.dim != model.dim)
    throw ConfigError("band-limited sampler: needs a torus grid of the model dimension");

  // Norms in units of the lattice step 2 pi / L.
  const double outer = grid.side / (2.0 * kPi);
  const double inner = model.alpha < 1.0 ? model.alpha * outer : outer - 1.0;
  const double hi2 = outer * outer * (1.0 + 1e-12);
  const double lo2 = inner * inner * (1.0 - 1e-12);
  const int lim = static_cast<int>(std::floor(outer * (1.0 + 1e-12)));
  const int lim3 = model.dim == 3 ? lim : 0;

  struct Mode {
    int m1, m2, m3;
  };
  std::vector<Mode> modes;
  for (int m1 = -lim; m1 <= lim; ++m1)
    for (int m2 = -lim; m2 <= lim; ++m2)
      for (int m3 = -lim3; m3 <= lim3; ++m3) {
        const bool positive = m1 > 0 || (m1 == 0 && (m2 > 0 || (m2 == 0 && m3 > 0)));
        const bool zero = m1 == 0 && m2 == 0 && m3 == 0;
        if (!positive && !(zero && model.alpha == 0.0)) continue;
        const double n2 = double(m1) * m1 + double(m2) * m2 + double(m3) * m3;
        if (n2 > hi2 || n2 < lo2) continue;
        modes.push_back({m1, m2, m3});
      }
  if (modes.empty()) {
    std::ostringstream os;
    os << "band-limited sampler: no torus frequency in the spectral annulus for side " << grid.side
       << "; minimal side is " << minimal_band_limited_side(model.dim, model.alpha, grid.side);
    throw ConfigError(os.str());
  }
  count_ = modes.size();
  const double scale = 1.0 / std::sqrt(static_cast<double>(count_));
  for (const Mode& m : modes) {
    const bool zero = m.m1 == 0 && m.m2 == 0 && m.m3 == 0;
    const double a = rng.gaussian();
    const double b = zero ? 0.0 : rng.gaussian();
    spectrum_[m.m1][m.m2][m.m3] = {a * scale, -b * scale};
  }

  const int n = grid.cells;
  cos_table_.resize(n);
  sin_table_.resize(n);
  for (int k = 0; k < n; ++k) {
    cos_table_[k] = std::cos(2.0 * kPi * k / n);
    sin_table_[k] = std::sin(2.0 * kPi * k / n);
  }
}

double BandLimitedField::value_at(std::span<const long long> node) const {
  const long long n = grid_.cells;
  const long long i = node.size() > 0 ? node[0] : 0;
  const long long j = node.size() > 1 ? node[1] : 0;
  const long long k = node.size() > 2 ? node[2] : 0;
  double out = 0.0;
  for (const auto& [m1, plane] : spectrum_) {
    double s_re = 0.0, s_im = 0.0;
    for (const auto& [m2, line] : plane) {
      double t_re = 0.0, t_im = 0.0;
      for (const auto& [m3, c] : line) {
        const std::size_t p = wrap(m3 * k, n);
        t_re += c.re * cos_table_[p] - c.im * sin_table_[p];
        t_im += c.re * sin_table_[p] + c.im * cos_table_[p];
      }
      const std::size_t p = wrap(m2 * j, n);
      s_re += t_re * cos_table_[p] - t_im * sin_table_[p];
      s_im += t_re * sin_table_[p] + t_im * cos_table_[p];
    }
    const std::size_t p = wrap(m1 * i, n);
    out += s_re * cos_table_[p] - s_im * sin_table_[p];
  }
  return out;
}

std::vector<double> BandLimitedField::evaluate_grid() const {
  const long long n = grid_.cells;
  const long long nz = grid_.dim == 3 ? n : 1;
  std::vector<double> values(grid_.node_count());

  // Same loop nesting and summation order as value_at, with the inner
  // partial sums hoisted out of the node loops.
  struct Partial {
    double re, im;
  };
  std::vector<std::vector<Partial>> t_sums(spectrum_.size());
  std::vector<Partial> s_sums(spectrum_.size());
  for (long long k = 0; k < nz; ++k) {
    std::size_t a = 0;
    for (const auto& [m1, plane] : spectrum_) {
      t_sums[a].clear();
      for (const auto& [m2, line] : plane) {
        double t_re = 0.0, t_im = 0.0;
        for (const auto& [m3, c] : line) {
          const std::size_t p = wrap(m3 * k, n);
          t_re += c.re * cos_table_[p] - c.im * sin_table_[p];
          t_im += c.re * sin_table_[p] + c.im * cos_table_[p];
        }
        t_sums[a].push_back({t_re, t_im});
      }
      ++a;
    }
    for (long long j = 0; j < n; ++j) {
      a = 0;
      for (const auto& [m1, plane] : spectrum_) {
        double s_re = 0.0, s_im = 0.0;
        std::size_t b = 0;
        for (const auto& [m2, line] : plane) {
          const Partial& t = t_sums[a][b++];
          const std::size_t p = wrap(m2 * j, n);
          s_re += t.re * cos_table_[p] - t.im * sin_table_[p];
          s_im += t.re * sin_table_[p] + t.im * cos_table_[p];
        }
        s_sums[a++] = {s_re, s_im};
      }
      double* row = values.data() + static_cast<std::size_t>((k * n + j) * n);
      for (long long i = 0; i < n; ++i) {
        double out = 0.0;
        a = 0;
        for (const auto& entry : spectrum_) {
          const std::size_t p = wrap(entry.first * i, n);
          out += s_sums[a].re * cos_table_[p] - s_sums[a].im * sin_table_[p];
          ++a;
        }
        row[i] = out;
      }
    }
  }
  return values;
}

FieldSample sample_band_limited(RngStream rng, const SpectralModel& model, const GridSpec& grid) {
  const BandLimitedField field(model, grid, rng);
  return FieldSample(model, grid, field.evaluate_grid(), rng.master_seed(), rng.stream_id());
}

std::vector<double> normalized_legendre_row(int degree, double x) {
  std::vector<double> out(degree + 1, 0.0);
  const double s = std::sqrt((1.0 - x) * (1.0 + x));
  double pmm = 1.0 / std::sqrt(4.0 * kPi);
  for (int m = 0; m <= degree; ++m) {
    if (m > 0) pmm *= std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
    if (std::abs(pmm) < 1e-290) break;  // every higher order underflows too
    if (m == degree) {
      out[m] = pmm;
      break;
    }
    double prev = pmm;
    double cur = std::sqrt(2.0 * m + 3.0) * x * pmm;
    for (int l = m + 2; l <= degree; ++l) {
      const double l2 = double(l) * l;
      const double m2 = double(m) * m;
      const double a = std::sqrt((4.0 * l2 - 1.0) / (l2 - m2));
      const double b = std::sqrt((double(l - 1) * (l - 1) - m2) / (4.0 * double(l - 1) * (l - 1) - 1.0));
      const double next = a * (x * cur - b * prev);
      prev = cur;
      cur = next;
    }
    out[m] = cur;
  }
  return out;
}

FieldSample sample_spherical_harmonic(RngStream rng, int degree, const GridSpec& grid) {
  const SpectralModel model = SpectralModel::spherical_harmonic(degree);
  grid.validate();
  if (grid.geometry != Geometry::LatLongSphere) throw ConfigError("spherical harmonic sampler: needs a sphere grid");
  if (grid.n_theta < 4 * degree || grid.n_phi < 4 * degree)
    throw ConfigError("spherical harmonic sampler: resolution below 4l nodes per direction (aliasing)");

  const double c0 = rng.gaussian();
  std::vector<double> a(degree + 1, 0.0), b(degree + 1, 0.0);
  for (int m = 1; m <= degree; ++m) {
    a[m] = rng.gaussian();
    b[m] = rng.gaussian();
  }
  const double norm = std::sqrt(4.0 * kPi / (2.0 * degree + 1.0));

  const int nt = grid.n_theta;
  const int np = grid.n_phi;
  std::vector<double> cos_table(np), sin_table(np);
  for (int k = 0; k < np; ++k) {
    cos_table[k] = std::cos(2.0 * kPi * k / np);
    sin_table[k] = std::sin(2.0 * kPi * k / np);
  }

  std::vector<double> values(grid.node_count());
  std::vector<double> ca(degree + 1), cb(degree + 1);
  for (int it = 0; it < nt; ++it) {
    const double theta = (it + 0.5) * kPi / nt;
    const auto p = normalized_legendre_row(degree, std::cos(theta));
    const double base = norm * p[0] * c0;
    for (int m = 1; m <= degree; ++m) {
      ca[m] = norm * std::numbers::sqrt2 * p[m] * a[m];
      cb[m] = norm * std::numbers::sqrt2 * p[m] * b[m];
    }
    for (int ip = 0; ip < np; ++ip) {
      double v = base;
      for (int m = 1; m <= degree; ++m) {
        const std::size_t k = static_cast<std::size_t>((static_cast<long long>(m) * ip) % np);
        v += ca[m] * cos_table[k] + cb[m] * sin_table[k];
      }
      values[static_cast<std::size_t>(it) * np + ip] = v;
    }
  }
  return FieldSample(model, grid, std::move(values), rng.master_seed(), rng.stream_id());
}

FieldSample sample_field(const SpectralModel& model, const GridSpec& grid, std::uint64_t seed, std::uint64_t index) {
  RngStream rng(seed, index);
  switch (model.kind) {
    case ModelKind::PlaneWave2D: return sample_plane_wave(rng, grid);
    case ModelKind::BandLimitedTorus: return sample_band_limited(rng, model, grid);
    case ModelKind::SphericalHarmonic: return sample_spherical_harmonic(rng, model.degree, grid);
    case ModelKind::Synthetic: break;
  }
  throw ConfigError("cannot sample a synthetic model");
}

double helmholtz_residual(const FieldSample& sample) {
  const GridSpec& grid = sample.grid();
  require_euclidean_2d(grid, "helmholtz_residual");
  const auto ext = grid.extents();
  const long long nx = static_cast<long long>(ext[0]);
  const long long ny = static_cast<long long>(ext[1]);
  const bool periodic = grid.periodic();
  const double inv_h2 = 1.0 / (grid.spacing * grid.spacing);
  auto at = [&](long long ix, long long iy) { return sample[wrap(iy, ny) * nx + wrap(ix, nx)]; };

  const long long lo = periodic ? 0 : 1;
  double res2 = 0.0, norm2 = 0.0;
  for (long long iy = lo; iy < (periodic ? ny : ny - 1); ++iy)
    for (long long ix = lo; ix < (periodic ? nx : nx - 1); ++ix) {
      const double f = at(ix, iy);
      const double lap = (at(ix + 1, iy) + at(ix - 1, iy) + at(ix, iy + 1) + at(ix, iy - 1) - 4.0 * f) * inv_h2;
      res2 += (lap + f) * (lap + f);
      norm2 += f * f;
    }
  if (norm2 == 0.0) throw NumericalError("helmholtz_residual: field has zero norm on the interior");
  return std::sqrt(res2 / norm2);
}

double sphere_eigen_residual(const FieldSample& sample, int degree) {
  const GridSpec& grid = sample.grid();
  if (grid.geometry != Geometry::LatLongSphere) throw ConfigError("sphere_eigen_residual: needs a sphere grid");
  const int nt = grid.n_theta;
  const int np = grid.n_phi;
  const double dt = kPi / nt;
  const double dp = 2.0 * kPi / np;
  const double eig = double(degree) * (degree + 1);
  double res2 = 0.0, norm2 = 0.0;
  for (int it = 0; it < nt; ++it) {
    const double theta = (it + 0.5) * dt;
    const double s = std::sin(theta);
    const double s_up = it == 0 ? 0.0 : std::sin(it * dt);
    const double s_dn = it == nt - 1 ? 0.0 : std::sin((it + 1) * dt);
    for (int ip = 0; ip < np; ++ip) {
      const std::size_t c = static_cast<std::size_t>(it) * np + ip;
      const double f = sample[c];
      const double f_up = it == 0 ? f : sample[c - np];
      const double f_dn = it == nt - 1 ? f : sample[c + np];
      const double f_w = sample[static_cast<std::size_t>(it) * np + (ip + np - 1) % np];
      const double f_e = sample[static_cast<std::size_t>(it) * np + (ip + 1) % np];
      const double lap = (s_dn * (f_dn - f) - s_up * (f - f_up)) / (s * dt * dt) +
                         (f_e - 2.0 * f + f_w) / (s * s * dp * dp);
      const double r = lap + eig * f;
      res2 += s * r * r;
      norm2 += s * f * f;
    }
  }
  if (norm2 == 0.0) throw NumericalError("sphere_eigen_residual: field has zero norm");
  return std::sqrt(res2 / norm2) / eig;
}

double realized_lag(const GridSpec& grid, double lag) {
  if (!(lag >= 0.0) || !std::isfinite(lag)) throw ConfigError("covariance: lags must be non-negative");
  if (grid.geometry == Geometry::LatLongSphere) throw ConfigError("covariance: needs a Euclidean grid");
  return static_cast<double>(std::llround(lag / grid.spacing)) * grid.spacing;
}

std::vector<double> covariance_probe_means(const FieldSample& sample, std::span<const double> lags) {
  const GridSpec& grid = sample.grid();
  const auto ext = grid.extents();
  const long long nx = static_cast<long long>(ext[0]);
  std::size_t rest = 1;
  for (std::size_t d = 1; d < ext.size(); ++d) rest *= ext[d];

  std::vector<double> out;
  for (double lag : lags) {
    const long long steps = std::llround(realized_lag(grid, lag) / grid.spacing);
    if (!grid.periodic() && steps >= nx) throw ConfigError("covariance: lag exceeds the window");

    // Probe lattice: about 8 positions per axis.
    const long long span_x = grid.periodic() ? nx : nx - steps;
    const long long stride_x = std::max<long long>(1, span_x / 8);
    double acc = 0.0;
    std::size_t probes = 0;
    for (std::size_t r = 0; r < rest; ++r) {
      bool keep = true;
      std::size_t q = r;
      for (std::size_t d = 1; d < ext.size(); ++d) {
        const std::size_t stride = std::max<std::size_t>(1, ext[d] / 8);
        if ((q % ext[d]) % stride != 0) keep = false;
        q /= ext[d];
      }
      if (!keep) continue;
      for (long long ix = 0; ix < span_x; ix += stride_x) {
        const std::size_t p = r * nx + ix;
        acc += sample[p] * sample[r * nx + wrap(ix + steps, nx)];
        ++probes;
      }
    }
    out.push_back(acc / static_cast<double>(probes));
  }
  return out;
}

std::vector<CovarianceEstimate> empirical_covariance(std::span<const FieldSample> samples,
                                                     std::span<const double> lags) {
  if (samples.size() < 2) throw ConfigError("empirical_covariance: need at least two samples");
  const GridSpec& grid = samples.front().grid();
  for (const auto& s : samples)
    if (!(s.grid() == grid) || !(s.model() == samples.front().model()))
      throw ConfigError("empirical_covariance: samples must share model and grid");

  const auto m = static_cast<double>(samples.size());
  std::vector<double> sum(lags.size(), 0.0), sum2(lags.size(), 0.0);
  for (const auto& s : samples) {
    const auto means = covariance_probe_means(s, lags);
    for (std::size_t k = 0; k < lags.size(); ++k) {
      sum[k] += means[k];
      sum2[k] += means[k] * means[k];
    }
  }
  std::vector<CovarianceEstimate> out;
  for (std::size_t k = 0; k < lags.size(); ++k) {
    const double mean = sum[k] / m;
    const double var = std::max(0.0, (sum2[k] - m * mean * mean) / (m - 1.0));
    out.push_back({lags[k], realized_lag(grid, lags[k]), mean, std::sqrt(var / m)});
  }
  return out;
}

}  // namespace ncensus
