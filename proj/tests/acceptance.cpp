// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "ncensus/cli.hpp"
#include "ncensus/engine.hpp"
#include "ncensus/sampler.hpp"
#include "ncensus/specfn.hpp"
#include "oracles.hpp"

using namespace ncensus;
using std::numbers::pi;

namespace {

constexpr std::uint64_t kSeed = 7;
constexpr double kFloor = 18.168;

int failures = 0;

void verdict(int id, bool pass, const std::string& what, const std::string& detail) {
  std::printf("%s criterion %2d  %-28s %s\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

void note(const std::string& text) {
  std::printf("     note          %s\n", text.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

// Power series of J0, independent of the library's Bessel routines.
double j0_series(double x) {
  double term = 1.0, sum = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 200; ++k) {
    term *= -q / (double(k) * k);
    sum += term;
    if (std::abs(term) < 1e-18 * std::max(1.0, std::abs(sum))) break;
  }
  return sum;
}

EnsembleConfig desk_config() {
  EnsembleConfig c;
  c.model = SpectralModel::plane_wave();
  c.grid = GridSpec::planar(40.0 * pi, 2.0 * pi / 10.0);
  c.realizations = 100;
  c.master_seed = kSeed;
  c.radii = {10.0, 15.0, 20.0};
  c.thresholds = {20.0, 50.0, kUnbounded};
  c.sandwich_pairs = {{5.0, 15.0}, {8.0, 20.0}};
  c.checks = {Check::FaberKrahn, Check::Sandwich};
  return c;
}

double min_interior_area(const SpectralModel& model, const GridSpec& grid, int count) {
  std::vector<NodalDecomposition> decs;
  for (int i = 0; i < count; ++i) decs.push_back(decompose(sample_field(model, grid, kSeed, i)));
  return faber_krahn_check(decs, 0.10).min_area;
}

}  // namespace

int main() {
  std::printf("acceptance run, %u hardware threads\n", std::max(1u, std::thread::hardware_concurrency()));

  // Desk ensemble shared by criteria 1, 2, 5, 6, 7, 8 and 11.
  const EnsembleConfig desk = desk_config();
  auto t0 = std::chrono::steady_clock::now();
  const EnsembleReport rep = run_ensemble(desk);
  const double desk_seconds = seconds_since(t0);

  // 1. Faber-Krahn floor.
  {
    const nlohmann::json& fk = rep.checks.at("faber_krahn");
    const auto violations = fk.at("violation_count").get<std::size_t>();
    const double min_area = fk.at("min_area").get<double>();
    const double coarse = min_interior_area(desk.model, desk.grid, 10);
    const double fine = min_interior_area(desk.model, GridSpec::planar(40.0 * pi, 2.0 * pi / 20.0), 10);
    const bool refines = std::abs(fine - kFloor) < std::abs(coarse - kFloor);
    const bool pass = violations == 0 && desk_seconds <= 600.0 && refines && rep.completed == 100;
    verdict(1, pass, "Faber-Krahn floor",
            "violations=" + std::to_string(violations) + fmt(" min_area=%.4f", min_area) +
                fmt(" limit=%.4f", 0.9 * kFloor) + fmt(" runtime=%.1fs", desk_seconds) +
                fmt(" min(h=2pi/10)=%.4f", coarse) + fmt(" min(h=2pi/20)=%.4f", fine));
  }

  // 2. Sandwich.
  {
    std::size_t holds = 0;
    for (const auto& v : rep.sandwich) holds += v.holds;
    verdict(2, holds == 600 && rep.sandwich.size() == 600, "sandwich determinism",
            std::to_string(holds) + "/" + std::to_string(rep.sandwich.size()) + " hold");
  }

  // 3. Covariance fidelity: spacings dividing each lag, so no lag rounding.
  {
    struct Lag {
      double lag;
      double spacing;
      int cells;
    };
    const double j01 = specfn::bessel_zero(specfn::BesselOrder(0), 1);
    bool pass = true;
    std::string detail;
    for (const Lag l : {Lag{1.0, 0.5, 12}, Lag{j01, j01 / 4.0, 12}, Lag{5.0, 5.0 / 7.0, 14}}) {
      const GridSpec grid = GridSpec::planar(l.cells * l.spacing, l.spacing);
      const double lags[] = {l.lag};
      double sum = 0, sum2 = 0;
      const int m = 2000;
      for (int i = 0; i < m; ++i) {
        const double v = covariance_probe_means(sample_field(SpectralModel::plane_wave(), grid, kSeed, i), lags)[0];
        sum += v;
        sum2 += v * v;
      }
      const double mean = sum / m;
      const double se = std::sqrt((sum2 / m - mean * mean) / (m - 1));
      const double ref = j0_series(realized_lag(grid, l.lag));
      const bool ok = std::abs(mean - ref) <= 3.0 * se;
      pass = pass && ok;
      detail += fmt("lag=%.4f", l.lag) + fmt(" est=%.4f", mean) + fmt(" J0=%.4f", ref) + fmt(" se=%.4f", se) +
                (ok ? " ok; " : " out; ");
    }
    verdict(3, pass, "covariance fidelity", detail);
  }

  // 4. Helmholtz residual order.
  {
    double coarse = 0, fine = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      coarse += helmholtz_residual(
          sample_field(SpectralModel::plane_wave(), GridSpec::planar(20.0 * pi, 2.0 * pi / 10.0), seed, 0));
      fine += helmholtz_residual(
          sample_field(SpectralModel::plane_wave(), GridSpec::planar(20.0 * pi, 2.0 * pi / 20.0), seed, 0));
    }
    const double ratio = coarse / fine;
    verdict(4, ratio >= 3.5 && ratio <= 4.5, "Helmholtz order",
            fmt("residual(2pi/10)=%.5f", coarse / 10) + fmt(" residual(2pi/20)=%.5f", fine / 10) +
                fmt(" ratio=%.3f", ratio));
  }

  // 5. NS constant stability.
  {
    const NsEstimate& ns = *rep.ns;
    std::string detail;
    for (const auto& r : ns.per_radius)
      detail += fmt("R=%g", r.radius) + fmt(":%.5f", r.ratio_mean) + fmt("+-%.5f ", r.ratio_std_error);
    const bool pass = ns_radii_consistent(ns) && ns.pooled > 0.0;
    verdict(5, pass, "NS-constant stability", detail + fmt("pooled=%.5f", ns.pooled));
  }

  // 6. Psi structural properties.
  {
    const EmpiricalCdf& psi = rep.psi;
    const double at17 = psi.eval(17.0), at19 = psi.eval(19.0), at50 = psi.eval(50.0);
    const double at_max = psi.eval(psi.breakpoints.back());
    const bool pass = psi.well_formed() && at17 == 0.0 && at_max == 1.0 && at50 - at19 > 0.0;
    verdict(6, pass, "Psi structure",
            std::string("monotone=") + (psi.well_formed() ? "yes" : "no") + fmt(" Psi(17)=%.5f", at17) +
                fmt(" Psi(max)=%.3f", at_max) + fmt(" Psi(19)=%.4f", at19) + fmt(" Psi(50)=%.4f", at50) +
                " domains=" + std::to_string(psi.total_count));
    if (at17 > 0.0) {
      std::size_t below = 0;
      for (const auto& d : rep.joint.area_perimeter) below += d.first <= 17.0;
      note(std::to_string(below) + fmt(" cell-count areas <= 17.0; smallest %.4f", psi.breakpoints.front()) +
           fmt(" = %.0f cells", psi.breakpoints.front() / desk.grid.cell_volume()));
      EnsembleConfig sub = desk;
      sub.checks = {};
      sub.area_estimator = AreaEstimator::Subcell;
      const EnsembleReport srep = run_ensemble(sub);
      note(fmt("subcell estimator on the same ensemble: Psi(17)=%.5f", srep.psi.eval(17.0)) +
           fmt(" smallest area %.4f", srep.psi.breakpoints.front()));
    }
  }

  // 7. Sphere vs plane.
  {
    EnsembleConfig sphere;
    sphere.model = SpectralModel::spherical_harmonic(80);
    sphere.grid = cli::default_sphere_grid(80);
    sphere.realizations = 50;
    sphere.master_seed = kSeed;
    sphere.radii = {};
    sphere.checks = {};
    const EnsembleReport srep = run_ensemble(sphere);
    const double ks = ks_distance(srep.psi, rep.psi);
    verdict(7, ks <= 0.10, "sphere vs plane",
            fmt("KS=%.4f", ks) + " grid=" + std::to_string(sphere.grid.n_theta) + "x" +
                std::to_string(sphere.grid.n_phi) + " sphere_breakpoints=" + std::to_string(srep.psi.breakpoints.size()) +
                " planar_breakpoints=" + std::to_string(rep.psi.breakpoints.size()));
  }

  // 8. Nodal length density against the Kac-Rice constant.
  {
    const specfn::CovarianceKernel k{2, 1.0};
    const double d = 1e-3;
    const double lambda = (2.0 - 2.0 * specfn::kernel_eval(k, d)) / (d * d);  // -K''(0)
    const double mean_grad = oracle::integrate(
        [lambda](double rho) { return rho * rho / lambda * std::exp(-rho * rho / (2.0 * lambda)); }, 0.0, 40.0, 1e-14);
    const double constant = mean_grad / std::sqrt(2.0 * pi);
    const double measured = rep.nodal_length.mean;
    const double rel = std::abs(measured - constant) / constant;
    verdict(8, rel <= 0.05, "nodal length density",
            fmt("Kac-Rice=%.6f", constant) + fmt(" (1/(2 sqrt 2)=%.6f)", 1.0 / (2.0 * std::numbers::sqrt2)) +
                fmt(" measured=%.5f", measured) + fmt("+-%.5f", rep.nodal_length.std_error) + fmt(" rel=%.4f", rel));
  }

  // 9. Union-find vs recursive flood fill.
  {
    const GridSpec grid = GridSpec::planar(1.5, 0.5);
    int mismatches = 0;
    for (int mask = 0; mask < (1 << 16); ++mask) {
      std::vector<int> sign(16);
      std::vector<double> values(16);
      for (int b = 0; b < 16; ++b) {
        sign[b] = (mask >> b) & 1 ? 1 : -1;
        values[b] = sign[b];
      }
      const auto dec = label_domains(FieldSample(SpectralModel::synthetic(), grid, values, 0, 0));
      mismatches += dec.labels != oracle::flood_fill(sign, 4, 4);
    }
    verdict(9, mismatches == 0, "labeling oracle", std::to_string(65536 - mismatches) + "/65536 identical");
  }

  // 10. Perturbation stability.
  {
    const FieldSample f = sample_field(desk.model, desk.grid, kSeed, 0);
    const FieldSample g = sample_field(desk.model, desk.grid, kSeed ^ 0x9e3779b97f4a7c15ULL, 0);
    const auto full = perturbation_stability(f, g, 1e-3);
    const auto half = perturbation_stability(f, g, 5e-4);
    const double ratio = full.median_delta_area / half.median_delta_area;
    verdict(10, ratio >= 1.5 && ratio <= 2.5, "perturbation stability",
            fmt("median|dA|(1e-3)=%.3e", full.median_delta_area) + fmt(" median|dA|(5e-4)=%.3e", half.median_delta_area) +
                fmt(" ratio=%.4f", ratio) + fmt(" matched=%.3f", full.matched_fraction) +
                fmt(" C=%.3f", full.fitted_constant));
  }

  // 11. Determinism across runs with different worker counts.
  {
    EnsembleConfig again = desk;
    again.threads = 1;
    const EnsembleReport rep2 = run_ensemble(again);
    const std::string a = rep.payload().dump(), b = rep2.payload().dump();
    verdict(11, a == b, "determinism",
            std::string(a == b ? "identical" : "different") + " payloads, " + std::to_string(a.size()) +
                " bytes, hash " + hex64(fnv1a64(a)));
  }

  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
