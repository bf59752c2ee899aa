#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "ncensus/sampler.hpp"
#include "ncensus/specfn.hpp"
#include "ncensus/stats.hpp"
#include "oracles.hpp"

using namespace ncensus;
using std::numbers::pi;

namespace {

NodalDecomposition fake_decomposition(const std::vector<double>& areas, bool touching = false) {
  NodalDecomposition dec;
  dec.grid = GridSpec::planar(4.0, 0.5);
  dec.model = SpectralModel::synthetic();
  dec.measured = true;
  for (std::size_t i = 0; i < areas.size(); ++i) {
    DomainRecord d;
    d.label = static_cast<int>(i);
    d.area = areas[i];
    d.perimeter = 4.0 * std::sqrt(areas[i]);
    d.touches_window = touching;
    dec.domains.push_back(d);
  }
  return dec;
}

FieldSample sin_sin(const GridSpec& grid, double shift) {
  return oracle::synthetic_2d(grid, [shift](double x, double y) { return std::sin(x + shift) * std::sin(y + shift); });
}

std::vector<NodalDecomposition> plane_waves(double side, int count, std::uint64_t seed) {
  std::vector<NodalDecomposition> out;
  const GridSpec grid = GridSpec::planar(side, 2.0 * pi / 10.0);
  for (int i = 0; i < count; ++i) out.push_back(decompose(sample_field(SpectralModel::plane_wave(), grid, seed, i)));
  return out;
}

// Direct enumeration of the discrete sandwich quantities.
struct BruteSandwich {
  long long lower_sum = 0, middle = 0, upper_sum = 0, ball = 0;
};

BruteSandwich brute_sandwich(const NodalDecomposition& dec, double r, double R, double t) {
  const GridSpec& g = dec.grid;
  const long long n = g.cells + 1, c = g.cells / 2;
  const double h = g.spacing;
  const double rr = (r / h) * (r / h), lo2 = ((R - r) / h) * ((R - r) / h), up2 = ((R + r) / h) * ((R + r) / h),
               big2 = (R / h) * (R / h);
  std::vector<std::vector<std::pair<long long, long long>>> nodes(dec.domains.size());
  for (long long y = 0; y < n; ++y)
    for (long long x = 0; x < n; ++x) nodes[dec.labels[y * n + x]].push_back({x, y});
  auto qualifies = [&](std::size_t l) { return !std::isfinite(t) || dec.domains[l].area <= t; };
  BruteSandwich out;
  for (long long dy = -n; dy <= n; ++dy)
    for (long long dx = -n; dx <= n; ++dx) out.ball += double(dx * dx + dy * dy) < rr;
  for (std::size_t l = 0; l < nodes.size(); ++l) {
    if (!qualifies(l)) continue;
    long long far = 0;
    for (auto [x, y] : nodes[l]) far = std::max(far, (x - c) * (x - c) + (y - c) * (y - c));
    out.middle += double(far) < big2;
  }
  for (long long uy = 0; uy < n; ++uy)
    for (long long ux = 0; ux < n; ++ux) {
      const double d2 = double((ux - c) * (ux - c) + (uy - c) * (uy - c));
      if (!(d2 < up2)) continue;
      for (std::size_t l = 0; l < nodes.size(); ++l) {
        if (!qualifies(l)) continue;
        long long far = 0, near = -1;
        for (auto [x, y] : nodes[l]) {
          const long long q = (x - ux) * (x - ux) + (y - uy) * (y - uy);
          far = std::max(far, q);
          near = near < 0 ? q : std::min(near, q);
        }
        if (double(near) <= rr) ++out.upper_sum;
        if (d2 < lo2 && double(far) < rr) ++out.lower_sum;
      }
    }
  return out;
}

}  // namespace

TEST_CASE("empirical CDF basics") {
  const auto cdf = EmpiricalCdf::from_observations({3.0, 1.0, 2.0});
  CHECK(cdf.eval(2.5) == doctest::Approx(2.0 / 3.0));
  CHECK(cdf.eval(2.0) == doctest::Approx(2.0 / 3.0));
  CHECK(cdf.eval(0.5) == 0.0);
  CHECK(cdf.eval(3.0) == 1.0);
  CHECK(cdf.well_formed());
  CHECK(cdf.largest_jump() == doctest::Approx(1.0 / 3.0));
  CHECK(cdf.total_count == 3);
  const auto ties = EmpiricalCdf::from_observations({1.0, 1.0, 2.0, 2.0});
  CHECK(ties.breakpoints.size() == 2);
  CHECK(ties.values[0] == 0.5);
  CHECK(ties.std_error[0] == doctest::Approx(0.25));
}

TEST_CASE("psi estimate counts interior domains") {
  const std::vector<NodalDecomposition> decs{fake_decomposition({1.0, 2.0, 3.0})};
  const auto psi = psi_estimate(decs, Window{}, 1.0);
  CHECK(psi.eval(2.5) == doctest::Approx(2.0 / 3.0));
  CHECK(psi_estimate(decs, Window{}, 2.0).eval(2.5) == doctest::Approx(1.0 / 3.0));
  const std::vector<NodalDecomposition> none{fake_decomposition({1.0, 2.0}, true)};
  CHECK_THROWS_AS(psi_estimate(none, Window{}, 1.0), EmptyEstimateError);
  CHECK_THROWS_AS(psi_estimate(std::vector<NodalDecomposition>{}, Window{}, 1.0), EmptyEstimateError);
}

TEST_CASE("psi estimate is a distribution function on plane waves") {
  const auto decs = plane_waves(20.0 * pi, 5, 1);
  const auto psi = psi_estimate(decs, Window{}, 1.0);
  CHECK(psi.well_formed());
  CHECK(psi.eval(psi.breakpoints.back()) == 1.0);
  for (std::size_t i = 1; i < psi.values.size(); ++i) CHECK(psi.values[i] > psi.values[i - 1]);
  const auto ball = psi_estimate(decs, Window{{0.0, 0.0}, 20.0}, 1.0);
  CHECK(ball.total_count < psi.total_count);
  CHECK_THROWS_AS(psi_estimate(decs, Window{{0.0, 0.0}, 40.0}, 1.0), ConfigError);
}

TEST_CASE("Kolmogorov-Smirnov distance") {
  const auto a = EmpiricalCdf::from_observations({1.0, 2.0, 3.0});
  CHECK(ks_distance(a, a) == 0.0);
  CHECK(ks_distance(EmpiricalCdf::from_observations({1.0}), EmpiricalCdf::from_observations({2.0})) == 1.0);
  CHECK(ks_distance(EmpiricalCdf::from_observations({1.0, 3.0}), EmpiricalCdf::from_observations({1.0})) ==
        doctest::Approx(0.5));
  const auto b = EmpiricalCdf::from_observations({0.5, 1.5, 2.5, 10.0});
  CHECK(ks_distance(a, b) == ks_distance(b, a));
  CHECK_THROWS_AS(ks_distance(a, EmpiricalCdf{}), EmptyEstimateError);
}

TEST_CASE("Faber-Krahn check") {
  const auto s = sin_sin(GridSpec::torus(2.0 * pi, 2.0 * pi / 64.0), pi / 64.0);
  const std::vector<NodalDecomposition> squares{decompose(s)};
  const auto res = faber_krahn_check(squares, 0.10);
  CHECK(res.violations.size() == 4);
  CHECK(res.floor == doctest::Approx(18.168).epsilon(1e-4));
  CHECK(res.min_area == doctest::Approx(pi * pi));
  CHECK_THROWS_AS(faber_krahn_check(std::vector<NodalDecomposition>{}), EmptyEstimateError);
  CHECK_THROWS_AS(faber_krahn_check(squares, 1.5), ConfigError);
  const auto waves = plane_waves(20.0 * pi, 10, 2);
  const auto ok = faber_krahn_check(waves, 0.10);
  CHECK(ok.violations.empty());
  CHECK(ok.min_area >= 0.9 * ok.floor);
}

TEST_CASE("perimeter distribution") {
  const auto waves = plane_waves(20.0 * pi, 5, 3);
  const auto joint = boundary_and_joint_distributions(waves, Window{});
  CHECK(joint.perimeter.well_formed());
  const double floor = 2.0 * pi * specfn::bessel_zero(specfn::BesselOrder(0), 1);
  CHECK(joint.perimeter.eval(floor * 0.9) == 0.0);
  // Cell-count areas are lattice counts: about one domain in two thousand
  // dips below the 5% relaxed bound (worst seen 0.945), so the cell-count
  // check uses 10%. The marching-squares polygon satisfies it exactly.
  for (auto [a, p] : joint.area_perimeter) CHECK(p * p >= 4.0 * pi * a * 0.90);
  std::vector<NodalDecomposition> polygons;
  const GridSpec grid = GridSpec::planar(20.0 * pi, 2.0 * pi / 10.0);
  for (int i = 0; i < 5; ++i)
    polygons.push_back(decompose(sample_field(SpectralModel::plane_wave(), grid, 3, i), AreaEstimator::Subcell));
  for (auto [a, p] : boundary_and_joint_distributions(polygons, Window{}).area_perimeter) CHECK(p * p >= 4.0 * pi * a);
  const std::vector<NodalDecomposition> one{fake_decomposition({5.0})};
  const auto single = boundary_and_joint_distributions(one, Window{});
  CHECK(single.perimeter.breakpoints.size() == 1);
  CHECK(single.perimeter.values[0] == 1.0);
}

TEST_CASE("nodal-domain density of sin sin tends to 1/pi^2") {
  const GridSpec grid = GridSpec::torus(20.0 * pi, 2.0 * pi / 16.0);
  const std::vector<NodalDecomposition> decs{decompose(sin_sin(grid, pi / 16.0))};
  CHECK(decs[0].domain_count() == 400);
  const double radii[] = {8.0, 16.0, 31.0};
  const auto est = ns_constant_estimate(decs, radii, {0.0, 0.0});
  const double target = 1.0 / (pi * pi);
  double prev = 1e9;
  for (const auto& r : est.per_radius) {
    const double err = std::abs(r.ratio_mean - target);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev / target < 0.2);
  CHECK(est.pooled == est.per_radius.back().ratio_mean);
}

TEST_CASE("NS estimate on plane waves") {
  const auto waves = plane_waves(14.0 * pi, 10, 4);
  const double radii[] = {10.0, 15.0, 20.0};
  const auto est = ns_constant_estimate(waves, radii, {});
  CHECK(est.pooled > 0.0);
  CHECK(ns_radii_consistent(est));
  // Every nodal domain holds a critical point of the field.
  std::vector<FieldSample> samples;
  const GridSpec grid = GridSpec::planar(14.0 * pi, 2.0 * pi / 10.0);
  for (int i = 0; i < 10; ++i) samples.push_back(sample_field(SpectralModel::plane_wave(), grid, 4, i));
  CHECK(est.pooled <= critical_cell_density(samples).mean);
  const double bad[] = {30.0};
  CHECK_THROWS_AS(ns_constant_estimate(waves, bad, {}), ConfigError);
}

TEST_CASE("NS consistency tolerance") {
  NsEstimate est;
  est.per_radius = {{10.0, 0.10, 0.001}, {20.0, 0.10 + 3.0 * (std::sqrt(2.0) * 0.001 + 0.1) - 1e-9, 0.001}};
  CHECK(ns_radii_consistent(est));
  est.per_radius[1].ratio_mean += 2e-9;
  CHECK(!ns_radii_consistent(est));
}

TEST_CASE("sandwich on sin sin matches direct enumeration") {
  const GridSpec grid = GridSpec::planar(4.0 * pi, 2.0 * pi / 32.0);
  const auto dec = decompose(sin_sin(grid, pi / 32.0));
  const double r = pi / 4.0, R = 1.5 * pi;
  const double ts[] = {5.0, 20.0, kUnbounded};
  const auto verdicts = sandwich_check(dec, r, R, ts);
  REQUIRE(verdicts.size() == 3);
  CHECK(verdicts[2].middle == 4);
  for (const auto& v : verdicts) {
    const auto brute = brute_sandwich(dec, r, R, v.t);
    CAPTURE(v.t);
    CHECK(v.holds);
    CHECK(v.ball_lattice_count == brute.ball);
    CHECK(v.middle == brute.middle);
    CHECK(v.lower == doctest::Approx(double(brute.lower_sum) / brute.ball).epsilon(1e-15));
    CHECK(v.upper == doctest::Approx(double(brute.upper_sum) / brute.ball).epsilon(1e-15));
  }
  CHECK(verdicts[0].middle == 0);
}

TEST_CASE("sandwich on plane waves") {
  const auto waves = plane_waves(16.0 * pi, 3, 5);
  const double ts[] = {20.0, 50.0, kUnbounded};
  for (const auto& dec : waves) {
    for (auto [r, R] : {std::pair{3.0, 12.0}, std::pair{6.0, 15.0}}) {
      for (const auto& v : sandwich_check(dec, r, R, ts)) {
        CHECK(v.holds);
        const auto brute = brute_sandwich(dec, r, R, v.t);
        CHECK(v.middle == brute.middle);
        CHECK(v.lower * v.ball_lattice_count == doctest::Approx(double(brute.lower_sum)));
        CHECK(v.upper * v.ball_lattice_count == doctest::Approx(double(brute.upper_sum)));
      }
    }
  }
}

TEST_CASE("sandwich lower bound degenerates as r approaches R") {
  const auto waves = plane_waves(30.0 * pi, 2, 6);
  const double ts[] = {kUnbounded};
  for (const auto& dec : waves) {
    long long prev_centres = -1;
    double prev_lower = 1e300;
    for (double r : {4.0, 6.0, 9.0, 9.9}) {
      const auto v = sandwich_check(dec, r, 10.0, ts)[0];
      if (prev_centres >= 0) CHECK(v.centers_lower < prev_centres);
      if (r > 6.0) CHECK(v.lower <= prev_lower);
      CHECK(v.upper >= static_cast<double>(v.middle));
      prev_centres = v.centers_lower;
      prev_lower = v.lower;
    }
    CHECK(sandwich_check(dec, 9.9, 10.0, ts)[0].centers_lower == 1);
  }
}

TEST_CASE("sandwich preconditions") {
  const auto waves = plane_waves(16.0 * pi, 1, 7);
  const double ts[] = {kUnbounded};
  CHECK_THROWS_AS(sandwich_check(waves[0], 5.0, 5.0, ts), ConfigError);
  CHECK_THROWS_AS(sandwich_check(waves[0], 10.0, 20.0, ts), ConfigError);
  const auto torus = decompose(sin_sin(GridSpec::torus(2.0 * pi, 2.0 * pi / 16.0), 0.1));
  CHECK_THROWS_AS(sandwich_check(torus, 0.5, 1.0, ts), ConfigError);
}

TEST_CASE("Kac-Rice nodal length density") {
  // -K''(0) for K = J0 by central differences of the kernel.
  const specfn::CovarianceKernel k{2, 1.0};
  const double d = 1e-3;
  const double lambda = (2.0 - 2.0 * specfn::kernel_eval(k, d)) / (d * d);
  CHECK(lambda == doctest::Approx(0.5).epsilon(1e-6));
  // E|grad F| for grad F ~ N(0, lambda I) in polar coordinates, times the
  // density of F(0) at 0.
  const double mean_grad =
      oracle::integrate([lambda](double rho) { return rho * rho / lambda * std::exp(-rho * rho / (2.0 * lambda)); }, 0.0,
                        40.0, 1e-14);
  const double density = mean_grad / std::sqrt(2.0 * pi);
  CHECK(density == doctest::Approx(1.0 / (2.0 * std::numbers::sqrt2)).epsilon(1e-6));

  const auto waves = plane_waves(20.0 * pi, 10, 8);
  const auto est = nodal_length_density(waves);
  CHECK(std::abs(est.mean - density) < 0.05 * density);
}

TEST_CASE("nodal length of sin sin") {
  const GridSpec grid = GridSpec::torus(2.0 * pi, 2.0 * pi / 64.0);
  const double h = grid.spacing;
  const std::vector<NodalDecomposition> decs{decompose(sin_sin(grid, h / 2.0))};
  const double expected = (8.0 * pi - 4.0 * h * (2.0 - std::numbers::sqrt2)) / (4.0 * pi * pi);
  CHECK(nodal_length_density(decs).mean == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("mean with error") {
  const double v[] = {1.0, 2.0, 3.0, 4.0};
  const auto m = mean_with_error(v);
  CHECK(m.mean == 2.5);
  CHECK(m.std_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK(m.samples == 4);
}

TEST_CASE("CSV writers") {
  std::ostringstream psi, ns, joint, sw;
  write_psi_csv(psi, EmpiricalCdf::from_observations({1.0, 2.0}));
  CHECK(psi.str() == "t,psi_hat,stderr\n1,0.5,0.35355339059327379\n2,1,0\n");
  NsEstimate est;
  est.per_radius = {{10.0, 0.5, 0.25}};
  write_ns_csv(ns, est);
  CHECK(ns.str() == "R,ratio_mean,ratio_stderr\n10,0.5,0.25\n");
  JointDistribution j;
  j.area_perimeter = {{1.5, 2.5}};
  write_joint_csv(joint, j);
  CHECK(joint.str() == "area,perimeter\n1.5,2.5\n");
  SandwichVerdict v;
  v.r = 5;
  v.radius = 15;
  v.lower = 1;
  v.middle = 2;
  v.upper = 3;
  v.holds = true;
  const SandwichVerdict vs[] = {v};
  write_sandwich_csv(sw, vs);
  CHECK(sw.str() == "r,R,t,lower,middle,upper,holds\n5,15,inf,1,2,3,true\n");
  CHECK(format_real(kUnbounded) == "inf");
  CHECK(format_real(0.1) == "0.10000000000000001");
}
