#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ncensus/nodal.hpp"

namespace ncensus {

/// An estimator was asked to summarize zero domains or zero samples.
class EmptyEstimateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Right-continuous step function with a jump at every distinct observation.
struct EmpiricalCdf {
  std::vector<double> breakpoints;  // strictly increasing
  std::vector<double> values;       // fraction of observations <= breakpoint
  std::vector<double> std_error;    // binomial sqrt(p (1 - p) / n)
  std::size_t total_count = 0;

  static EmpiricalCdf from_observations(std::vector<double> observations);

  bool empty() const noexcept { return total_count == 0; }
  double eval(double t) const;
  /// Largest single jump of the step function (0 when empty).
  double largest_jump() const;
  /// Non-decreasing values in [0, 1], strictly increasing breakpoints,
  /// final value 1.
  bool well_formed() const;
};

/// Ball B(center, radius) in which domains are counted. An unbounded radius
/// counts every interior domain of the grid; sphere grids only accept the
/// unbounded window.
struct Window {
  Point2 center;
  double radius = kUnbounded;
};

/// Empirical Psi: share of interior domains in the window whose scaled area
/// (area times volume_scale) is at most t.
EmpiricalCdf psi_estimate(std::span<const NodalDecomposition> decs, const Window& window, double volume_scale);

struct NsRadius {
  double radius = 0.0;
  double ratio_mean = 0.0;  // mean over samples of N(F; R) / Vol B(R)
  double ratio_std_error = 0.0;
};

struct NsEstimate {
  std::vector<NsRadius> per_radius;  // in the order given
  double pooled = 0.0;               // mean at the largest radius
  double std_error = 0.0;
};

NsEstimate ns_constant_estimate(std::span<const NodalDecomposition> decs, std::span<const double> radii,
                                Point2 center = {});

/// Pairwise agreement of the per-radius means:
/// |m_i - m_j| <= 3 (sqrt(se_i^2 + se_j^2) + 1 / min(R_i, R_j)).
bool ns_radii_consistent(const NsEstimate& est);

struct SandwichVerdict {
  double r = 0.0;
  double radius = 0.0;  // R
  double t = kUnbounded;
  double lower = 0.0;
  long long middle = 0;
  double upper = 0.0;
  bool holds = false;
  long long centers_lower = 0;  // lattice centres in B(R - r)
  long long centers_upper = 0;  // lattice centres in B(R + r)
  long long ball_lattice_count = 0;  // lattice points in the open ball B(0, r)
};

/// Discrete integral-geometric sandwich about the window centre, one verdict
/// per threshold. Both averages run over grid nodes as centres and are
/// normalized by the lattice count of B(0, r), so the inequality is exact
/// for every sample; the comparison is done in integers.
std::vector<SandwichVerdict> sandwich_check(const NodalDecomposition& dec, double r, double radius,
                                            std::span<const double> thresholds);

struct FaberKrahnViolation {
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  int label = 0;
  double area = 0.0;
};

struct FaberKrahnResult {
  double min_area = 0.0;
  double floor = 0.0;   // t0(n)
  double margin = 0.0;
  std::size_t domains_checked = 0;
  std::vector<FaberKrahnViolation> violations;  // area < (1 - margin) t0
};

FaberKrahnResult faber_krahn_check(std::span<const NodalDecomposition> decs, double margin = 0.10);

struct JointDistribution {
  EmpiricalCdf perimeter;
  std::vector<std::pair<double, double>> area_perimeter;  // scaled, in domain order
};

/// Perimeter CDF and (area, perimeter) pairs of the interior domains counted
/// by psi_estimate. On the sphere perimeters are scaled by sqrt(l(l+1)).
JointDistribution boundary_and_joint_distributions(std::span<const NodalDecomposition> decs, const Window& window);

/// sup_t |a(t) - b(t)| over the merged breakpoints.
double ks_distance(const EmpiricalCdf& a, const EmpiricalCdf& b);

struct MeanWithError {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Per-sample total nodal length divided by the window area (planar/torus).
MeanWithError nodal_length_density(std::span<const NodalDecomposition> decs);

/// Per-sample critical cell count divided by the window area.
MeanWithError critical_cell_density(std::span<const FieldSample> samples);

MeanWithError mean_with_error(std::span<const double> values);

void write_psi_csv(std::ostream& out, const EmpiricalCdf& cdf);
void write_ns_csv(std::ostream& out, const NsEstimate& est);
void write_joint_csv(std::ostream& out, const JointDistribution& joint);
void write_sandwich_csv(std::ostream& out, std::span<const SandwichVerdict> verdicts);

/// Threshold formatting shared by CSV and JSON output: "inf" or %.17g.
std::string format_real(double v);

}  // namespace ncensus
