#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "ncensus/model.hpp"

namespace ncensus {

/// Nearest-neighbour connectivity of the sign grid: 4 neighbours in the
/// plane and on the sphere, 6 on the 3-torus. Applied to both signs.
enum class Connectivity { FourConnected };

enum class AreaEstimator {
  CellCount,  ///< member nodes times the node cell volume
  Subcell,    ///< marching-squares clipped cell areas (2-D Euclidean grids)
};

struct BoundingBox {
  std::array<int, 3> lo{0, 0, 0};
  std::array<int, 3> hi{0, 0, 0};
};

struct DomainRecord {
  int label = 0;
  int sign = 1;  // +1 or -1; a node value of exactly 0 counts as +
  std::size_t node_count = 0;
  double area = 0.0;
  double perimeter = 0.0;
  int boundary_components = 0;
  bool touches_window = false;
  BoundingBox bbox;
  double diameter_hint = 0.0;
};

struct NodalDecomposition {
  GridSpec grid;
  SpectralModel model;
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  Connectivity connectivity = Connectivity::FourConnected;
  AreaEstimator area_estimator = AreaEstimator::CellCount;
  std::vector<int> labels;  // one per grid node
  std::vector<DomainRecord> domains;  // indexed by label
  /// Unordered label pairs (a < b) of domains separated by a common contour.
  std::vector<std::pair<int, int>> adjacency;
  /// Total length (area in 3-D) of the discretized nodal set.
  double nodal_volume = 0.0;
  bool measured = false;

  std::size_t domain_count() const noexcept { return domains.size(); }
};

/// Union-find labeling of the sign grid. Periodic axes wrap; on the sphere,
/// longitude wraps and the first/last latitude rings connect across the pole.
NodalDecomposition label_domains(const FieldSample& sample);

/// Labels of a bare sign grid (row-major, axis 0 fastest) on a planar
/// nx x ny window with 4-connectivity.
std::vector<int> label_sign_grid(std::span<const std::int8_t> signs, int nx, int ny);

/// Completes area, perimeter, boundary component and adjacency data.
///
/// Perimeter is the length of the marching-squares contour with linearly
/// interpolated edge crossings; in a saddle cell the cell-centre average
/// decides which diagonal pair is joined. Boundary components are the
/// connected contours touching the domain.
void measure_domains(NodalDecomposition& dec, const FieldSample& sample,
                     AreaEstimator estimator = AreaEstimator::CellCount);

/// label_domains followed by measure_domains.
NodalDecomposition decompose(const FieldSample& sample, AreaEstimator estimator = AreaEstimator::CellCount);

/// Cell area weights of the latitude-longitude grid, one per latitude row
/// (exact spherical band areas; they sum to 4 pi).
std::vector<double> sphere_row_weights(const GridSpec& grid);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct BallCounts {
  long long inside = 0;      // N: qualifying domains lying in the open ball
  long long intersects = 0;  // N*: qualifying domains meeting the closed ball
};

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

/// Per-domain distance range from a fixed centre; answers N and N* for any
/// (R, t) without another pass over the grid.
class BallMembership {
 public:
  BallMembership(const NodalDecomposition& dec, Point2 center);

  BallCounts counts(double radius, double t = kUnbounded) const;
  double min_distance(int label) const { return min_dist_[label]; }
  double max_distance(int label) const { return max_dist_[label]; }

 private:
  const NodalDecomposition* dec_;
  std::vector<double> min_dist_;
  std::vector<double> max_dist_;
};

/// N and N* for the ball B(center, radius) and area threshold t. Planar
/// balls must lie inside the window; on the torus distances are taken to
/// the nearest periodic image.
BallCounts restrict_counts(const NodalDecomposition& dec, Point2 center, double radius, double t = kUnbounded);

/// Node position on a 2-D Euclidean grid.
Point2 node_position(const GridSpec& grid, std::size_t node);

struct NestingGraph {
  std::vector<int> vertices;
  std::vector<std::pair<int, int>> edges;
  std::vector<int> degree;   // parallel to vertices
  std::vector<bool> interior;  // parallel to vertices
  bool has_non_interior = false;
  /// Whether the subgraph on interior vertices contains a cycle.
  bool interior_cycle = false;
};

NestingGraph nesting_graph(const NodalDecomposition& dec);

struct PerturbationMatch {
  int label = 0;
  int matched_label = -1;
  bool one_to_one = false;
  double delta_area = 0.0;  // |area(matched) - area(label)|
  double perimeter = 0.0;
};

struct PerturbationReport {
  double b = 0.0;
  std::vector<PerturbationMatch> matches;  // interior domains of the base field
  double matched_fraction = 0.0;           // one-to-one share of interior domains
  /// Median of |dA| / (perimeter * b) over one-to-one matches (0 when b = 0).
  double fitted_constant = 0.0;
  double median_delta_area = 0.0;
};

/// Decomposes F and F + b G and matches interior domains of F to domains of
/// F + b G by maximal node overlap (ties to the smaller label).
PerturbationReport perturbation_stability(const FieldSample& sample, const FieldSample& direction, double b,
                                          AreaEstimator estimator = AreaEstimator::Subcell);

/// Cells of a 2-D Euclidean grid in which both central-difference gradient
/// components change sign.
std::size_t count_critical_cells(const FieldSample& sample);

/// CSV with header label,sign,area,perimeter,boundary_components,touches_window.
void write_domain_csv(std::ostream& out, const NodalDecomposition& dec);

}  // namespace ncensus
