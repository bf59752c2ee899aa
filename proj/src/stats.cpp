#include "ncensus/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include "ncensus/specfn.hpp"

namespace ncensus {

namespace {

constexpr double kPi = std::numbers::pi;

void require_measured(std::span<const NodalDecomposition> decs, const char* what) {
  if (decs.empty()) throw EmptyEstimateError(std::string(what) + ": no decompositions");
  for (const auto& d : decs) {
    if (!d.measured) throw ConfigError(std::string(what) + ": decomposition not measured");
    if (!(d.grid == decs.front().grid) || !(d.model == decs.front().model))
      throw ConfigError(std::string(what) + ": decompositions from different models or grids");
  }
}

// Interior domains of `dec` lying in the window; calls fn(record).
template <class Fn>
void for_each_counted_domain(const NodalDecomposition& dec, const Window& window, Fn&& fn) {
  if (dec.grid.geometry == Geometry::LatLongSphere) {
    if (std::isfinite(window.radius)) throw ConfigError("sphere estimates use the whole sphere as window");
    for (const auto& d : dec.domains) fn(d);
    return;
  }
  if (!std::isfinite(window.radius)) {
    for (const auto& d : dec.domains)
      if (!d.touches_window) fn(d);
    return;
  }
  if (dec.grid.dim != 2) throw ConfigError("ball windows need a two-dimensional grid");
  // validates the ball against the window
  restrict_counts(dec, window.center, window.radius);
  const BallMembership ball(dec, window.center);
  for (const auto& d : dec.domains)
    if (!d.touches_window && ball.max_distance(d.label) < window.radius) fn(d);
}

double ball_volume(int dim, double radius) { return specfn::unit_ball_volume(dim) * std::pow(radius, dim); }

}  // namespace

EmpiricalCdf EmpiricalCdf::from_observations(std::vector<double> observations) {
  EmpiricalCdf cdf;
  cdf.total_count = observations.size();
  std::sort(observations.begin(), observations.end());
  const double n = static_cast<double>(observations.size());
  for (std::size_t i = 0; i < observations.size(); ++i) {
    if (i + 1 < observations.size() && observations[i + 1] == observations[i]) continue;
    const double p = static_cast<double>(i + 1) / n;
    cdf.breakpoints.push_back(observations[i]);
    cdf.values.push_back(p);
    cdf.std_error.push_back(std::sqrt(p * (1.0 - p) / n));
  }
  return cdf;
}

double EmpiricalCdf::eval(double t) const {
  const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
  if (it == breakpoints.begin()) return 0.0;
  return values[static_cast<std::size_t>(it - breakpoints.begin()) - 1];
}

double EmpiricalCdf::largest_jump() const {
  double jump = 0.0, prev = 0.0;
  for (double v : values) {
    jump = std::max(jump, v - prev);
    prev = v;
  }
  return jump;
}

bool EmpiricalCdf::well_formed() const {
  if (breakpoints.size() != values.size() || values.size() != std_error.size()) return false;
  double prev_v = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0 && !(breakpoints[i] > breakpoints[i - 1])) return false;
    if (values[i] < prev_v || values[i] > 1.0) return false;
    prev_v = values[i];
  }
  return values.empty() ? total_count == 0 : values.back() == 1.0;
}

EmpiricalCdf psi_estimate(std::span<const NodalDecomposition> decs, const Window& window, double volume_scale) {
  if (!(volume_scale > 0.0) || !std::isfinite(volume_scale)) throw ConfigError("psi: volume scale must be positive");
  require_measured(decs, "psi");
  std::vector<double> areas;
  for (const auto& dec : decs)
    for_each_counted_domain(dec, window, [&](const DomainRecord& d) { areas.push_back(d.area * volume_scale); });
  if (areas.empty()) throw EmptyEstimateError("psi: no interior domains in the window");
  return EmpiricalCdf::from_observations(std::move(areas));
}

MeanWithError mean_with_error(std::span<const double> values) {
  MeanWithError out;
  out.samples = values.size();
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / values.size();
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std_error = std::sqrt(ss / (values.size() - 1) / values.size());
  }
  return out;
}

NsEstimate ns_constant_estimate(std::span<const NodalDecomposition> decs, std::span<const double> radii,
                                Point2 center) {
  require_measured(decs, "ns");
  if (radii.empty()) throw ConfigError("ns: no radii");
  const GridSpec& grid = decs.front().grid;
  if (grid.geometry == Geometry::LatLongSphere || grid.dim != 2)
    throw ConfigError("ns: ball counts need a two-dimensional Euclidean grid");
  for (double r : radii) restrict_counts(decs.front(), center, r);

  NsEstimate est;
  std::vector<std::vector<double>> ratios(radii.size());
  for (const auto& dec : decs) {
    const BallMembership ball(dec, center);
    for (std::size_t k = 0; k < radii.size(); ++k)
      ratios[k].push_back(static_cast<double>(ball.counts(radii[k]).inside) / ball_volume(2, radii[k]));
  }
  std::size_t largest = 0;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    const auto m = mean_with_error(ratios[k]);
    est.per_radius.push_back({radii[k], m.mean, m.std_error});
    if (radii[k] > radii[largest]) largest = k;
  }
  est.pooled = est.per_radius[largest].ratio_mean;
  est.std_error = est.per_radius[largest].ratio_std_error;
  return est;
}

bool ns_radii_consistent(const NsEstimate& est) {
  for (std::size_t i = 0; i < est.per_radius.size(); ++i)
    for (std::size_t j = i + 1; j < est.per_radius.size(); ++j) {
      const auto& a = est.per_radius[i];
      const auto& b = est.per_radius[j];
      const double tol = 3.0 * (std::hypot(a.ratio_std_error, b.ratio_std_error) + 1.0 / std::min(a.radius, b.radius));
      if (std::abs(a.ratio_mean - b.ratio_mean) > tol) return false;
    }
  return true;
}

namespace {

struct LatticePoint {
  long long x;
  long long y;
};

long long cross(const LatticePoint& o, const LatticePoint& a, const LatticePoint& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

std::vector<LatticePoint> convex_hull(std::vector<LatticePoint> pts) {
  std::sort(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.x != b.x ? a.x < b.x : a.y < b.y; });
  pts.erase(std::unique(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.x == b.x && a.y == b.y; }),
            pts.end());
  if (pts.size() < 3) return pts;
  std::vector<LatticePoint> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

// Integer-geometry view of a planar decomposition: node offsets, per-domain
// boundary nodes and hull vertices. All distances are squared lattice norms.
class SandwichGeometry {
 public:
  explicit SandwichGeometry(const NodalDecomposition& dec) : dec_(dec), n_(dec.grid.extents()[0]) {
    const std::size_t nd = dec.domains.size();
    boundary_.resize(nd);
    hull_.resize(nd);
    std::vector<std::vector<LatticePoint>> pts(nd);
    for (std::size_t i = 0; i < dec.labels.size(); ++i) {
      const long long x = i % n_, y = i / n_;
      const int l = dec.labels[i];
      const bool edge = x == 0 || y == 0 || x + 1 == n_ || y + 1 == n_;
      if (edge || dec.labels[i - 1] != l || dec.labels[i + 1] != l || dec.labels[i - n_] != l ||
          dec.labels[i + n_] != l) {
        boundary_[l].push_back({x, y});
        pts[l].push_back({x, y});
      }
    }
    for (std::size_t l = 0; l < nd; ++l) hull_[l] = convex_hull(std::move(pts[l]));
  }

  long long max_dist2(int label, LatticePoint u) const {
    long long best = 0;
    for (const auto& p : hull_[label]) best = std::max(best, dist2(p, u));
    return best;
  }

  // Early exit once a node within `limit` is found.
  bool meets(int label, LatticePoint u, double limit) const {
    if (dec_.labels[u.y * n_ + u.x] == label) return true;
    for (const auto& p : boundary_[label])
      if (static_cast<double>(dist2(p, u)) <= limit) return true;
    return false;
  }

  bool bbox_within(int label, LatticePoint u, double limit) const {
    const auto& b = dec_.domains[label].bbox;
    const long long dx = std::max({0LL, b.lo[0] - u.x, u.x - b.hi[0]});
    const long long dy = std::max({0LL, b.lo[1] - u.y, u.y - b.hi[1]});
    return static_cast<double>(dx * dx + dy * dy) <= limit;
  }

  static long long dist2(LatticePoint a, LatticePoint b) {
    return (a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y);
  }

 private:
  const NodalDecomposition& dec_;
  long long n_;
  std::vector<std::vector<LatticePoint>> boundary_;
  std::vector<std::vector<LatticePoint>> hull_;
};

}  // namespace

std::vector<SandwichVerdict> sandwich_check(const NodalDecomposition& dec, double r, double radius,
                                            std::span<const double> thresholds) {
  const GridSpec& grid = dec.grid;
  if (grid.geometry != Geometry::PlanarWindow) throw ConfigError("sandwich: needs a planar window");
  if (!(r > 0.0) || !(radius > r)) throw ConfigError("sandwich: need 0 < r < R");
  if (grid.cells % 2 != 0) throw ConfigError("sandwich: window centre must be a grid node (even cell count)");
  const double h = grid.spacing;
  if ((radius + r) / h > grid.cells / 2 + 1e-9) throw ConfigError("sandwich: B(R + r) must lie inside the window");
  for (double t : thresholds) {
    if (std::isnan(t) || t < 0.0) throw ConfigError("sandwich: thresholds must be >= 0");
    if (std::isfinite(t) && !dec.measured) throw ConfigError("sandwich: area thresholds need measured domains");
  }

  const SandwichGeometry geo(dec);
  const long long c = grid.cells / 2;
  const LatticePoint centre{c, c};
  const double rr = (r / h) * (r / h);
  const double lower_r2 = ((radius - r) / h) * ((radius - r) / h);
  const double upper_r2 = ((radius + r) / h) * ((radius + r) / h);
  const double big_r2 = (radius / h) * (radius / h);
  const long long reach = static_cast<long long>(std::ceil((radius + r) / h));

  const std::size_t nd = dec.domains.size();
  std::vector<long long> inside_count(nd, 0), meet_count(nd, 0);
  std::vector<bool> in_big_ball(nd, false);
  for (std::size_t l = 0; l < nd; ++l)
    in_big_ball[l] = static_cast<double>(geo.max_dist2(static_cast<int>(l), centre)) < big_r2;

  long long ball_count = 0;
  const long long rr_reach = static_cast<long long>(std::ceil(r / h));
  for (long long dy = -rr_reach; dy <= rr_reach; ++dy)
    for (long long dx = -rr_reach; dx <= rr_reach; ++dx)
      if (static_cast<double>(dx * dx + dy * dy) < rr) ++ball_count;

  long long centres_lower = 0, centres_upper = 0;
  for (long long y = c - reach; y <= c + reach; ++y)
    for (long long x = c - reach; x <= c + reach; ++x) {
      const LatticePoint u{x, y};
      const double d2 = static_cast<double>(SandwichGeometry::dist2(u, centre));
      const bool lower_centre = d2 < lower_r2;
      const bool upper_centre = d2 < upper_r2;
      if (!upper_centre) continue;
      ++centres_upper;
      centres_lower += lower_centre;
      for (std::size_t l = 0; l < nd; ++l) {
        const int label = static_cast<int>(l);
        if (!geo.bbox_within(label, u, rr)) continue;
        if (geo.meets(label, u, rr)) ++meet_count[l];
        if (lower_centre && static_cast<double>(geo.max_dist2(label, u)) < rr) ++inside_count[l];
      }
    }

  std::vector<SandwichVerdict> out;
  for (double t : thresholds) {
    long long lower_sum = 0, upper_sum = 0, middle = 0;
    for (std::size_t l = 0; l < nd; ++l) {
      if (std::isfinite(t) && dec.domains[l].area > t) continue;
      lower_sum += inside_count[l];
      upper_sum += meet_count[l];
      middle += in_big_ball[l];
    }
    SandwichVerdict v;
    v.r = r;
    v.radius = radius;
    v.t = t;
    v.middle = middle;
    v.lower = static_cast<double>(lower_sum) / ball_count;
    v.upper = static_cast<double>(upper_sum) / ball_count;
    v.holds = lower_sum <= middle * ball_count && middle * ball_count <= upper_sum;
    v.centers_lower = centres_lower;
    v.centers_upper = centres_upper;
    v.ball_lattice_count = ball_count;
    out.push_back(v);
  }
  return out;
}

FaberKrahnResult faber_krahn_check(std::span<const NodalDecomposition> decs, double margin) {
  if (!(margin > 0.0 && margin < 1.0)) throw ConfigError("faber-krahn: margin must lie in (0, 1)");
  require_measured(decs, "faber-krahn");
  FaberKrahnResult res;
  res.margin = margin;
  res.floor = specfn::faber_krahn_floor(decs.front().grid.geometry == Geometry::LatLongSphere ? 2
                                                                                                : decs.front().grid.dim);
  const double scale = decs.front().model.volume_scale();
  const double limit = (1.0 - margin) * res.floor;
  res.min_area = kUnbounded;
  for (const auto& dec : decs)
    for_each_counted_domain(dec, Window{}, [&](const DomainRecord& d) {
      const double a = d.area * scale;
      ++res.domains_checked;
      res.min_area = std::min(res.min_area, a);
      if (a < limit) res.violations.push_back({dec.seed, dec.index, d.label, a});
    });
  if (res.domains_checked == 0) throw EmptyEstimateError("faber-krahn: no interior domains, minimum undefined");
  return res;
}

JointDistribution boundary_and_joint_distributions(std::span<const NodalDecomposition> decs, const Window& window) {
  require_measured(decs, "joint");
  const double scale = decs.front().model.volume_scale();
  const double length_scale = std::sqrt(scale);
  JointDistribution out;
  std::vector<double> perimeters;
  for (const auto& dec : decs)
    for_each_counted_domain(dec, window, [&](const DomainRecord& d) {
      perimeters.push_back(d.perimeter * length_scale);
      out.area_perimeter.emplace_back(d.area * scale, d.perimeter * length_scale);
    });
  if (perimeters.empty()) throw EmptyEstimateError("joint: no interior domains in the window");
  out.perimeter = EmpiricalCdf::from_observations(std::move(perimeters));
  return out;
}

double ks_distance(const EmpiricalCdf& a, const EmpiricalCdf& b) {
  if (a.empty() || b.empty()) throw EmptyEstimateError("ks: empty distribution");
  double sup = 0.0;
  for (double t : a.breakpoints) sup = std::max(sup, std::abs(a.eval(t) - b.eval(t)));
  for (double t : b.breakpoints) sup = std::max(sup, std::abs(a.eval(t) - b.eval(t)));
  return sup;
}

MeanWithError nodal_length_density(std::span<const NodalDecomposition> decs) {
  require_measured(decs, "nodal length");
  const GridSpec& grid = decs.front().grid;
  if (grid.geometry == Geometry::LatLongSphere) throw ConfigError("nodal length: Euclidean grids only");
  const double area = std::pow(grid.side, grid.dim);
  std::vector<double> per_sample;
  for (const auto& d : decs) per_sample.push_back(d.nodal_volume / area);
  return mean_with_error(per_sample);
}

MeanWithError critical_cell_density(std::span<const FieldSample> samples) {
  if (samples.empty()) throw EmptyEstimateError("critical cells: no samples");
  std::vector<double> per_sample;
  for (const auto& s : samples)
    per_sample.push_back(static_cast<double>(count_critical_cells(s)) / std::pow(s.grid().side, 2));
  return mean_with_error(per_sample);
}

std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_psi_csv(std::ostream& out, const EmpiricalCdf& cdf) {
  out << "t,psi_hat,stderr\n";
  for (std::size_t i = 0; i < cdf.breakpoints.size(); ++i)
    out << format_real(cdf.breakpoints[i]) << ',' << format_real(cdf.values[i]) << ','
        << format_real(cdf.std_error[i]) << '\n';
}

void write_ns_csv(std::ostream& out, const NsEstimate& est) {
  out << "R,ratio_mean,ratio_stderr\n";
  for (const auto& r : est.per_radius)
    out << format_real(r.radius) << ',' << format_real(r.ratio_mean) << ',' << format_real(r.ratio_std_error) << '\n';
}

void write_joint_csv(std::ostream& out, const JointDistribution& joint) {
  out << "area,perimeter\n";
  for (const auto& [a, p] : joint.area_perimeter) out << format_real(a) << ',' << format_real(p) << '\n';
}

void write_sandwich_csv(std::ostream& out, std::span<const SandwichVerdict> verdicts) {
  out << "r,R,t,lower,middle,upper,holds\n";
  for (const auto& v : verdicts)
    out << format_real(v.r) << ',' << format_real(v.radius) << ',' << format_real(v.t) << ','
        << format_real(v.lower) << ',' << v.middle << ',' << format_real(v.upper) << ','
        << (v.holds ? "true" : "false") << '\n';
}

}  // namespace ncensus
