#include "ncensus/nodal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>

#include "ncensus/sampler.hpp"

namespace ncensus {

namespace {

constexpr double kPi = std::numbers::pi;

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

bool positive(double v) { return v >= 0.0; }

// Calls fn(a, b) once for every unordered pair of grid neighbours.
template <class Fn>
void for_each_neighbour_pair(const GridSpec& grid, Fn&& fn) {
  const auto ext = grid.extents();
  if (grid.geometry == Geometry::LatLongSphere) {
    const std::size_t np = ext[0], nt = ext[1];
    for (std::size_t it = 0; it < nt; ++it)
      for (std::size_t ip = 0; ip < np; ++ip) {
        const std::size_t c = it * np + ip;
        fn(c, it * np + (ip + 1) % np);
        if (it + 1 < nt) fn(c, c + np);
      }
    // first and last rings meet across the poles
    for (std::size_t ip = 0; ip < np / 2; ++ip) {
      fn(ip, ip + np / 2);
      fn((nt - 1) * np + ip, (nt - 1) * np + ip + np / 2);
    }
    return;
  }
  const bool wrap = grid.periodic();
  const std::size_t nx = ext[0], ny = ext[1], nz = ext.size() > 2 ? ext[2] : 1;
  for (std::size_t iz = 0; iz < nz; ++iz)
    for (std::size_t iy = 0; iy < ny; ++iy)
      for (std::size_t ix = 0; ix < nx; ++ix) {
        const std::size_t c = (iz * ny + iy) * nx + ix;
        if (ix + 1 < nx) fn(c, c + 1);
        else if (wrap) fn(c, c + 1 - nx);
        if (iy + 1 < ny) fn(c, c + nx);
        else if (wrap) fn(c, c + nx - nx * ny);
        if (ext.size() > 2) {
          if (iz + 1 < nz) fn(c, c + nx * ny);
          else if (wrap) fn(c, (iy * nx + ix));
        }
      }
}

std::array<int, 3> node_indices(const std::vector<std::size_t>& ext, std::size_t node) {
  std::array<int, 3> out{0, 0, 0};
  for (std::size_t d = 0; d < ext.size(); ++d) {
    out[d] = static_cast<int>(node % ext[d]);
    node /= ext[d];
  }
  return out;
}

void require_planar_like(const GridSpec& grid, const char* what) {
  if (grid.geometry == Geometry::LatLongSphere || grid.dim != 2)
    throw ConfigError(std::string(what) + ": needs a two-dimensional planar or torus grid");
}

}  // namespace

std::vector<double> sphere_row_weights(const GridSpec& grid) {
  if (grid.geometry != Geometry::LatLongSphere) throw ConfigError("sphere_row_weights: not a sphere grid");
  const double dt = kPi / grid.n_theta;
  const double dp = 2.0 * kPi / grid.n_phi;
  std::vector<double> w(grid.n_theta);
  for (int it = 0; it < grid.n_theta; ++it) w[it] = (std::cos(it * dt) - std::cos((it + 1) * dt)) * dp;
  return w;
}

NodalDecomposition label_domains(const FieldSample& sample) {
  const GridSpec& grid = sample.grid();
  const std::size_t n = grid.node_count();
  const auto values = sample.values();

  DisjointSets sets(n);
  for_each_neighbour_pair(grid, [&](std::size_t a, std::size_t b) {
    if (positive(values[a]) == positive(values[b])) sets.unite(a, b);
  });

  NodalDecomposition dec;
  dec.grid = grid;
  dec.model = sample.model();
  dec.seed = sample.seed();
  dec.index = sample.index();
  dec.labels.assign(n, -1);

  const auto ext = grid.extents();
  std::vector<int> root_label(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = sets.find(i);
    int& label = root_label[root];
    const auto idx = node_indices(ext, i);
    if (label < 0) {
      label = static_cast<int>(dec.domains.size());
      DomainRecord rec;
      rec.label = label;
      rec.sign = positive(values[i]) ? 1 : -1;
      rec.bbox.lo = idx;
      rec.bbox.hi = idx;
      dec.domains.push_back(rec);
    }
    dec.labels[i] = label;
    DomainRecord& rec = dec.domains[label];
    ++rec.node_count;
    for (std::size_t d = 0; d < ext.size(); ++d) {
      rec.bbox.lo[d] = std::min(rec.bbox.lo[d], idx[d]);
      rec.bbox.hi[d] = std::max(rec.bbox.hi[d], idx[d]);
    }
    if (grid.geometry == Geometry::PlanarWindow) {
      for (std::size_t d = 0; d < ext.size(); ++d)
        if (idx[d] == 0 || idx[d] == static_cast<int>(ext[d]) - 1) rec.touches_window = true;
    }
  }
  return dec;
}

std::vector<int> label_sign_grid(std::span<const std::int8_t> signs, int nx, int ny) {
  if (static_cast<std::size_t>(nx) * ny != signs.size()) throw ConfigError("label_sign_grid: shape mismatch");
  DisjointSets sets(signs.size());
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      const std::size_t c = static_cast<std::size_t>(iy) * nx + ix;
      if (ix + 1 < nx && (signs[c] >= 0) == (signs[c + 1] >= 0)) sets.unite(c, c + 1);
      if (iy + 1 < ny && (signs[c] >= 0) == (signs[c + nx] >= 0)) sets.unite(c, c + nx);
    }
  std::vector<int> labels(signs.size(), -1);
  std::vector<int> root_label(signs.size(), -1);
  int next = 0;
  for (std::size_t i = 0; i < signs.size(); ++i) {
    int& l = root_label[sets.find(i)];
    if (l < 0) l = next++;
    labels[i] = l;
  }
  return labels;
}

namespace {

struct Accumulators {
  std::vector<double> perimeter;
  std::vector<double> subcell_area;
  std::vector<std::pair<std::size_t, int>> contour_touch;  // (edge id, label)
  std::vector<std::pair<int, int>> adjacency;
  double nodal_volume = 0.0;

  explicit Accumulators(std::size_t domains) : perimeter(domains, 0.0), subcell_area(domains, 0.0) {}

  void add_adjacency(int a, int b) {
    if (a != b) adjacency.emplace_back(std::min(a, b), std::max(a, b));
  }

  // A contour segment with `single` on one side and the (possibly split)
  // region of `m1`, `m2` on the other.
  void segment(double length, int single, int m1, int m2, std::size_t edge) {
    nodal_volume += length;
    perimeter[single] += length;
    contour_touch.emplace_back(edge, single);
    add_adjacency(single, m1);
    contour_touch.emplace_back(edge, m1);
    if (m1 == m2) {
      perimeter[m1] += length;
    } else {
      perimeter[m1] += 0.5 * length;
      perimeter[m2] += 0.5 * length;
      add_adjacency(single, m2);
      contour_touch.emplace_back(edge, m2);
    }
  }
};

void measure_surface_2d(NodalDecomposition& dec, const FieldSample& sample, Accumulators& acc) {
  const GridSpec& grid = dec.grid;
  const auto ext = grid.extents();
  const std::size_t nx = ext[0], ny = ext[1];
  const bool sphere = grid.geometry == Geometry::LatLongSphere;
  const bool wrap_x = grid.periodic() || sphere;
  const bool wrap_y = grid.periodic();
  const std::size_t cells_x = wrap_x ? nx : nx - 1;
  const std::size_t cells_y = wrap_y ? ny : ny - 1;
  const auto values = sample.values();
  const auto& labels = dec.labels;

  DisjointSets contours(2 * nx * ny);
  auto node = [&](std::size_t ix, std::size_t iy) { return (iy % ny) * nx + (ix % nx); };

  constexpr double kCornerX[4] = {0.0, 1.0, 1.0, 0.0};
  constexpr double kCornerY[4] = {0.0, 0.0, 1.0, 1.0};

  for (std::size_t iy = 0; iy < cells_y; ++iy) {
    double dx = grid.spacing, dy = grid.spacing;
    if (sphere) {
      dy = kPi / grid.n_theta;
      dx = std::sin((iy + 1) * dy) * 2.0 * kPi / grid.n_phi;
    }
    const double cell_area = dx * dy;
    for (std::size_t ix = 0; ix < cells_x; ++ix) {
      const std::size_t c[4] = {node(ix, iy), node(ix + 1, iy), node(ix + 1, iy + 1), node(ix, iy + 1)};
      const std::size_t e[4] = {2 * c[0], 2 * c[1] + 1, 2 * c[3], 2 * c[0] + 1};
      double v[4];
      bool pos[4];
      int mask = 0;
      for (int k = 0; k < 4; ++k) {
        v[k] = values[c[k]];
        pos[k] = positive(v[k]);
        mask |= pos[k] ? (1 << k) : 0;
      }
      if (mask == 0 || mask == 15) {
        acc.subcell_area[labels[c[0]]] += cell_area;
        continue;
      }

      double px[4], py[4], t[4];
      for (int k = 0; k < 4; ++k) {
        const int k1 = (k + 1) % 4;
        if (pos[k] == pos[k1]) continue;
        t[k] = v[k] / (v[k] - v[k1]);
        px[k] = kCornerX[k] + t[k] * (kCornerX[k1] - kCornerX[k]);
        py[k] = kCornerY[k] + t[k] * (kCornerY[k1] - kCornerY[k]);
      }
      auto seg_length = [&](int a, int b) { return std::hypot((px[b] - px[a]) * dx, (py[b] - py[a]) * dy); };

      if (mask == 5 || mask == 10) {
        // Saddle: corners of the sign opposite to the cell-centre average are
        // cut off individually.
        const bool centre_pos = positive(0.25 * (v[0] + v[1] + v[2] + v[3]));
        double cut = 0.0;
        for (int k = 0; k < 4; ++k) {
          if (pos[k] == centre_pos) continue;
          const int prev = (k + 3) % 4;
          const int m1 = labels[c[(k + 1) % 4]];
          const int m2 = labels[c[prev]];
          acc.segment(seg_length(prev, k), labels[c[k]], m1, m2, e[k]);
          contours.unite(e[prev], e[k]);
          const double tri = 0.5 * t[k] * (1.0 - t[prev]) * cell_area;
          acc.subcell_area[labels[c[k]]] += tri;
          cut += tri;
        }
        const int m1 = labels[c[centre_pos == pos[0] ? 0 : 1]];
        const int m2 = labels[c[centre_pos == pos[0] ? 2 : 3]];
        if (m1 == m2) {
          acc.subcell_area[m1] += cell_area - cut;
        } else {
          acc.subcell_area[m1] += 0.5 * (cell_area - cut);
          acc.subcell_area[m2] += 0.5 * (cell_area - cut);
        }
        continue;
      }

      int crossing[2], nc = 0;
      for (int k = 0; k < 4; ++k)
        if (pos[k] != pos[(k + 1) % 4]) crossing[nc++] = k;
      int plus = -1, minus = -1;
      for (int k = 0; k < 4; ++k) (pos[k] ? plus : minus) = labels[c[k]];
      acc.segment(seg_length(crossing[0], crossing[1]), plus, minus, minus, e[crossing[0]]);
      contours.unite(e[crossing[0]], e[crossing[1]]);

      // Shoelace over the positive polygon: positive corners and crossing
      // points in boundary order.
      double poly_x[8], poly_y[8];
      int np = 0;
      for (int k = 0; k < 4; ++k) {
        if (pos[k]) {
          poly_x[np] = kCornerX[k];
          poly_y[np++] = kCornerY[k];
        }
        if (pos[k] != pos[(k + 1) % 4]) {
          poly_x[np] = px[k];
          poly_y[np++] = py[k];
        }
      }
      double twice = 0.0;
      for (int i = 0; i < np; ++i) {
        const int j = (i + 1) % np;
        twice += poly_x[i] * poly_y[j] - poly_x[j] * poly_y[i];
      }
      const double frac = std::clamp(0.5 * std::abs(twice), 0.0, 1.0);
      acc.subcell_area[plus] += frac * cell_area;
      acc.subcell_area[minus] += (1.0 - frac) * cell_area;
    }
  }

  std::vector<std::pair<std::size_t, int>> touches;
  touches.reserve(acc.contour_touch.size());
  for (auto [edge, label] : acc.contour_touch) touches.emplace_back(contours.find(edge), label);
  std::sort(touches.begin(), touches.end());
  touches.erase(std::unique(touches.begin(), touches.end()), touches.end());
  for (auto& d : dec.domains) d.boundary_components = 0;
  for (auto [contour, label] : touches) ++dec.domains[label].boundary_components;
}

void measure_volume_3d(NodalDecomposition& dec, const FieldSample& sample, Accumulators& acc) {
  // Crofton estimate: an isotropic surface of area S crosses 3 S / (2 h^2)
  // lattice edges on average.
  const double per_crossing = 2.0 / 3.0 * dec.grid.spacing * dec.grid.spacing;
  const auto values = sample.values();
  for_each_neighbour_pair(dec.grid, [&](std::size_t a, std::size_t b) {
    if (positive(values[a]) == positive(values[b])) return;
    const int la = dec.labels[a], lb = dec.labels[b];
    acc.perimeter[la] += per_crossing;
    acc.perimeter[lb] += per_crossing;
    acc.nodal_volume += per_crossing;
    acc.add_adjacency(la, lb);
  });
}

}  // namespace

void measure_domains(NodalDecomposition& dec, const FieldSample& sample, AreaEstimator estimator) {
  if (!(dec.grid == sample.grid()) || dec.labels.size() != sample.values().size())
    throw ConfigError("measure_domains: decomposition does not belong to this sample");
  const GridSpec& grid = dec.grid;
  const bool three_d = grid.geometry != Geometry::LatLongSphere && grid.dim == 3;
  if (estimator == AreaEstimator::Subcell && (three_d || grid.geometry == Geometry::LatLongSphere))
    throw ConfigError("measure_domains: subcell areas need a two-dimensional Euclidean grid");

  Accumulators acc(dec.domains.size());
  if (three_d) measure_volume_3d(dec, sample, acc);
  else measure_surface_2d(dec, sample, acc);

  std::sort(acc.adjacency.begin(), acc.adjacency.end());
  acc.adjacency.erase(std::unique(acc.adjacency.begin(), acc.adjacency.end()), acc.adjacency.end());
  if (three_d) {
    for (auto& d : dec.domains) d.boundary_components = 0;
    for (auto [a, b] : acc.adjacency) {
      ++dec.domains[a].boundary_components;
      ++dec.domains[b].boundary_components;
    }
  }

  std::vector<double> cell_area(dec.domains.size(), 0.0);
  if (grid.geometry == Geometry::LatLongSphere) {
    const auto w = sphere_row_weights(grid);
    const std::size_t np = static_cast<std::size_t>(grid.n_phi);
    for (std::size_t i = 0; i < dec.labels.size(); ++i) cell_area[dec.labels[i]] += w[i / np];
  } else {
    const double vol = grid.cell_volume();
    for (auto& d : dec.domains) cell_area[d.label] = static_cast<double>(d.node_count) * vol;
  }

  const auto ext = grid.extents();
  for (auto& d : dec.domains) {
    d.area = estimator == AreaEstimator::Subcell ? acc.subcell_area[d.label] : cell_area[d.label];
    d.perimeter = acc.perimeter[d.label];
    double diag2 = 0.0;
    for (std::size_t k = 0; k < ext.size(); ++k) {
      double step = grid.spacing;
      if (grid.geometry == Geometry::LatLongSphere) step = k == 0 ? 2.0 * kPi / grid.n_phi : kPi / grid.n_theta;
      const double len = (d.bbox.hi[k] - d.bbox.lo[k]) * step;
      diag2 += len * len;
    }
    d.diameter_hint = std::sqrt(diag2);
  }
  dec.adjacency = std::move(acc.adjacency);
  dec.nodal_volume = acc.nodal_volume;
  dec.area_estimator = estimator;
  dec.measured = true;
}

NodalDecomposition decompose(const FieldSample& sample, AreaEstimator estimator) {
  NodalDecomposition dec = label_domains(sample);
  measure_domains(dec, sample, estimator);
  return dec;
}

Point2 node_position(const GridSpec& grid, std::size_t node) {
  const std::size_t nx = grid.extents()[0];
  return {grid.coordinate(static_cast<int>(node % nx)), grid.coordinate(static_cast<int>(node / nx))};
}

BallMembership::BallMembership(const NodalDecomposition& dec, Point2 center)
    : dec_(&dec), min_dist_(dec.domains.size(), kUnbounded), max_dist_(dec.domains.size(), 0.0) {
  require_planar_like(dec.grid, "restrict_counts");
  const bool wrap = dec.grid.periodic();
  const double side = dec.grid.side;
  for (std::size_t i = 0; i < dec.labels.size(); ++i) {
    const Point2 p = node_position(dec.grid, i);
    double dx = p.x - center.x, dy = p.y - center.y;
    if (wrap) {
      dx -= side * std::round(dx / side);
      dy -= side * std::round(dy / side);
    }
    const double dist = std::hypot(dx, dy);
    const int l = dec.labels[i];
    min_dist_[l] = std::min(min_dist_[l], dist);
    max_dist_[l] = std::max(max_dist_[l], dist);
  }
}

BallCounts BallMembership::counts(double radius, double t) const {
  if (std::isfinite(t) && !dec_->measured) throw ConfigError("restrict_counts: area threshold needs measured domains");
  BallCounts out;
  for (const auto& d : dec_->domains) {
    if (std::isfinite(t) && d.area > t) continue;
    if (max_dist_[d.label] < radius) ++out.inside;
    if (min_dist_[d.label] <= radius) ++out.intersects;
  }
  return out;
}

BallCounts restrict_counts(const NodalDecomposition& dec, Point2 center, double radius, double t) {
  require_planar_like(dec.grid, "restrict_counts");
  if (!(radius > 0.0)) throw ConfigError("restrict_counts: radius must be positive");
  if (dec.grid.geometry == Geometry::PlanarWindow) {
    const double half = 0.5 * dec.grid.side * (1.0 + 1e-12);
    if (std::abs(center.x) + radius > half || std::abs(center.y) + radius > half)
      throw ConfigError("restrict_counts: ball not contained in the window");
  }
  return BallMembership(dec, center).counts(radius, t);
}

NestingGraph nesting_graph(const NodalDecomposition& dec) {
  if (!dec.measured) throw ConfigError("nesting_graph: decomposition not measured");
  NestingGraph g;
  const std::size_t n = dec.domains.size();
  g.vertices.resize(n);
  g.degree.assign(n, 0);
  g.interior.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    g.vertices[i] = dec.domains[i].label;
    g.interior[i] = !dec.domains[i].touches_window;
    if (!g.interior[i]) g.has_non_interior = true;
  }
  g.edges = dec.adjacency;
  DisjointSets forest(n);
  for (auto [a, b] : g.edges) {
    ++g.degree[a];
    ++g.degree[b];
    if (g.interior[a] && g.interior[b] && !forest.unite(a, b)) g.interior_cycle = true;
  }
  return g;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

// best[a] = b maximizing overlap(a, b), ties to the smaller b.
std::vector<int> best_overlap(const std::vector<std::pair<int, int>>& sorted_pairs, std::size_t n) {
  std::vector<int> best(n, -1);
  std::vector<std::size_t> best_count(n, 0);
  for (std::size_t i = 0; i < sorted_pairs.size();) {
    std::size_t j = i;
    while (j < sorted_pairs.size() && sorted_pairs[j] == sorted_pairs[i]) ++j;
    const auto [a, b] = sorted_pairs[i];
    if (j - i > best_count[a]) {
      best_count[a] = j - i;
      best[a] = b;
    }
    i = j;
  }
  return best;
}

}  // namespace

PerturbationReport perturbation_stability(const FieldSample& sample, const FieldSample& direction, double b,
                                          AreaEstimator estimator) {
  if (!(sample.grid() == direction.grid()) || !(sample.model() == direction.model()))
    throw ConfigError("perturbation_stability: samples must share model and grid");
  if (!(b >= 0.0) || !std::isfinite(b)) throw ConfigError("perturbation_stability: b must be finite and >= 0");

  std::vector<double> moved(sample.values().begin(), sample.values().end());
  for (std::size_t i = 0; i < moved.size(); ++i) moved[i] += b * direction[i];
  const FieldSample perturbed(sample.model(), sample.grid(), std::move(moved), sample.seed(), sample.index());

  const NodalDecomposition base = decompose(sample, estimator);
  const NodalDecomposition next = decompose(perturbed, estimator);

  std::vector<std::pair<int, int>> forward, backward;
  forward.reserve(base.labels.size());
  backward.reserve(base.labels.size());
  for (std::size_t i = 0; i < base.labels.size(); ++i) {
    forward.emplace_back(base.labels[i], next.labels[i]);
    backward.emplace_back(next.labels[i], base.labels[i]);
  }
  std::sort(forward.begin(), forward.end());
  std::sort(backward.begin(), backward.end());
  const auto best_next = best_overlap(forward, base.domains.size());
  const auto best_base = best_overlap(backward, next.domains.size());

  PerturbationReport report;
  report.b = b;
  std::vector<double> ratios, deltas;
  std::size_t interior = 0, matched = 0;
  for (const auto& d : base.domains) {
    if (d.touches_window) continue;
    ++interior;
    PerturbationMatch m;
    m.label = d.label;
    m.matched_label = best_next[d.label];
    m.perimeter = d.perimeter;
    if (m.matched_label >= 0) {
      const auto& other = next.domains[m.matched_label];
      m.delta_area = std::abs(other.area - d.area);
      m.one_to_one = best_base[m.matched_label] == d.label && !other.touches_window;
    }
    if (m.one_to_one) {
      ++matched;
      deltas.push_back(m.delta_area);
      if (b > 0.0 && m.perimeter > 0.0) ratios.push_back(m.delta_area / (m.perimeter * b));
    }
    report.matches.push_back(m);
  }
  report.matched_fraction = interior == 0 ? 0.0 : static_cast<double>(matched) / interior;
  report.fitted_constant = median(ratios);
  report.median_delta_area = median(deltas);
  return report;
}

std::size_t count_critical_cells(const FieldSample& sample) {
  const GridSpec& grid = sample.grid();
  require_planar_like(grid, "count_critical_cells");
  const auto ext = grid.extents();
  const long long nx = static_cast<long long>(ext[0]), ny = static_cast<long long>(ext[1]);
  const bool wrap = grid.periodic();
  auto at = [&](long long ix, long long iy) {
    ix = ((ix % nx) + nx) % nx;
    iy = ((iy % ny) + ny) % ny;
    return sample[static_cast<std::size_t>(iy * nx + ix)];
  };
  auto has_gradient = [&](long long ix, long long iy) {
    return wrap || (ix > 0 && iy > 0 && ix < nx - 1 && iy < ny - 1);
  };
  std::size_t count = 0;
  const long long cx = wrap ? nx : nx - 1, cy = wrap ? ny : ny - 1;
  for (long long iy = 0; iy < cy; ++iy)
    for (long long ix = 0; ix < cx; ++ix) {
      int gx_pos = 0, gy_pos = 0;
      bool ok = true;
      for (int k = 0; k < 4 && ok; ++k) {
        const long long jx = ix + (k == 1 || k == 2), jy = iy + (k >= 2);
        if (!has_gradient(jx, jy)) {
          ok = false;
          break;
        }
        gx_pos += at(jx + 1, jy) - at(jx - 1, jy) >= 0.0;
        gy_pos += at(jx, jy + 1) - at(jx, jy - 1) >= 0.0;
      }
      if (ok && gx_pos % 4 != 0 && gy_pos % 4 != 0) ++count;
    }
  return count;
}

void write_domain_csv(std::ostream& out, const NodalDecomposition& dec) {
  out << "label,sign,area,perimeter,boundary_components,touches_window\n";
  char buf[160];
  for (const auto& d : dec.domains) {
    std::snprintf(buf, sizeof buf, "%d,%c,%.17g,%.17g,%d,%d\n", d.label, d.sign > 0 ? '+' : '-', d.area, d.perimeter,
                  d.boundary_components, d.touches_window ? 1 : 0);
    out << buf;
  }
}

}  // namespace ncensus
