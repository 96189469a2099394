#pragma once

// Piecewise-constant functions on the boundary grid and on the Whitney cells
// of the half-space, with exact cell-wise integration, weighted Lp norms and
// pairings.
//
// A HalfspaceField assigns one value per cube Q of the grid, constant on the
// Whitney cell Q^w = (l/2, l) x Q. The cells over all levels 0..J tile
// (2^-(J+1), 1) x root, i.e. each Carleson box up to the t < 2^-(J+1)
// sliver; integrals report the represented measure so truncation stays
// visible.

#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "csl/dyadic.hpp"
#include "csl/rational.hpp"

namespace csl {

template <class T = double>
struct BoundaryField {
  const DyadicGrid* grid = nullptr;
  std::vector<T> values;  // one per leaf cell

  T& operator[](std::int64_t leaf) { return values[std::size_t(leaf)]; }
  const T& operator[](std::int64_t leaf) const { return values[std::size_t(leaf)]; }
};

template <class T = double>
struct HalfspaceField {
  const DyadicGrid* grid = nullptr;
  std::vector<T> values;  // one per cube, the value on its Whitney cell

  T& operator[](std::int64_t cube) { return values[std::size_t(cube)]; }
  const T& operator[](std::int64_t cube) const { return values[std::size_t(cube)]; }
};

template <class T>
inline BoundaryField<T> zero_boundary_field(const DyadicGrid& grid) {
  return BoundaryField<T>{&grid, std::vector<T>(std::size_t(grid.num_leaves()), T(0))};
}

template <class T>
inline HalfspaceField<T> zero_halfspace_field(const DyadicGrid& grid) {
  return HalfspaceField<T>{&grid, std::vector<T>(std::size_t(grid.num_cubes()), T(0))};
}

// Whitney cell of a cube as a box: (l/2, l) x Q.
inline Box whitney_cell_box(const DyadicCube& q) { return whitney_region(q); }

// measure of the Whitney cell, 2^(-(1+n) j - 1)
template <class T = double>
inline T whitney_measure(const DyadicCube& q) {
  double m = std::ldexp(1.0, -(1 + q.dim) * q.level - 1);
  return T(m);
}

inline Point whitney_center(const DyadicCube& q) {
  Point p = q.center();
  return p;
}
inline double whitney_center_t(const DyadicCube& q) { return 0.75 * q.side(); }

// ---------------------------------------------------------------------------
// construction from samplers (midpoint rule)
// ---------------------------------------------------------------------------

template <class Sampler>
inline BoundaryField<double> boundary_field(const DyadicGrid& grid, Sampler&& sampler) {
  BoundaryField<double> f{&grid, std::vector<double>(std::size_t(grid.num_leaves()))};
  for (std::int64_t leaf = 0; leaf < grid.num_leaves(); ++leaf) {
    auto cell = grid.leaf_at(leaf);
    double v = sampler(cell.center());
    if (!std::isfinite(v))
      throw std::invalid_argument("boundary_field: non-finite sample at cell " + to_string(cell));
    f[leaf] = v;
  }
  return f;
}

template <class Sampler>
inline HalfspaceField<double> halfspace_field(const DyadicGrid& grid, Sampler&& sampler) {
  HalfspaceField<double> f{&grid, std::vector<double>(std::size_t(grid.num_cubes()))};
  for (std::int64_t i = 0; i < grid.num_cubes(); ++i) {
    auto q = grid.cube_at(i);
    double v = sampler(whitney_center_t(q), q.center());
    if (!std::isfinite(v))
      throw std::invalid_argument("halfspace_field: non-finite sample at cell " + to_string(q));
    f[i] = v;
  }
  return f;
}

// ---------------------------------------------------------------------------
// tree aggregation helpers
// ---------------------------------------------------------------------------

// per-cube sums of per-leaf data: out[Q] = sum of leaf_vals over leaves in Q
template <class T>
inline std::vector<T> aggregate_leaf_sums(const DyadicGrid& grid, const std::vector<T>& leaf_vals) {
  std::vector<T> out(std::size_t(grid.num_cubes()), T(0));
  const int J = grid.depth();
  std::int64_t base = grid.level_begin(J);
  for (std::int64_t leaf = 0; leaf < grid.num_leaves(); ++leaf)
    out[std::size_t(base + leaf)] = leaf_vals[std::size_t(leaf)];
  for (int j = J; j >= 1; --j) {
    for (std::int64_t i = grid.level_begin(j); i < grid.level_begin(j + 1); ++i) {
      auto q = grid.cube_at(i);
      out[std::size_t(grid.index(q.parent()))] += out[std::size_t(i)];
    }
  }
  return out;
}

// per-cube Carleson box integrals of a halfspace field over the represented
// cells: out[Q] = sum_{R subset of Q} f_R |R^w|  (absolute or signed)
template <class T>
inline std::vector<T> carleson_box_sums(const HalfspaceField<T>& f, bool absolute = true) {
  const DyadicGrid& grid = *f.grid;
  const int J = grid.depth();
  std::vector<T> res(std::size_t(grid.num_cubes()), T(0));
  for (int j = J; j >= 0; --j) {
    for (std::int64_t i = grid.level_begin(j); i < grid.level_begin(j + 1); ++i) {
      auto q = grid.cube_at(i);
      T own = f[i] * whitney_measure<T>(q);
      if (absolute) own = scalar_abs(own);
      T acc = own;
      if (j < J)
        for (int b = 0; b < q.num_children(); ++b)
          acc += res[std::size_t(grid.index(q.child(b)))];
      res[std::size_t(i)] = acc;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// regions
// ---------------------------------------------------------------------------

struct RegionCarlesonBox {
  DyadicCube q;
};
struct RegionWhitneyCell {
  DyadicCube q;
};
// Carleson box over the dilated cube: (0, c*l(Q)) x cQ
struct RegionDilatedCarlesonBox {
  DyadicCube q;
  double c = 3.0;
};
struct RegionCone {
  Point z{0.0, 0.0};
  double aperture = 1.0;
  double t_max = std::numeric_limits<double>::infinity();
};
// half-space complement of a dilated Carleson box
struct RegionHalfspaceComplement {
  DyadicCube q;
  double c = 3.0;
};

using Region = std::variant<RegionCarlesonBox, RegionWhitneyCell, RegionDilatedCarlesonBox,
                            RegionCone, RegionHalfspaceComplement>;

namespace detail {

inline Box region_box(const RegionCarlesonBox& r) { return carleson_box(r.q); }
inline Box region_box(const RegionWhitneyCell& r) { return whitney_region(r.q); }
inline Box region_box(const RegionDilatedCarlesonBox& r) {
  Box b = dilate(r.q, r.c);
  b.t_lo = 0.0;
  b.t_hi = r.c * r.q.side();
  return b;
}

inline double box_overlap_volume(const Box& a, const Box& b) {
  double v = std::max(0.0, std::min(a.t_hi, b.t_hi) - std::max(a.t_lo, b.t_lo));
  for (int ax = 0; ax < a.dim; ++ax)
    v *= std::max(0.0, std::min(a.hi[ax], b.hi[ax]) - std::max(a.lo[ax], b.lo[ax]));
  return v;
}

// Piecewise-affine per-axis overlap of the cone {|x-z|_inf < alpha t} with a
// box; integrates prod_i L_i(t) * weight(t) over the box's t-range, with
// weight(t) = 1 or t^-n. Cones are measured in the max norm so all clipping
// is against affine faces.
struct ConePiece {
  double u, v;                      // t-interval
  std::array<double, kMaxDim> a{};  // L_i(t) = a_i + b_i t on (u, v)
  std::array<double, kMaxDim> b{};
};

inline double cone_axis_raw(double lo, double hi, double z, double alpha, double t) {
  return std::min(hi, z + alpha * t) - std::max(lo, z - alpha * t);
}

template <class Fn>
inline void cone_box_pieces(const Box& w, const Point& z, double alpha, double t_max, Fn&& emit) {
  double t0 = w.t_lo, t1 = std::min(w.t_hi, t_max);
  if (!(t1 > t0)) return;
  std::vector<double> cuts{t0, t1};
  for (int ax = 0; ax < w.dim; ++ax) {
    for (double c : {(w.hi[ax] - z[ax]) / alpha, (z[ax] - w.lo[ax]) / alpha})
      if (c > t0 && c < t1) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  // add zero crossings of the raw overlap inside each piece
  std::vector<double> all;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double u = cuts[i], v = cuts[i + 1];
    if (!(v > u)) continue;
    all.push_back(u);
    for (int ax = 0; ax < w.dim; ++ax) {
      double ru = cone_axis_raw(w.lo[ax], w.hi[ax], z[ax], alpha, u);
      double rv = cone_axis_raw(w.lo[ax], w.hi[ax], z[ax], alpha, v);
      if ((ru < 0) != (rv < 0) && rv != ru) {
        double tc = u + (0.0 - ru) * (v - u) / (rv - ru);
        if (tc > u && tc < v) all.push_back(tc);
      }
    }
  }
  all.push_back(cuts.back());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i + 1 < all.size(); ++i) {
    double u = all[i], v = all[i + 1];
    if (!(v > u)) continue;
    ConePiece p;
    p.u = u;
    p.v = v;
    bool positive = true;
    for (int ax = 0; ax < w.dim; ++ax) {
      double lu = std::max(0.0, cone_axis_raw(w.lo[ax], w.hi[ax], z[ax], alpha, u));
      double lv = std::max(0.0, cone_axis_raw(w.lo[ax], w.hi[ax], z[ax], alpha, v));
      if (lv <= 0 && lu <= 0) positive = false;
      p.b[ax] = (lv - lu) / (v - u);
      p.a[ax] = lu - p.b[ax] * u;
    }
    if (positive) emit(p, w.dim);
  }
}

inline double cone_box_overlap_volume(const Box& w, const Point& z, double alpha, double t_max) {
  double total = 0.0;
  cone_box_pieces(w, z, alpha, t_max, [&](const ConePiece& p, int dim) {
    double u = p.u, v = p.v;
    if (dim == 1) {
      total += p.a[0] * (v - u) + p.b[0] * (v * v - u * u) / 2;
    } else {
      double c0 = p.a[0] * p.a[1];
      double c1 = p.a[0] * p.b[1] + p.a[1] * p.b[0];
      double c2 = p.b[0] * p.b[1];
      total += c0 * (v - u) + c1 * (v * v - u * u) / 2 + c2 * (v * v * v - u * u * u) / 3;
    }
  });
  return total;
}

// integral of t^-n over the cone-box overlap (the area functional's weight)
inline double cone_box_tweighted_overlap(const Box& w, const Point& z, double alpha,
                                         double t_max) {
  double total = 0.0;
  cone_box_pieces(w, z, alpha, t_max, [&](const ConePiece& p, int dim) {
    double u = p.u, v = p.v;
    if (dim == 1) {
      total += p.a[0] * std::log(v / u) + p.b[0] * (v - u);
    } else {
      double c0 = p.a[0] * p.a[1];
      double c1 = p.a[0] * p.b[1] + p.a[1] * p.b[0];
      double c2 = p.b[0] * p.b[1];
      total += c0 * (1.0 / u - 1.0 / v) + c1 * std::log(v / u) + c2 * (v - u);
    }
  });
  return total;
}

inline bool cone_box_positive_measure(const Box& w, const Point& z, double alpha, double t_max) {
  double t1 = std::min(w.t_hi, t_max);
  if (!(t1 > w.t_lo)) return false;
  // per-axis overlap is nondecreasing in t, so positive measure iff positive
  // at the top
  for (int ax = 0; ax < w.dim; ++ax)
    if (!(cone_axis_raw(w.lo[ax], w.hi[ax], z[ax], alpha, t1) > 0)) return false;
  return true;
}

}  // namespace detail

template <class T>
struct IntegrateResult {
  T value{};                  // integral of f over region ∩ represented cells
  T covered_measure{};        // measure of region ∩ represented cells
  double region_measure = 0;  // full geometric measure of the region (inf allowed)
};

// Exact cell-wise integration of a halfspace field over a region. Box-like
// regions work for any scalar type; cones are double-only (affine clipping).
template <class T>
inline IntegrateResult<T> integrate(const HalfspaceField<T>& f, const Region& region) {
  const DyadicGrid& grid = *f.grid;
  IntegrateResult<T> out;

  auto accumulate_box = [&](const Box& b, bool complement) {
    for (std::int64_t i = 0; i < grid.num_cubes(); ++i) {
      auto q = grid.cube_at(i);
      Box w = whitney_region(q);
      double vol = detail::box_overlap_volume(w, b);
      if (complement) vol = w.volume() - vol;
      if (vol <= 0.0) continue;
      T tv(vol);
      out.value += f[i] * tv;
      out.covered_measure += tv;
    }
  };

  if (auto* cb = std::get_if<RegionCarlesonBox>(&region)) {
    if (!grid.aligned_in_root(cb->q))
      throw std::domain_error("integrate: Carleson box base outside grid");
    accumulate_box(detail::region_box(*cb), false);
    out.region_measure = detail::region_box(*cb).volume();
  } else if (auto* wc = std::get_if<RegionWhitneyCell>(&region)) {
    if (!grid.aligned_in_root(wc->q))
      throw std::domain_error("integrate: Whitney cell base outside grid");
    accumulate_box(detail::region_box(*wc), false);
    out.region_measure = detail::region_box(*wc).volume();
  } else if (auto* db = std::get_if<RegionDilatedCarlesonBox>(&region)) {
    if (!grid.aligned_in_root(db->q))
      throw std::domain_error("integrate: dilated box base outside grid");
    accumulate_box(detail::region_box(*db), false);
    out.region_measure = detail::region_box(*db).volume();
  } else if (auto* hc = std::get_if<RegionHalfspaceComplement>(&region)) {
    if (!grid.aligned_in_root(hc->q))
      throw std::domain_error("integrate: complement base outside grid");
    Box b = detail::region_box(RegionDilatedCarlesonBox{hc->q, hc->c});
    accumulate_box(b, true);
    out.region_measure = std::numeric_limits<double>::infinity();
  } else if (auto* cone = std::get_if<RegionCone>(&region)) {
    if constexpr (std::is_same_v<T, double>) {
      for (std::int64_t i = 0; i < grid.num_cubes(); ++i) {
        auto q = grid.cube_at(i);
        Box w = whitney_region(q);
        double vol =
            detail::cone_box_overlap_volume(w, cone->z, cone->aperture, cone->t_max);
        if (vol <= 0.0) continue;
        out.value += f[i] * vol;
        out.covered_measure += vol;
      }
      out.region_measure = std::numeric_limits<double>::infinity();
    } else {
      throw std::invalid_argument("integrate: cone regions require double fields");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// norms and pairings
// ---------------------------------------------------------------------------

inline double lp_norm(const BoundaryField<double>& f, double p,
                      const BoundaryField<double>* weight = nullptr) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
  const DyadicGrid& grid = *f.grid;
  if (std::isinf(p)) {
    double m = 0.0;
    for (auto v : f.values) m = std::max(m, std::abs(v));
    return m;
  }
  double cell = grid.leaf_measure();
  double acc = 0.0;
  for (std::int64_t i = 0; i < grid.num_leaves(); ++i) {
    double w = weight ? (*weight)[i] : 1.0;
    acc += std::pow(std::abs(f[i]), p) * w * cell;
  }
  return std::pow(acc, 1.0 / p);
}

// Lp norm of a halfspace field with respect to dt dx
inline double lp_norm_halfspace(const HalfspaceField<double>& f, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm_halfspace: p must be >= 1");
  const DyadicGrid& grid = *f.grid;
  if (std::isinf(p)) {
    double m = 0.0;
    for (auto v : f.values) m = std::max(m, std::abs(v));
    return m;
  }
  double acc = 0.0;
  for (std::int64_t i = 0; i < grid.num_cubes(); ++i)
    acc += std::pow(std::abs(f[i]), p) * whitney_measure<double>(grid.cube_at(i));
  return std::pow(acc, 1.0 / p);
}

inline double pairing(const BoundaryField<double>& f, const BoundaryField<double>& g,
                      const BoundaryField<double>* weight = nullptr) {
  const DyadicGrid& grid = *f.grid;
  double cell = grid.leaf_measure();
  double acc = 0.0;
  for (std::int64_t i = 0; i < grid.num_leaves(); ++i)
    acc += f[i] * g[i] * (weight ? (*weight)[i] : 1.0) * cell;
  return acc;
}

// dt dx pairing of halfspace fields
inline double pairing_halfspace(const HalfspaceField<double>& f, const HalfspaceField<double>& g) {
  const DyadicGrid& grid = *f.grid;
  double acc = 0.0;
  for (std::int64_t i = 0; i < grid.num_cubes(); ++i)
    acc += f[i] * g[i] * whitney_measure<double>(grid.cube_at(i));
  return acc;
}

// dt dnu pairing: dnu = nu(x) dx with nu a boundary weight; nu_cube must be
// aggregate_leaf_sums of nu * leaf measure (i.e. nu(Q) per cube)
inline double pairing_halfspace_weighted(const HalfspaceField<double>& f,
                                         const HalfspaceField<double>& g,
                                         const std::vector<double>& nu_cube) {
  const DyadicGrid& grid = *f.grid;
  double acc = 0.0;
  for (std::int64_t i = 0; i < grid.num_cubes(); ++i) {
    auto q = grid.cube_at(i);
    acc += f[i] * g[i] * (q.side() / 2) * nu_cube[std::size_t(i)];
  }
  return acc;
}

// nu(Q) per cube from a boundary weight
inline std::vector<double> cube_weight_measures(const BoundaryField<double>& w) {
  const DyadicGrid& grid = *w.grid;
  std::vector<double> leaf(std::size_t(grid.num_leaves()));
  double cell = grid.leaf_measure();
  for (std::int64_t i = 0; i < grid.num_leaves(); ++i) leaf[std::size_t(i)] = w[i] * cell;
  return aggregate_leaf_sums(grid, leaf);
}

// ---------------------------------------------------------------------------
// conversions
// ---------------------------------------------------------------------------

inline HalfspaceField<Rational> to_rational(const HalfspaceField<double>& f) {
  HalfspaceField<Rational> out{f.grid, {}};
  out.values.reserve(f.values.size());
  for (double v : f.values) out.values.emplace_back(v);
  return out;
}

inline HalfspaceField<double> to_double_field(const HalfspaceField<Rational>& f) {
  HalfspaceField<double> out{f.grid, {}};
  out.values.reserve(f.values.size());
  for (const auto& v : f.values) out.values.push_back(to_double(v));
  return out;
}

// ---------------------------------------------------------------------------
// text import/export: header "csl-field <kind> n J root...", then one
// "j c1 [c2] value" line per cell
// ---------------------------------------------------------------------------

namespace detail {
inline void write_field_header(std::ostream& os, const char* kind, const DyadicGrid& g) {
  os << "csl-field " << kind << ' ' << g.dim() << ' ' << g.depth();
  for (int a = 0; a < g.dim(); ++a) os << ' ' << g.root_lo(a) << ' ' << g.root_hi(a);
  os << '\n';
}
inline void check_field_header(std::istream& is, const char* kind, const DyadicGrid& g) {
  std::string tag, k;
  int n, J;
  if (!(is >> tag >> k >> n >> J) || tag != "csl-field" || k != kind)
    throw std::invalid_argument("field load: bad header");
  if (n != g.dim() || J != g.depth()) throw std::invalid_argument("field load: grid mismatch");
  for (int a = 0; a < n; ++a) {
    std::int64_t lo, hi;
    if (!(is >> lo >> hi) || lo != g.root_lo(a) || hi != g.root_hi(a))
      throw std::invalid_argument("field load: root box mismatch");
  }
}
}  // namespace detail

inline std::string to_string(const BoundaryField<double>& f) {
  std::ostringstream os;
  os.precision(17);
  detail::write_field_header(os, "boundary", *f.grid);
  for (std::int64_t i = 0; i < f.grid->num_leaves(); ++i) {
    auto q = f.grid->leaf_at(i);
    os << q.level;
    for (int a = 0; a < q.dim; ++a) os << ' ' << q.corner[a];
    os << ' ' << f[i] << '\n';
  }
  return os.str();
}

inline std::string to_string(const HalfspaceField<double>& f) {
  std::ostringstream os;
  os.precision(17);
  detail::write_field_header(os, "halfspace", *f.grid);
  for (std::int64_t i = 0; i < f.grid->num_cubes(); ++i) {
    auto q = f.grid->cube_at(i);
    os << q.level;
    for (int a = 0; a < q.dim; ++a) os << ' ' << q.corner[a];
    os << ' ' << f[i] << '\n';
  }
  return os.str();
}

inline BoundaryField<double> parse_boundary_field(const DyadicGrid& grid, const std::string& text) {
  std::istringstream is(text);
  detail::check_field_header(is, "boundary", grid);
  auto f = zero_boundary_field<double>(grid);
  int level;
  while (is >> level) {
    DyadicCube q;
    q.dim = grid.dim();
    q.level = level;
    for (int a = 0; a < q.dim; ++a)
      if (!(is >> q.corner[a])) throw std::invalid_argument("field load: truncated line");
    double v;
    if (!(is >> v)) throw std::invalid_argument("field load: missing value");
    f[grid.leaf_index(q)] = v;
  }
  return f;
}

inline HalfspaceField<double> parse_halfspace_field(const DyadicGrid& grid,
                                                    const std::string& text) {
  std::istringstream is(text);
  detail::check_field_header(is, "halfspace", grid);
  auto f = zero_halfspace_field<double>(grid);
  int level;
  while (is >> level) {
    DyadicCube q;
    q.dim = grid.dim();
    q.level = level;
    for (int a = 0; a < q.dim; ++a)
      if (!(is >> q.corner[a])) throw std::invalid_argument("field load: truncated line");
    double v;
    if (!(is >> v)) throw std::invalid_argument("field load: missing value");
    f[grid.index(q)] = v;
  }
  return f;
}

}  // namespace csl
