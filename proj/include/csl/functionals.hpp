#pragma once

// Maximal-type functionals on the grid: the centered maximal function M and
// its dyadic weighted variants, the Carleson functional C (full cube family,
// dyadic weighted, and the auxiliary cQ-normalized form), the area
// functional A, and the non-tangential maximals N and N^D.
//
// Cones are measured in the max norm, |x-z|_inf < alpha t, so every clip is
// against affine faces and the per-cell integrals close. The centered M uses
// sup-norm cubes instead of balls for the same reason; the substitution only
// changes dimensional constants.

#include <string>

#include "csl/fields.hpp"
#include "csl/weights.hpp"

namespace csl {

struct ConeConfig {
  double alpha = 1.0;
  double t_max = std::numeric_limits<double>::infinity();
};

struct FunctionalResult {
  BoundaryField<double> values;
  std::string name;
};

enum class MaximalMode { centered, dyadic_weighted, centered3_weighted };
enum class CarlesonMode { full, dyadic_weighted, c3d };

namespace detail {

// Summed-area table over the cells of one grid level; sums of
// value * overlap-volume against arbitrary boxes, exact for dyadic data.
class RectSummer {
 public:
  RectSummer(const DyadicGrid& grid, int level, const std::vector<double>& level_values)
      : dim_(grid.dim()), side_(std::ldexp(1.0, -level)) {
    for (int a = 0; a < dim_; ++a) {
      origin_[a] = double(grid.root_lo(a));
      n_[a] = grid.cells_per_axis(a, level);
    }
    if (dim_ == 1) {
      sat_.assign(std::size_t(n_[0] + 1), 0.0);
      for (std::int64_t i = 0; i < n_[0]; ++i)
        sat_[std::size_t(i + 1)] = sat_[std::size_t(i)] + level_values[std::size_t(i)];
    } else {
      sat_.assign(std::size_t((n_[0] + 1) * (n_[1] + 1)), 0.0);
      auto at = [&](std::int64_t x, std::int64_t y) -> double& {
        return sat_[std::size_t(y * (n_[0] + 1) + x)];
      };
      for (std::int64_t y = 0; y < n_[1]; ++y)
        for (std::int64_t x = 0; x < n_[0]; ++x)
          at(x + 1, y + 1) = level_values[std::size_t(y * n_[0] + x)] + at(x, y + 1) +
                             at(x + 1, y) - at(x, y);
    }
  }

  // sum of v_c * vol(c ∩ box), box in real coordinates
  double sum(const Point& lo, const Point& hi) const {
    std::array<Seg, 3> segs[kMaxDim];
    int nseg[kMaxDim] = {0, 0};
    for (int a = 0; a < dim_; ++a) {
      double u = (lo[a] - origin_[a]) / side_;
      double v = (hi[a] - origin_[a]) / side_;
      u = std::max(u, 0.0);
      v = std::min(v, double(n_[a]));
      if (!(v > u)) return 0.0;
      double fu = std::floor(u), fv = std::floor(v);
      std::int64_t iu = std::int64_t(fu), iv = std::int64_t(fv);
      int k = 0;
      if (fu < u && iu < n_[a]) {
        double top = std::min(v, fu + 1.0);
        segs[a][k++] = {iu, iu + 1, top - u};
        iu += 1;
        if (top == v) {
          nseg[a] = k;
          continue;
        }
      }
      if (iv > iu) segs[a][k++] = {iu, iv, 1.0};
      if (fv < v && iv >= iu) segs[a][k++] = {iv, iv + 1, v - fv};
      nseg[a] = k;
    }
    double total = 0.0;
    if (dim_ == 1) {
      for (int i = 0; i < nseg[0]; ++i) total += range_sum(segs[0][i].b, segs[0][i].e, 0, 1) * segs[0][i].f;
      return total * side_;
    }
    for (int i = 0; i < nseg[0]; ++i)
      for (int j = 0; j < nseg[1]; ++j)
        total += rect_sum(segs[0][i].b, segs[0][i].e, segs[1][j].b, segs[1][j].e) * segs[0][i].f *
                 segs[1][j].f;
    return total * side_ * side_;
  }

 private:
  struct Seg {
    std::int64_t b, e;
    double f;
  };
  int dim_;
  double side_;
  Point origin_{0, 0};
  std::array<std::int64_t, kMaxDim> n_{1, 1};
  std::vector<double> sat_;

  double range_sum(std::int64_t b, std::int64_t e, std::int64_t, std::int64_t) const {
    return sat_[std::size_t(e)] - sat_[std::size_t(b)];
  }
  double rect_sum(std::int64_t bx, std::int64_t ex, std::int64_t by, std::int64_t ey) const {
    auto at = [&](std::int64_t x, std::int64_t y) {
      return sat_[std::size_t(y * (n_[0] + 1) + x)];
    };
    return at(ex, ey) - at(bx, ey) - at(ex, by) + at(bx, by);
  }
};

// per-leaf sup over dyadic ancestors (and the cube itself) of per-cube values
inline std::vector<double> leaf_ancestor_max(const DyadicGrid& grid,
                                             const std::vector<double>& per_cube) {
  std::vector<double> best(per_cube);
  for (int j = 1; j <= grid.depth(); ++j)
    for (std::int64_t i = grid.level_begin(j); i < grid.level_begin(j + 1); ++i) {
      auto q = grid.cube_at(i);
      best[std::size_t(i)] =
          std::max(per_cube[std::size_t(i)], best[std::size_t(grid.index(q.parent()))]);
    }
  std::vector<double> out(std::size_t(grid.num_leaves()));
  std::int64_t base = grid.level_begin(grid.depth());
  for (std::int64_t l = 0; l < grid.num_leaves(); ++l) out[std::size_t(l)] = best[std::size_t(base + l)];
  return out;
}

// iterate leaf indices whose center lies in prod [lo_i, hi_i)
template <class Fn>
inline void for_each_leaf_center_in(const DyadicGrid& grid, const Point& lo, const Point& hi,
                                    Fn&& fn) {
  double h = grid.leaf_side();
  std::array<std::int64_t, kMaxDim> b{}, e{};
  for (int a = 0; a < grid.dim(); ++a) {
    double o = double(grid.root_lo(a));
    // centers at o + (k + 1/2) h
    std::int64_t kmin = std::int64_t(std::ceil((lo[a] - o) / h - 0.5));
    std::int64_t kmax = std::int64_t(std::ceil((hi[a] - o) / h - 0.5));  // exclusive
    kmin = std::max<std::int64_t>(kmin, 0);
    kmax = std::min<std::int64_t>(kmax, grid.cells_per_axis(a, grid.depth()));
    if (kmax <= kmin) return;
    b[a] = kmin;
    e[a] = kmax;
  }
  if (grid.dim() == 1) {
    for (std::int64_t k = b[0]; k < e[0]; ++k) fn(k);
    return;
  }
  std::int64_t nx = grid.cells_per_axis(0, grid.depth());
  for (std::int64_t y = b[1]; y < e[1]; ++y)
    for (std::int64_t x = b[0]; x < e[0]; ++x) fn(y * nx + x);
}

// per-cube |f| values of one level as a dense slice
inline std::vector<double> level_abs_slice(const HalfspaceField<double>& f, int level) {
  const DyadicGrid& g = *f.grid;
  std::vector<double> out(std::size_t(g.level_count(level)));
  for (std::int64_t i = 0; i < g.level_count(level); ++i)
    out[std::size_t(i)] = std::abs(f[g.level_begin(level) + i]);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// maximal functions
// ---------------------------------------------------------------------------

inline FunctionalResult maximal(const BoundaryField<double>& f, MaximalMode mode,
                                const Weight* w = nullptr) {
  const DyadicGrid& grid = *f.grid;
  FunctionalResult out{zero_boundary_field<double>(grid), ""};

  if (mode == MaximalMode::centered) {
    // sup over cubes {|y-z|_inf < r} with r on the half-leaf lattice,
    // f extended by zero outside the root box
    out.name = "M";
    std::vector<double> absf(std::size_t(grid.num_leaves()));
    for (std::int64_t i = 0; i < grid.num_leaves(); ++i) absf[std::size_t(i)] = std::abs(f[i]);
    detail::RectSummer sums(grid, grid.depth(), absf);
    double h2 = grid.leaf_side() / 2;
    std::int64_t max_m = 0;
    for (int a = 0; a < grid.dim(); ++a)
      max_m = std::max(max_m, 2 * (grid.root_hi(a) - grid.root_lo(a)) << grid.depth());
    for (std::int64_t leaf = 0; leaf < grid.num_leaves(); ++leaf) {
      Point z = grid.leaf_at(leaf).center();
      double best = 0.0;
      for (std::int64_t m = 1; m <= max_m; ++m) {
        double r = double(m) * h2;
        Point lo{z[0] - r, z[1] - r}, hi{z[0] + r, z[1] + r};
        double vol = std::pow(2.0 * r, grid.dim());
        best = std::max(best, sums.sum(lo, hi) / vol);
      }
      out.values[leaf] = best;
    }
    return out;
  }

  if (!w) throw std::invalid_argument("maximal: weighted mode needs a weight");
  auto wmass = cube_weight_measures(w->w);
  std::vector<double> fw(std::size_t(grid.num_leaves()));
  double cell = grid.leaf_measure();
  for (std::int64_t i = 0; i < grid.num_leaves(); ++i)
    fw[std::size_t(i)] = std::abs(f[i]) * w->w[i] * cell;
  auto fmass = aggregate_leaf_sums(grid, fw);

  std::vector<double> ratio(std::size_t(grid.num_cubes()), 0.0);
  if (mode == MaximalMode::dyadic_weighted) {
    out.name = "M^D_w";
    for (std::int64_t i = 0; i < grid.num_cubes(); ++i)
      ratio[std::size_t(i)] = fmass[std::size_t(i)] / wmass[std::size_t(i)];
  } else {
    out.name = "M^3D_w";
    for (std::int64_t i = 0; i < grid.num_cubes(); ++i) {
      auto q = grid.cube_at(i);
      double num = 0.0, den = 0.0;
      // 3Q is exactly the union of the 3^n lattice neighbors of Q
      std::array<std::int64_t, kMaxDim> off{};
      for (off[0] = -1; off[0] <= 1; ++off[0]) {
        for (off[1] = -1; off[1] <= (grid.dim() > 1 ? 1 : -1); ++off[1]) {
          DyadicCube nb = q;
          for (int a = 0; a < grid.dim(); ++a) nb.corner[a] += off[a];
          if (!grid.in_grid(nb)) continue;
          auto k = grid.index(nb);
          num += fmass[std::size_t(k)];
          den += wmass[std::size_t(k)];
        }
      }
      ratio[std::size_t(i)] = den > 0 ? num / den : 0.0;
    }
  }
  auto leafmax = detail::leaf_ancestor_max(grid, ratio);
  out.values.values = std::move(leafmax);
  return out;
}

// ---------------------------------------------------------------------------
// Carleson functionals
// ---------------------------------------------------------------------------

// box integrals sum_{R in Q} |f_R| (l_R/2) nu(R), the dt dnu Carleson numerator
inline std::vector<double> carleson_box_sums_weighted(const HalfspaceField<double>& f,
                                                      const std::vector<double>& nu_cube) {
  const DyadicGrid& grid = *f.grid;
  const int J = grid.depth();
  std::vector<double> res(std::size_t(grid.num_cubes()), 0.0);
  for (int j = J; j >= 0; --j)
    for (std::int64_t i = grid.level_begin(j); i < grid.level_begin(j + 1); ++i) {
      auto q = grid.cube_at(i);
      double acc = std::abs(f[i]) * (q.side() / 2) * nu_cube[std::size_t(i)];
      if (j < J)
        for (int b = 0; b < q.num_children(); ++b) acc += res[std::size_t(grid.index(q.child(b)))];
      res[std::size_t(i)] = acc;
    }
  return res;
}

inline FunctionalResult carleson(const HalfspaceField<double>& f, CarlesonMode mode,
                                 const Weight* nu = nullptr, double c = 15.0) {
  const DyadicGrid& grid = *f.grid;
  FunctionalResult out{zero_boundary_field<double>(grid), ""};

  if (mode == CarlesonMode::full) {
    out.name = "C";
    // family: dyadic cubes plus the lattices shifted by +-(side/2) per axis,
    // any cube overlapping the root box; averages normalize by the full |Q|
    std::vector<detail::RectSummer> level_sums;
    level_sums.reserve(std::size_t(grid.depth() + 1));
    for (int i = 0; i <= grid.depth(); ++i)
      level_sums.emplace_back(grid, i, detail::level_abs_slice(f, i));
    const int shifts = grid.dim() == 1 ? 3 : 9;
    for (int j = 0; j <= grid.depth(); ++j) {
      double side = std::ldexp(1.0, -j);
      for (std::int64_t idx = grid.level_begin(j); idx < grid.level_begin(j + 1); ++idx) {
        auto q = grid.cube_at(idx);
        for (int s = 0; s < shifts; ++s) {
          Point lo{q.lo(0), grid.dim() > 1 ? q.lo(1) : 0.0};
          Point hi{q.hi(0), grid.dim() > 1 ? q.hi(1) : 1.0};
          int code = s;
          for (int a = 0; a < grid.dim(); ++a) {
            int sh = code % 3 - 1;  // -1, 0, +1 half-side shifts
            code /= 3;
            lo[a] += sh * side / 2;
            hi[a] += sh * side / 2;
          }
          // numerator: sum over Whitney layers at levels >= j (their t-range
          // lies below side = 2^-j exactly)
          double num = 0.0;
          for (int i = j; i <= grid.depth(); ++i)
            num += level_sums[std::size_t(i)].sum(lo, hi) * (std::ldexp(1.0, -i) / 2);
          if (num <= 0.0) continue;
          double vol = std::pow(side, grid.dim());
          double val = num / vol;
          detail::for_each_leaf_center_in(grid, lo, hi, [&](std::int64_t leaf) {
            out.values[leaf] = std::max(out.values[leaf], val);
          });
        }
      }
    }
    return out;
  }

  if (!nu) throw std::invalid_argument("carleson: weighted mode needs a weight");
  auto nu_cube = cube_weight_measures(nu->w);

  if (mode == CarlesonMode::dyadic_weighted) {
    out.name = "C^D_nu";
    auto box = carleson_box_sums_weighted(f, nu_cube);
    std::vector<double> ratio(std::size_t(grid.num_cubes()));
    for (std::int64_t i = 0; i < grid.num_cubes(); ++i)
      ratio[std::size_t(i)] = box[std::size_t(i)] / nu_cube[std::size_t(i)];
    out.values.values = detail::leaf_ancestor_max(grid, ratio);
    return out;
  }

  // c3d: sup_{Q dyadic, Q ∋ z} nu(cQ)^{-1} ∬_{(3Q)-hat} |f| dt dnu
  if (!(c >= 1.0)) throw std::invalid_argument("carleson: c3d needs c >= 1");
  out.name = "C^3D_nu";
  auto box = carleson_box_sums_weighted(f, nu_cube);
  std::vector<double> nuleaf(std::size_t(grid.num_leaves()));
  double cellm = grid.leaf_measure();
  for (std::int64_t i = 0; i < grid.num_leaves(); ++i) nuleaf[std::size_t(i)] = nu->w[i] * cellm;
  detail::RectSummer nusum(grid, grid.depth(), nu->w.values);

  std::vector<double> ratio(std::size_t(grid.num_cubes()), 0.0);
  for (std::int64_t i = 0; i < grid.num_cubes(); ++i) {
    auto q = grid.cube_at(i);
    int j = q.level;
    double tcut = 3.0 * q.side();
    double num = 0.0;
    // layers at levels >= j: whole Whitney cells of cubes inside 3Q
    std::array<std::int64_t, kMaxDim> off{};
    for (off[0] = -1; off[0] <= 1; ++off[0]) {
      for (off[1] = -1; off[1] <= (grid.dim() > 1 ? 1 : -1); ++off[1]) {
        DyadicCube nb = q;
        for (int a = 0; a < grid.dim(); ++a) nb.corner[a] += off[a];
        if (!grid.in_grid(nb)) continue;
        num += box[std::size_t(grid.index(nb))];
        // coarser layers above nb: walk ancestors at levels j-1, j-2 whose
        // Whitney t-range meets (0, 3 l(Q)); weight by nu(nb) and the
        // t-overlap fraction
        DyadicCube anc = nb;
        for (int lvl = j - 1; lvl >= std::max(0, j - 2); --lvl) {
          anc = anc.parent();
          double t0 = anc.side() / 2, t1 = anc.side();
          double overlap = std::max(0.0, std::min(t1, tcut) - t0);
          if (overlap > 0.0 && grid.in_grid(anc))
            num += std::abs(f[grid.index(anc)]) * overlap * nu_cube[std::size_t(grid.index(nb))];
        }
      }
    }
    // denominator nu(cQ ∩ root)
    Point lo, hi;
    for (int a = 0; a < grid.dim(); ++a) {
      double mid = q.center(a);
      lo[a] = mid - c * q.side() / 2;
      hi[a] = mid + c * q.side() / 2;
    }
    double den = nusum.sum(lo, hi);
    ratio[std::size_t(i)] = den > 0 ? num / den : 0.0;
  }
  out.values.values = detail::leaf_ancestor_max(grid, ratio);
  return out;
}

// ---------------------------------------------------------------------------
// area and non-tangential functionals
// ---------------------------------------------------------------------------

inline double area_at(const HalfspaceField<double>& f, const Point& z, ConeConfig cone) {
  const DyadicGrid& grid = *f.grid;
  double acc = 0.0;
  for (std::int64_t i = 0; i < grid.num_cubes(); ++i) {
    if (f[i] == 0.0) continue;
    Box w = whitney_region(grid.cube_at(i));
    acc += std::abs(f[i]) * detail::cone_box_tweighted_overlap(w, z, cone.alpha, cone.t_max);
  }
  return acc;
}

inline double nontangential_at(const HalfspaceField<double>& f, const Point& z, ConeConfig cone) {
  const DyadicGrid& grid = *f.grid;
  double best = 0.0;
  for (std::int64_t i = 0; i < grid.num_cubes(); ++i) {
    Box w = whitney_region(grid.cube_at(i));
    if (detail::cone_box_positive_measure(w, z, cone.alpha, cone.t_max))
      best = std::max(best, std::abs(f[i]));
  }
  return best;
}

inline FunctionalResult area(const HalfspaceField<double>& f, ConeConfig cone) {
  if (!(cone.alpha > 0)) throw std::invalid_argument("area: aperture must be positive");
  const DyadicGrid& grid = *f.grid;
  FunctionalResult out{zero_boundary_field<double>(grid), "A"};
  for (std::int64_t i = 0; i < grid.num_cubes(); ++i) {
    if (f[i] == 0.0) continue;
    auto q = grid.cube_at(i);
    Box w = whitney_region(q);
    double reach = cone.alpha * std::min(w.t_hi, cone.t_max);
    Point lo, hi;
    for (int a = 0; a < grid.dim(); ++a) {
      lo[a] = w.lo[a] - reach;
      hi[a] = w.hi[a] + reach;
    }
    double av = std::abs(f[i]);
    detail::for_each_leaf_center_in(grid, lo, hi, [&](std::int64_t leaf) {
      Point z = grid.leaf_at(leaf).center();
      out.values[leaf] += av * detail::cone_box_tweighted_overlap(w, z, cone.alpha, cone.t_max);
    });
  }
  return out;
}

inline FunctionalResult nontangential(const HalfspaceField<double>& f, ConeConfig cone) {
  if (!(cone.alpha > 0)) throw std::invalid_argument("nontangential: aperture must be positive");
  const DyadicGrid& grid = *f.grid;
  FunctionalResult out{zero_boundary_field<double>(grid), "N"};
  for (std::int64_t i = 0; i < grid.num_cubes(); ++i) {
    if (f[i] == 0.0) continue;
    auto q = grid.cube_at(i);
    Box w = whitney_region(q);
    double reach = cone.alpha * std::min(w.t_hi, cone.t_max);
    Point lo, hi;
    for (int a = 0; a < grid.dim(); ++a) {
      lo[a] = w.lo[a] - reach;
      hi[a] = w.hi[a] + reach;
    }
    double av = std::abs(f[i]);
    detail::for_each_leaf_center_in(grid, lo, hi, [&](std::int64_t leaf) {
      if (out.values[leaf] >= av) return;
      Point z = grid.leaf_at(leaf).center();
      if (detail::cone_box_positive_measure(w, z, cone.alpha, cone.t_max))
        out.values[leaf] = av;
    });
  }
  return out;
}

// N^D f(z) = sup over dyadic Q ∋ z of |f| on Q^w; a single ancestor sweep
// for piecewise-constant fields
inline FunctionalResult dyadic_nontangential(const HalfspaceField<double>& f) {
  const DyadicGrid& grid = *f.grid;
  std::vector<double> vals(std::size_t(grid.num_cubes()));
  for (std::int64_t i = 0; i < grid.num_cubes(); ++i) vals[std::size_t(i)] = std::abs(f[i]);
  FunctionalResult out{zero_boundary_field<double>(grid), "N^D"};
  out.values.values = detail::leaf_ancestor_max(grid, vals);
  return out;
}

}  // namespace csl
