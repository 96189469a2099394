#pragma once

// Carleson-average Calderon-Zygmund decomposition: select the maximal dyadic
// cubes whose represented Carleson-box integral of |f| exceeds lambda |Q|,
// replace f by its box average there (good part), and keep the mean-zero
// remainders (bad parts). With rational scalars every identity here is
// exact: selected-box averages, the mean-zero property of each bad part,
// and f = g + sum b_j.
//
// Averages normalize by the represented box measure |Q|(l - 2^-(J+1)), i.e.
// by the mass the truncated grid actually carries, so integrate() sees bad
// parts with exactly zero mean.

#include "csl/fields.hpp"

namespace csl {

template <class T = double>
struct CZDecomposition {
  T lambda{};
  std::vector<DyadicCube> cubes;  // selected maximal cubes Q_j, disjoint
  HalfspaceField<T> good;
  // bad part j lives on the cells of the Carleson box over cubes[j]
  std::vector<std::vector<std::pair<std::int64_t, T>>> bad;
  bool truncation_limited = false;  // a level-0 cube qualified; the true
                                    // maximal cube may lie outside the tree

  // reported control of the good part (dyadic Carleson sup vs K lambda)
  double good_dyadic_carleson_sup = 0.0;
  double bound_constant = 0.0;  // K = 2^(n+1), valid unless truncation_limited
  bool good_bound_holds = false;
};

namespace detail {
template <class T>
inline T represented_box_measure(const DyadicGrid& grid, const DyadicCube& q) {
  // |Q| * (l(Q) - 2^-(J+1))
  T base(std::ldexp(1.0, -grid.dim() * q.level));
  T height = T(q.side()) - T(std::ldexp(1.0, -grid.depth() - 1));
  return base * height;
}
}  // namespace detail

template <class T>
inline CZDecomposition<T> cz_decompose(const HalfspaceField<T>& f, const T& lambda) {
  if (!(lambda > T(0))) throw std::invalid_argument("cz_decompose: lambda must be positive");
  const DyadicGrid& grid = *f.grid;
  auto abs_box = carleson_box_sums(f, true);
  auto signed_box = carleson_box_sums(f, false);

  CZDecomposition<T> out;
  out.lambda = lambda;
  out.good = f;

  // maximal qualifying cubes: depth-first from the level-0 roots
  std::vector<std::int64_t> stack;
  for (std::int64_t i = grid.level_begin(0); i < grid.level_begin(1); ++i) stack.push_back(i);
  while (!stack.empty()) {
    std::int64_t i = stack.back();
    stack.pop_back();
    auto q = grid.cube_at(i);
    T base_measure(std::ldexp(1.0, -grid.dim() * q.level));
    if (abs_box[std::size_t(i)] > lambda * base_measure) {
      out.cubes.push_back(q);
      if (q.level == 0) out.truncation_limited = true;
      continue;  // maximal: do not descend
    }
    if (q.level < grid.depth())
      for (int b = 0; b < q.num_children(); ++b) stack.push_back(grid.index(q.child(b)));
  }

  out.bad.resize(out.cubes.size());
  for (std::size_t j = 0; j < out.cubes.size(); ++j) {
    const auto& q = out.cubes[j];
    T avg = signed_box[std::size_t(grid.index(q))] / detail::represented_box_measure<T>(grid, q);
    // cells of the Carleson box over q are exactly the cubes inside q
    std::vector<std::int64_t> sub{grid.index(q)};
    while (!sub.empty()) {
      std::int64_t i = sub.back();
      sub.pop_back();
      out.bad[j].emplace_back(i, f[i] - avg);
      out.good[i] = avg;
      auto r = grid.cube_at(i);
      if (r.level < grid.depth())
        for (int b = 0; b < r.num_children(); ++b) sub.push_back(grid.index(r.child(b)));
    }
  }

  // dyadic Carleson control of the good part
  auto good_abs_box = carleson_box_sums(out.good, true);
  double sup = 0.0;
  for (std::int64_t i = 0; i < grid.num_cubes(); ++i) {
    auto q = grid.cube_at(i);
    double ratio = to_double(good_abs_box[std::size_t(i)]) / std::ldexp(1.0, -grid.dim() * q.level);
    sup = std::max(sup, ratio);
  }
  out.good_dyadic_carleson_sup = sup;
  out.bound_constant = std::ldexp(1.0, grid.dim() + 1);  // 2^(n+1)
  out.good_bound_holds = sup <= out.bound_constant * to_double(lambda) * (1 + 1e-12);
  return out;
}

// bad part j as a full halfspace field
template <class T>
inline HalfspaceField<T> materialize_bad_part(const CZDecomposition<T>& cz,
                                              const DyadicGrid& grid, std::size_t j) {
  auto out = zero_halfspace_field<T>(grid);
  for (const auto& [cell, value] : cz.bad[j]) out[cell] = value;
  return out;
}

// ---------------------------------------------------------------------------
// Whitney mean-zero split: f = f0 + f1 with f1 constant on each Whitney cell
// and f0 of exact zero mean per cell. The input carries one dyadic
// refinement of data per Whitney cell (2^(1+n) equal sub-boxes).
// ---------------------------------------------------------------------------

template <class T = double>
struct SubdividedHalfspaceField {
  const DyadicGrid* grid = nullptr;
  int sub_count = 4;      // 2^(1+n)
  std::vector<T> values;  // cube-major, sub_count entries per cube

  T& at(std::int64_t cube, int sub) { return values[std::size_t(cube * sub_count + sub)]; }
  const T& at(std::int64_t cube, int sub) const {
    return values[std::size_t(cube * sub_count + sub)];
  }
};

// sub-box `s` of a Whitney cell: bit 0 picks the t-half, bit 1+a the x-half
// along axis a
inline Box whitney_subcell_box(const DyadicCube& q, int sub) {
  Box w = whitney_region(q);
  Box b = w;
  double tm = 0.5 * (w.t_lo + w.t_hi);
  b.t_lo = (sub & 1) ? tm : w.t_lo;
  b.t_hi = (sub & 1) ? w.t_hi : tm;
  for (int a = 0; a < q.dim; ++a) {
    double m = 0.5 * (w.lo[a] + w.hi[a]);
    b.lo[a] = ((sub >> (1 + a)) & 1) ? m : w.lo[a];
    b.hi[a] = ((sub >> (1 + a)) & 1) ? w.hi[a] : m;
  }
  return b;
}

template <class Sampler>
inline SubdividedHalfspaceField<double> subdivided_halfspace_field(const DyadicGrid& grid,
                                                                   Sampler&& sampler) {
  SubdividedHalfspaceField<double> f;
  f.grid = &grid;
  f.sub_count = 1 << (1 + grid.dim());
  f.values.resize(std::size_t(grid.num_cubes() * f.sub_count));
  for (std::int64_t i = 0; i < grid.num_cubes(); ++i) {
    auto q = grid.cube_at(i);
    for (int s = 0; s < f.sub_count; ++s) {
      Box b = whitney_subcell_box(q, s);
      Point c{0, 0};
      for (int a = 0; a < grid.dim(); ++a) c[a] = 0.5 * (b.lo[a] + b.hi[a]);
      double v = sampler(0.5 * (b.t_lo + b.t_hi), c);
      if (!std::isfinite(v))
        throw std::invalid_argument("subdivided_halfspace_field: non-finite sample at " +
                                    to_string(q));
      f.at(i, s) = v;
    }
  }
  return f;
}

template <class T>
inline SubdividedHalfspaceField<T> subdivide(const HalfspaceField<T>& f) {
  SubdividedHalfspaceField<T> out;
  out.grid = f.grid;
  out.sub_count = 1 << (1 + f.grid->dim());
  out.values.resize(std::size_t(f.grid->num_cubes() * out.sub_count));
  for (std::int64_t i = 0; i < f.grid->num_cubes(); ++i)
    for (int s = 0; s < out.sub_count; ++s) out.at(i, s) = f[i];
  return out;
}

template <class T>
struct WhitneySplit {
  SubdividedHalfspaceField<T> oscillation;  // f0, zero mean on every cell
  HalfspaceField<T> cellwise;               // f1, constant per Whitney cell
};

template <class T>
inline WhitneySplit<T> whitney_split(const SubdividedHalfspaceField<T>& f) {
  const DyadicGrid& grid = *f.grid;
  WhitneySplit<T> out;
  out.oscillation = f;
  out.cellwise = zero_halfspace_field<T>(grid);
  T inv(1.0 / double(f.sub_count));  // sub-boxes have equal volume
  for (std::int64_t i = 0; i < grid.num_cubes(); ++i) {
    T mean(0);
    for (int s = 0; s < f.sub_count; ++s) mean += f.at(i, s);
    mean *= inv;
    out.cellwise[i] = mean;
    for (int s = 0; s < f.sub_count; ++s) out.oscillation.at(i, s) = f.at(i, s) - mean;
  }
  return out;
}

// L1 norms (dt dx) of split pieces
template <class T>
inline double l1_norm_subdivided(const SubdividedHalfspaceField<T>& f) {
  const DyadicGrid& grid = *f.grid;
  double acc = 0.0;
  for (std::int64_t i = 0; i < grid.num_cubes(); ++i) {
    double cell = whitney_measure<double>(grid.cube_at(i)) / double(f.sub_count);
    for (int s = 0; s < f.sub_count; ++s) acc += std::abs(to_double(f.at(i, s))) * cell;
  }
  return acc;
}

}  // namespace csl
