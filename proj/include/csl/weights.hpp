#pragma once

// Muckenhoupt A_p weights on the boundary grid: power-weight generators with
// exact cell averages, the A_p characteristic over a finite cube family
// (dyadic cubes plus the half-shifted lattices), and the dual weight
// nu = w^(-q/p).
//
// The finite cube family makes the computed characteristic a lower bound of
// the true sup over all cubes. In dimension 2 the power weights use the
// max-norm distance to the pole so cell averages stay in closed form.

#include <cmath>

#include "csl/fields.hpp"

namespace csl {

struct Weight {
  BoundaryField<double> w;
  double p = 2.0;
  double q = 2.0;  // 1/p + 1/q = 1

  Weight() = default;
  Weight(BoundaryField<double> field, double exponent) : w(std::move(field)), p(exponent) {
    if (!(p > 1.0)) throw std::invalid_argument("Weight: p must exceed 1");
    q = p / (p - 1.0);
    for (double v : w.values)
      if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument("Weight: values must be strictly positive and finite");
  }

  const DyadicGrid& grid() const { return *w.grid; }
};

inline Weight unit_weight(const DyadicGrid& grid, double p = 2.0) {
  return Weight(boundary_field(grid, [](const Point&) { return 1.0; }), p);
}

// nu = w^(-q/p), an A_q weight
inline Weight dual_weight(const Weight& w) {
  BoundaryField<double> nu{w.w.grid, {}};
  nu.values.reserve(w.w.values.size());
  for (double v : w.w.values) nu.values.push_back(std::pow(v, -w.q / w.p));
  return Weight(std::move(nu), w.q);
}

namespace detail {

// primitive of x^s on (0, inf); the s = -1 branch is logarithmic
inline double power_primitive(double s, double x) {
  if (x == 0.0) return 0.0;  // only used when s > -1
  if (s == -1.0) return std::log(x);
  return std::pow(x, s + 1.0) / (s + 1.0);
}

// integral of |x|^a over [u, v) in dimension 1 (a > -1)
inline double abs_power_integral_1d(double a, double u, double v) {
  auto F = [&](double x) {
    double s = x < 0 ? -1.0 : 1.0;
    return s * std::pow(std::abs(x), a + 1.0) / (a + 1.0);
  };
  return F(v) - F(u);
}

// integral of x^a * (x - u2) over [lo, hi), 0 <= lo <= hi, u2 >= 0
inline double power_times_linear(double a, double lo, double hi, double u2) {
  double r = power_primitive(a + 1.0, hi) - power_primitive(a + 1.0, lo);
  if (u2 != 0.0) r -= u2 * (power_primitive(a, hi) - power_primitive(a, lo));
  return r;
}

// integral of max(x,y)^a over [u1,v1) x [u2,v2) in the closed first quadrant
inline double maxnorm_power_integral_quadrant(double a, double u1, double v1, double u2,
                                              double v2) {
  auto half = [&](double p1, double p2, double q1, double q2) {
    // contribution of the region {y < x} for rect [p1,p2) x [q1,q2)
    double total = 0.0;
    double lo = std::max(p1, q1), hi = std::min(p2, q2);
    if (hi > lo) total += power_times_linear(a, lo, hi, q1);
    if (p2 > q2) {
      double l2 = std::max(p1, q2);
      total += (q2 - q1) * (power_primitive(a, p2) - power_primitive(a, l2));
    }
    return total;
  };
  return half(u1, v1, u2, v2) + half(u2, v2, u1, v1);
}

// integral of dist(x, pole)^a over a cell, exact; dist is |.| in dimension 1
// and the max norm in dimension 2
inline double power_weight_cell_integral(int dim, double a, const Point& pole, const Point& lo,
                                         const Point& hi) {
  if (dim == 1) return abs_power_integral_1d(a, lo[0] - pole[0], hi[0] - pole[0]);
  // split at the pole axes and fold into the first quadrant
  double total = 0.0;
  std::array<double, 2> u{lo[0] - pole[0], lo[1] - pole[1]};
  std::array<double, 2> v{hi[0] - pole[0], hi[1] - pole[1]};
  std::array<std::array<double, 2>, 2> seg[2];
  for (int ax = 0; ax < 2; ++ax) {
    double neg_lo = std::min(u[ax], 0.0), neg_hi = std::min(v[ax], 0.0);
    double pos_lo = std::max(u[ax], 0.0), pos_hi = std::max(v[ax], 0.0);
    seg[ax][0] = {-neg_hi, -neg_lo};  // folded negative part
    seg[ax][1] = {pos_lo, pos_hi};
  }
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double a1 = seg[0][i][0], b1 = seg[0][i][1];
      double a2 = seg[1][j][0], b2 = seg[1][j][1];
      if (b1 > a1 && b2 > a2) total += maxnorm_power_integral_quadrant(a, a1, b1, a2, b2);
    }
  return total;
}

}  // namespace detail

// |x - pole|^a with exact cell averages; pole defaults to the origin and
// should sit on the leaf lattice so no cell straddles a kink of the
// antiderivative (the splitting handles interior poles anyway).
inline BoundaryField<double> power_weight(const DyadicGrid& grid, double a,
                                          Point pole = {0.0, 0.0}) {
  if (!(a > -grid.dim()))
    throw std::invalid_argument("power_weight: a must exceed -n for local integrability");
  BoundaryField<double> w{&grid, std::vector<double>(std::size_t(grid.num_leaves()))};
  for (std::int64_t i = 0; i < grid.num_leaves(); ++i) {
    auto cell = grid.leaf_at(i);
    Point lo{cell.lo(0), grid.dim() > 1 ? cell.lo(1) : 0.0};
    Point hi{cell.hi(0), grid.dim() > 1 ? cell.hi(1) : 1.0};
    double integral = detail::power_weight_cell_integral(grid.dim(), a, pole, lo, hi);
    double avg = integral / grid.leaf_measure();
    if (!(avg > 0.0) || !std::isfinite(avg))
      throw std::invalid_argument("power_weight: degenerate average at cell " + to_string(cell));
    w[i] = avg;
  }
  return w;
}

// sum of field * cell measure over the box prod [lo_i, hi_i), with exact
// fractional cell overlaps
inline double boundary_box_sum(const BoundaryField<double>& f, const Point& lo, const Point& hi) {
  const DyadicGrid& grid = *f.grid;
  const int J = grid.depth();
  double cell_side = grid.leaf_side();
  std::array<std::int64_t, kMaxDim> ilo{}, ihi{};
  for (int a = 0; a < grid.dim(); ++a) {
    double scaled_lo = std::ldexp(lo[a], J), scaled_hi = std::ldexp(hi[a], J);
    ilo[a] = std::max<std::int64_t>(std::int64_t(std::floor(scaled_lo)), grid.root_lo(a) << J);
    ihi[a] = std::min<std::int64_t>(std::int64_t(std::ceil(scaled_hi)), grid.root_hi(a) << J);
    if (ihi[a] <= ilo[a]) return 0.0;
  }
  double acc = 0.0;
  auto overlap = [&](int a, std::int64_t c) {
    double clo = double(c) * cell_side, chi = double(c + 1) * cell_side;
    return std::max(0.0, std::min(chi, hi[a]) - std::max(clo, lo[a]));
  };
  if (grid.dim() == 1) {
    std::int64_t base = grid.root_lo(0) << J;
    for (std::int64_t c = ilo[0]; c < ihi[0]; ++c) acc += f[c - base] * overlap(0, c);
    return acc;
  }
  std::int64_t bx = grid.root_lo(0) << J, by = grid.root_lo(1) << J;
  std::int64_t nx = grid.cells_per_axis(0, J);
  for (std::int64_t cy = ilo[1]; cy < ihi[1]; ++cy) {
    double oy = overlap(1, cy);
    if (oy <= 0) continue;
    for (std::int64_t cx = ilo[0]; cx < ihi[0]; ++cx)
      acc += f[(cy - by) * nx + (cx - bx)] * overlap(0, cx) * oy;
  }
  return acc;
}

// The cube family for the A_p sup: all dyadic cubes of the grid plus the
// same cubes shifted by half a side in each axis combination, restricted to
// cubes fully inside the root box.
template <class Fn>
inline void for_each_ap_cube(const DyadicGrid& grid, Fn&& fn) {
  for (int j = 0; j <= grid.depth(); ++j) {
    double side = std::ldexp(1.0, -j);
    for (std::int64_t i = grid.level_begin(j); i < grid.level_begin(j + 1); ++i) {
      auto q = grid.cube_at(i);
      for (int mask = 0; mask < (1 << grid.dim()); ++mask) {
        Point lo{q.lo(0), grid.dim() > 1 ? q.lo(1) : 0.0};
        Point hi{q.hi(0), grid.dim() > 1 ? q.hi(1) : 1.0};
        bool ok = true;
        for (int a = 0; a < grid.dim(); ++a) {
          if ((mask >> a) & 1) {
            lo[a] += side / 2;
            hi[a] += side / 2;
          }
          if (lo[a] < double(grid.root_lo(a)) || hi[a] > double(grid.root_hi(a))) ok = false;
        }
        if (ok) fn(lo, hi, side);
      }
    }
  }
}

// [w]_{A_p} = sup_Q (ave_Q w) (ave_Q nu)^{p/q} over the finite cube family;
// a lower bound of the characteristic over all cubes.
inline double ap_characteristic(const Weight& w) {
  const DyadicGrid& grid = w.grid();
  auto nu = dual_weight(w);
  double best = 0.0;
  for_each_ap_cube(grid, [&](const Point& lo, const Point& hi, double side) {
    double vol = side;
    for (int a = 1; a < grid.dim(); ++a) vol *= side;
    double ave_w = boundary_box_sum(w.w, lo, hi) / vol;
    double ave_nu = boundary_box_sum(nu.w, lo, hi) / vol;
    best = std::max(best, ave_w * std::pow(ave_nu, w.p / w.q));
  });
  return best;
}

// the paper's normalization [w]_{A_p}^{1/p} = sup (ave w)^{1/p} (ave nu)^{1/q}
inline double ap_characteristic_root(const Weight& w) {
  return std::pow(ap_characteristic(w), 1.0 / w.p);
}

}  // namespace csl
