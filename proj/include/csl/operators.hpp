#pragma once

// The synthesis operator S f(y) = ∬ k(t,x;y) f(t,x) dt dx, its adjoint
// S* g(t,x) = ∫ k(t,x;y) g(y) dy, restricted/truncated variants, and the
// grand maximal truncation M_S.
//
// Discretization: S* samples the kernel at Whitney-cell centers against the
// midpoint rule in y (cells never touch the boundary singularity, t >= l/2).
// S offers two quadrature policies:
//   * midpoint -- one kernel value per (Whitney cell, output cell) pair,
//     which makes S the exact transpose of S* on the shared grid;
//   * refined  -- adaptive dyadic subdivision of each Whitney cell in (t,x)
//     until the local contribution stabilizes, for quantitative comparison
//     against continuum values near the boundary singularity.
// The sparse-domination pipeline uses the midpoint policy throughout so the
// threshold comparisons and the adjoint identities are self-consistent.

#include "csl/fields.hpp"
#include "csl/functionals.hpp"
#include "csl/kernels.hpp"

namespace csl {

// dense kernel samples k(whitney center of W; leaf center), one row per cube
class InteractionTable {
 public:
  InteractionTable(const DyadicGrid& grid, const Kernel& kernel)
      : grid_(&grid), kernel_(&kernel) {
    if (kernel.dim != grid.dim())
      throw std::invalid_argument("InteractionTable: kernel/grid dimension mismatch");
    const std::int64_t nw = grid.num_cubes(), nl = grid.num_leaves();
    tk_.resize(std::size_t(nw * nl));
    std::vector<Point> leaf_centers;
    leaf_centers.resize(std::size_t(nl));
    for (std::int64_t l = 0; l < nl; ++l) leaf_centers[std::size_t(l)] = grid.leaf_at(l).center();
    for (std::int64_t w = 0; w < nw; ++w) {
      auto q = grid.cube_at(w);
      double t = whitney_center_t(q);
      Point xc = q.center();
      double* row = &tk_[std::size_t(w * nl)];
      for (std::int64_t l = 0; l < nl; ++l) row[l] = (*kernel_)(t, xc, leaf_centers[std::size_t(l)]);
    }
  }

  const DyadicGrid& grid() const { return *grid_; }
  const Kernel& kernel() const { return *kernel_; }
  double at(std::int64_t cube, std::int64_t leaf) const {
    return tk_[std::size_t(cube * grid_->num_leaves() + leaf)];
  }
  const double* row(std::int64_t cube) const {
    return &tk_[std::size_t(cube * grid_->num_leaves())];
  }

 private:
  const DyadicGrid* grid_;
  const Kernel* kernel_;
  std::vector<double> tk_;
};

// ---------------------------------------------------------------------------
// adjoint family: Theta_t f sampled on Whitney cells, and at free points
// ---------------------------------------------------------------------------

inline double theta_at(const Kernel& k, const BoundaryField<double>& f, double t,
                       const Point& x) {
  const DyadicGrid& grid = *f.grid;
  double cell = grid.leaf_measure();
  double acc = 0.0;
  for (std::int64_t l = 0; l < grid.num_leaves(); ++l) {
    if (f[l] == 0.0) continue;
    acc += k(t, x, grid.leaf_at(l).center()) * f[l] * cell;
  }
  return acc;
}

// Theta at one fixed height on every leaf center (used by semigroup checks)
inline BoundaryField<double> theta_field(const Kernel& k, const BoundaryField<double>& f,
                                         double t) {
  const DyadicGrid& grid = *f.grid;
  auto out = zero_boundary_field<double>(grid);
  for (std::int64_t l = 0; l < grid.num_leaves(); ++l)
    out[l] = theta_at(k, f, t, grid.leaf_at(l).center());
  return out;
}

// Theta_s(Theta_t f) at a probe point. The intermediate height-t function is
// sampled on a grid enlarged pad_factor times at equal resolution, so the
// truncation tail of the outer integral stays below the grid error instead
// of flooring it.
inline double theta_compose_at(const Kernel& k, const BoundaryField<double>& f, double s,
                               double t, const Point& z, int pad_factor = 4) {
  const DyadicGrid& grid = *f.grid;
  std::array<std::int64_t, kMaxDim> lo{0, 0}, hi{1, 1};
  for (int a = 0; a < grid.dim(); ++a) {
    std::int64_t width = grid.root_hi(a) - grid.root_lo(a);
    std::int64_t extra = width * (pad_factor - 1) / 2;
    lo[a] = grid.root_lo(a) - extra;
    hi[a] = grid.root_hi(a) + extra;
  }
  DyadicGrid wide(grid.dim(), lo, hi, grid.depth());
  auto mid = zero_boundary_field<double>(wide);
  for (std::int64_t l = 0; l < wide.num_leaves(); ++l)
    mid[l] = theta_at(k, f, t, wide.leaf_at(l).center());
  return theta_at(k, mid, s, z);
}

inline HalfspaceField<double> apply_Sstar(const InteractionTable& tbl,
                                          const BoundaryField<double>& f) {
  const DyadicGrid& grid = tbl.grid();
  auto out = zero_halfspace_field<double>(grid);
  double cell = grid.leaf_measure();
  for (std::int64_t w = 0; w < grid.num_cubes(); ++w) {
    const double* row = tbl.row(w);
    double acc = 0.0;
    for (std::int64_t l = 0; l < grid.num_leaves(); ++l) acc += row[l] * f[l];
    out[w] = acc * cell;
  }
  return out;
}

inline HalfspaceField<double> apply_Sstar(const Kernel& k, const BoundaryField<double>& f) {
  const DyadicGrid& grid = *f.grid;
  auto out = zero_halfspace_field<double>(grid);
  for (std::int64_t w = 0; w < grid.num_cubes(); ++w) {
    auto q = grid.cube_at(w);
    out[w] = theta_at(k, f, whitney_center_t(q), q.center());
  }
  return out;
}

// ---------------------------------------------------------------------------
// synthesis operator S
// ---------------------------------------------------------------------------

struct SPolicy {
  enum Kind { midpoint, refined } kind = midpoint;
  double tol = 1e-9;   // per-cell relative tolerance (refined)
  int max_depth = 22;  // subdivision cap (refined)
};

struct SResult {
  BoundaryField<double> values;
  std::int64_t cap_hits = 0;  // cells whose refinement hit the depth cap
};

namespace detail {

// tensor 4-point Gauss-Legendre rule for ∬_box k(t,x;y) dt dx
inline double gauss_box_quad(const Kernel& k, const Box& box, const Point& y) {
  static constexpr double gx[4] = {-0.8611363115940526, -0.3399810435848563,
                                   0.3399810435848563, 0.8611363115940526};
  static constexpr double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                   0.3478548451374538};
  double tm = 0.5 * (box.t_lo + box.t_hi), th = 0.5 * (box.t_hi - box.t_lo);
  double xm = 0.5 * (box.lo[0] + box.hi[0]), xh = 0.5 * (box.hi[0] - box.lo[0]);
  double acc = 0.0;
  if (box.dim == 1) {
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        acc += gw[i] * gw[j] * k(tm + th * gx[i], {xm + xh * gx[j], 0.0}, y);
    return acc * th * xh;
  }
  double ym = 0.5 * (box.lo[1] + box.hi[1]), yh = 0.5 * (box.hi[1] - box.lo[1]);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int l = 0; l < 4; ++l)
        acc += gw[i] * gw[j] * gw[l] * k(tm + th * gx[i], {xm + xh * gx[j], ym + yh * gx[l]}, y);
  return acc * th * xh * yh;
}

// adaptive dyadic refinement of ∬_box k(t,x;y) dt dx: split into 2^(1+n)
// children until the Gauss estimate stabilizes relative to the local
// absolute mass
inline double adaptive_box_quad(const Kernel& k, const Box& box, const Point& y, double tol,
                                int depth, bool& capped) {
  double coarse = gauss_box_quad(k, box, y);
  Point c{0, 0};
  for (int a = 0; a < box.dim; ++a) c[a] = 0.5 * (box.lo[a] + box.hi[a]);
  double tc = 0.5 * (box.t_lo + box.t_hi);
  const int children = 1 << (1 + box.dim);
  auto make_child = [&](int b) {
    Box child = box;
    child.t_lo = (b & 1) ? tc : box.t_lo;
    child.t_hi = (b & 1) ? box.t_hi : tc;
    for (int a = 0; a < box.dim; ++a) {
      bool hi = (b >> (1 + a)) & 1;
      child.lo[a] = hi ? c[a] : box.lo[a];
      child.hi[a] = hi ? box.hi[a] : c[a];
    }
    return child;
  };
  double fine = 0.0, fine_abs = 0.0;
  for (int b = 0; b < children; ++b) {
    double v = gauss_box_quad(k, make_child(b), y);
    fine += v;
    fine_abs += std::abs(v);
  }
  if (std::abs(fine - coarse) <= tol * std::max(std::abs(fine), fine_abs)) return fine;
  if (depth <= 0) {
    capped = true;
    return fine;
  }
  double acc = 0.0;
  for (int b = 0; b < children; ++b)
    acc += adaptive_box_quad(k, make_child(b), y, tol, depth - 1, capped);
  return acc;
}

}  // namespace detail

// point evaluation of S f at y with the chosen quadrature policy
inline double s_at(const Kernel& k, const HalfspaceField<double>& f, const Point& y,
                   SPolicy policy = {}, std::int64_t* cap_hits = nullptr) {
  const DyadicGrid& grid = *f.grid;
  double acc = 0.0;
  for (std::int64_t w = 0; w < grid.num_cubes(); ++w) {
    if (f[w] == 0.0) continue;
    auto q = grid.cube_at(w);
    Box box = whitney_region(q);
    if (policy.kind == SPolicy::midpoint) {
      acc += f[w] * k(whitney_center_t(q), q.center(), y) * box.volume();
    } else {
      bool capped = false;
      acc += f[w] * detail::adaptive_box_quad(k, box, y, policy.tol, policy.max_depth, capped);
      if (capped && cap_hits) ++*cap_hits;
    }
  }
  return acc;
}

inline SResult apply_S(const Kernel& k, const HalfspaceField<double>& f,
                       const DyadicGrid& out_grid, SPolicy policy = {}) {
  if (k.dim != out_grid.dim())
    throw std::invalid_argument("apply_S: kernel/grid dimension mismatch");
  SResult out{zero_boundary_field<double>(out_grid), 0};
  for (std::int64_t l = 0; l < out_grid.num_leaves(); ++l)
    out.values[l] = s_at(k, f, out_grid.leaf_at(l).center(), policy, &out.cap_hits);
  return out;
}

// midpoint fast path: S is the exact transpose of S* through the table
inline BoundaryField<double> apply_S(const InteractionTable& tbl,
                                     const HalfspaceField<double>& f) {
  const DyadicGrid& grid = tbl.grid();
  auto out = zero_boundary_field<double>(grid);
  for (std::int64_t w = 0; w < grid.num_cubes(); ++w) {
    if (f[w] == 0.0) continue;
    double fv = f[w] * whitney_measure<double>(grid.cube_at(w));
    const double* row = tbl.row(w);
    for (std::int64_t l = 0; l < grid.num_leaves(); ++l) out[l] += fv * row[l];
  }
  return out;
}

// ---------------------------------------------------------------------------
// box-restricted evaluation (midpoint policy), shared by M_S and the sparse
// builder: full cells go through the table, clipped cells get one kernel
// sample at the clipped sub-box center
// ---------------------------------------------------------------------------

struct RestrictedCells {
  std::vector<std::int64_t> full;
  struct Partial {
    std::int64_t cube;
    Box sub;
  };
  std::vector<Partial> partial;
};

// cells of the field clipped to a half-space box region (t_lo..t_hi x base)
inline RestrictedCells restrict_cells_to_box(const DyadicGrid& grid, const Box& b,
                                             const std::vector<std::int64_t>& candidates) {
  RestrictedCells rc;
  for (auto w : candidates) {
    Box wb = whitney_region(grid.cube_at(w));
    Box sub = wb;
    sub.t_lo = std::max(wb.t_lo, b.t_lo);
    sub.t_hi = std::min(wb.t_hi, b.t_hi);
    bool empty = !(sub.t_hi > sub.t_lo);
    for (int a = 0; a < grid.dim() && !empty; ++a) {
      sub.lo[a] = std::max(wb.lo[a], b.lo[a]);
      sub.hi[a] = std::min(wb.hi[a], b.hi[a]);
      if (!(sub.hi[a] > sub.lo[a])) empty = true;
    }
    if (empty) continue;
    if (sub.volume() == wb.volume())
      rc.full.push_back(w);
    else
      rc.partial.push_back({w, sub});
  }
  return rc;
}

// S(f restricted to the box) at a leaf center, midpoint policy
inline double s_restricted_at(const InteractionTable& tbl, const HalfspaceField<double>& f,
                              const RestrictedCells& rc, std::int64_t leaf) {
  const DyadicGrid& grid = tbl.grid();
  double acc = 0.0;
  for (auto w : rc.full)
    acc += f[w] * tbl.at(w, leaf) * whitney_measure<double>(grid.cube_at(w));
  if (!rc.partial.empty()) {
    Point y = grid.leaf_at(leaf).center();
    for (const auto& p : rc.partial) {
      Point c{0, 0};
      for (int a = 0; a < grid.dim(); ++a) c[a] = 0.5 * (p.sub.lo[a] + p.sub.hi[a]);
      acc += f[p.cube] * tbl.kernel()(0.5 * (p.sub.t_lo + p.sub.t_hi), c, y) * p.sub.volume();
    }
  }
  return acc;
}

// the dilated Carleson box (0, c l(Q)) x cQ as a real box
inline Box dilated_carleson_box(const DyadicCube& q, double c) {
  Box b = dilate(q, c);
  b.t_lo = 0.0;
  b.t_hi = c * q.side();
  return b;
}

// indices of cells carrying mass
inline std::vector<std::int64_t> support_cells(const HalfspaceField<double>& f) {
  std::vector<std::int64_t> out;
  for (std::int64_t w = 0; w < f.grid->num_cubes(); ++w)
    if (f[w] != 0.0) out.push_back(w);
  return out;
}

// ---------------------------------------------------------------------------
// grand maximal truncation
// M_S f(y) = sup_{Q dyadic, Q ∋ y} || S(f restricted outside (3Q)-hat) ||_{L_inf(Q)}
// ---------------------------------------------------------------------------

inline FunctionalResult grand_maximal_truncation(const InteractionTable& tbl,
                                                 const HalfspaceField<double>& f) {
  const DyadicGrid& grid = tbl.grid();
  auto sf = apply_S(tbl, f);
  auto mass = support_cells(f);

  std::vector<double> v(std::size_t(grid.num_cubes()), 0.0);
  for (std::int64_t i = 0; i < grid.num_cubes(); ++i) {
    auto q = grid.cube_at(i);
    auto rc = restrict_cells_to_box(grid, dilated_carleson_box(q, 3.0), mass);
    // when every mass cell lies inside (3Q)-hat the truncation vanishes
    if (rc.full.size() == mass.size() && rc.partial.empty()) continue;
    double best = 0.0;
    grid.for_each_leaf_in(q, [&](std::int64_t leaf) {
      double inside = s_restricted_at(tbl, f, rc, leaf);
      best = std::max(best, std::abs(sf[leaf] - inside));
    });
    v[std::size_t(i)] = best;
  }
  FunctionalResult out{zero_boundary_field<double>(grid), "M_S"};
  out.values.values = detail::leaf_ancestor_max(grid, v);
  return out;
}

}  // namespace csl
