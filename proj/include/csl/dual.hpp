#pragma once

// Dual-function construction for the N^D / C^D_nu pairing: from a halfspace
// field f, the per-cube sups a_Q = |f| on Q^w and their strict-ancestor
// maxima b_Q give each cube the mass
//   g_Q = nu(Q) (a_Q^(q-1) - b_Q^(q-1))_+ / (q-1),
// the dt dnu mass of g on Q^w. Q carries mass exactly when it is the maximal
// cube with a_Q > lambda for some level lambda in [b_Q, a_Q). The field g is
// constant on each Whitney cell with sign matching f, normalized so that
// ∬_{Q^w} f g dt dnu = a_Q g_Q holds exactly.

#include "csl/functionals.hpp"
#include "csl/weights.hpp"

namespace csl {

struct DualFunctionBuild {
  HalfspaceField<double> g;
  std::vector<double> a;       // per cube: |f| on the Whitney cell
  std::vector<double> b;       // per cube: max of a over strict ancestors
  std::vector<double> g_mass;  // per cube: dt dnu mass of g on Q^w
  double q = 2.0;
  bool zero_input = false;     // f vanished; no non-vanishing dual exists
  double pairing = 0.0;        // ∬ f g dt dnu = sum_Q a_Q g_Q
};

inline DualFunctionBuild construct_dual_function(const HalfspaceField<double>& f,
                                                 const Weight& nu, double q) {
  if (!(q > 1.0)) throw std::invalid_argument("construct_dual_function: q must exceed 1");
  const DyadicGrid& grid = *f.grid;
  if (nu.w.grid != f.grid)
    throw std::invalid_argument("construct_dual_function: weight lives on another grid");

  DualFunctionBuild out;
  out.q = q;
  out.g = zero_halfspace_field<double>(grid);
  const auto n_cubes = std::size_t(grid.num_cubes());
  out.a.resize(n_cubes);
  out.b.assign(n_cubes, 0.0);
  out.g_mass.assign(n_cubes, 0.0);

  for (std::size_t i = 0; i < n_cubes; ++i) out.a[i] = std::abs(f[std::int64_t(i)]);
  // strict-ancestor maxima, top-down; zero at the level-0 roots
  for (int j = 1; j <= grid.depth(); ++j)
    for (std::int64_t i = grid.level_begin(j); i < grid.level_begin(j + 1); ++i) {
      auto p = grid.index(grid.cube_at(i).parent());
      out.b[std::size_t(i)] = std::max(out.b[std::size_t(p)], out.a[std::size_t(p)]);
    }

  auto nu_cube = cube_weight_measures(nu.w);
  bool any = false;
  for (std::size_t i = 0; i < n_cubes; ++i) {
    double a = out.a[i], b = out.b[i];
    if (!(a > b)) continue;  // the level interval [b_Q, a_Q) is empty
    any = true;
    double mass = nu_cube[i] * (std::pow(a, q - 1.0) - std::pow(b, q - 1.0)) / (q - 1.0);
    out.g_mass[i] = mass;
    auto cube = grid.cube_at(std::int64_t(i));
    double height = cube.side() / 2;
    double value = mass / (height * nu_cube[i]);
    out.g[std::int64_t(i)] = (f[std::int64_t(i)] < 0 ? -1.0 : 1.0) * value;
    out.pairing += a * mass;
  }
  out.zero_input = !any;
  return out;
}

// || N^D f ||_{L_q(nu)}^q, the layer-cake side of the duality chain
inline double dyadic_nontangential_lq_pow(const HalfspaceField<double>& f, const Weight& nu,
                                          double q) {
  auto nd = dyadic_nontangential(f);
  double norm = lp_norm(nd.values, q, &nu.w);
  return std::pow(norm, q);
}

struct ReverseDualityReport {
  double pairing = 0.0;
  double nd_norm = 0.0;      // || N^D f ||_{L_q(nu)}
  double cd_norm = 0.0;      // || C^D_nu g ||_{L_p(nu)}
  double ratio = 0.0;        // pairing / (nd_norm * cd_norm)
};

inline ReverseDualityReport reverse_duality_report(const HalfspaceField<double>& f,
                                                   const Weight& nu, double q) {
  double p = q / (q - 1.0);
  auto build = construct_dual_function(f, nu, q);
  ReverseDualityReport rep;
  rep.pairing = build.pairing;
  rep.nd_norm = lp_norm(dyadic_nontangential(f).values, q, &nu.w);
  rep.cd_norm = lp_norm(carleson(build.g, CarlesonMode::dyadic_weighted, &nu).values, p, &nu.w);
  double denom = rep.nd_norm * rep.cd_norm;
  rep.ratio = denom > 0 ? rep.pairing / denom : 0.0;
  return rep;
}

}  // namespace csl
