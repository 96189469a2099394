#pragma once

// The sparse-domination machinery: exceptional sets from |Sf| and M_S f
// thresholds, density-maximal stopping cubes with their even-division
// certificates, the recursive eta-sparse family builder with global
// calibration of the threshold constant c, and the pointwise domination
// check.
//
// Restrictions f 1_{(3Q)-hat} collapse along recursion paths (3R-hat lies
// inside 3Q-hat whenever R is inside Q), so every node works with the global
// field clipped once against its own dilated box. For points of a node, the
// truncations along cubes at or above the node vanish, which bounds the
// recursion work by the node's subtree.

#include "csl/operators.hpp"

namespace csl {

// thrown when a node itself satisfies the stopping density, i.e. the
// threshold constant c is too small for a well-founded recursion
struct calibration_needed : std::runtime_error {
  DyadicCube cube;
  explicit calibration_needed(const DyadicCube& q)
      : std::runtime_error("stopping selection: node " + to_string(q) +
                           " satisfies its own density condition; increase c"),
        cube(q) {}
};

// ---------------------------------------------------------------------------
// exceptional set E = { y : max(|Sf(y)|, M_S f(y)) > c |Q|^-1 ∬_{3Q-hat} |f| }
// ---------------------------------------------------------------------------

struct ExceptionalSet {
  std::vector<char> cells;  // per-leaf membership, whole grid
  double threshold = 0.0;
  std::int64_t count = 0;
};

inline ExceptionalSet exceptional_set(const InteractionTable& tbl,
                                      const HalfspaceField<double>& f, const DyadicCube& q,
                                      double c) {
  const DyadicGrid& grid = tbl.grid();
  if (!grid.aligned_in_root(q)) throw std::domain_error("exceptional_set: cube outside grid");
  auto mass = support_cells(f);
  Box b = dilated_carleson_box(q, 3.0);
  auto rc = restrict_cells_to_box(grid, b, mass);
  if (rc.full.size() != mass.size() || !rc.partial.empty())
    throw std::invalid_argument("exceptional_set: support of f not inside (3Q)-hat");

  double mass_int = 0.0;
  for (auto w : rc.full)
    mass_int += std::abs(f[w]) * whitney_measure<double>(grid.cube_at(w));
  double volq = std::pow(q.side(), grid.dim());
  ExceptionalSet out;
  out.threshold = c * mass_int / volq;
  out.cells.assign(std::size_t(grid.num_leaves()), 0);
  if (mass.empty()) return out;  // strict threshold: empty field gives empty E

  auto sf = apply_S(tbl, f);
  auto ms = grand_maximal_truncation(tbl, f);
  for (std::int64_t l = 0; l < grid.num_leaves(); ++l)
    if (std::max(std::abs(sf[l]), ms.values[l]) > out.threshold) {
      out.cells[std::size_t(l)] = 1;
      ++out.count;
    }
  return out;
}

// ---------------------------------------------------------------------------
// stopping cubes: maximal strict dyadic subcubes R of Q with
// |R ∩ E| > |R| / (2^n + 1)
// ---------------------------------------------------------------------------

struct StoppingCertificate {
  DyadicCube cube;
  std::int64_t count_in = 0;        // |R ∩ E| in leaf units
  std::int64_t units = 0;           // |R| in leaf units
  bool parent_bound_ok = false;     // |R ∩ E| <= 2^n |R| / (2^n+1)
  bool even_division_ok = false;    // min(|R ∩ E|, |R \ E|) >= |R| / (2^n+1)
};

struct StoppingSelection {
  std::vector<StoppingCertificate> cubes;
  std::int64_t total_selected_units = 0;
};

namespace detail {
inline std::int64_t count_in_cube(const DyadicGrid& grid, const std::vector<char>& cells,
                                  const DyadicCube& q) {
  std::int64_t cnt = 0;
  grid.for_each_leaf_in(q, [&](std::int64_t l) { cnt += cells[std::size_t(l)]; });
  return cnt;
}
}  // namespace detail

inline StoppingSelection select_stopping_cubes(const std::vector<char>& exceptional,
                                               const DyadicCube& q, const DyadicGrid& grid) {
  const std::int64_t denom = (std::int64_t(1) << grid.dim()) + 1;  // 2^n + 1
  auto density_exceeds = [&](const DyadicCube& r, std::int64_t cnt) {
    // cnt / units > 1 / (2^n+1), exact in integers
    return cnt * denom > grid.measure_units(r);
  };
  std::int64_t cnt_q = detail::count_in_cube(grid, exceptional, q);
  if (density_exceeds(q, cnt_q)) throw calibration_needed(q);

  StoppingSelection out;
  std::vector<DyadicCube> stack;
  for (int bchild = 0; bchild < q.num_children(); ++bchild)
    if (q.level < grid.depth()) stack.push_back(q.child(bchild));
  while (!stack.empty()) {
    DyadicCube r = stack.back();
    stack.pop_back();
    std::int64_t cnt = detail::count_in_cube(grid, exceptional, r);
    if (cnt == 0) continue;
    if (!density_exceeds(r, cnt)) {
      if (r.level < grid.depth())
        for (int bchild = 0; bchild < r.num_children(); ++bchild) stack.push_back(r.child(bchild));
      continue;
    }
    StoppingCertificate cert;
    cert.cube = r;
    cert.count_in = cnt;
    cert.units = grid.measure_units(r);
    std::int64_t twon = std::int64_t(1) << grid.dim();
    cert.parent_bound_ok = cnt * denom <= twon * cert.units;
    std::int64_t out_cnt = cert.units - cnt;
    cert.even_division_ok =
        std::min(cnt, out_cnt) * denom >= cert.units && cert.parent_bound_ok;
    out.total_selected_units += cert.units;
    out.cubes.push_back(cert);
  }
  return out;
}

// ---------------------------------------------------------------------------
// eta-sparse family builder (global calibration of c)
// ---------------------------------------------------------------------------

struct SparseNodeLog {
  DyadicCube cube;
  double exceptional_fraction = 0.0;  // |E ∩ Q| / |Q|
  int stopping_count = 0;
  double selected_fraction = 0.0;  // sum |R_j| / |Q|
  double c = 0.0;
};

struct SparseBuild {
  SparseFamily family;  // members with witness sets E_Q
  double selection_fraction = 0.0;
  double eta = 0.5;
  double c = 0.0;       // calibrated constant (minimal passing value tried)
  double c_initial = 0.0;
  std::vector<DyadicCube> cover;
  std::vector<SparseNodeLog> log;
  std::vector<StoppingCertificate> certificates;
  bool verify_passed = false;
};

struct SparseBuildOptions {
  double c_start = 0.0;  // 0: use 2^n + 2
  double c_cap = double(std::int64_t(1) << 30);
  bool run_verify = true;
};

namespace detail {

// minimal lattice cube whose Carleson box contains the support of f;
// requires a dyadic-cube root box when it has to grow beyond level 0
inline DyadicCube minimal_support_cube(const DyadicGrid& grid,
                                       const std::vector<std::int64_t>& mass) {
  DyadicCube c = grid.cube_at(mass.front());
  auto contains_all = [&](const DyadicCube& q) {
    for (auto w : mass)
      if (!q.contains(grid.cube_at(w))) return false;
    return true;
  };
  while (!contains_all(c)) {
    c = c.parent();
    if (!grid.aligned_in_root(c))
      throw std::invalid_argument(
          "build_sparse_family: support needs a cover cube beyond the root box; "
          "use a dyadic-cube root (corner divisible by the side)");
  }
  return c;
}

// top-level cover: Q1, then the siblings of each ancestor up to the root box
inline std::vector<DyadicCube> sparse_cover(const DyadicGrid& grid, const DyadicCube& q1) {
  std::vector<DyadicCube> cover{q1};
  DyadicCube p = q1;
  while (true) {
    DyadicCube parent = p.parent();
    if (!grid.aligned_in_root(parent)) break;
    for (int b = 0; b < parent.num_children(); ++b) {
      DyadicCube sib = parent.child(b);
      if (!(sib == p)) cover.push_back(sib);
    }
    p = parent;
  }
  // the chain must have reached the full root box, otherwise part of the
  // grid would miss its covering cube
  std::int64_t covered = 0;
  for (const auto& c : cover) covered += grid.measure_units(c);
  if (covered != grid.num_leaves())
    throw std::invalid_argument(
        "build_sparse_family: root box is not a single dyadic cube; the "
        "top-level cover cannot tile it");
  return cover;
}

struct NodeResult {
  std::int64_t exceptional_count = 0;
  StoppingSelection selection;
};

// exceptional set of the node (restricted field f 1_{(3R)-hat}) on the
// leaves of R, then the stopping selection
inline NodeResult evaluate_node(const InteractionTable& tbl, const HalfspaceField<double>& f,
                                const std::vector<std::int64_t>& mass, const DyadicCube& node,
                                double c, std::vector<char>& scratch_flags) {
  const DyadicGrid& grid = tbl.grid();
  Box bnode = dilated_carleson_box(node, 3.0);
  auto rc = restrict_cells_to_box(grid, bnode, mass);

  double mass_int = 0.0;
  for (auto w : rc.full) mass_int += std::abs(f[w]) * whitney_measure<double>(grid.cube_at(w));
  for (const auto& p : rc.partial) mass_int += std::abs(f[p.cube]) * p.sub.volume();
  double threshold = c * mass_int / std::pow(node.side(), grid.dim());

  NodeResult out;
  std::fill(scratch_flags.begin(), scratch_flags.end(), 0);
  if (mass_int == 0.0) {
    out.selection = select_stopping_cubes(scratch_flags, node, grid);
    return out;
  }

  // S(f 1_{3R-hat}) on the leaves of the node
  std::vector<double> s_node(std::size_t(grid.num_leaves()), 0.0);
  grid.for_each_leaf_in(node,
                        [&](std::int64_t l) { s_node[std::size_t(l)] = s_restricted_at(tbl, f, rc, l); });

  // M_S of the restricted field within the node: truncations against cubes
  // at or above the node vanish, so only the strict subtree contributes
  std::vector<double> msub(std::size_t(grid.num_leaves()), 0.0);
  struct Frame {
    DyadicCube cube;
    double inherited;
  };
  std::vector<Frame> stack;
  auto push_children = [&](const DyadicCube& p, double inherited) {
    if (p.level < grid.depth())
      for (int b = 0; b < p.num_children(); ++b) stack.push_back({p.child(b), inherited});
  };
  push_children(node, 0.0);
  while (!stack.empty()) {
    Frame fr = stack.back();
    stack.pop_back();
    Box bp = dilated_carleson_box(fr.cube, 3.0);
    Box cap = bp;
    cap.t_hi = std::min(bp.t_hi, bnode.t_hi);
    for (int a = 0; a < grid.dim(); ++a) {
      cap.lo[a] = std::max(bp.lo[a], bnode.lo[a]);
      cap.hi[a] = std::min(bp.hi[a], bnode.hi[a]);
    }
    auto rcp = restrict_cells_to_box(grid, cap, mass);
    double v = 0.0;
    bool covers_all = rcp.full.size() == rc.full.size() + rc.partial.size() && rcp.partial.empty();
    if (!covers_all) {
      grid.for_each_leaf_in(fr.cube, [&](std::int64_t l) {
        v = std::max(v, std::abs(s_node[std::size_t(l)] - s_restricted_at(tbl, f, rcp, l)));
      });
    }
    double best = std::max(fr.inherited, v);
    if (fr.cube.level == grid.depth()) {
      msub[std::size_t(grid.leaf_index(fr.cube))] = best;
    } else {
      // still record the running max at the leaves below via recursion
      push_children(fr.cube, best);
    }
  }

  grid.for_each_leaf_in(node, [&](std::int64_t l) {
    if (std::max(std::abs(s_node[std::size_t(l)]), msub[std::size_t(l)]) > threshold) {
      scratch_flags[std::size_t(l)] = 1;
      ++out.exceptional_count;
    }
  });
  out.selection = select_stopping_cubes(scratch_flags, node, grid);
  return out;
}

}  // namespace detail

inline SparseBuild build_sparse_family(const InteractionTable& tbl,
                                       const HalfspaceField<double>& f, double eta,
                                       SparseBuildOptions opts = {}) {
  if (!(eta > 0.0 && eta < 1.0))
    throw std::invalid_argument("build_sparse_family: eta must lie in (0,1)");
  const DyadicGrid& grid = tbl.grid();
  auto mass = support_cells(f);

  DyadicCube q1 = mass.empty() ? grid.cube_at(grid.level_begin(0))
                               : detail::minimal_support_cube(grid, mass);
  auto cover = detail::sparse_cover(grid, q1);

  const double c_start = opts.c_start > 0 ? opts.c_start : double((1 << grid.dim()) + 2);
  std::vector<char> scratch(std::size_t(grid.num_leaves()), 0);

  for (double c = c_start; c <= opts.c_cap; c *= 2.0) {
    SparseBuild build;
    build.eta = eta;
    build.c = c;
    build.c_initial = c_start;
    build.selection_fraction = 1.0 / double((std::int64_t(1) << grid.dim()) + 1);
    build.cover = cover;
    build.family.eta = eta;
    std::vector<std::vector<std::int64_t>> witness;

    bool ok = true;
    std::vector<DyadicCube> work(cover.begin(), cover.end());
    try {
      while (!work.empty() && ok) {
        DyadicCube node = work.back();
        work.pop_back();
        auto res = detail::evaluate_node(tbl, f, mass, node, c, scratch);

        std::int64_t units = grid.measure_units(node);
        std::int64_t remaining = units - res.selection.total_selected_units;
        // eta-sparseness demand for E_node = node minus the stopping cubes,
        // with the same integer rounding the verifier uses
        if (remaining < detail::ceil_eta_times_pow2(eta, grid.dim() * (grid.depth() - node.level))) {
          ok = false;
          break;
        }

        SparseNodeLog log;
        log.cube = node;
        log.exceptional_fraction = double(res.exceptional_count) / double(units);
        log.stopping_count = int(res.selection.cubes.size());
        log.selected_fraction = double(res.selection.total_selected_units) / double(units);
        log.c = c;
        build.log.push_back(log);

        // witness cells: leaves of the node not under any stopping cube
        std::vector<char> blocked(std::size_t(grid.num_leaves()), 0);
        for (const auto& cert : res.selection.cubes)
          grid.for_each_leaf_in(cert.cube, [&](std::int64_t l) { blocked[std::size_t(l)] = 1; });
        std::vector<std::int64_t> cells;
        grid.for_each_leaf_in(node, [&](std::int64_t l) {
          if (!blocked[std::size_t(l)]) cells.push_back(l);
        });

        build.family.members.push_back(node);
        witness.push_back(std::move(cells));
        for (const auto& cert : res.selection.cubes) {
          build.certificates.push_back(cert);
          if (!cert.even_division_ok) ok = false;
          work.push_back(cert.cube);
        }
      }
    } catch (const calibration_needed&) {
      ok = false;
    }
    if (!ok) continue;

    build.family.witness = std::move(witness);
    if (opts.run_verify) {
      auto vr = verify_sparse(build.family, eta, grid);
      build.verify_passed = vr.feasible;
      if (!build.verify_passed)
        throw std::logic_error("build_sparse_family: constructed family failed verify_sparse");
    }
    return build;
  }
  throw std::runtime_error("build_sparse_family: calibration exceeded the cap on c");
}

// ---------------------------------------------------------------------------
// pointwise sparse domination check:
// sup_y |Sf(y)| / sum_{Q in family, Q ∋ y} |Q|^-1 ∬_{3Q-hat} |f|
// ---------------------------------------------------------------------------

struct DominationCheck {
  double constant = 0.0;
  std::int64_t worst_leaf = -1;
  bool violation = false;  // positive numerator over an empty sparse sum
};

inline DominationCheck check_sparse_domination(const InteractionTable& tbl,
                                               const HalfspaceField<double>& f,
                                               const SparseBuild& build) {
  const DyadicGrid& grid = tbl.grid();
  auto sf = apply_S(tbl, f);
  auto absf = f;
  for (auto& v : absf.values) v = std::abs(v);

  std::vector<double> denom(std::size_t(grid.num_leaves()), 0.0);
  for (const auto& q : build.family.members) {
    double avg = integrate(absf, Region{RegionDilatedCarlesonBox{q, 3.0}}).value /
                 std::pow(q.side(), grid.dim());
    if (avg == 0.0) continue;
    grid.for_each_leaf_in(q, [&](std::int64_t l) { denom[std::size_t(l)] += avg; });
  }

  DominationCheck out;
  for (std::int64_t l = 0; l < grid.num_leaves(); ++l) {
    double num = std::abs(sf[l]);
    double den = denom[std::size_t(l)];
    if (den == 0.0) {
      if (num > 0.0) out.violation = true;
      continue;
    }
    double ratio = num / den;
    if (ratio > out.constant) {
      out.constant = ratio;
      out.worst_leaf = l;
    }
  }
  return out;
}

}  // namespace csl
