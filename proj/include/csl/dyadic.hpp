#pragma once

// Dyadic geometry: cubes, finite grids (trees of cubes over a root box),
// Carleson boxes, Whitney regions, dilations, and exact eta-sparseness
// verification via max-flow feasibility.
//
// Conventions used throughout the library:
//  * a dyadic cube at level j has side 2^-j and integer corner coordinates
//    at that level, i.e. Q = prod_i [c_i 2^-j, (c_i+1) 2^-j);
//  * a grid enumerates the cubes of levels 0..J inside an integer root box;
//  * all measures of dyadic sets are integer counts of leaf cells scaled by
//    2^(-n J), so set arithmetic (unions, stopping rules, sparseness) is
//    exact.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace csl {

inline constexpr int kMaxDim = 2;

using Point = std::array<double, kMaxDim>;

struct DyadicCube {
  int dim = 1;
  int level = 0;  // side length 2^-level; negative levels are allowed
  std::array<std::int64_t, kMaxDim> corner{0, 0};

  double side() const { return std::ldexp(1.0, -level); }
  double lo(int axis) const { return std::ldexp(double(corner[axis]), -level); }
  double hi(int axis) const { return std::ldexp(double(corner[axis] + 1), -level); }
  double center(int axis) const { return std::ldexp(double(corner[axis]) + 0.5, -level); }
  Point center() const {
    Point p{0.0, 0.0};
    for (int a = 0; a < dim; ++a) p[a] = center(a);
    return p;
  }

  DyadicCube parent() const {
    DyadicCube p = *this;
    p.level = level - 1;
    for (int a = 0; a < dim; ++a) p.corner[a] >>= 1;
    return p;
  }

  // child index encodes one bit per axis
  DyadicCube child(int bits) const {
    DyadicCube c = *this;
    c.level = level + 1;
    for (int a = 0; a < dim; ++a) c.corner[a] = 2 * corner[a] + ((bits >> a) & 1);
    return c;
  }
  int num_children() const { return 1 << dim; }

  // true if `other` is contained in *this (as point sets, other at deeper
  // or equal level)
  bool contains(const DyadicCube& other) const {
    if (other.level < level) return false;
    int shift = other.level - level;
    for (int a = 0; a < dim; ++a)
      if ((other.corner[a] >> shift) != corner[a]) return false;
    return true;
  }

  bool contains_point(const Point& x) const {
    for (int a = 0; a < dim; ++a)
      if (!(lo(a) <= x[a] && x[a] < hi(a))) return false;
    return true;
  }

  friend bool operator==(const DyadicCube& a, const DyadicCube& b) {
    return a.dim == b.dim && a.level == b.level && a.corner == b.corner;
  }
  friend bool operator<(const DyadicCube& a, const DyadicCube& b) {
    return std::tie(a.level, a.corner[0], a.corner[1]) <
           std::tie(b.level, b.corner[0], b.corner[1]);
  }
};

// serialization: "n j c1 ... cn"
inline std::string to_string(const DyadicCube& q) {
  std::ostringstream os;
  os << q.dim << ' ' << q.level;
  for (int a = 0; a < q.dim; ++a) os << ' ' << q.corner[a];
  return os.str();
}

inline DyadicCube parse_cube(const std::string& line) {
  std::istringstream is(line);
  DyadicCube q;
  if (!(is >> q.dim >> q.level)) throw std::invalid_argument("parse_cube: bad line '" + line + "'");
  if (q.dim < 1 || q.dim > kMaxDim) throw std::invalid_argument("parse_cube: dimension out of range");
  for (int a = 0; a < q.dim; ++a)
    if (!(is >> q.corner[a])) throw std::invalid_argument("parse_cube: missing corner in '" + line + "'");
  return q;
}

inline std::ostream& operator<<(std::ostream& os, const DyadicCube& q) { return os << to_string(q); }

// Axis-aligned box in the closed upper half-space: (t_lo,t_hi) x base.
struct Box {
  int dim = 1;
  double t_lo = 0.0, t_hi = 0.0;
  std::array<double, kMaxDim> lo{0.0, 0.0};
  std::array<double, kMaxDim> hi{0.0, 0.0};

  double t_extent() const { return t_hi - t_lo; }
  double base_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v *= (hi[a] - lo[a]);
    return v;
  }
  double volume() const { return t_extent() * base_volume(); }
  bool empty() const {
    if (t_hi <= t_lo) return true;
    for (int a = 0; a < dim; ++a)
      if (hi[a] <= lo[a]) return true;
    return false;
  }
};

// Integer-cornered base box at a fixed level: prod_i [lo_i, hi_i) * 2^-level.
// Used for exact arithmetic on odd dilations (3Q, 15Q, ...) of dyadic cubes.
struct IntBox {
  int dim = 1;
  int level = 0;
  std::array<std::int64_t, kMaxDim> lo{0, 0};
  std::array<std::int64_t, kMaxDim> hi{0, 0};

  double lo_real(int a) const { return std::ldexp(double(lo[a]), -level); }
  double hi_real(int a) const { return std::ldexp(double(hi[a]), -level); }
  bool contains_cube(const DyadicCube& q) const {
    if (q.level < level) {
      int s = level - q.level;
      for (int a = 0; a < dim; ++a) {
        if (q.corner[a] * (std::int64_t(1) << s) < lo[a]) return false;
        if ((q.corner[a] + 1) * (std::int64_t(1) << s) > hi[a]) return false;
      }
      return true;
    }
    int s = q.level - level;
    for (int a = 0; a < dim; ++a) {
      if (q.corner[a] < (lo[a] << s)) return false;
      if (q.corner[a] + 1 > (hi[a] << s)) return false;
    }
    return true;
  }
  bool intersects_cube(const DyadicCube& q) const {
    for (int a = 0; a < dim; ++a) {
      double l = std::max(lo_real(a), q.lo(a));
      double h = std::min(hi_real(a), q.hi(a));
      if (h <= l) return false;
    }
    return true;
  }
};

// mQ for odd integer m: same center, m times the side, exactly on the
// level-j lattice.
inline IntBox dilate_odd(const DyadicCube& q, int m) {
  if (m < 1 || m % 2 == 0) throw std::invalid_argument("dilate_odd: m must be odd and positive");
  IntBox b;
  b.dim = q.dim;
  b.level = q.level;
  std::int64_t r = (m - 1) / 2;
  for (int a = 0; a < q.dim; ++a) {
    b.lo[a] = q.corner[a] - r;
    b.hi[a] = q.corner[a] + 1 + r;
  }
  return b;
}

struct CubeGeometry {
  Box carleson_box;
  Box whitney_region;
  Box dilate;  // cQ, same center, side c*l(Q); t-extent not meaningful
};

// Carleson box (0,l) x Q, Whitney region (l/2,l) x Q and the dilation cQ.
inline CubeGeometry geometry(const DyadicCube& q, double c) {
  if (!(c > 0)) throw std::invalid_argument("geometry: c must be positive");
  CubeGeometry g;
  double l = q.side();
  g.carleson_box.dim = q.dim;
  g.carleson_box.t_lo = 0.0;
  g.carleson_box.t_hi = l;
  g.whitney_region.dim = q.dim;
  g.whitney_region.t_lo = l / 2;
  g.whitney_region.t_hi = l;
  g.dilate.dim = q.dim;
  g.dilate.t_lo = 0.0;
  g.dilate.t_hi = c * l;
  for (int a = 0; a < q.dim; ++a) {
    g.carleson_box.lo[a] = g.whitney_region.lo[a] = q.lo(a);
    g.carleson_box.hi[a] = g.whitney_region.hi[a] = q.hi(a);
    double mid = q.center(a);
    g.dilate.lo[a] = mid - c * l / 2;
    g.dilate.hi[a] = mid + c * l / 2;
  }
  return g;
}

inline Box carleson_box(const DyadicCube& q) { return geometry(q, 1.0).carleson_box; }
inline Box whitney_region(const DyadicCube& q) { return geometry(q, 1.0).whitney_region; }
inline Box dilate(const DyadicCube& q, double c) { return geometry(q, c).dilate; }

// Finite dyadic grid: all cubes of levels 0..J inside an integer root box.
// The level-0 cubes are the roots of the inclusion forest.
class DyadicGrid {
 public:
  DyadicGrid() = default;

  DyadicGrid(int dim, std::array<std::int64_t, kMaxDim> root_lo,
             std::array<std::int64_t, kMaxDim> root_hi, int depth,
             std::int64_t leaf_budget = (std::int64_t(1) << 22)) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("DyadicGrid: dimension must be 1 or 2");
    if (depth < 1) throw std::invalid_argument("DyadicGrid: depth must be >= 1");
    dim_ = dim;
    depth_ = depth;
    root_lo_ = root_lo;
    root_hi_ = root_hi;
    for (int a = 0; a < dim_; ++a) {
      width_[a] = root_hi_[a] - root_lo_[a];
      if (width_[a] <= 0) throw std::invalid_argument("DyadicGrid: empty root box");
    }
    for (int a = dim_; a < kMaxDim; ++a) width_[a] = 1;
    std::int64_t leaves = 1;
    for (int a = 0; a < dim_; ++a) leaves *= width_[a] << depth_;
    if (leaves > leaf_budget)
      throw std::length_error("DyadicGrid: leaf count " + std::to_string(leaves) +
                              " exceeds budget " + std::to_string(leaf_budget));
    level_offset_.resize(depth_ + 2, 0);
    for (int j = 0; j <= depth_; ++j) {
      std::int64_t cnt = 1;
      for (int a = 0; a < dim_; ++a) cnt *= width_[a] << j;
      level_offset_[j + 1] = level_offset_[j] + cnt;
    }
  }

  int dim() const { return dim_; }
  int depth() const { return depth_; }
  std::int64_t root_lo(int a) const { return root_lo_[a]; }
  std::int64_t root_hi(int a) const { return root_hi_[a]; }
  double root_volume() const {
    double v = 1;
    for (int a = 0; a < dim_; ++a) v *= double(width_[a]);
    return v;
  }

  std::int64_t num_cubes() const { return level_offset_[depth_ + 1]; }
  std::int64_t num_leaves() const { return level_offset_[depth_ + 1] - level_offset_[depth_]; }
  std::int64_t level_begin(int j) const { return level_offset_[j]; }
  std::int64_t level_count(int j) const { return level_offset_[j + 1] - level_offset_[j]; }

  std::int64_t cells_per_axis(int axis, int level) const { return width_[axis] << level; }

  // leaf cell side length and measure
  double leaf_side() const { return std::ldexp(1.0, -depth_); }
  double leaf_measure() const { return std::ldexp(1.0, -dim_ * depth_); }
  // measure of a cube in units of leaf cells
  std::int64_t measure_units(const DyadicCube& q) const {
    int s = depth_ - q.level;
    std::int64_t m = 1;
    for (int a = 0; a < dim_; ++a) m *= (std::int64_t(1) << s);
    return m;
  }

  bool in_grid(const DyadicCube& q) const {
    if (q.dim != dim_ || q.level < 0 || q.level > depth_) return false;
    for (int a = 0; a < dim_; ++a) {
      if (q.corner[a] < (root_lo_[a] << q.level)) return false;
      if (q.corner[a] + 1 > (root_hi_[a] << q.level)) return false;
    }
    return true;
  }

  // Lattice-aligned cube contained in the root box; admits negative levels
  // (super-cubes above the enumerated tree), used by sparse-family covers.
  bool aligned_in_root(const DyadicCube& q) const {
    if (q.dim != dim_) return false;
    if (q.level >= 0) {
      if (q.level > depth_) return false;
      return in_grid(q);
    }
    int s = -q.level;
    for (int a = 0; a < dim_; ++a) {
      std::int64_t lo = q.corner[a] * (std::int64_t(1) << s);
      std::int64_t hi = (q.corner[a] + 1) * (std::int64_t(1) << s);
      if (lo < root_lo_[a] || hi > root_hi_[a]) return false;
    }
    return true;
  }

  std::int64_t index(const DyadicCube& q) const {
    if (!in_grid(q)) throw std::domain_error("DyadicGrid::index: cube " + to_string(q) + " not in grid");
    std::int64_t idx = 0;
    for (int a = dim_ - 1; a >= 0; --a) {
      std::int64_t c = q.corner[a] - (root_lo_[a] << q.level);
      idx = idx * cells_per_axis(a, q.level) + c;
    }
    return level_offset_[q.level] + idx;
  }

  DyadicCube cube_at(std::int64_t index) const {
    int j = 0;
    while (j <= depth_ && index >= level_offset_[j + 1]) ++j;
    if (j > depth_) throw std::domain_error("DyadicGrid::cube_at: index out of range");
    std::int64_t rem = index - level_offset_[j];
    DyadicCube q;
    q.dim = dim_;
    q.level = j;
    for (int a = 0; a < dim_; ++a) {
      std::int64_t n = cells_per_axis(a, j);
      q.corner[a] = rem % n + (root_lo_[a] << j);
      rem /= n;
    }
    return q;
  }

  std::int64_t leaf_index(const DyadicCube& q) const { return index(q) - level_offset_[depth_]; }
  DyadicCube leaf_at(std::int64_t leaf) const { return cube_at(leaf + level_offset_[depth_]); }

  // leaf cell containing a point, if inside the root box
  std::optional<std::int64_t> leaf_containing(const Point& x) const {
    DyadicCube q;
    q.dim = dim_;
    q.level = depth_;
    for (int a = 0; a < dim_; ++a) {
      double scaled = std::ldexp(x[a], depth_);
      double f = std::floor(scaled);
      q.corner[a] = std::int64_t(f);
      if (q.corner[a] < (root_lo_[a] << depth_) || q.corner[a] >= (root_hi_[a] << depth_))
        return std::nullopt;
    }
    return leaf_index(q);
  }

  std::optional<std::int64_t> parent_index(const DyadicCube& q) const {
    if (q.level == 0) return std::nullopt;
    return index(q.parent());
  }

  // Iterate leaf indices of all leaf cells under an in-grid or aligned cube.
  template <class Fn>
  void for_each_leaf_in(const DyadicCube& q, Fn&& fn) const {
    int s = depth_ - q.level;
    std::array<std::int64_t, kMaxDim> lo{}, cnt{};
    for (int a = 0; a < dim_; ++a) {
      lo[a] = (q.corner[a] << s) - (root_lo_[a] << depth_);
      cnt[a] = std::int64_t(1) << s;
    }
    for_each_leaf_block(lo, cnt, fn);
  }

  // Iterate leaf indices in an integer leaf-coordinate block (already
  // clipped to the root box by the caller via clip_leaf_block).
  template <class Fn>
  void for_each_leaf_block(const std::array<std::int64_t, kMaxDim>& lo,
                           const std::array<std::int64_t, kMaxDim>& cnt, Fn&& fn) const {
    if (dim_ == 1) {
      for (std::int64_t i = 0; i < cnt[0]; ++i) fn(lo[0] + i);
      return;
    }
    std::int64_t nx = cells_per_axis(0, depth_);
    for (std::int64_t jy = 0; jy < cnt[1]; ++jy)
      for (std::int64_t ix = 0; ix < cnt[0]; ++ix) fn((lo[1] + jy) * nx + (lo[0] + ix));
  }

  // Clip an IntBox to the root box and return it in leaf coordinates
  // (lo plus count per axis); empty optional if no overlap.
  std::optional<std::pair<std::array<std::int64_t, kMaxDim>, std::array<std::int64_t, kMaxDim>>>
  clip_leaf_block(const IntBox& b) const {
    if (b.level > depth_) throw std::domain_error("clip_leaf_block: box finer than leaves");
    int s = depth_ - b.level;
    std::array<std::int64_t, kMaxDim> lo{}, cnt{};
    for (int a = 0; a < dim_; ++a) {
      std::int64_t l = (b.lo[a] << s), h = (b.hi[a] << s);
      l = std::max(l, root_lo_[a] << depth_);
      h = std::min(h, root_hi_[a] << depth_);
      if (h <= l) return std::nullopt;
      lo[a] = l - (root_lo_[a] << depth_);
      cnt[a] = h - l;
    }
    return std::make_pair(lo, cnt);
  }

 private:
  int dim_ = 1;
  int depth_ = 1;
  std::array<std::int64_t, kMaxDim> root_lo_{0, 0};
  std::array<std::int64_t, kMaxDim> root_hi_{1, 1};
  std::array<std::int64_t, kMaxDim> width_{1, 1};
  std::vector<std::int64_t> level_offset_;
};

inline DyadicGrid make_grid(int dim, std::array<std::int64_t, kMaxDim> root_lo,
                            std::array<std::int64_t, kMaxDim> root_hi, int depth,
                            std::int64_t leaf_budget = (std::int64_t(1) << 22)) {
  return DyadicGrid(dim, root_lo, root_hi, depth, leaf_budget);
}

// convenience for dimension 1
inline DyadicGrid make_grid(std::int64_t lo, std::int64_t hi, int depth) {
  return DyadicGrid(1, {lo, 0}, {hi, 1}, depth);
}

struct Relatives {
  std::optional<DyadicCube> parent;
  std::optional<DyadicCube> grandparent;
  std::vector<DyadicCube> children;  // empty at leaf level
  std::vector<DyadicCube> siblings;  // empty when parent absent
};

inline Relatives relatives(const DyadicCube& q, const DyadicGrid& grid) {
  if (!grid.in_grid(q)) throw std::domain_error("relatives: cube not in grid");
  Relatives r;
  if (q.level >= 1) {
    r.parent = q.parent();
    for (int b = 0; b < q.num_children(); ++b) {
      DyadicCube s = r.parent->child(b);
      if (!(s == q)) r.siblings.push_back(s);
    }
    if (q.level >= 2) r.grandparent = q.parent().parent();
  }
  if (q.level < grid.depth())
    for (int b = 0; b < q.num_children(); ++b) r.children.push_back(q.child(b));
  return r;
}

// ---------------------------------------------------------------------------
// eta-sparse families and their exact verification
// ---------------------------------------------------------------------------

struct SparseFamily {
  std::vector<DyadicCube> members;
  // witness[i] = leaf indices of E_{Q_i}; optional
  std::optional<std::vector<std::vector<std::int64_t>>> witness;
  double eta = 0.5;
};

struct SparseInfeasibility {
  // Hall violator: a subset of members whose total demand exceeds the
  // number of leaf cells in the union of the members.
  std::vector<std::size_t> member_subset;
  std::int64_t total_demand = 0;
  std::int64_t union_cells = 0;
};

struct VerifySparseResult {
  bool feasible = false;
  std::vector<std::vector<std::int64_t>> witness;  // per member, leaf indices
  std::optional<SparseInfeasibility> certificate;
};

namespace detail {

// smallest integer d with d >= eta * 2^k (exact; eta is a binary rational)
inline std::int64_t ceil_eta_times_pow2(double eta, int k) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("eta must be positive and finite");
  int e = 0;
  double m = std::frexp(eta, &e);  // eta = m * 2^e, m in [0.5, 1)
  auto num = static_cast<std::int64_t>(std::ldexp(m, 53));
  int shift = e - 53 + k;
  if (shift >= 0) {
    unsigned __int128 v = static_cast<unsigned __int128>(num) << shift;
    if (v > static_cast<unsigned __int128>(INT64_MAX)) throw std::overflow_error("eta demand overflow");
    return static_cast<std::int64_t>(v);
  }
  unsigned __int128 denom = static_cast<unsigned __int128>(1) << (-shift);
  unsigned __int128 v = (static_cast<unsigned __int128>(num) + denom - 1) / denom;
  return static_cast<std::int64_t>(v);
}

// Dinic max-flow on a small graph.
class MaxFlow {
 public:
  explicit MaxFlow(int nodes) : head_(nodes, -1) {}

  void add_edge(int from, int to, std::int64_t cap) {
    edges_.push_back({to, head_[from], cap});
    head_[from] = int(edges_.size()) - 1;
    edges_.push_back({from, head_[to], 0});
    head_[to] = int(edges_.size()) - 1;
  }

  std::int64_t run(int s, int t) {
    std::int64_t flow = 0;
    while (bfs(s, t)) {
      iter_ = head_;
      while (std::int64_t f = dfs(s, t, INT64_MAX)) flow += f;
    }
    return flow;
  }

  std::int64_t edge_flow(int edge_id) const { return edges_[2 * edge_id + 1].cap; }

  // nodes reachable from s in the residual graph (after run)
  std::vector<bool> reachable(int s) const {
    std::vector<bool> vis(head_.size(), false);
    std::queue<int> q;
    q.push(s);
    vis[s] = true;
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int e = head_[u]; e != -1; e = edges_[e].next)
        if (edges_[e].cap > 0 && !vis[edges_[e].to]) {
          vis[edges_[e].to] = true;
          q.push(edges_[e].to);
        }
    }
    return vis;
  }

 private:
  struct Edge {
    int to, next;
    std::int64_t cap;
  };
  std::vector<Edge> edges_;
  std::vector<int> head_;
  std::vector<int> level_, iter_;

  bool bfs(int s, int t) {
    level_.assign(head_.size(), -1);
    std::queue<int> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int e = head_[u]; e != -1; e = edges_[e].next)
        if (edges_[e].cap > 0 && level_[edges_[e].to] < 0) {
          level_[edges_[e].to] = level_[u] + 1;
          q.push(edges_[e].to);
        }
    }
    return level_[t] >= 0;
  }

  std::int64_t dfs(int u, int t, std::int64_t f) {
    if (u == t) return f;
    for (int& e = iter_[u]; e != -1; e = edges_[e].next) {
      auto& ed = edges_[e];
      if (ed.cap > 0 && level_[ed.to] == level_[u] + 1) {
        std::int64_t d = dfs(ed.to, t, std::min(f, ed.cap));
        if (d > 0) {
          ed.cap -= d;
          edges_[e ^ 1].cap += d;
          return d;
        }
      }
    }
    return 0;
  }
};

}  // namespace detail

// Decide exactly (at leaf resolution) whether pairwise disjoint witness sets
// E_Q with |E_Q| >= eta |Q| exist for the family, by max-flow feasibility.
inline VerifySparseResult verify_sparse(const SparseFamily& family, double eta,
                                        const DyadicGrid& grid) {
  if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("verify_sparse: eta must lie in (0,1]");
  for (const auto& q : family.members)
    if (!grid.aligned_in_root(q))
      throw std::domain_error("verify_sparse: member cube " + to_string(q) + " outside grid");

  const auto m = family.members.size();
  // demands in leaf units
  std::vector<std::int64_t> demand(m);
  std::int64_t total_demand = 0;
  for (std::size_t i = 0; i < m; ++i) {
    int k = grid.dim() * (grid.depth() - family.members[i].level);
    demand[i] = detail::ceil_eta_times_pow2(eta, k);
    total_demand += demand[i];
  }

  // collect involved leaf cells
  std::vector<std::int64_t> cell_node(grid.num_leaves(), -1);
  std::vector<std::int64_t> cells;
  for (const auto& q : family.members)
    grid.for_each_leaf_in(q, [&](std::int64_t leaf) {
      if (cell_node[leaf] < 0) {
        cell_node[leaf] = std::int64_t(cells.size());
        cells.push_back(leaf);
      }
    });

  const int source = 0, sink = 1;
  const int member_base = 2;
  const int cell_base = member_base + int(m);
  detail::MaxFlow flow(cell_base + int(cells.size()));
  const std::int64_t big = total_demand + 1;

  std::vector<int> demand_edge(m);
  std::vector<std::vector<int>> cell_edges(m);
  int edge_id = 0;
  for (std::size_t i = 0; i < m; ++i) {
    flow.add_edge(source, member_base + int(i), demand[i]);
    demand_edge[i] = edge_id++;
  }
  for (std::size_t i = 0; i < m; ++i)
    grid.for_each_leaf_in(family.members[i], [&](std::int64_t leaf) {
      flow.add_edge(member_base + int(i), cell_base + int(cell_node[leaf]), big);
      cell_edges[i].push_back(edge_id++);
    });
  std::vector<int> sink_edge(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    flow.add_edge(cell_base + int(c), sink, 1);
    sink_edge[c] = edge_id++;
  }

  std::int64_t value = flow.run(source, sink);
  VerifySparseResult result;
  if (value == total_demand) {
    result.feasible = true;
    result.witness.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t pos = 0;
      grid.for_each_leaf_in(family.members[i], [&](std::int64_t leaf) {
        if (flow.edge_flow(cell_edges[i][pos]) > 0) result.witness[i].push_back(leaf);
        ++pos;
      });
    }
    return result;
  }

  // Hall certificate from the min cut: members still reachable from the
  // source have all their cells on the source side, and those cells are
  // too few to meet the demand.
  auto vis = flow.reachable(source);
  SparseInfeasibility cert;
  std::vector<bool> cell_in_union(cells.size(), false);
  for (std::size_t i = 0; i < m; ++i)
    if (vis[member_base + int(i)]) {
      cert.member_subset.push_back(i);
      cert.total_demand += demand[i];
      grid.for_each_leaf_in(family.members[i], [&](std::int64_t leaf) {
        cell_in_union[std::size_t(cell_node[leaf])] = true;
      });
    }
  for (bool b : cell_in_union) cert.union_cells += b ? 1 : 0;
  result.feasible = false;
  result.certificate = cert;
  return result;
}

// Check a concrete witness: E_Q subset of Q, |E_Q| >= eta |Q|, pairwise
// disjoint. Exact in leaf units.
inline bool check_witness(const SparseFamily& family, double eta, const DyadicGrid& grid,
                          std::string* why = nullptr) {
  if (!family.witness) {
    if (why) *why = "no witness present";
    return false;
  }
  const auto& w = *family.witness;
  if (w.size() != family.members.size()) {
    if (why) *why = "witness size mismatch";
    return false;
  }
  std::vector<bool> used(grid.num_leaves(), false);
  for (std::size_t i = 0; i < family.members.size(); ++i) {
    const auto& q = family.members[i];
    int k = grid.dim() * (grid.depth() - q.level);
    std::int64_t need = detail::ceil_eta_times_pow2(eta, k);
    if (std::int64_t(w[i].size()) < need) {
      if (why) *why = "member " + to_string(q) + " witness too small";
      return false;
    }
    for (auto leaf : w[i]) {
      if (leaf < 0 || leaf >= grid.num_leaves()) {
        if (why) *why = "witness cell out of range";
        return false;
      }
      if (used[std::size_t(leaf)]) {
        if (why) *why = "witness cells overlap";
        return false;
      }
      used[std::size_t(leaf)] = true;
      if (!q.contains(grid.leaf_at(leaf))) {
        if (why) *why = "witness cell outside member " + to_string(q);
        return false;
      }
    }
  }
  return true;
}

// Sparse family text format: header "sparse-family n J eta", then one line
// per member: "cube n j c1 ... cn" optionally followed by
// "witness <count> <leaf indices...>".
inline std::string to_string(const SparseFamily& family, const DyadicGrid& grid) {
  std::ostringstream os;
  os << "sparse-family " << grid.dim() << ' ' << grid.depth() << ' ' << family.eta << '\n';
  for (std::size_t i = 0; i < family.members.size(); ++i) {
    os << "cube " << to_string(family.members[i]) << '\n';
    if (family.witness) {
      os << "witness " << (*family.witness)[i].size();
      for (auto leaf : (*family.witness)[i]) os << ' ' << leaf;
      os << '\n';
    }
  }
  return os.str();
}

inline SparseFamily parse_sparse_family(const std::string& text) {
  std::istringstream is(text);
  std::string tag;
  SparseFamily fam;
  int n = 0, J = 0;
  if (!(is >> tag >> n >> J >> fam.eta) || tag != "sparse-family")
    throw std::invalid_argument("parse_sparse_family: bad header");
  std::string line;
  std::getline(is, line);
  bool any_witness = false;
  std::vector<std::vector<std::int64_t>> witness;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    ls >> tag;
    if (tag == "cube") {
      std::string rest;
      std::getline(ls, rest);
      fam.members.push_back(parse_cube(rest));
      witness.emplace_back();
    } else if (tag == "witness") {
      if (fam.members.empty()) throw std::invalid_argument("parse_sparse_family: witness before cube");
      std::size_t cnt = 0;
      ls >> cnt;
      auto& w = witness.back();
      for (std::size_t i = 0; i < cnt; ++i) {
        std::int64_t leaf;
        if (!(ls >> leaf)) throw std::invalid_argument("parse_sparse_family: short witness line");
        w.push_back(leaf);
      }
      any_witness = true;
    } else {
      throw std::invalid_argument("parse_sparse_family: unknown tag '" + tag + "'");
    }
  }
  if (any_witness) fam.witness = std::move(witness);
  return fam;
}

}  // namespace csl
