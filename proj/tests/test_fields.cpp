#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "csl/fields.hpp"

using namespace csl;

namespace {
double uniform01(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1p-53; }
double uniform_pm1(std::mt19937_64& rng) { return 2.0 * uniform01(rng) - 1.0; }
}  // namespace

TEST_CASE("boundary_field samples cell centers") {
  auto grid = make_grid(0, 1, 1);
  auto c1 = boundary_field(grid, [](const Point&) { return 1.0; });
  REQUIRE(c1.values == std::vector<double>{1.0, 1.0});

  auto idf = boundary_field(grid, [](const Point& x) { return x[0]; });
  REQUIRE(idf.values == std::vector<double>{0.25, 0.75});

  auto grid2 = make_grid(0, 1, 2);
  auto ind = boundary_field(grid2, [](const Point& x) { return x[0] < 0.5 ? 1.0 : 0.0; });
  REQUIRE(ind.values == std::vector<double>{1.0, 1.0, 0.0, 0.0});

  REQUIRE_THROWS_WITH(boundary_field(grid, [](const Point& x) { return x[0] < 0.5 ? 0.0 / 0.0 : 1.0; }),
                      Catch::Matchers::ContainsSubstring("1 1 0"));
}

TEST_CASE("halfspace_field samples Whitney cell centers") {
  auto grid = make_grid(0, 1, 3);
  auto c1 = halfspace_field(grid, [](double, const Point&) { return 1.0; });
  for (auto v : c1.values) REQUIRE(v == 1.0);

  // indicator of the Carleson box over [0,1/2): hits exactly the Whitney
  // cells of cubes inside [0,1/2)
  auto ind = halfspace_field(grid, [](double t, const Point& x) {
    return (t < 0.5 && x[0] >= 0.0 && x[0] < 0.5) ? 1.0 : 0.0;
  });
  DyadicCube half{1, 1, {0, 0}};
  for (std::int64_t i = 0; i < grid.num_cubes(); ++i) {
    auto q = grid.cube_at(i);
    bool inside = half.contains(q);
    REQUIRE(ind[i] == (inside ? 1.0 : 0.0));
  }

  auto tfield = halfspace_field(grid, [](double t, const Point&) { return t; });
  DyadicCube unit{1, 0, {0, 0}};
  REQUIRE(tfield[grid.index(unit)] == 0.75);
}

TEST_CASE("integrate over Carleson boxes reports the truncation sliver") {
  const int J = 4;
  auto grid = make_grid(0, 1, J);
  auto one = halfspace_field(grid, [](double, const Point&) { return 1.0; });
  DyadicCube half{1, 1, {0, 0}};
  auto r = integrate(one, Region{RegionCarlesonBox{half}});
  double expect_covered = 0.5 * (0.5 - std::ldexp(1.0, -J - 1));
  REQUIRE(r.value == Catch::Approx(expect_covered).epsilon(1e-15));
  REQUIRE(r.covered_measure == Catch::Approx(expect_covered).epsilon(1e-15));
  REQUIRE(r.region_measure == Catch::Approx(0.25).epsilon(1e-15));

  auto zero = zero_halfspace_field<double>(grid);
  auto rz = integrate(zero, Region{RegionCone{{0.3, 0.0}, 1.0}});
  REQUIRE(rz.value == 0.0);
}

TEST_CASE("integrate clips cones exactly (closed form vs quadrature oracle)") {
  const int J = 5;
  auto grid = make_grid(0, 1, J);
  // f = 1 on the single Whitney cell (1/2,1) x [0,1)
  auto f = zero_halfspace_field<double>(grid);
  DyadicCube unit{1, 0, {0, 0}};
  f[grid.index(unit)] = 1.0;
  Region cone{RegionCone{{0.5, 0.0}, 1.0}};
  auto r = integrate(f, cone);
  // area of {(t,x): 1/2<t<1, 0<=x<1, |x-1/2|<t} = 1/2 exactly
  REQUIRE(r.value == Catch::Approx(0.5).epsilon(1e-14));

  // independent oracle: midpoint quadrature of the same region
  auto oracle = [&](int m) {
    double h = 0.5 / m, sum = 0.0;
    for (int i = 0; i < m; ++i) {
      double t = 0.5 + (i + 0.5) * h;
      double lo = std::max(0.0, 0.5 - t), hi = std::min(1.0, 0.5 + t);
      sum += std::max(0.0, hi - lo) * h;
    }
    return sum;
  };
  REQUIRE(r.value == Catch::Approx(oracle(4096)).epsilon(1e-6));
}

TEST_CASE("integrate rejects regions outside the grid") {
  auto grid = make_grid(0, 1, 2);
  auto f = zero_halfspace_field<double>(grid);
  DyadicCube outside{1, 1, {9, 0}};
  REQUIRE_THROWS_AS(integrate(f, Region{RegionCarlesonBox{outside}}), std::domain_error);
}

TEST_CASE("integrate is additive over disjoint regions and monotone") {
  const int J = 4;
  auto grid = make_grid(0, 1, J);
  std::mt19937_64 rng(7);
  auto f = zero_halfspace_field<double>(grid);
  for (auto& v : f.values) v = uniform_pm1(rng);
  auto absf = f;
  for (auto& v : absf.values) v = std::abs(v);

  DyadicCube half0{1, 1, {0, 0}}, half1{1, 1, {1, 0}}, unit{1, 0, {0, 0}};
  auto a = integrate(absf, Region{RegionCarlesonBox{half0}});
  auto b = integrate(absf, Region{RegionCarlesonBox{half1}});
  auto u = integrate(absf, Region{RegionCarlesonBox{unit}});
  // the two half boxes tile the unit box up to the unit cube's own Whitney
  // cell (1/2,1) x [0,1)
  double top = std::abs(f[grid.index(unit)]) * 0.5;
  REQUIRE(a.value + b.value + top == Catch::Approx(u.value).epsilon(1e-12));

  // smaller cube, smaller integral
  DyadicCube quarter{1, 2, {0, 0}};
  auto small = integrate(absf, Region{RegionCarlesonBox{quarter}});
  REQUIRE(small.value <= a.value + 1e-15);
}

TEST_CASE("complement region partitions the dilated box integral") {
  auto grid = make_grid(-1, 2, 4);
  std::mt19937_64 rng(21);
  auto f = zero_halfspace_field<double>(grid);
  for (auto& v : f.values) v = std::abs(uniform_pm1(rng));
  DyadicCube q{1, 2, {1, 0}};
  auto inner = integrate(f, Region{RegionDilatedCarlesonBox{q, 3.0}});
  auto outer = integrate(f, Region{RegionHalfspaceComplement{q, 3.0}});
  double total = 0;
  for (std::int64_t i = 0; i < grid.num_cubes(); ++i)
    total += f[i] * whitney_measure<double>(grid.cube_at(i));
  REQUIRE(inner.value + outer.value == Catch::Approx(total).epsilon(1e-12));
}

TEST_CASE("lp_norm basics") {
  auto grid = make_grid(0, 1, 3);
  auto ind = boundary_field(grid, [](const Point&) { return 1.0; });
  REQUIRE(lp_norm(ind, 2.0) == Catch::Approx(1.0).epsilon(1e-15));

  auto two = boundary_field(grid, [](const Point&) { return 2.0; });
  REQUIRE(lp_norm(two, 3.0) == Catch::Approx(2.0).epsilon(1e-14));
  REQUIRE(lp_norm(two, std::numeric_limits<double>::infinity()) == 2.0);
  REQUIRE_THROWS_AS(lp_norm(two, 0.5), std::invalid_argument);
}

TEST_CASE("weighted lp_norm converges under midpoint sampling refinement") {
  // || 1_{[0,1/2)} ||_{L2(w)} with w = sqrt(x): analytic value
  double analytic = std::sqrt((2.0 / 3.0) * std::pow(0.5, 1.5));
  double err_prev = 1e9;
  for (int J : {4, 6, 9}) {
    auto grid = make_grid(0, 1, J);
    auto f = boundary_field(grid, [](const Point& x) { return x[0] < 0.5 ? 1.0 : 0.0; });
    auto w = boundary_field(grid, [](const Point& x) { return std::sqrt(std::abs(x[0])); });
    double v = lp_norm(f, 2.0, &w);
    double err = std::abs(v - analytic);
    REQUIRE(err < err_prev);
    err_prev = err;
  }
  REQUIRE(err_prev < 2e-4);
}

TEST_CASE("discrete Hoelder inequality for random fields and weights") {
  auto grid = make_grid(-1, 1, 4);
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 25; ++trial) {
    double p = 1.2 + 2.5 * uniform01(rng);
    double q = p / (p - 1.0);
    auto f = zero_boundary_field<double>(grid);
    auto g = zero_boundary_field<double>(grid);
    auto w = zero_boundary_field<double>(grid);
    auto nu = zero_boundary_field<double>(grid);
    for (std::int64_t i = 0; i < grid.num_leaves(); ++i) {
      f[i] = uniform_pm1(rng);
      g[i] = uniform_pm1(rng);
      w[i] = 0.1 + 2.0 * uniform01(rng);
      nu[i] = std::pow(w[i], -q / p);
    }
    double lhs = std::abs(pairing(f, g));
    double rhs = lp_norm(f, p, &w) * lp_norm(g, q, &nu);
    REQUIRE(lhs <= rhs * (1 + 1e-12));
  }
}

TEST_CASE("nested Carleson boxes are monotone for |f|") {
  auto grid = make_grid(0, 2, 4);
  std::mt19937_64 rng(3);
  auto f = zero_halfspace_field<double>(grid);
  for (auto& v : f.values) v = std::abs(uniform_pm1(rng));
  DyadicCube inner{1, 2, {2, 0}};
  auto outer = inner.parent();
  auto ri = integrate(f, Region{RegionCarlesonBox{inner}});
  auto ro = integrate(f, Region{RegionCarlesonBox{outer}});
  REQUIRE(ri.value <= ro.value + 1e-15);
}

TEST_CASE("rational fields integrate exactly") {
  const int J = 3;
  auto grid = make_grid(0, 1, J);
  auto f = zero_halfspace_field<Rational>(grid);
  for (std::int64_t i = 0; i < grid.num_cubes(); ++i) f[i] = Rational(1);
  DyadicCube half{1, 1, {0, 0}};
  auto r = integrate(f, Region{RegionCarlesonBox{half}});
  Rational expect = Rational(1, 2) * (Rational(1, 2) - rational_pow2(-J - 1));
  REQUIRE(r.value == expect);
}

TEST_CASE("aggregate_leaf_sums matches direct summation") {
  auto grid = DyadicGrid(2, {0, 0}, {1, 1}, 3);
  std::mt19937_64 rng(17);
  std::vector<double> leaf(std::size_t(grid.num_leaves()));
  for (auto& v : leaf) v = uniform01(rng);
  auto sums = aggregate_leaf_sums(grid, leaf);
  DyadicCube root{2, 0, {0, 0}};
  double total = 0;
  for (auto v : leaf) total += v;
  REQUIRE(sums[std::size_t(grid.index(root))] == Catch::Approx(total).epsilon(1e-13));
  DyadicCube q{2, 2, {1, 2}};
  double direct = 0;
  grid.for_each_leaf_in(q, [&](std::int64_t l) { direct += leaf[std::size_t(l)]; });
  REQUIRE(sums[std::size_t(grid.index(q))] == Catch::Approx(direct).epsilon(1e-13));
}

TEST_CASE("field text round-trips") {
  auto grid = make_grid(-1, 1, 3);
  std::mt19937_64 rng(5);
  auto f = zero_boundary_field<double>(grid);
  for (auto& v : f.values) v = uniform_pm1(rng);
  auto g = parse_boundary_field(grid, to_string(f));
  REQUIRE(g.values == f.values);

  auto h = zero_halfspace_field<double>(grid);
  for (auto& v : h.values) v = uniform_pm1(rng);
  auto h2 = parse_halfspace_field(grid, to_string(h));
  REQUIRE(h2.values == h.values);

  auto other = make_grid(0, 1, 3);
  REQUIRE_THROWS_AS(parse_boundary_field(other, to_string(f)), std::invalid_argument);
}
