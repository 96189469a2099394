#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "csl/functionals.hpp"

using namespace csl;

namespace {
double uniform01(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1p-53; }
double uniform_pm1(std::mt19937_64& rng) { return 2.0 * uniform01(rng) - 1.0; }

HalfspaceField<double> random_field(const DyadicGrid& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto f = zero_halfspace_field<double>(grid);
  for (auto& v : f.values) v = uniform_pm1(rng);
  return f;
}
}  // namespace

TEST_CASE("maximal of a constant is the constant in every mode") {
  auto grid = make_grid(0, 1, 4);
  auto f = boundary_field(grid, [](const Point&) { return 3.25; });
  Weight w(power_weight(grid, 0.5, {0.0, 0.0}), 2.0);
  for (auto mode : {MaximalMode::centered, MaximalMode::dyadic_weighted,
                    MaximalMode::centered3_weighted}) {
    auto r = maximal(f, mode, &w);
    for (auto v : r.values.values) REQUIRE(v == Catch::Approx(3.25).epsilon(1e-12));
  }
}

TEST_CASE("dyadic maximal of a half indicator") {
  auto grid = make_grid(0, 1, 4);
  auto f = boundary_field(grid, [](const Point& x) { return x[0] < 0.5 ? 1.0 : 0.0; });
  auto w = unit_weight(grid);
  auto r = maximal(f, MaximalMode::dyadic_weighted, &w);
  for (std::int64_t leaf = 0; leaf < grid.num_leaves(); ++leaf) {
    double z = grid.leaf_at(leaf).center(0);
    // on [0,1/2) the cube [0,1/2) gives average 1; on [1/2,1) only the unit
    // root meets the support, average 1/2
    REQUIRE(r.values[leaf] == Catch::Approx(z < 0.5 ? 1.0 : 0.5).epsilon(1e-13));
  }
}

TEST_CASE("centered maximal of a half indicator has the exact profile") {
  auto grid = make_grid(0, 1, 5);
  auto f = boundary_field(grid, [](const Point& x) { return x[0] < 0.5 ? 1.0 : 0.0; });
  auto r = maximal(f, MaximalMode::centered);
  for (std::int64_t leaf = 0; leaf < grid.num_leaves(); ++leaf) {
    double z = grid.leaf_at(leaf).center(0);
    // sup_r |[z-r,z+r) ∩ [0,1/2)| / (2r) = 1 left of the jump, 1/(4z) right
    double expect = z < 0.5 ? 1.0 : 1.0 / (4.0 * z);
    REQUIRE(r.values[leaf] == Catch::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("weighted maximal modes require a weight") {
  auto grid = make_grid(0, 1, 3);
  auto f = boundary_field(grid, [](const Point&) { return 1.0; });
  REQUIRE_THROWS_AS(maximal(f, MaximalMode::dyadic_weighted), std::invalid_argument);
  REQUIRE_THROWS_AS(maximal(f, MaximalMode::centered3_weighted), std::invalid_argument);
}

TEST_CASE("centered3 maximal matches a brute-force evaluation") {
  auto grid = make_grid(-1, 1, 4);
  std::mt19937_64 rng(11);
  auto f = zero_boundary_field<double>(grid);
  for (auto& v : f.values) v = uniform_pm1(rng);
  Weight w(power_weight(grid, 0.3, {0.0, 0.0}), 2.0);
  auto r = maximal(f, MaximalMode::centered3_weighted, &w);

  double cell = grid.leaf_measure();
  for (std::int64_t leaf : {std::int64_t(0), std::int64_t(7), std::int64_t(20)}) {
    Point z = grid.leaf_at(leaf).center();
    double best = 0.0;
    for (std::int64_t i = 0; i < grid.num_cubes(); ++i) {
      auto q = grid.cube_at(i);
      if (!q.contains_point(z)) continue;
      double num = 0.0, den = 0.0;
      auto b = dilate_odd(q, 3);
      for (std::int64_t l2 = 0; l2 < grid.num_leaves(); ++l2) {
        auto c2 = grid.leaf_at(l2);
        if (!b.contains_cube(c2)) continue;
        num += std::abs(f[l2]) * w.w[l2] * cell;
        den += w.w[l2] * cell;
      }
      if (den > 0) best = std::max(best, num / den);
    }
    REQUIRE(r.values[leaf] == Catch::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("full Carleson functional of a box indicator") {
  const int J = 5;
  auto grid = make_grid(0, 1, J);
  auto f = halfspace_field(grid, [](double, const Point&) { return 1.0; });
  auto r = carleson(f, CarlesonMode::full);
  // sup is attained at the unit cube; its represented box mass is 1-2^-(J+1)
  double expect = 1.0 - std::ldexp(1.0, -J - 1);
  for (auto v : r.values.values) REQUIRE(v == Catch::Approx(expect).epsilon(1e-13));

  auto z = carleson(zero_halfspace_field<double>(grid), CarlesonMode::full);
  for (auto v : z.values.values) REQUIRE(v == 0.0);
  auto nu = unit_weight(grid);
  auto zd = carleson(zero_halfspace_field<double>(grid), CarlesonMode::dyadic_weighted, &nu);
  for (auto v : zd.values.values) REQUIRE(v == 0.0);
}

TEST_CASE("dyadic weighted Carleson with unit weight is the dyadic restriction") {
  auto grid = make_grid(0, 1, 4);
  auto f = random_field(grid, 23);
  auto nu = unit_weight(grid);
  auto r = carleson(f, CarlesonMode::dyadic_weighted, &nu);
  auto absf = f;
  for (auto& v : absf.values) v = std::abs(v);
  // brute force: sup over dyadic cubes containing the leaf of the
  // represented box integral divided by |Q|
  for (std::int64_t leaf = 0; leaf < grid.num_leaves(); ++leaf) {
    Point z = grid.leaf_at(leaf).center();
    double best = 0.0;
    for (std::int64_t i = 0; i < grid.num_cubes(); ++i) {
      auto q = grid.cube_at(i);
      if (!q.contains_point(z)) continue;
      double num = integrate(absf, Region{RegionCarlesonBox{q}}).value;
      best = std::max(best, num / std::pow(q.side(), grid.dim()));
    }
    REQUIRE(r.values[leaf] == Catch::Approx(best).margin(1e-13));
  }
}

TEST_CASE("auxiliary c3d Carleson matches the integrate-based oracle") {
  for (int dim : {1, 2}) {
    auto grid = dim == 1 ? make_grid(0, 2, 4) : DyadicGrid(2, {0, 0}, {2, 2}, 3);
    auto f = random_field(grid, std::uint64_t(31 + dim));
    auto nu = unit_weight(grid);
    auto r = carleson(f, CarlesonMode::c3d, &nu, 15.0);
    auto absf = f;
    for (auto& v : absf.values) v = std::abs(v);
    for (std::int64_t leaf : {std::int64_t(1), std::int64_t(5), std::int64_t(11)}) {
      Point z = grid.leaf_at(leaf).center();
      double best = 0.0;
      for (std::int64_t i = 0; i < grid.num_cubes(); ++i) {
        auto q = grid.cube_at(i);
        if (!q.contains_point(z)) continue;
        double num = integrate(absf, Region{RegionDilatedCarlesonBox{q, 3.0}}).value;
        // nu = 1: the denominator is |15Q ∩ root|
        double den = 1.0;
        for (int a = 0; a < grid.dim(); ++a) {
          double lo = std::max(q.center(a) - 7.5 * q.side(), double(grid.root_lo(a)));
          double hi = std::min(q.center(a) + 7.5 * q.side(), double(grid.root_hi(a)));
          den *= (hi - lo);
        }
        best = std::max(best, num / den);
      }
      REQUIRE(r.values[leaf] == Catch::Approx(best).epsilon(1e-12));
    }
  }
}

TEST_CASE("area functional closed form at a cell corner") {
  const int J = 6;
  auto grid = make_grid(0, 1, J);
  auto f = halfspace_field(grid, [](double, const Point&) { return 1.0; });
  double v = area_at(f, {0.5, 0.0}, ConeConfig{1.0});
  double expect = (1.0 - std::ldexp(1.0, -J)) + std::log(2.0);
  REQUIRE(v == Catch::Approx(expect).epsilon(1e-14));
}

TEST_CASE("area functional is homogeneous and zero on zero") {
  auto grid = make_grid(0, 1, 4);
  auto f = random_field(grid, 5);
  auto r1 = area(f, ConeConfig{1.0});
  auto f2 = f;
  for (auto& v : f2.values) v *= 2.0;
  auto r2 = area(f2, ConeConfig{1.0});
  for (std::int64_t i = 0; i < grid.num_leaves(); ++i)
    REQUIRE(r2.values[i] == Catch::Approx(2.0 * r1.values[i]).margin(1e-13));
  auto rz = area(zero_halfspace_field<double>(grid), ConeConfig{1.0});
  for (auto v : rz.values.values) REQUIRE(v == 0.0);
}

TEST_CASE("L1 mass of the area functional is (2 alpha)^n times the field mass") {
  // supp f inside [0,1) keeps all apertures' cones inside the root [-2,3)
  auto grid = make_grid(-2, 3, 5);
  auto f = halfspace_field(grid, [](double t, const Point& x) {
    return (x[0] >= 0.0 && x[0] < 1.0 && t <= 1.0) ? 1.0 : 0.0;
  });
  double mass = 0.0;
  for (std::int64_t i = 0; i < grid.num_cubes(); ++i)
    mass += std::abs(f[i]) * whitney_measure<double>(grid.cube_at(i));
  for (double alpha : {0.5, 1.0, 2.0}) {
    auto r = area(f, ConeConfig{alpha});
    double l1 = lp_norm(r.values, 1.0);
    REQUIRE(l1 == Catch::Approx(2.0 * alpha * mass).epsilon(0.02));
  }
}

TEST_CASE("nontangential maximal of a single Whitney cell") {
  auto grid = make_grid(-2, 3, 4);
  auto f = zero_halfspace_field<double>(grid);
  DyadicCube unit{1, 0, {0, 0}};
  f[grid.index(unit)] = 1.0;
  auto r = nontangential(f, ConeConfig{1.0});
  for (std::int64_t leaf = 0; leaf < grid.num_leaves(); ++leaf) {
    double z = grid.leaf_at(leaf).center(0);
    // the cone from z meets (1/2,1) x [0,1) in positive measure iff
    // z in (-1, 2)
    double expect = (z > -1.0 && z < 2.0) ? 1.0 : 0.0;
    REQUIRE(r.values[leaf] == expect);
  }
  REQUIRE(nontangential_at(f, {0.5, 0.0}, ConeConfig{1.0}) == 1.0);
  REQUIRE(nontangential_at(f, {-1.5, 0.0}, ConeConfig{1.0}) == 0.0);
}

TEST_CASE("nontangential maximal of constants, and aperture monotonicity") {
  auto grid = make_grid(0, 1, 4);
  auto c = halfspace_field(grid, [](double, const Point&) { return 2.5; });
  auto rc = nontangential(c, ConeConfig{1.0});
  for (auto v : rc.values.values) REQUIRE(v == 2.5);

  auto f = random_field(grid, 77);
  auto small = nontangential(f, ConeConfig{0.5});
  auto big = nontangential(f, ConeConfig{2.0});
  for (std::int64_t i = 0; i < grid.num_leaves(); ++i)
    REQUIRE(small.values[i] <= big.values[i] + 1e-15);
}

TEST_CASE("dyadic nontangential maximal") {
  auto grid = make_grid(0, 1, 4);
  auto f = zero_halfspace_field<double>(grid);
  DyadicCube half{1, 1, {0, 0}};
  f[grid.index(half)] = 1.0;
  auto r = dyadic_nontangential(f);
  for (std::int64_t leaf = 0; leaf < grid.num_leaves(); ++leaf) {
    double z = grid.leaf_at(leaf).center(0);
    REQUIRE(r.values[leaf] == (z < 0.5 ? 1.0 : 0.0));
  }
  auto c = halfspace_field(grid, [](double, const Point&) { return 1.5; });
  for (auto v : dyadic_nontangential(c).values.values) REQUIRE(v == 1.5);
}

TEST_CASE("dyadic nontangential is dominated by cone maximal at aperture 2 sqrt(n)") {
  for (int dim : {1, 2}) {
    auto grid = dim == 1 ? make_grid(0, 1, 5) : DyadicGrid(2, {0, 0}, {1, 1}, 3);
    auto f = random_field(grid, std::uint64_t(13 * dim));
    auto nd = dyadic_nontangential(f);
    auto n = nontangential(f, ConeConfig{2.0 * std::sqrt(double(dim))});
    for (std::int64_t i = 0; i < grid.num_leaves(); ++i)
      REQUIRE(nd.values[i] <= n.values[i] + 1e-15);
  }
}

TEST_CASE("aperture equivalence bracket for L1 norms of the area functional") {
  auto grid = make_grid(-2, 3, 5);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 4; ++trial) {
    auto f = zero_halfspace_field<double>(grid);
    for (std::int64_t i = 0; i < grid.num_cubes(); ++i) {
      auto q = grid.cube_at(i);
      if (q.lo(0) >= 0.0 && q.hi(0) <= 1.0) f[i] = uniform_pm1(rng);
    }
    double a_half = lp_norm(area(f, ConeConfig{0.5}).values, 1.0);
    double a_two = lp_norm(area(f, ConeConfig{2.0}).values, 1.0);
    if (a_two == 0.0) continue;
    double ratio = a_half / a_two;
    // exact cone-base ratio is (1/2)/2 = 1/4 up to truncation effects
    REQUIRE(ratio > 0.2);
    REQUIRE(ratio < 0.3);
  }
}

TEST_CASE("functionals in dimension 2 run and respect basic bounds") {
  auto grid = DyadicGrid(2, {0, 0}, {1, 1}, 3);
  auto f = halfspace_field(grid, [](double t, const Point& x) {
    return (t < 0.5 && x[0] < 0.5 && x[1] < 0.5) ? 1.0 : 0.0;
  });
  auto c = carleson(f, CarlesonMode::full);
  auto n = nontangential(f, ConeConfig{1.0});
  auto a = area(f, ConeConfig{1.0});
  for (std::int64_t i = 0; i < grid.num_leaves(); ++i) {
    REQUIRE(c.values[i] >= 0.0);
    REQUIRE(n.values[i] <= 1.0);
    REQUIRE(a.values[i] >= 0.0);
  }
  // mass check: area L1 <= (2 alpha)^2 ||f||_1, truncated by the root edge
  double mass = 0.0;
  for (std::int64_t i = 0; i < grid.num_cubes(); ++i)
    mass += std::abs(f[i]) * whitney_measure<double>(grid.cube_at(i));
  double l1 = lp_norm(a.values, 1.0);
  REQUIRE(l1 <= 4.0 * mass * 1.0001);
  REQUIRE(l1 >= 0.2 * mass);
}

TEST_CASE("dyadic weighted maximal operators satisfy the Doob bound") {
  // Lemma-style uniformity: L_p(w) operator ratios bounded by constants
  // independent of the weight (p' for M^D_w, interpolation bound for M^3D_w)
  auto grid = make_grid(-1, 1, 5);
  std::mt19937_64 rng(19);
  for (double p : {1.5, 2.0, 3.0}) {
    double pprime = p / (p - 1.0);
    double interp3 = 2.0 * std::pow(p / (p - 1.0), 1.0 / p) * std::pow(3.0, 1.0 / p);
    for (double a : {-0.45, 0.0, 0.45}) {
      Weight w(power_weight(grid, a * (p - 1.0)), p);
      for (int trial = 0; trial < 3; ++trial) {
        auto f = zero_boundary_field<double>(grid);
        for (auto& v : f.values) v = uniform_pm1(rng);
        double fn = lp_norm(f, p, &w.w);
        double md = lp_norm(maximal(f, MaximalMode::dyadic_weighted, &w).values, p, &w.w);
        double m3 = lp_norm(maximal(f, MaximalMode::centered3_weighted, &w).values, p, &w.w);
        REQUIRE(md <= pprime * fn * (1 + 1e-12));
        REQUIRE(m3 <= interp3 * fn * (1 + 1e-12));
      }
    }
  }
}
