#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "csl/czd.hpp"

using namespace csl;

namespace {
double uniform01(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1p-53; }
double uniform_pm1(std::mt19937_64& rng) { return 2.0 * uniform01(rng) - 1.0; }
}  // namespace

TEST_CASE("cz_decompose of zero selects nothing") {
  auto grid = make_grid(0, 1, 3);
  auto f = zero_halfspace_field<Rational>(grid);
  auto cz = cz_decompose(f, Rational(1, 2));
  REQUIRE(cz.cubes.empty());
  REQUIRE_FALSE(cz.truncation_limited);
  for (const auto& v : cz.good.values) REQUIRE(v == 0);
  REQUIRE_THROWS_AS(cz_decompose(f, Rational(0)), std::invalid_argument);
}

TEST_CASE("cz_decompose selects the maximal cube of the hand example") {
  // f = 4 * indicator of the Carleson box over [0,1/4), root [0,1), J=4,
  // lambda = 2/5: the represented mass is 4 * (1/4)(1/4 - 2^-5) = 7/32,
  // so [0,1) fails (7/32 < 2/5) and [0,1/2) qualifies (7/32 > 1/5)
  const int J = 4;
  auto grid = make_grid(0, 1, J);
  auto f = zero_halfspace_field<Rational>(grid);
  DyadicCube quarter{1, 2, {0, 0}};
  for (std::int64_t i = 0; i < grid.num_cubes(); ++i)
    if (quarter.contains(grid.cube_at(i))) f[i] = Rational(4);

  auto cz = cz_decompose(f, Rational(2, 5));
  REQUIRE(cz.cubes.size() == 1);
  DyadicCube half{1, 1, {0, 0}};
  REQUIRE(cz.cubes[0] == half);
  REQUIRE_FALSE(cz.truncation_limited);

  // the represented average over the selected box is (7/32) / (15/64) = 14/15
  Rational expect_avg(14, 15);
  for (std::int64_t i = 0; i < grid.num_cubes(); ++i) {
    auto q = grid.cube_at(i);
    if (half.contains(q))
      REQUIRE(cz.good[i] == expect_avg);
    else
      REQUIRE(cz.good[i] == f[i]);
  }

  // exact mean-zero of the bad part over the selected Carleson box
  auto bad = materialize_bad_part(cz, grid, 0);
  auto r = integrate(bad, Region{RegionCarlesonBox{half}});
  REQUIRE(r.value == Rational(0));

  // f = g + sum b_j identically
  for (std::int64_t i = 0; i < grid.num_cubes(); ++i) REQUIRE(cz.good[i] + bad[i] == f[i]);

  REQUIRE(cz.good_bound_holds);
  REQUIRE(cz.good_dyadic_carleson_sup <= cz.bound_constant * to_double(cz.lambda));
}

TEST_CASE("cz_decompose flags truncation-limited selections") {
  auto grid = make_grid(0, 1, 3);
  auto f = zero_halfspace_field<Rational>(grid);
  for (auto& v : f.values) v = Rational(1);
  auto cz = cz_decompose(f, Rational(1, 1000));
  REQUIRE(cz.truncation_limited);
  REQUIRE(cz.cubes.size() == 1);
  REQUIRE(cz.cubes[0].level == 0);
}

TEST_CASE("cz_decompose invariants on random rational fields") {
  auto grid = make_grid(0, 2, 4);
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    auto fd = zero_halfspace_field<double>(grid);
    for (auto& v : fd.values) v = uniform_pm1(rng);
    auto f = to_rational(fd);
    Rational lambda(1, 4 + trial);
    auto cz = cz_decompose(f, lambda);

    // selected cubes pairwise disjoint
    for (std::size_t a = 0; a < cz.cubes.size(); ++a)
      for (std::size_t b = a + 1; b < cz.cubes.size(); ++b) {
        REQUIRE_FALSE(cz.cubes[a].contains(cz.cubes[b]));
        REQUIRE_FALSE(cz.cubes[b].contains(cz.cubes[a]));
      }

    // each qualifies, parent does not (unless level 0)
    auto box = carleson_box_sums(f, true);
    for (const auto& q : cz.cubes) {
      Rational base(std::ldexp(1.0, -grid.dim() * q.level));
      REQUIRE(box[std::size_t(grid.index(q))] > lambda * base);
      if (q.level > 0) {
        auto p = q.parent();
        Rational pbase(std::ldexp(1.0, -grid.dim() * p.level));
        REQUIRE_FALSE(box[std::size_t(grid.index(p))] > lambda * pbase);
      }
    }

    // exact mean zero for every bad part; f = g + sum b_j
    auto recon = cz.good;
    for (std::size_t j = 0; j < cz.cubes.size(); ++j) {
      auto bad = materialize_bad_part(cz, grid, j);
      REQUIRE(integrate(bad, Region{RegionCarlesonBox{cz.cubes[j]}}).value == Rational(0));
      for (std::int64_t i = 0; i < grid.num_cubes(); ++i) recon[i] += bad[i];
    }
    for (std::int64_t i = 0; i < grid.num_cubes(); ++i) REQUIRE(recon[i] == f[i]);

    // sum of dilated-base measures vs L1 mass (proof (iii) bound)
    double l1 = 0.0;
    for (std::int64_t i = 0; i < grid.num_cubes(); ++i)
      l1 += std::abs(to_double(f[i])) * whitney_measure<double>(grid.cube_at(i));
    double sum3 = 0.0;
    for (const auto& q : cz.cubes) sum3 += 3.0 * q.side();
    REQUIRE(sum3 <= 3.0 * l1 / to_double(lambda) + 1e-12);

    // good part control (no truncation-limited cases at these lambdas here)
    if (!cz.truncation_limited) REQUIRE(cz.good_bound_holds);
  }
}

TEST_CASE("whitney_split: constants, oscillation, and the L1 triangle bound") {
  auto grid = make_grid(0, 1, 2);

  // already piecewise constant: zero oscillation
  auto c = halfspace_field(grid, [](double, const Point&) { return 2.5; });
  auto sc = subdivide(c);
  auto split_c = whitney_split(sc);
  for (const auto& v : split_c.oscillation.values) REQUIRE(v == 0.0);
  for (std::int64_t i = 0; i < grid.num_cubes(); ++i) REQUIRE(split_c.cellwise[i] == 2.5);

  // sub-cell values (1,3,1,3) average to 2 with oscillation (-1,1,-1,1)
  SubdividedHalfspaceField<double> f;
  f.grid = &grid;
  f.sub_count = 4;
  f.values.assign(std::size_t(grid.num_cubes() * 4), 0.0);
  auto target = grid.index(DyadicCube{1, 1, {1, 0}});
  f.at(target, 0) = 1.0;
  f.at(target, 1) = 3.0;
  f.at(target, 2) = 1.0;
  f.at(target, 3) = 3.0;
  auto split = whitney_split(f);
  REQUIRE(split.cellwise[target] == 2.0);
  REQUIRE(split.oscillation.at(target, 0) == -1.0);
  REQUIRE(split.oscillation.at(target, 1) == 1.0);

  // random: exact zero mean per cell and the L1 triangle inequality
  std::mt19937_64 rng(12);
  auto g = subdivided_halfspace_field(
      grid, [&](double t, const Point& x) { return std::sin(40 * t + 17 * x[0]); });
  auto sg = whitney_split(g);
  for (std::int64_t i = 0; i < grid.num_cubes(); ++i) {
    double mean = 0.0;
    for (int s = 0; s < g.sub_count; ++s) mean += sg.oscillation.at(i, s);
    REQUIRE(mean == Catch::Approx(0.0).margin(1e-15));
  }
  double l1f = l1_norm_subdivided(g);
  double l1o = l1_norm_subdivided(sg.oscillation);
  double l1c = 0.0;
  for (std::int64_t i = 0; i < grid.num_cubes(); ++i)
    l1c += std::abs(sg.cellwise[i]) * whitney_measure<double>(grid.cube_at(i));
  REQUIRE(l1o + l1c <= 2.0 * l1f * (1 + 1e-12));
}

TEST_CASE("whitney_split is exact over rationals") {
  auto grid = make_grid(0, 1, 2);
  SubdividedHalfspaceField<Rational> f;
  f.grid = &grid;
  f.sub_count = 4;
  f.values.assign(std::size_t(grid.num_cubes() * 4), Rational(0));
  std::mt19937_64 rng(3);
  for (auto& v : f.values) v = Rational(std::int64_t(rng() % 1000), 7);
  auto split = whitney_split(f);
  for (std::int64_t i = 0; i < grid.num_cubes(); ++i) {
    Rational mean(0);
    for (int s = 0; s < 4; ++s) {
      mean += split.oscillation.at(i, s);
      REQUIRE(split.oscillation.at(i, s) + split.cellwise[i] == f.at(i, s));
    }
    REQUIRE(mean == Rational(0));
  }
}
