//
// test_gridfield.cpp — grids, implicit-surface fields, set algebra,
// interpolation/gradients, projection, reinitialization, dilation,
// Minkowski sums, and sub-zero extent queries.
//

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "hjstp/field.hpp"
#include "hjstp/field_ops.hpp"
#include "hjstp/grid.hpp"

using namespace hjstp;

namespace {

errc thrown_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const error& e) {
    return e.code();
  }
  FAIL("expected an hjstp::error");
  return errc::bad_argument;
}

Grid grid2d_10m() {  // [-500,500]^2, 10 m spacing, origin on a node
  return make_grid({-500, -500}, {500, 500}, {101, 101}, {false, false});
}

Grid grid3d_25m() {  // [-500,500]^2 x [-pi,pi), 25 m spacing, periodic heading
  return make_grid({-500, -500, -kPi}, {500, 500, kPi}, {41, 41, 25}, {false, false, true});
}

int count_subzero(const ScalarField& f) {
  int n = 0;
  for (double v : f.values) n += (v <= 0.0);
  return n;
}

}  // namespace

TEST_CASE("make_grid spacing and validation") {
  SECTION("spacing follows the periodic/non-periodic rule") {
    const Grid g = make_grid({0, 0, -kPi}, {5000, 5000, kPi}, {101, 101, 41},
                             {false, false, true});
    CHECK(g.spacing[0] == Catch::Approx(50.0));
    CHECK(g.spacing[1] == Catch::Approx(50.0));
    CHECK(g.spacing[2] == Catch::Approx(2.0 * kPi / 41.0));
  }
  SECTION("too few nodes") {
    CHECK(thrown_code([] { make_grid({0}, {1}, {2}, {false}); }) == errc::too_few_nodes);
  }
  SECTION("non-monotone bounds") {
    CHECK(thrown_code([] { make_grid({0}, {0}, {5}, {false}); }) == errc::nonmonotone_bounds);
  }
  SECTION("dimension limits and length mismatches") {
    CHECK(thrown_code([] { make_grid({}, {}, {}, {}); }) == errc::bad_dims);
    CHECK(thrown_code([] {
            make_grid({0, 0, 0, 0, 0}, {1, 1, 1, 1, 1}, {5, 5, 5, 5, 5},
                      {false, false, false, false, false});
          }) == errc::bad_dims);
    CHECK(thrown_code([] { make_grid({0, 0}, {1}, {5, 5}, {false, false}); }) == errc::bad_dims);
  }
  SECTION("flatten/unflatten round trip") {
    const Grid g = make_grid({0, 0, 0}, {1, 1, 1}, {5, 7, 3}, {false, false, false});
    for (std::int64_t f = 0; f < g.size(); ++f) {
      CHECK(g.flatten(g.unflatten(f)) == f);
    }
  }
  SECTION("periodic wrap") {
    const Grid g = make_grid({0, -kPi}, {1, kPi}, {5, 8}, {false, true});
    CHECK(g.wrap(1, 8) == 0);
    CHECK(g.wrap(1, -1) == 7);
    CHECK(g.wrap(1, 17) == 1);
  }
}

TEST_CASE("sdf_ball is an exact signed distance in the selected subspace") {
  const Grid g3 = grid3d_25m();
  const ScalarField f = sdf_ball(g3, {0.0, 0.0}, 100.0, {0, 1});

  SECTION("boundary and center values") {
    for (int k = 0; k < g3.counts[2]; ++k) {
      std::array<int, kMaxDim> idx{24, 20, k};  // (100, 0, theta_k); x: -500+24*25=100
      CHECK(f.values[static_cast<size_t>(g3.flatten(idx))] == Catch::Approx(0.0).margin(1e-12));
    }
    std::array<int, kMaxDim> center{20, 20, 0};
    CHECK(f.values[static_cast<size_t>(g3.flatten(center))] == Catch::Approx(-100.0));
  }

  SECTION("sub-zero area per heading slice") {
    const Grid g = make_grid({-500, -500, -kPi}, {500, 500, kPi}, {21, 21, 8},
                             {false, false, true});
    const ScalarField b = sdf_ball(g, {0.0, 0.0}, 100.0, {0, 1});
    const double dx = g.spacing[0];
    for (int k = 0; k < g.counts[2]; ++k) {
      int count = 0;
      for (int i = 0; i < 21; ++i)
        for (int j = 0; j < 21; ++j) {
          std::array<int, kMaxDim> idx{i, j, k};
          count += (b.values[static_cast<size_t>(g.flatten(idx))] <= 0.0);
        }
      CHECK(count == 13);  // lattice points of the 100 m disk at 50 m spacing
      const double area = count * dx * dx;
      CHECK(area >= kPi * sqr(100.0 - dx));
      CHECK(area <= kPi * sqr(100.0 + dx));
    }
  }

  SECTION("argument validation") {
    CHECK(thrown_code([&] { sdf_ball(g3, {0.0}, 100.0, {0, 1}); }) == errc::bad_dims);
    CHECK(thrown_code([&] { sdf_ball(g3, {0.0, 0.0}, 100.0, {0, 5}); }) == errc::bad_dims);
    CHECK(thrown_code([&] { sdf_ball(g3, {0.0, 0.0}, -1.0, {0, 1}); }) == errc::bad_argument);
  }
}

TEST_CASE("set algebra") {
  const Grid g = grid2d_10m();
  const ScalarField a = sdf_ball(g, {-200.0, 0.0}, 50.0, {0, 1});
  const ScalarField b = sdf_ball(g, {200.0, 0.0}, 50.0, {0, 1});

  SECTION("idempotence and involution") {
    const ScalarField u = set_union(a, a);
    const ScalarField c = set_complement(set_complement(a));
    for (size_t i = 0; i < a.values.size(); ++i) {
      CHECK(u.values[i] == a.values[i]);
      CHECK(c.values[i] == a.values[i]);
    }
  }

  SECTION("disjoint union node count is the sum") {
    CHECK(count_subzero(a) == 81);  // 50 m disk on the 10 m lattice
    CHECK(count_subzero(b) == 81);
    CHECK(count_subzero(set_union(a, b)) == 162);
  }

  SECTION("De Morgan holds exactly on nodes") {
    const ScalarField lhs = set_complement(set_union(a, b));
    const ScalarField rhs = set_intersect(set_complement(a), set_complement(b));
    for (size_t i = 0; i < lhs.values.size(); ++i) CHECK(lhs.values[i] == rhs.values[i]);
  }

  SECTION("grid mismatch is rejected") {
    const Grid other = make_grid({-500, -500}, {500, 500}, {51, 51}, {false, false});
    const ScalarField c = sdf_ball(other, {0.0, 0.0}, 50.0, {0, 1});
    CHECK(thrown_code([&] { set_union(a, c); }) == errc::grid_mismatch);
  }
}

TEST_CASE("interpolation and gradients") {
  const Grid g = grid2d_10m();

  SECTION("node queries reproduce node values exactly") {
    const ScalarField f = sdf_ball(g, {0.0, 0.0}, 100.0, {0, 1});
    std::array<int, kMaxDim> idx{63, 41, 0};
    const double x[2] = {g.coord(0, 63), g.coord(1, 41)};
    CHECK(interpolate(f, x) == f.values[static_cast<size_t>(g.flatten(idx))]);
  }

  SECTION("gradient of a ball distance field away from the center") {
    const ScalarField f = sdf_ball(g, {0.0, 0.0}, 100.0, {0, 1});
    const double x[2] = {200.0, 0.0};
    const auto grad = gradient_at(f, x);
    CHECK(grad[0] == Catch::Approx(1.0).margin(1e-6));
    CHECK(grad[1] == Catch::Approx(0.0).margin(1e-6));
  }

  SECTION("linear fields interpolate exactly with exact gradients") {
    ScalarField f = make_field(g);
    for (std::int64_t i = 0; i < g.size(); ++i) {
      const auto idx = g.unflatten(i);
      f.values[static_cast<size_t>(i)] = 3.0 * g.coord(0, idx[0]);
    }
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-500.0, 500.0);
    for (int k = 0; k < 200; ++k) {
      const double x[2] = {u(rng), u(rng)};
      CHECK(interpolate(f, x) == Catch::Approx(3.0 * x[0]).margin(1e-9));
      const auto grad = gradient_at(f, x);
      CHECK(grad[0] == Catch::Approx(3.0).margin(1e-9));
      CHECK(grad[1] == Catch::Approx(0.0).margin(1e-9));
    }
  }

  SECTION("periodic dimensions wrap") {
    const Grid gp = make_grid({0.0}, {2.0 * kPi}, {25}, {true});
    ScalarField f = make_field(gp);
    for (int i = 0; i < 25; ++i) f.values[static_cast<size_t>(i)] = std::sin(gp.coord(0, i));
    const double a[1] = {-0.1};
    const double b[1] = {2.0 * kPi - 0.1};
    CHECK(interpolate(f, a) == Catch::Approx(interpolate(f, b)).margin(1e-12));
    // Seam query blends the last and first node.
    const double mid[1] = {2.0 * kPi - 0.5 * gp.spacing[0]};
    const double expect = 0.5 * (f.values[24] + f.values[0]);
    CHECK(interpolate(f, mid) == Catch::Approx(expect).margin(1e-12));
  }

  SECTION("out-of-bounds queries fail on non-periodic dims") {
    const ScalarField f = sdf_ball(g, {0.0, 0.0}, 100.0, {0, 1});
    const double x[2] = {500.5, 0.0};
    CHECK(thrown_code([&] { interpolate(f, x); }) == errc::out_of_bounds);
    CHECK(thrown_code([&] { gradient_at(f, x); }) == errc::out_of_bounds);
    CHECK(interpolate_ext(f, x) == Catch::Approx(400.0).margin(1e-9));
  }
}

TEST_CASE("project_min is exhaustive existential projection") {
  const Grid g = make_grid({0, 0, -kPi}, {100, 100, kPi}, {21, 17, 13}, {false, false, true});

  SECTION("matches brute-force min over the dropped dimension") {
    ScalarField f = make_field(g);
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (double& v : f.values) v = u(rng);
    const ScalarField p = project_min(f, {0, 1});
    REQUIRE(p.grid.ndim == 2);
    for (int i = 0; i < 21; ++i)
      for (int j = 0; j < 17; ++j) {
        double expect = kFar;
        for (int k = 0; k < 13; ++k) {
          std::array<int, kMaxDim> idx{i, j, k};
          expect = std::min(expect, f.values[static_cast<size_t>(g.flatten(idx))]);
        }
        std::array<int, kMaxDim> pidx{i, j, 0};
        CHECK(p.values[static_cast<size_t>(p.grid.flatten(pidx))] == expect);
      }
  }

  SECTION("fields independent of the dropped dim project to an identical slice") {
    ScalarField f = make_field(g);
    for (std::int64_t i = 0; i < g.size(); ++i) {
      const auto idx = g.unflatten(i);
      f.values[static_cast<size_t>(i)] = g.coord(0, idx[0]) - g.coord(1, idx[1]);
    }
    const ScalarField p = project_min(f, {0, 1});
    for (int i = 0; i < 21; ++i)
      for (int j = 0; j < 17; ++j) {
        std::array<int, kMaxDim> idx{i, j, 0};
        CHECK(p.values[static_cast<size_t>(p.grid.flatten(idx))] ==
              f.values[static_cast<size_t>(g.flatten(idx))]);
      }
  }

  SECTION("all-positive fields stay all-positive") {
    ScalarField f = make_field(g, 4.5);
    const ScalarField p = project_min(f, {0, 1});
    for (double v : p.values) CHECK(v > 0.0);
  }

  SECTION("keep_dims validation") {
    ScalarField f = make_field(g, 1.0);
    CHECK(thrown_code([&] { project_min(f, {}); }) == errc::bad_dims);
    CHECK(thrown_code([&] { project_min(f, {0, 1, 2}); }) == errc::bad_dims);
    CHECK(thrown_code([&] { project_min(f, {1, 0}); }) == errc::bad_dims);
    CHECK(thrown_code([&] { project_min(f, {3}); }) == errc::bad_dims);
  }
}

TEST_CASE("reinit_sdf") {
  SECTION("an exact signed distance field is a fixed point") {
    const Grid g = grid2d_10m();
    const ScalarField f = sdf_ball(g, {0.0, 0.0}, 100.0, {0, 1});
    const ScalarField r = reinit_sdf(f, 8);
    double max_diff = 0.0;
    for (size_t i = 0; i < f.values.size(); ++i)
      max_diff = std::max(max_diff, std::abs(r.values[i] - f.values[i]));
    CHECK(max_diff <= 1e-3 * g.spacing[0]);
  }

  SECTION("a scaled distance field is restored within one cell") {
    const Grid g = make_grid({-200, -200}, {200, 200}, {41, 41}, {false, false});
    const ScalarField exact = sdf_ball(g, {0.0, 0.0}, 100.0, {0, 1});
    ScalarField doubled = exact;
    for (double& v : doubled.values) v *= 2.0;
    const ScalarField r = reinit_sdf(doubled, 8);
    double max_diff = 0.0;
    for (size_t i = 0; i < r.values.size(); ++i)
      max_diff = std::max(max_diff, std::abs(r.values[i] - exact.values[i]));
    CHECK(max_diff <= g.spacing[0]);
  }

  SECTION("the sub-zero set is preserved node-for-node") {
    const Grid g = make_grid({-200, -200}, {200, 200}, {41, 41}, {false, false});
    ScalarField f = sdf_ball(g, {0.0, 0.0}, 100.0, {0, 1});
    for (std::int64_t i = 0; i < g.size(); ++i) {
      const auto idx = g.unflatten(i);
      f.values[static_cast<size_t>(i)] *= 1.7;
      f.values[static_cast<size_t>(i)] +=
          3.0 * std::sin(0.11 * idx[0]) * std::cos(0.07 * idx[1]);
    }
    const ScalarField r = reinit_sdf(f, 8);
    for (size_t i = 0; i < f.values.size(); ++i)
      CHECK((r.values[i] <= 0.0) == (f.values[i] <= 0.0));
  }

  SECTION("uniform-sign fields come back unchanged") {
    const Grid g = make_grid({0, 0}, {10, 10}, {11, 11}, {false, false});
    const ScalarField f = make_field(g, 5.0);
    const ScalarField r = reinit_sdf(f, 8);
    for (size_t i = 0; i < f.values.size(); ++i) CHECK(r.values[i] == f.values[i]);
  }
}

TEST_CASE("dilate_ball") {
  const Grid g = grid2d_10m();

  SECTION("radius zero leaves the sub-zero set unchanged") {
    const ScalarField f = sdf_ball(g, {30.0, -40.0}, 80.0, {0, 1});
    const ScalarField d = dilate_ball(f, 0.0);
    for (size_t i = 0; i < f.values.size(); ++i) CHECK(d.values[i] == f.values[i]);
  }

  SECTION("ball(100) dilated by 50 matches ball(150) within one cell") {
    const ScalarField f = sdf_ball(g, {0.0, 0.0}, 100.0, {0, 1});
    const ScalarField d = dilate_ball(f, 50.0);
    const ScalarField expect = sdf_ball(g, {0.0, 0.0}, 150.0, {0, 1});
    for (size_t i = 0; i < d.values.size(); ++i) {
      if (std::abs(expect.values[i]) > g.spacing[0])
        CHECK((d.values[i] <= 0.0) == (expect.values[i] <= 0.0));
    }
  }

  SECTION("dilation after reinitialization of a non-distance input") {
    ScalarField f = sdf_ball(g, {0.0, 0.0}, 100.0, {0, 1});
    for (double& v : f.values) v *= 2.0;
    const ScalarField d = dilate_ball(f, 50.0);
    const ScalarField expect = sdf_ball(g, {0.0, 0.0}, 150.0, {0, 1});
    for (size_t i = 0; i < d.values.size(); ++i) {
      if (std::abs(expect.values[i]) > g.spacing[0])
        CHECK((d.values[i] <= 0.0) == (expect.values[i] <= 0.0));
    }
  }

  SECTION("dilation is monotone in the input set") {
    const ScalarField a = sdf_ball(g, {0.0, 0.0}, 30.0, {0, 1});
    const ScalarField b = sdf_ball(g, {0.0, 0.0}, 60.0, {0, 1});
    const ScalarField da = dilate_ball(a, 40.0);
    const ScalarField db = dilate_ball(b, 40.0);
    for (size_t i = 0; i < da.values.size(); ++i)
      if (da.values[i] <= 0.0) CHECK(db.values[i] <= 0.0);
  }

  SECTION("dilation composes within one cell") {
    const ScalarField a = sdf_ball(g, {0.0, 0.0}, 60.0, {0, 1});
    const ScalarField two_step = dilate_ball(dilate_ball(a, 30.0), 40.0);
    const ScalarField one_step = dilate_ball(a, 70.0);
    for (size_t i = 0; i < two_step.values.size(); ++i) {
      if (std::abs(one_step.values[i]) > g.spacing[0])
        CHECK((two_step.values[i] <= 0.0) == (one_step.values[i] <= 0.0));
    }
  }

  SECTION("negative radius is rejected") {
    const ScalarField f = sdf_ball(g, {0.0, 0.0}, 100.0, {0, 1});
    CHECK(thrown_code([&] { dilate_ball(f, -1.0); }) == errc::negative_radius);
  }
}

TEST_CASE("minkowski_sum") {
  const Grid g = grid2d_10m();

  SECTION("a single origin cell is the identity element") {
    const ScalarField a = sdf_ball(g, {120.0, 0.0}, 60.0, {0, 1});
    ScalarField b = make_field(g, 1.0);
    std::array<int, kMaxDim> origin{50, 50, 0};
    b.values[static_cast<size_t>(g.flatten(origin))] = -1.0;
    const ScalarField s = minkowski_sum(a, b);
    for (size_t i = 0; i < a.values.size(); ++i) CHECK(s.values[i] == a.values[i]);
  }

  SECTION("ball + ball is a ball of the summed radius within one cell") {
    const ScalarField a = sdf_ball(g, {120.0, 0.0}, 60.0, {0, 1});
    const ScalarField b = sdf_ball(g, {0.0, 0.0}, 50.0, {0, 1});
    const ScalarField s = minkowski_sum(a, b);
    const ScalarField expect = sdf_ball(g, {120.0, 0.0}, 110.0, {0, 1});
    for (size_t i = 0; i < s.values.size(); ++i) {
      if (std::abs(expect.values[i]) > g.spacing[0])
        CHECK((s.values[i] <= 0.0) == (expect.values[i] <= 0.0));
    }
  }

  SECTION("commutes on sub-zero sets") {
    const ScalarField a = sdf_ball(g, {120.0, 0.0}, 60.0, {0, 1});
    const ScalarField b = sdf_ball(g, {0.0, 40.0}, 50.0, {0, 1});
    const ScalarField ab = minkowski_sum(a, b);
    const ScalarField ba = minkowski_sum(b, a);
    for (size_t i = 0; i < ab.values.size(); ++i)
      CHECK((ab.values[i] <= 0.0) == (ba.values[i] <= 0.0));
  }

  SECTION("contains the first summand whenever the origin is in the second") {
    const ScalarField a = sdf_ball(g, {120.0, 0.0}, 60.0, {0, 1});
    const ScalarField b = sdf_ball(g, {0.0, 0.0}, 30.0, {0, 1});
    const ScalarField s = minkowski_sum(a, b);
    for (size_t i = 0; i < a.values.size(); ++i)
      if (a.values[i] <= 0.0) CHECK(s.values[i] <= 0.0);
  }

  SECTION("an empty summand is rejected") {
    const ScalarField a = sdf_ball(g, {0.0, 0.0}, 60.0, {0, 1});
    const ScalarField b = make_field(g, 1.0);
    CHECK(thrown_code([&] { minkowski_sum(a, b); }) == errc::empty_summand);
  }
}

TEST_CASE("max_norm_of_subzero") {
  const Grid g = grid2d_10m();

  SECTION("centered and offset balls") {
    const ScalarField a = sdf_ball(g, {0.0, 0.0}, 100.0, {0, 1});
    CHECK(max_norm_of_subzero(a, {0, 1}) == Catch::Approx(100.0).margin(g.spacing[0]));
    const ScalarField b = sdf_ball(g, {50.0, 0.0}, 100.0, {0, 1});
    CHECK(max_norm_of_subzero(b, {0, 1}) == Catch::Approx(150.0).margin(g.spacing[0]));
  }

  SECTION("empty sets are rejected") {
    const ScalarField f = make_field(g, 1.0);
    CHECK(thrown_code([&] { max_norm_of_subzero(f, {0, 1}); }) == errc::empty_set);
  }
}

TEST_CASE("TimeField hold-rule sampling") {
  const Grid g = make_grid({0, 0}, {10, 10}, {5, 5}, {false, false});
  TimeField tf;
  tf.direction = TimeDirection::forward;
  for (int k = 0; k < 3; ++k) {
    ScalarField f = make_field(g, static_cast<double>(k));
    f.time = (k == 2) ? 2.5 : static_cast<double>(k);
    tf.append(std::move(f));
  }

  SECTION("largest snapshot time not exceeding t, clamped") {
    CHECK(tf.sample(-1.0).values[0] == 0.0);
    CHECK(tf.sample(0.0).values[0] == 0.0);
    CHECK(tf.sample(0.99).values[0] == 0.0);
    CHECK(tf.sample(1.0).values[0] == 1.0);
    CHECK(tf.sample(2.49).values[0] == 1.0);
    CHECK(tf.sample(2.5).values[0] == 2.0);
    CHECK(tf.sample(99.0).values[0] == 2.0);
  }

  SECTION("appends must be strictly ascending on one grid") {
    ScalarField bad = make_field(g, 0.0);
    bad.time = 2.5;
    CHECK(thrown_code([&] { tf.append(bad); }) == errc::unordered_times);
    const Grid other = make_grid({0, 0}, {10, 10}, {7, 7}, {false, false});
    ScalarField wrong = make_field(other, 0.0);
    wrong.time = 9.0;
    CHECK(thrown_code([&] { tf.append(wrong); }) == errc::grid_mismatch);
  }
}
