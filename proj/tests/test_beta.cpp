#include "ctf/beta.hpp"
#include "ctf/rng.hpp"
#include "ctf/sets.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace ctf;
using ctf::test::brute_min_width;
using ctf::test::v2;

TEST_CASE("collinear points have beta 0") {
  std::vector<Vec> pts;
  for (int i = 0; i < 10; ++i) pts.push_back(v2(0.1 * i, 0.05 * i));
  const Ball B{v2(0.4, 0.2), 1.0};
  CHECK(beta(pts, B).value == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("unit square corners: width 1, beta = 1/2 / diam") {
  const std::vector<Vec> pts = {v2(0, 0), v2(1, 0), v2(1, 1), v2(0, 1)};
  const Ball B{v2(0.5, 0.5), 1.0};
  CHECK(beta(pts, B).value == doctest::Approx(0.25));
}

TEST_CASE("minimum width matches the pair-normal oracle") {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const int n = 3 + static_cast<int>(rng.below(10));
    std::vector<Vec> pts;
    for (int i = 0; i < n; ++i) pts.push_back(v2(rng.normal(), rng.normal()));
    CHECK(min_width_2d(pts) == doctest::Approx(brute_min_width(pts)).epsilon(1e-12));
  }
  // Equilateral triangle of side 1.
  const std::vector<Vec> tri = {v2(0, 0), v2(1, 0), v2(0.5, std::sqrt(3.0) / 2)};
  CHECK(min_width_2d(tri) == doctest::Approx(std::sqrt(3.0) / 2));
}

TEST_CASE("convex hull drops interior and collinear points") {
  const std::vector<Vec> pts = {v2(0, 0), v2(1, 0), v2(0.5, 0), v2(1, 1), v2(0, 1), v2(0.5, 0.5)};
  CHECK(convex_hull_2d(pts).size() == 4);
}

TEST_CASE("planar beta uses the exact path and matches the oracle") {
  Rng rng(11);
  for (int t = 0; t < 100; ++t) {
    std::vector<Vec> pts;
    const int n = 2 + static_cast<int>(rng.below(11));
    for (int i = 0; i < n; ++i) pts.push_back(v2(rng.uniform(-1, 1), rng.uniform(-1, 1)));
    const Ball B{v2(0, 0), 2.0};
    const FlatFit f = beta(pts, B);
    CHECK(f.method == FitMethod::exact2d);
    CHECK(f.value == doctest::Approx(0.5 * brute_min_width(pts) / B.diam()).epsilon(1e-12));
    // The returned line certifies the value.
    double worst = 0.0;
    for (const auto& p : pts) worst = std::max(worst, dist_to_flat(p, f.flat));
    CHECK(worst / B.diam() <= f.value + 1e-12);
  }
}

TEST_CASE("points outside the ball are ignored") {
  const std::vector<Vec> pts = {v2(0, 0), v2(0.5, 0), v2(5, 5)};
  CHECK(beta(pts, Ball{v2(0, 0), 1.0}).value == doctest::Approx(0.0));
}

TEST_CASE("restricting the direction can only increase beta") {
  Rng rng(2);
  for (int t = 0; t < 30; ++t) {
    std::vector<Vec> pts;
    for (int i = 0; i < 8; ++i) pts.push_back(v2(rng.uniform(-1, 1), 0.3 * rng.uniform(-1, 1)));
    const Ball B{v2(0, 0), 1.5};
    const double free = beta(pts, B).value;
    const Subspace V = Subspace::line(unit_2d(rng.uniform(0, 3.14)));
    const double fixed = beta_restricted(pts, B, V).value;
    CHECK(fixed >= free - 1e-12);
    // Restricted to the minimizing direction the value is the same.
    const FlatFit f = beta(pts, B);
    CHECK(beta_restricted(pts, B, f.flat.direction).value == doctest::Approx(free).epsilon(1e-9));
  }
}

TEST_CASE("theta dominates beta and vanishes on a diameter") {
  const Ball B{v2(0, 0), 1.0};
  std::vector<Vec> chord;
  for (int i = 0; i <= 200; ++i) chord.push_back(v2(-1 + i / 100.0, 0));
  CHECK(theta(chord, B).value < 0.01);
  const std::vector<Vec> half = {v2(-1, 0), v2(0, 0)};
  // A half chord leaves the other half of every candidate line uncovered.
  CHECK(theta(half, B).value > 0.2);
  Rng rng(8);
  for (int t = 0; t < 10; ++t) {
    std::vector<Vec> pts;
    for (int i = 0; i < 12; ++i) pts.push_back(v2(rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7)));
    CHECK(theta(pts, B).value >= beta(pts, B).value - 1e-12);
  }
}

TEST_CASE("curve targets: a straight curve through the ball has theta near 0 along its own direction") {
  const Polyline G({v2(-3, 0.1), v2(3, 0.1)});
  const Ball B{v2(0, 0), 1.0};
  const FitTarget T = target_from_polyline(G, B);
  CHECK(beta_of(T, B).value == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(theta_restricted_of(T, B, Subspace::axis(2, 0)).value < 0.01);
  CHECK(theta_restricted_of(T, B, Subspace::axis(2, 1)).value > 0.3);
}

TEST_CASE("higher-dimensional beta via the direction grid bounds the truth") {
  std::vector<Vec> pts;
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    Vec p(3);
    p << rng.uniform(-1, 1), 0.01 * rng.uniform(-1, 1), 0.01 * rng.uniform(-1, 1);
    pts.push_back(p);
  }
  Vec c = Vec::Zero(3);
  const FlatFit f = beta(pts, Ball{c, 2.0});
  CHECK(f.value < 0.01);
  CHECK(f.value >= 0.0);
}

TEST_CASE("d_gamma_E measures the farthest curve point from E") {
  const PointSet E = gen_segment(2001, v2(-2, 0), v2(2, 0));
  const Polyline G({v2(-1, 0), v2(0, 0.2), v2(1, 0)});
  const Ball B{v2(0, 0), 1.0};
  CHECK(d_gamma_E(G, B, E) == doctest::Approx(0.2 / 2.0).epsilon(1e-3));
}
