#include "ctf/exec.hpp"
#include "ctf/geometry.hpp"
#include "ctf/kdtree.hpp"
#include "ctf/polyline.hpp"
#include "ctf/rng.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace ctf;
using ctf::test::v2;

TEST_CASE("subspace span orthonormalizes and drops dependent columns") {
  Basis m(3, 3);
  m << 1, 2, 0,
       0, 0, 1,
       0, 0, 0;
  const Subspace S = Subspace::span(m);
  CHECK(S.dim() == 2);
  CHECK(S.orthonormality_error() < 1e-12);
  Vec p(3);
  p << 3, 4, 5;
  CHECK((S.project(p) - Vec((Vec(3) << 3, 4, 0).finished())).norm() < 1e-12);
}

TEST_CASE("angles between lines") {
  const Subspace x = Subspace::axis(2, 0), y = Subspace::axis(2, 1);
  CHECK(angle(x, y) == doctest::Approx(std::numbers::pi / 2));
  CHECK(angle(x, x) == doctest::Approx(0.0));
  const Subspace d = Subspace::line(v2(1, 1));
  CHECK(angle_D(x, d) == doctest::Approx(std::numbers::pi / 4));
  // A line inside a plane has one-sided angle 0 towards it, but not the reverse.
  const Subspace plane = Subspace::full(2);
  CHECK(angle(x, plane) == doctest::Approx(0.0));
  CHECK(angle(plane, x) == doctest::Approx(std::numbers::pi / 2));
}

TEST_CASE("line_angle_2d folds directions into [0, pi)") {
  for (double t : {0.1, 1.0, 2.5, 3.0}) {
    CHECK(line_angle_2d(unit_2d(t)) == doctest::Approx(t));
    CHECK(line_angle_2d(-unit_2d(t)) == doctest::Approx(t));
  }
}

TEST_CASE("distance to a flat matches the closed form") {
  const AffineFlat L{v2(0, 1), Subspace::line(v2(1, 1))};
  // Line y = x + 1; distance from (2, 0) is |2 - 0 + 1| / sqrt 2.
  CHECK(dist_to_flat(v2(2, 0), L) == doctest::Approx(3.0 / std::sqrt(2.0)));
}

TEST_CASE("flat_ball_sample covers the chord at the requested spacing") {
  const AffineFlat L{v2(0, 0.3), Subspace::axis(2, 0)};
  const Ball B{v2(0, 0), 1.0};
  const double h = 0.05;
  const auto pts = flat_ball_sample(L, B, h);
  const double half = std::sqrt(1 - 0.09);
  for (double x = -half; x <= half; x += 0.001) {
    double best = 1e9;
    for (const auto& p : pts) best = std::min(best, (p - v2(x, 0.3)).norm());
    CHECK(best <= h / 2 + 1e-12);
  }
  for (const auto& p : pts) CHECK(B.contains(p, 1e-12));
}

TEST_CASE("kd-tree queries agree with brute force") {
  Rng rng(5);
  Eigen::MatrixXd P(3, 400);
  for (int i = 0; i < P.cols(); ++i)
    for (int d = 0; d < 3; ++d) P(d, i) = rng.uniform();
  const KdTree T(P);
  for (int q = 0; q < 50; ++q) {
    Vec x(3);
    for (int d = 0; d < 3; ++d) x(d) = rng.uniform(-0.2, 1.2);
    double best = 1e9;
    std::vector<int> inside;
    for (int i = 0; i < P.cols(); ++i) {
      const double d = (P.col(i) - Eigen::VectorXd(x)).norm();
      best = std::min(best, d);
      if (d <= 0.2) inside.push_back(i);
    }
    CHECK(T.nearest(x).dist == doctest::Approx(best).epsilon(1e-14));
    std::vector<int> got;
    T.radius(x, 0.2, got);
    std::sort(got.begin(), got.end());
    CHECK(got == inside);
    CHECK(T.any_within(x, 0.2) == !inside.empty());
  }
}

TEST_CASE("polyline clip and distance agree with dense sampling") {
  const Polyline G({v2(0, 0), v2(1, 0), v2(1, 1), v2(0.2, 0.4)});
  CHECK(G.length() == doctest::Approx(2.0 + 1.0));
  const Ball B{v2(0.9, 0.2), 0.35};
  double clipped = 0.0;
  for (const auto& pc : G.clip(B)) clipped += (pc.b - pc.a).norm();
  double sampled = 0.0;
  const int n = 300000;
  for (int i = 0; i < n; ++i) {
    const double s = (i + 0.5) * G.length() / n;
    if (B.contains(G.point_at(s))) sampled += G.length() / n;
  }
  CHECK(clipped == doctest::Approx(sampled).epsilon(1e-4));
  for (const Vec& p : {v2(0.5, 0.5), v2(2, 2), v2(-1, 0.1)}) {
    double best = 1e9;
    for (int i = 0; i <= 30000; ++i) best = std::min(best, (G.point_at(i * G.length() / 30000) - p).norm());
    CHECK(G.dist(p) == doctest::Approx(best).epsilon(1e-3));
    CHECK(G.dist(p) <= best + 1e-12);
  }
}

TEST_CASE("dyadic samples only append when the step halves") {
  const Polyline G({v2(0, 0), v2(0.7, 0.1), v2(0.9, 0.8)});
  const auto a = G.dyadic_sample(0.1), b = G.dyadic_sample(0.05);
  REQUIRE(b.size() >= a.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK((a[i] - b[i]).norm() == 0.0);
}

TEST_CASE("compensated sum recovers cancelled terms") {
  std::vector<double> t = {1e16, 1.0, -1e16, 1.0};
  CHECK(ordered_sum(t) == 2.0);
}

TEST_CASE("counter-based rng is a pure function of seed, stream and index") {
  Rng a(9, 3), b(9, 3), c(9, 4);
  for (int i = 0; i < 10; ++i) {
    const auto x = a(), y = b(), z = c();
    CHECK(x == y);
    CHECK(x != z);
  }
  Rng u(1);
  double mean = 0.0;
  for (int i = 0; i < 20000; ++i) mean += u.uniform() / 20000;
  CHECK(mean == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("parallel loop writes the same slots as the serial loop") {
  std::vector<double> s(1000), p(1000);
  for_each_index(Exec::serial, s.size(), [&](std::size_t i) { s[i] = std::sin(static_cast<double>(i)); });
  for_each_index(Exec::parallel, p.size(), [&](std::size_t i) { p[i] = std::sin(static_cast<double>(i)); });
  CHECK(s == p);
}
