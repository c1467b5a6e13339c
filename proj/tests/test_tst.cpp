#include "ctf/field.hpp"
#include "ctf/sets.hpp"
#include "ctf/tst.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace ctf;
using ctf::test::v2;

namespace {

int finest(const PointSet& E) { return static_cast<int>(std::ceil(std::log2(E.scale() / E.resolution()))) + 1; }

}  // namespace

TEST_CASE("TST curve visits every point and respects the length bound") {
  for (const PointSet& F : {gen_sierpinski_carpet(3), gen_four_corner_cantor(3), gen_circle(128), gen_grid(12),
                            gen_random_cloud(200, 2, 3)}) {
    const NetHierarchy H = build_nested_nets(F, 0, finest(F));
    const Polyline G = construct_tst_curve(F, H);
    CHECK(G.vertex_count() == F.size());
    const TstCheck c = check_tst_curve(F, H, G, 2.0);
    CHECK(c.visits_all);
    CHECK(c.connected);
    CHECK(c.C <= 50.0);
    CHECK(c.length >= F.diameter() - 1e-12);
  }
}

TEST_CASE("TST curve through a sampled circle is close to the circumference") {
  const PointSet F = gen_circle(256);
  const NetHierarchy H = build_nested_nets(F, 0, finest(F));
  const Polyline G = construct_tst_curve(F, H);
  // Any path through the samples is at least the inscribed polygon minus one chord; the
  // nearest-splice path backtracks a little at the splice points.
  CHECK(G.length() >= 2 * M_PI * 0.99);
  CHECK(G.length() <= 1.25 * 2 * M_PI);
}

TEST_CASE("beta sums vanish on collinear data") {
  const PointSet F = gen_segment(65, v2(0, 0), v2(1, 1));
  const NetHierarchy H = build_nested_nets(F, 0, 7);
  const SumReport r = point_beta_sum(F, H, 2.0);
  CHECK(r.total == doctest::Approx(0.0).epsilon(1e-12));
  const Polyline G({v2(0, 0), v2(1, 0.3)});
  const CurveFamily fam = curve_family(G, 0, 7);
  CHECK(curve_beta_sum(G, fam.balls, 2.0, 2.0).total < 1e-20);
}

TEST_CASE("one corner contributes a geometric series bounded by a multiple of the length") {
  const Polyline G({v2(0, 0), v2(0.5, 0), v2(0.5, 0.5)});
  double prev = -1.0;
  for (int kmax = 6; kmax <= 9; ++kmax) {
    const CurveFamily fam = curve_family(G, 0, kmax);
    const double r = curve_beta_sum(G, fam.balls, 2.0, 2.0).ratio;
    CHECK(r > 0);
    CHECK(r < 50);
    if (prev > 0) CHECK(r - prev >= -1e-12);  // adding finer balls only adds terms
    prev = r;
  }
}

TEST_CASE("parallel sums are bitwise identical to the serial reference") {
  const PointSet F = gen_sierpinski_carpet(3);
  const NetHierarchy H = build_nested_nets(F, 0, 6);
  CHECK(point_beta_sum(F, H, 2.0, 2.0, Exec::serial).total == point_beta_sum(F, H, 2.0, 2.0, Exec::parallel).total);
  const CubeTree T = build_christ_cubes(H, F, 0.25);
  const CoarseField C = constant_field(T, Subspace::axis(2, 0), FieldParams::make(0.1, 2.0, 2));
  const Polyline G({v2(0.1, 0.1), v2(0.8, 0.6), v2(0.9, 0.2)});
  CHECK(weak_type_sum(G, T, C, 2.0, 0.1, Exec::serial).total == weak_type_sum(G, T, C, 2.0, 0.1, Exec::parallel).total);
}

TEST_CASE("curves aligned with a line set produce zero weak-type sums") {
  const PointSet E = gen_segment(257, v2(0, 0), v2(1, 0));
  const NetHierarchy H = build_nested_nets(E, 0, 8);
  const CubeTree T = build_christ_cubes(H, E, 0.25);
  const CoarseField F = build_epsilon_field(T, E, FieldParams::make(0.1, 2.0, 2));
  // Counted balls either exceed diam(Γ) or have AB covered by Γ.
  for (double ext : {1.0, 5.0, 10.0}) {
    const Polyline G({v2(-ext, 0), v2(1 + ext, 0)});
    CHECK(weak_type_sum(G, T, F, 2.0, 0.1).total == 0.0);
  }
  // With ext = 2 the diam-4 roots count, and Γ ends inside their doubled balls.
  const Polyline short_ext({v2(-2, 0), v2(3, 0)});
  const SumReport r = weak_type_sum(short_ext, T, F, 2.0, 0.1);
  CHECK(r.total == doctest::Approx(8.0));
  CHECK(r.per_level_count.at(T.j_min) == 2);
  // A transversal segment is selected wherever it meets the set.
  const Polyline X({v2(0.5, -0.5), v2(0.5, 0.5)});
  CHECK(weak_type_sum(X, T, F, 2.0, 0.1).total > 0.0);
}

TEST_CASE("selection shortcut does not change the weak-type sum") {
  const PointSet E = gen_sierpinski_carpet(3);
  const NetHierarchy H = build_nested_nets(E, 0, 6);
  const CubeTree T = build_christ_cubes(H, E, 0.25);
  const CoarseField F = constant_field(T, Subspace::line(v2(1, 2)), FieldParams::make(0.1, 2.0, 2));
  const Polyline G({v2(0.05, 0.2), v2(0.5, 0.45), v2(0.95, 0.1)});
  WeakSumOptions full;
  full.shortcut = false;
  CHECK(weak_type_sum(G, T, F, 2.0, 0.1).total == weak_type_sum(G, T, F, 2.0, 0.1, Exec::serial, full).total);
}

TEST_CASE("cubes_meeting agrees with a direct scan") {
  const PointSet E = gen_grid(20);
  const NetHierarchy H = build_nested_nets(E, 0, 6);
  const CubeTree T = build_christ_cubes(H, E, 0.25);
  const Polyline G({v2(0.1, 0.9), v2(0.4, 0.3), v2(0.6, 0.35)});
  std::vector<int> direct;
  for (int q = 0; q < T.size(); ++q)
    if (T.ball(q).diam() <= G.diameter() && G.meets(T.ball(q))) direct.push_back(q);
  CHECK(cubes_meeting(G, T, 1.0) == direct);
}

TEST_CASE("sum reports serialize") {
  const PointSet F = gen_circle(32);
  const NetHierarchy H = build_nested_nets(F, 0, 4);
  const SumReport r = point_beta_sum(F, H, 2.0);
  CHECK(r.csv().rfind("level,partial_sum,count", 0) == 0);
  CHECK(r.json().find("\"total\"") != std::string::npos);
  CHECK_THROWS_AS(point_beta_sum(F, H, 0.5), Error);
}
