#include "ctf/io.hpp"
#include "ctf/nets.hpp"
#include "ctf/sets.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace ctf;
using ctf::test::v2;

namespace {

// Independent check of separation, covering and nesting by brute force over all pairs.
void brute_check_nets(const NetHierarchy& H, const PointSet& E) {
  for (int k = H.k_min; k <= H.k_max; ++k) {
    const auto& N = H.net(k);
    const double r = H.radius(k);
    for (std::size_t i = 0; i < N.size(); ++i)
      for (std::size_t j = i + 1; j < N.size(); ++j) CHECK((E.point(N[i]) - E.point(N[j])).norm() >= r);
    for (int p = 0; p < E.size(); ++p) {
      double best = 1e300;
      for (int q : N) best = std::min(best, (E.point(p) - E.point(q)).norm());
      CHECK(best < r);
    }
    if (k > H.k_min) {
      const auto& up = H.net(k - 1);
      const std::set<int> cur(N.begin(), N.end());
      for (int q : up) CHECK(cur.count(q) == 1);
    }
  }
}

}  // namespace

TEST_CASE("nets on the carpet satisfy separation, covering and nesting") {
  const PointSet E = gen_sierpinski_carpet(3);
  const NetHierarchy H = build_nested_nets(E, 0, 6);
  CHECK(H.radius(3) == doctest::Approx(0.125));
  brute_check_nets(H, E);
  const ValidationReport v = validate_nets(H, E);
  CHECK(v.ok);
}

TEST_CASE("nets on a 3D cloud") {
  const PointSet E = gen_random_cloud(300, 3, 4);
  const NetHierarchy H = build_nested_nets(E, -1, 5);
  brute_check_nets(H, E);
  CHECK(validate_nets(H, E).ok);
}

TEST_CASE("multiresolution family has radius 2 * 2^-k over every net point") {
  const PointSet E = gen_circle(64);
  const NetHierarchy H = build_nested_nets(E, 0, 4);
  const auto F = multiresolution_family(H, E);
  std::size_t expect = 0;
  for (int k = 0; k <= 4; ++k) expect += H.net(k).size();
  REQUIRE(F.size() == expect);
  for (const auto& b : F) {
    CHECK(b.ball.radius == doctest::Approx(2.0 * std::ldexp(1.0, -b.level)));
    CHECK((b.ball.center - E.point(b.point)).norm() == 0.0);
  }
}

TEST_CASE("cube tree partitions every level and nests") {
  const PointSet E = gen_sierpinski_carpet(3);
  const NetHierarchy H = build_nested_nets(E, 0, 6);
  const CubeTree T = build_christ_cubes(H, E, 0.25);
  CHECK(T.j_min == 0);
  CHECK(T.j_max == 3);
  for (int j = T.j_min; j <= T.j_max; ++j) {
    std::vector<int> seen(E.size(), 0);
    for (int q : T.level(j))
      for (int m : T.cubes[q].members) seen[m] += 1;
    for (int c : seen) CHECK(c == 1);
  }
  for (const auto& c : T.cubes) {
    if (c.parent < 0) continue;
    const auto& pm = T.cubes[c.parent].members;
    const std::set<int> ps(pm.begin(), pm.end());
    for (int m : c.members) CHECK(ps.count(m) == 1);
    CHECK(T.cubes[c.parent].level == c.level - 1);
  }
  // Inner and outer balls with the measured constants.
  for (const auto& c : T.cubes) {
    const Vec z = T.center(c.id);
    for (int m : c.members) CHECK((E.point(m) - z).norm() <= T.C1 * T.side(c.level) * (1 + 1e-12));
  }
  CHECK(T.C1 <= T.ball_factor);
  CHECK(T.a0 > 0);
  const ValidationReport v = validate_cube_tree(T, E, 2.0);
  CHECK(v.ok);
}

TEST_CASE("ancestor and depth walk the parent chain") {
  const PointSet E = gen_grid(17);
  const NetHierarchy H = build_nested_nets(E, 0, 6);
  const CubeTree T = build_christ_cubes(H, E, 0.25);
  for (int q : T.level(T.j_max)) {
    CHECK(T.depth(q) == T.j_max - T.j_min);
    CHECK(T.ancestor(q, 1) == T.cubes[q].parent);
    CHECK(T.ancestor(q, T.depth(q) + 1) == -1);
  }
}

TEST_CASE("cube levels require net levels at multiples of the step") {
  const PointSet E = gen_circle(32);
  const NetHierarchy H = build_nested_nets(E, 1, 1);
  CHECK_THROWS_AS(build_christ_cubes(H, E, 0.25), Error);
}

TEST_CASE("doubling diagnostic is bounded on a planar set") {
  const PointSet E = gen_grid(20);
  const NetHierarchy H = build_nested_nets(E, 0, 6);
  const int c = doubling_diagnostic(H, E);
  CHECK(c >= 1);
  CHECK(c <= 32);
}

TEST_CASE("nets and cube trees round-trip through JSON") {
  const PointSet E = gen_four_corner_cantor(3);
  const NetHierarchy H = build_nested_nets(E, 0, 6);
  const NetHierarchy H2 = nets_from_json(nets_to_json(H));
  CHECK(H2.levels == H.levels);
  CHECK(H2.parent == H.parent);
  const CubeTree T = build_christ_cubes(H, E, 0.25);
  const CubeTree T2 = cube_tree_from_json(cube_tree_to_json(T));
  REQUIRE(T2.size() == T.size());
  CHECK(T2.C1 == T.C1);
  CHECK(T2.a0 == T.a0);
  for (int q = 0; q < T.size(); ++q) {
    CHECK(T2.cubes[q].members == T.cubes[q].members);
    CHECK(T2.cubes[q].parent == T.cubes[q].parent);
    CHECK((T2.center(q) - T.center(q)).norm() == 0.0);
    CHECK(T2.ball(q).radius == T.ball(q).radius);
  }
  CHECK(cube_tree_to_json(T2) == cube_tree_to_json(T));
}

TEST_CASE("malformed nets file is reported") {
  CHECK_THROWS_AS(nets_from_json("{\"k_min\": 0}"), Error);
}
