#include "ctf/io.hpp"
#include "ctf/sets.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace ctf;
using ctf::test::v2;

TEST_CASE("carpet has 8^k centers on the 3^-k grid avoiding middle squares") {
  for (int k = 0; k <= 4; ++k) {
    const PointSet E = gen_sierpinski_carpet(k);
    CHECK(E.size() == static_cast<int>(std::pow(8, k)));
    const double side = std::pow(3.0, -k);
    for (int i = 0; i < E.size(); ++i) {
      // Every ternary digit pair of the cell index must avoid (1, 1).
      long x = std::lround(E.point(i)(0) / side - 0.5), y = std::lround(E.point(i)(1) / side - 0.5);
      for (int d = 0; d < k; ++d, x /= 3, y /= 3) CHECK(!(x % 3 == 1 && y % 3 == 1));
    }
    if (k >= 1) CHECK(E.resolution() == doctest::Approx(side));
  }
}

TEST_CASE("four-corner Cantor set keeps the corner squares") {
  const PointSet E = gen_four_corner_cantor(3);
  CHECK(E.size() == 64);
  const double side = std::pow(4.0, -3);
  for (int i = 0; i < E.size(); ++i) {
    // Base-4 digits of the corner coordinates are 0 or 3 only.
    for (int d = 0; d < 2; ++d) {
      long c = std::lround(E.point(i)(d) / side);
      for (int l = 0; l < 3; ++l, c /= 4) CHECK((c % 4 == 0 || c % 4 == 3));
    }
  }
}

TEST_CASE("circle and segment samples") {
  const PointSet C = gen_circle(100);
  for (int i = 0; i < C.size(); ++i) CHECK(C.point(i).norm() == doctest::Approx(1.0));
  CHECK(C.diameter() == doctest::Approx(2.0));
  const PointSet S = gen_segment(11, v2(0, 0), v2(1, 1));
  CHECK(S.resolution() == doctest::Approx(std::sqrt(2.0) / 10));
  CHECK_THROWS_AS(gen_circle(2), Error);
}

TEST_CASE("random cloud is seeded and inside the unit cube") {
  const PointSet a = gen_random_cloud(200, 4, 7), b = gen_random_cloud(200, 4, 7), c = gen_random_cloud(200, 4, 8);
  CHECK(a.matrix() == b.matrix());
  CHECK(a.matrix() != c.matrix());
  CHECK(a.matrix().minCoeff() >= 0.0);
  CHECK(a.matrix().maxCoeff() < 1.0);
}

TEST_CASE("generator spec dispatch and names") {
  GeneratorSpec s;
  s.kind = parse_set_kind("segment");
  s.count = 5;
  s.params = {0, 0, 2, 0};
  const PointSet E = generate(s);
  CHECK(E.size() == 5);
  CHECK(E.diameter() == doctest::Approx(2.0));
  CHECK(parse_set_kind("cantor") == SetKind::four_corner_cantor);
  CHECK_THROWS_AS(parse_set_kind("koch"), Error);
}

TEST_CASE("point sets round-trip through files") {
  const auto path = (std::filesystem::temp_directory_path() / "ctf_test_points.json").string();
  const PointSet E = gen_random_cloud(50, 3, 2);
  save_pointset(E, path);
  const PointSet F = load_pointset(path);
  CHECK(F.matrix() == E.matrix());
  CHECK(F.scale() == E.scale());
  CHECK_THROWS_AS(load_pointset(path, 2), Error);
  std::filesystem::remove(path);
  CHECK_THROWS_WITH_AS(load_pointset(path), doctest::Contains("missing point-set file"), Error);
}

TEST_CASE("missing stage inputs name the producing command") {
  CHECK_THROWS_WITH_AS(read_text("/nonexistent/field.json", "field"),
                       doctest::Contains("produce it with `ctf field`"), Error);
}

TEST_CASE("planar generators are doubling with count at most 32") {
  const std::vector<PointSet> sets = {gen_sierpinski_carpet(4), gen_four_corner_cantor(4), gen_circle(512),
                                      gen_grid(20), gen_random_cloud(2000, 2, 3)};
  for (const PointSet& E : sets) {
    const int finest = static_cast<int>(std::ceil(std::log2(E.diameter() / E.resolution())));
    const NetHierarchy H = build_nested_nets(E, 0, finest + 1);
    CHECK(doubling_diagnostic(H, E) <= 32);
  }
}
