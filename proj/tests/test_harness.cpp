#include "ctf/experiments.hpp"
#include "ctf/sets.hpp"
#include "helpers.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>

using namespace ctf;
using ctf::test::v2;

TEST_CASE("curve suite is seeded, cycles the kinds and stays in the unit square") {
  const auto a = curve_suite(40, 3, 0.02, 1.0), b = curve_suite(40, 3, 0.02, 1.0), c = curve_suite(40, 4, 0.02, 1.0);
  REQUIRE(a.size() == 40);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].kind == static_cast<CurveKind>(i % 4));
    CHECK(a[i].curve.vertices() == b[i].curve.vertices());
    CHECK(a[i].curve.length() >= 0.02 * (1 - 1e-9));
    for (const auto& v : a[i].curve.vertices()) {
      CHECK(v.minCoeff() >= 0.0);
      CHECK(v.maxCoeff() <= 1.0);
    }
  }
  CHECK(a[0].curve.vertices() != c[0].curve.vertices());
  for (const auto& d : diagonal_suite(10, 1)) {
    const Vec dir = d.curve.vertex(1) - d.curve.vertex(0);
    CHECK(std::abs(dir(0) - dir(1)) < 1e-12);
  }
}

TEST_CASE("linear regression against closed forms") {
  const LinearFit exact = linear_fit({0, 1, 2, 3}, {1, 3, 5, 7});
  CHECK(exact.slope == doctest::Approx(2.0));
  CHECK(exact.intercept == doctest::Approx(1.0));
  CHECK(exact.r2 == doctest::Approx(1.0));
  CHECK(exact.slope_se == doctest::Approx(0.0));
  // x = 0..4, y = 0,2,1,3,4: slope = Sxy/Sxx = 9/10, residual SS = 1.9, se = sqrt(1.9/3/10).
  const LinearFit f = linear_fit({0, 1, 2, 3, 4}, {0, 2, 1, 3, 4});
  CHECK(f.slope == doctest::Approx(0.9));
  CHECK(f.intercept == doctest::Approx(0.2));
  CHECK(f.slope_se == doctest::Approx(std::sqrt(1.9 / 3.0 / 10.0)));
  CHECK(f.r2 == doctest::Approx(1.0 - 1.9 / 10.0));
  CHECK(f.slope_halfwidth95() == doctest::Approx(3.182446 * f.slope_se).epsilon(1e-3));
}

TEST_CASE("Student t quantiles") {
  CHECK(student_t975(1) == doctest::Approx(12.7062).epsilon(1e-4));
  CHECK(student_t975(10) == doctest::Approx(2.2281).epsilon(1e-4));
  CHECK(student_t975(30) == doctest::Approx(2.0423).epsilon(1e-3));
  CHECK(student_t975(120) == doctest::Approx(1.9799).epsilon(1e-3));
  CHECK(student_t975(100000) == doctest::Approx(1.95996).epsilon(1e-4));
}

TEST_CASE("delta lists") {
  const auto d = parse_deltas("2^-4..2^-8");
  REQUIRE(d.size() == 5);
  CHECK(d.front() == 1.0 / 16);
  CHECK(d.back() == 1.0 / 256);
  CHECK(parse_deltas("0.1, 2^-5") == std::vector<double>{0.1, 1.0 / 32});
  CHECK(parse_real_list("1.5,2,2.5,3") == std::vector<double>{1.5, 2, 2.5, 3});
  CHECK_THROWS_AS(parse_real_list("1,x"), Error);
  CHECK_THROWS_AS(parse_deltas("0.1..0.01"), Error);
}

TEST_CASE("thickened disk is a delta grid inside the unit disk") {
  const PointSet E = thickened_disk(1.0 / 8);
  for (int i = 0; i < E.size(); ++i) CHECK(E.point(i).norm() <= 1.0 + 1e-12);
  CHECK(E.resolution() == doctest::Approx(1.0 / 8));
  CHECK(E.dist_to(v2(0.3, -0.2)) <= 1.0 / 8);
}

TEST_CASE("converse table: single delta, ordering errors") {
  ConverseOptions o;
  o.directions = 4;
  o.offsets = 2;
  const ConverseTable t = converse_experiment({1.0 / 16}, ConverseSource::disk, BatteryField::horizontal, o);
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0].worst_sum > 0);
  CHECK(t.rows[0].lines == 8);
  CHECK(t.csv().rfind("delta,log_inv_delta,worst_sum", 0) == 0);
  CHECK_THROWS_AS(converse_experiment({1.0 / 32, 1.0 / 16}, ConverseSource::disk, BatteryField::horizontal, o), Error);
  CHECK_THROWS_AS(converse_experiment({2.0}, ConverseSource::disk, BatteryField::horizontal, o), Error);
}

TEST_CASE("converse sums grow as delta shrinks on the disk") {
  ConverseOptions o;
  o.directions = 4;
  o.offsets = 2;
  const ConverseTable t =
      converse_experiment({1.0 / 16, 1.0 / 32, 1.0 / 64}, ConverseSource::disk, BatteryField::vertical, o);
  CHECK(t.rows[1].worst_sum > t.rows[0].worst_sum);
  CHECK(t.rows[2].worst_sum > t.rows[1].worst_sum);
  CHECK(t.fit.slope > 0);
}

TEST_CASE("p-sweep: empty list, range check, monotone in p") {
  const DiamondSchedule S = default_schedule(3);
  BlowupOptions o;
  o.trials = 4;
  CHECK(p_sweep(S, {}, o).empty());
  CHECK_THROWS_AS(p_sweep(S, {5.0}, o), Error);
  const auto rows = p_sweep(S, {2.0, 2.5, 3.0}, o);
  REQUIRE(rows.size() == 6);
  // Same trials for every p and each angle is below 1, so raising p lowers every level's sum.
  for (int lvl = 0; lvl < 2; ++lvl) {
    CHECK(rows[2 + lvl].row.mean_sum < rows[lvl].row.mean_sum);
    CHECK(rows[4 + lvl].row.mean_sum < rows[2 + lvl].row.mean_sum);
  }
  CHECK(p_sweep_csv(rows).rfind("p,level,a_n,mean_sum,ratio_to_bound,trials,seed", 0) == 0);
}

TEST_CASE("verification report: ratios, echo and determinism") {
  const PointSet E = gen_sierpinski_carpet(3);
  const NetHierarchy H = build_nested_nets(E, 0, 6);
  const CubeTree T = build_christ_cubes(H, E, 0.25);
  const CoarseField F = battery_field(BatteryField::built, T, E, 0.1, 2.0);
  const auto suite = curve_suite(8, 2, 0.05, 1.0);
  VerifyOptions vo;
  vo.beta = true;
  vo.beta_kmax = 6;
  const VerificationReport a = verify_suite(suite, T, E, F, vo, Exec::serial);
  const VerificationReport b = verify_suite(suite, T, E, F, vo, Exec::parallel);
  CHECK(a.ok);
  CHECK(a.json() == b.json());
  CHECK(a.csv() == b.csv());
  for (const auto& c : a.curves) {
    CHECK(std::isfinite(c.weak_ratio));
    CHECK(c.weak_ratio >= 0);
    CHECK(c.beta_ratio >= 0);
    CHECK(c.weak_ratio == doctest::Approx(c.weak_sum / c.length));
  }
  const auto j = nlohmann::json::parse(a.json());
  CHECK(j.at("params").at("eps") == 0.1);
  CHECK(j.at("params").contains("C1"));
  CHECK(j.at("curves").size() == 8);
}

TEST_CASE("battery fields cover the tree; random field is seeded") {
  const PointSet E = gen_grid(9);
  const NetHierarchy H = build_nested_nets(E, 0, 4);
  const CubeTree T = build_christ_cubes(H, E, 0.25);
  for (BatteryField f : full_battery()) {
    const CoarseField F = battery_field(f, T, E, 0.1, 2.0);
    CHECK(static_cast<int>(F.entries.size()) == T.size());
  }
  const CoarseField r1 = random_line_field(T, 4), r2 = random_line_field(T, 4), r3 = random_line_field(T, 5);
  CHECK(r1.at(0).basis() == r2.at(0).basis());
  CHECK(r1.at(0).basis() != r3.at(0).basis());
}

TEST_CASE("selector sum restricted to a diameter window") {
  const PointSet E = gen_grid(17);
  const NetHierarchy H = build_nested_nets(E, 0, 6);
  const CubeTree T = build_christ_cubes(H, E, 0.25);
  const CoarseField F = battery_field(BatteryField::vertical, T, E, 0.1, 2.0);
  const Polyline G({v2(-1, 0.5), v2(2, 0.5)});
  const double all = selector_sum(G, T, F, 2.0, 0.1, 0.0, 1e9);
  const double part = selector_sum(G, T, F, 2.0, 0.1, 0.1, 1.0);
  CHECK(all > 0);
  CHECK(part > 0);
  CHECK(part < all);
  // Against a vertical field the horizontal line is selected wherever it crosses AB near the
  // middle; a ball only grazed by Γ may fall below ε.
  double meet = 0.0, central = 0.0;
  for (int q = 0; q < T.size(); ++q) {
    const Ball B = T.ball(q);
    if (!G.meets(B)) continue;
    meet += B.diam();
    if (std::abs(B.center(1) - 0.5) <= 0.5 * B.radius) central += B.diam();
  }
  CHECK(all <= meet);
  CHECK(all >= central);
}
