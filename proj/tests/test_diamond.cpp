#include "ctf/diamond.hpp"
#include "helpers.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>

using namespace ctf;

namespace {

double hausdorff(const Polyline& a, const Polyline& b) {
  double h = 0.0;
  for (const auto& v : a.vertices()) h = std::max(h, b.dist(v));
  for (const auto& v : b.vertices()) h = std::max(h, a.dist(v));
  return h;
}

}  // namespace

TEST_CASE("diamond operation on the unit segment with a = 0.2") {
  const OrientedSegment I{P2(0, 0), P2(1, 0)};
  const auto T = t_a_operation(I, 0.2);
  CHECK((T[0].x0 - P2(0, 0)).norm() == 0.0);
  CHECK((T[0].x1 - P2(0.25, 0)).norm() < 1e-15);
  CHECK((T[1].x0 - P2(0.75, 0)).norm() < 1e-15);
  CHECK((T[2].x1 - P2(0.5, 0.2)).norm() < 1e-15);  // top
  CHECK((T[3].x1 - P2(0.5, -0.2)).norm() < 1e-15);  // bottom
  CHECK((T[4].x0 - P2(0.5, 0.2)).norm() < 1e-15);
  CHECK((T[5].x1 - P2(0.75, 0)).norm() < 1e-15);
  double len = 0.0;
  for (const auto& s : T) len += s.length();
  CHECK(len == doctest::Approx(t_a_length(0.2)).epsilon(1e-14));
  CHECK_THROWS_AS(t_a_operation(I, 0.3), Error);
}

TEST_CASE("diamond lengths") {
  CHECK(t_a_length(0.1) == doctest::Approx(1.57703).epsilon(1e-5));
  const OrientedSegment I{P2(0, 0), P2(1, 0)};
  double sum = 0.0;
  for (const auto& s : t_a_operation(I, 0.1)) sum += s.length();
  CHECK(sum == doctest::Approx(0.5 + 4 * std::sqrt(0.0725)).epsilon(1e-14));
  // Degenerate limit: the middle half is traversed twice.
  CHECK(std::abs(t_a_length(1e-9) - 1.5) < 1e-12);
  CHECK(path_factor(0.1) == doctest::Approx(0.5 + 2 * std::sqrt(0.0725)));
}

TEST_CASE("one level is the unit segment; two levels with N = 4 give 24 edges") {
  const auto one = build_diamond(custom_schedule(1, {}, {}));
  REQUIRE(one.size() == 1);
  CHECK(one[0].edges.size() == 1);
  CHECK(one[0].edges[0].length() == doctest::Approx(1.0));

  const DiamondSchedule S = custom_schedule(2, {5e-4}, {4});
  const auto L = build_diamond(S);
  REQUIRE(L.size() == 2);
  CHECK(L[1].edges.size() == 24);
  double longest = 0.0;
  for (const auto& e : L[1].edges) longest = std::max(longest, e.length());
  CHECK(longest == doctest::Approx(1.0 / 16).epsilon(1e-5));
  CHECK(S.s[1] == doctest::Approx(longest).epsilon(1e-12));
  CHECK(check_disjoint(L[1]).ok);
}

TEST_CASE("exhaustive disjointness flags a crossing") {
  DiamondLevel L;
  L.edges.push_back({P2(0, 0), P2(1, 1)});
  L.edges.push_back({P2(0, 1), P2(1, 0)});
  CHECK_FALSE(check_disjoint(L).ok);
  DiamondLevel chain;
  chain.edges.push_back({P2(0, 0), P2(1, 0)});
  chain.edges.push_back({P2(1, 0), P2(2, 0.5)});
  CHECK(check_disjoint(chain).ok);
}

TEST_CASE("default schedule satisfies the radius recursion and the certificates") {
  const DiamondSchedule S = default_schedule(4);
  CHECK(S.a[0] == doctest::Approx(0.9e-3));
  for (int n = 1; n <= S.operations(); ++n) {
    CHECK(S.N[n - 1] >= static_cast<long>(std::ceil(10.0 / S.a[n - 1])));
    if (n > 1) CHECK(S.a[n - 1] < S.a[n - 2]);
  }
  CHECK(validate_schedule(S).ok);
  CHECK(disjointness_certificate(S).ok);
  const ValidationReport h = hausdorff_certificate(S);
  CHECK(h.ok);
  CHECK(h.measured < 1.0);
  CHECK_THROWS_AS(custom_schedule(3, {5e-4, 6e-4}, {4, 4}), Error);  // not decreasing
}

TEST_CASE("explicit reduced instance: exhaustive disjointness and sampled Hausdorff bound") {
  const DiamondSchedule S = default_schedule(4);
  const DiamondSchedule R = custom_schedule(4, S.a, {8, 6, 4});
  const auto L = build_diamond(R);
  CHECK(L.back().edges.size() == 6u * 8 * 6 * 6 * 6 * 4);
  for (const auto& lv : L) CHECK(check_disjoint(lv).ok);
  CHECK(check_hausdorff(L, R).ok);
  CHECK_THROWS_AS(build_diamond(S), Error);  // far too many edges to materialize
}

TEST_CASE("monotone curves: length product formula and the sqrt(e) bound") {
  const DiamondSchedule S = custom_schedule(3, {0.2, 0.1}, {1, 2}, false);
  BitSequence up;
  up.bits = {1, 1};
  const Polyline G = sample_monotone_curve(up, S);
  CHECK(G.length() == doctest::Approx(path_factor(0.2) * path_factor(0.1)).epsilon(1e-13));
  CHECK(monotone_length(S) == doctest::Approx(G.length()).epsilon(1e-13));
  const BitSequence r = BitSequence::random(2, 5);
  CHECK(sample_monotone_curve(r, S).length() == doctest::Approx(G.length()).epsilon(1e-13));
  const DiamondSchedule D = default_schedule(12);
  double sq = 0.0;
  for (double a : D.a) sq += a * a;
  CHECK(sq <= 1.0);
  CHECK(monotone_length(D) <= std::sqrt(std::exp(1.0)));
}

TEST_CASE("flipping bit n only moves the curve inside the level-n diamonds") {
  const DiamondSchedule S = custom_schedule(4, {0.05, 0.02, 0.01}, {2, 3, 2}, false);
  const BitSequence b = BitSequence::random(3, 9);
  const Polyline g = sample_monotone_curve(b, S);
  for (int n = 1; n <= 3; ++n) {
    const BitSequence f = b.flipped(n);
    CHECK(f.bits[n - 1] == -b.bits[n - 1]);
    const Polyline h = sample_monotone_curve(f, S);
    // Apex moves by 2 a_n times the sub-edge length; finer levels add their own deviation.
    const double sub = S.s[n - 1] / S.N[n - 1];
    const double bound = 2 * S.a[n - 1] * sub + 2 * descendant_deviation(S, n + 1, S.s[n]);
    CHECK(hausdorff(g, h) <= bound * (1 + 1e-9));
    CHECK(hausdorff(g, h) > 0.5 * S.a[n - 1] * sub);
  }
}

TEST_CASE("distance to a level matches the explicit edge list") {
  const DiamondSchedule R = custom_schedule(3, {0.05, 0.02}, {3, 2}, false);
  const auto L = build_diamond(R);
  for (const P2& y : {P2(0.3, 0.01), P2(0.5, -0.2), P2(1.2, 0.0), P2(0.71, 0.003)}) {
    double best = 1e300;
    for (const auto& e : L.back().edges) best = std::min(best, point_segment_dist(Vec(y), Vec(e.x0), Vec(e.x1)));
    CHECK(distance_to_level(R, 3, y) == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("porosity probe finds empty sub-balls at delta = 1e-4") {
  const DiamondSchedule S = default_schedule(4);
  const PorosityReport r = porosity_probe(S, 1e-4, 200, 3);
  CHECK(r.probes == 200);
  CHECK(r.successes == r.probes);
}

TEST_CASE("blow-up report structure") {
  const DiamondSchedule S = default_schedule(3);
  BlowupOptions o;
  o.trials = 4;
  const BlowupReport rep = expected_blowup(S, o);
  CHECK(rep.rows.size() == 2);
  for (const auto& r : rep.rows) {
    CHECK(r.bound == doctest::Approx(r.a * r.a * std::log(1.0 / r.a)));
    CHECK(r.ratio == doctest::Approx(r.mean_sum / r.bound));
    CHECK(r.certified_sum <= r.mean_sum);
    CHECK(r.trials == 4);
  }
  CHECK(rep.csv().rfind("level,a_n,mean_sum,ratio_to_bound,trials,seed", 0) == 0);
  // Same seed, same numbers; serial and parallel agree.
  BlowupOptions par = o;
  par.ex = Exec::parallel;
  CHECK(expected_blowup(S, par).csv() == rep.csv());
  CHECK(expected_blowup(custom_schedule(1, {}, {}), o).rows.empty());
  o.A = 2.0;
  CHECK_THROWS_AS(expected_blowup(S, o), Error);
}

TEST_CASE("a constant horizontal field sees the apex tilt on a single level") {
  // Both paths through a level-1 diamond tilt by about a against the horizontal, so the
  // paired sum per level is at least of order a^2 log(1/a).
  const DiamondSchedule S = default_schedule(2);
  BlowupOptions o;
  o.trials = 8;
  const BlowupReport rep = expected_blowup(S, o);
  REQUIRE(rep.rows.size() == 1);
  CHECK(rep.rows[0].certified_ratio >= 0.01);
}

TEST_CASE("edge-list export") {
  const DiamondSchedule S = custom_schedule(2, {5e-4}, {4});
  const auto j = nlohmann::json::parse(diamond_to_json(build_diamond(S), S));
  CHECK(j.at("construction").size() == 2);
  CHECK(j.at("construction")[1].at("edges").size() == 24);
}
