#include "ctf/corona.hpp"
#include "ctf/sets.hpp"
#include "helpers.hpp"

#include <doctest.h>
#include <json.hpp>

#include <set>

using namespace ctf;
using ctf::test::v2;

namespace {

// Cubes stop well above the sample spacing so d(Γ, E) on λB stays below d0.
struct Fixture {
  PointSet E = gen_segment(4097, v2(-8, 0), v2(8, 0));
  NetHierarchy H = build_nested_nets(E, -3, 6);
  CubeTree T = build_christ_cubes(H, E, 0.25);
};

}  // namespace

TEST_CASE("default parameters follow the field") {
  const FieldParams P = FieldParams::make(0.1, 2.0, 2);
  const CoronaParams c = CoronaParams::from_field(P);
  CHECK(c.lambda == doctest::Approx(P.A * P.Lambda));
  CHECK(c.lambda == doctest::Approx(16000.0));
  CoronaParams bad = c;
  bad.lambda = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("a curve lying on a line set is bad only where it ends") {
  Fixture f;
  CoronaParams P;
  P.lambda = 2.0;
  const Polyline G({v2(-0.45, 0), v2(0.45, 0)});
  const auto cubes = collect_curve_cubes(G, f.T);
  CHECK(upward_connected(cubes, G, f.T));
  const CoronaDecomposition D = decompose(cubes, G, f.T, f.E, P);
  CHECK(verify_corona(D, G, f.T, f.E).ok);
  // θ on λB vanishes unless λB holds an endpoint of Γ or is wider than Γ.
  const std::set<int> bad(D.bad.begin(), D.bad.end());
  for (int q : cubes) {
    const Ball L = f.T.ball(q).scaled(P.lambda);
    const bool end = L.contains(G.vertex(0)) || L.contains(G.vertex(1)) || L.diam() > G.diameter();
    CHECK(end == static_cast<bool>(bad.count(q)));
  }
  CHECK(bad.size() < cubes.size());
  std::size_t members = 0;
  for (const auto& r : D.regions) members += r.members.size();
  CHECK(members + D.bad.size() == cubes.size());
  for (const auto& r : D.regions) CHECK(angle_D(r.direction, Subspace::axis(2, 0)) < 1e-6);
}

TEST_CASE("a bent curve away from the set yields bad cubes and finite packing") {
  Fixture f;
  CoronaParams P;
  P.lambda = 2.0;
  const Polyline G({v2(-0.4, 0), v2(0, 0.3), v2(0.4, 0)});
  const auto cubes = collect_curve_cubes(G, f.T);
  const CoronaDecomposition D = decompose(cubes, G, f.T, f.E, P);
  CHECK(verify_corona(D, G, f.T, f.E).ok);
  CHECK(!D.bad.empty());
  const Packing pk = packing_report(D, f.T);
  CHECK(std::isfinite(pk.tops));
  CHECK(std::isfinite(pk.bad));
  CHECK(pk.bad > 0);
  // Partition of C_Γ.
  std::multiset<int> all(D.bad.begin(), D.bad.end());
  for (const auto& r : D.regions) all.insert(r.members.begin(), r.members.end());
  CHECK(std::vector<int>(all.begin(), all.end()) == D.cubes);
}

TEST_CASE("verification catches a tampered decomposition") {
  Fixture f;
  CoronaParams P;
  P.lambda = 2.0;
  const Polyline G({v2(-0.45, 0), v2(0.45, 0)});
  CoronaDecomposition D = decompose(collect_curve_cubes(G, f.T), G, f.T, f.E, P);
  REQUIRE(!D.regions.empty());
  D.bad.push_back(D.regions.front().top);  // now in two classes
  CHECK_FALSE(verify_corona(D, G, f.T, f.E).ok);
}

TEST_CASE("serial and parallel decompositions agree") {
  Fixture f;
  CoronaParams P;
  P.lambda = 3.0;
  const Polyline G({v2(-0.4, 0.02), v2(0, -0.05), v2(0.4, 0.01)});
  const auto cubes = collect_curve_cubes(G, f.T);
  const auto a = decompose(cubes, G, f.T, f.E, P, Exec::serial);
  const auto b = decompose(cubes, G, f.T, f.E, P, Exec::parallel);
  CHECK(corona_to_json(a) == corona_to_json(b));
}

TEST_CASE("corona export lists regions and bad cubes") {
  Fixture f;
  CoronaParams P;
  P.lambda = 2.0;
  const Polyline G({v2(-0.4, 0), v2(0, 0.3), v2(0.4, 0)});
  const auto D = decompose(collect_curve_cubes(G, f.T), G, f.T, f.E, P);
  const auto j = nlohmann::json::parse(corona_to_json(D));
  CHECK(j.at("regions").size() == D.regions.size());
  CHECK(j.at("bad").size() == D.bad.size());
  for (const auto& r : j.at("regions")) {
    CHECK(r.contains("top"));
    CHECK(r.contains("members"));
    CHECK(r.at("direction").size() == 2);
  }
}
