#include "ctf/corona.hpp"

#include "ctf/tst.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>

namespace ctf {

namespace {

double line_angle(const Subspace& a, const Subspace& b) {
  const Vec u = a.basis().col(0), v = b.basis().col(0);
  return std::acos(std::clamp(std::abs(u.dot(v)), 0.0, 1.0));
}

CubeFit fit_cube(const Polyline& G, const CubeTree& tree, const PointSet& E, int q, double lambda) {
  const Ball LB = tree.ball(q).scaled(lambda);
  const FlatFit f = theta_of(target_from_polyline(G, LB), LB);
  return CubeFit{f.value, d_gamma_E(G, LB, E), f.flat};
}

}  // namespace

CoronaParams CoronaParams::from_field(const FieldParams& P) {
  CoronaParams c;
  c.lambda = P.A * P.Lambda;
  return c;
}

void CoronaParams::validate() const {
  if (!(alpha > 0) || !(delta > 0) || !(d0 > 0)) throw Error("corona thresholds must be positive");
  if (!(lambda > 1)) throw Error("corona lambda must exceed 1");
}

std::vector<int> collect_curve_cubes(const Polyline& G, const CubeTree& tree) {
  return cubes_meeting(G, tree, 1.0);
}

bool upward_connected(const std::vector<int>& cubes, const Polyline& G, const CubeTree& tree) {
  const std::set<int> in(cubes.begin(), cubes.end());
  for (int q : cubes) {
    const int p = tree.cubes[q].parent;
    if (p < 0) continue;
    if (tree.ball(p).diam() <= G.diameter() && !in.count(p)) return false;
  }
  return true;
}

CoronaDecomposition decompose(const std::vector<int>& cubes, const Polyline& G, const CubeTree& tree,
                              const PointSet& E, const CoronaParams& params, Exec ex) {
  params.validate();
  CoronaDecomposition D;
  D.params = params;
  D.length = G.length();
  D.cubes = cubes;
  std::sort(D.cubes.begin(), D.cubes.end());
  std::vector<CubeFit> fits(D.cubes.size());
  for_each_index(ex, D.cubes.size(), [&](std::size_t i) { fits[i] = fit_cube(G, tree, E, D.cubes[i], params.lambda); });
  for (std::size_t i = 0; i < D.cubes.size(); ++i) D.fits.emplace(D.cubes[i], fits[i]);

  std::vector<int> order = D.cubes;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return tree.cubes[a].level < tree.cubes[b].level; });
  std::map<int, int> region_of;
  for (int q : order) {
    const CubeFit& f = D.fits.at(q);
    if (!(f.theta < params.delta) || !(f.d < params.d0)) {
      D.bad.push_back(q);
      continue;
    }
    const int p = tree.cubes[q].parent;
    const auto it = p >= 0 ? region_of.find(p) : region_of.end();
    if (it != region_of.end() && line_angle(f.line.direction, D.regions[it->second].direction) < params.alpha) {
      D.regions[it->second].members.push_back(q);
      region_of[q] = it->second;
      continue;
    }
    region_of[q] = static_cast<int>(D.regions.size());
    D.regions.push_back(StoppingRegion{q, {q}, f.line.direction});
  }
  for (auto& r : D.regions) std::sort(r.members.begin(), r.members.end());
  std::sort(D.bad.begin(), D.bad.end());
  return D;
}

Packing packing_report(const CoronaDecomposition& D, const CubeTree& tree) {
  CompensatedSum tops, bad;
  for (const auto& r : D.regions) tops.add(tree.ball(r.top).diam());
  for (int q : D.bad) bad.add(tree.ball(q).diam());
  Packing p;
  if (D.length > 0) {
    p.tops = tops.value() / D.length;
    p.bad = bad.value() / D.length;
  }
  return p;
}

ValidationReport verify_corona(const CoronaDecomposition& D, const Polyline& G, const CubeTree& tree,
                               const PointSet& E) {
  ValidationReport rep;
  const CoronaParams& P = D.params;
  std::map<int, int> seen;
  for (std::size_t i = 0; i < D.regions.size(); ++i)
    for (int q : D.regions[i].members) seen[q] += 1;
  for (int q : D.bad) seen[q] += 1;
  const std::set<int> all(D.cubes.begin(), D.cubes.end());
  for (int q : D.cubes)
    if (seen[q] != 1) rep.fail("cube " + std::to_string(q) + " is not in exactly one class");
  for (const auto& [q, c] : seen)
    if (!all.count(q)) rep.fail("cube " + std::to_string(q) + " is classified but not in C_Gamma");

  for (const auto& r : D.regions) {
    const std::set<int> mem(r.members.begin(), r.members.end());
    if (!mem.count(r.top)) rep.fail("region top " + std::to_string(r.top) + " missing from its members");
    for (int q : r.members) {
      if (q != r.top) {
        const int p = tree.cubes[q].parent;
        if (p < 0 || !mem.count(p)) rep.fail("region of " + std::to_string(r.top) + " not tree-connected at " + std::to_string(q));
        int a = q;
        while (a >= 0 && a != r.top) a = tree.cubes[a].parent;
        if (a != r.top) rep.fail("cube " + std::to_string(q) + " not contained in its region top");
      }
      // Thresholds from scratch: the stored line certifies θ, d is recomputed, the angle is
      // taken against the region direction.
      const Ball LB = tree.ball(q).scaled(P.lambda);
      const auto it = D.fits.find(q);
      if (it == D.fits.end()) {
        rep.fail("no fit recorded for cube " + std::to_string(q));
        continue;
      }
      const double th = theta_line_value(target_from_polyline(G, LB), LB, it->second.line, FitOptions{}.line_samples);
      if (!(th < P.delta + 1e-12)) rep.fail("theta threshold fails at cube " + std::to_string(q));
      if (!(d_gamma_E(G, LB, E) < P.d0)) rep.fail("distance threshold fails at cube " + std::to_string(q));
      if (!(line_angle(it->second.line.direction, r.direction) < P.alpha))
        rep.fail("angle threshold fails at cube " + std::to_string(q));
    }
  }
  rep.measured = static_cast<double>(D.regions.size());
  return rep;
}

std::string corona_to_json(const CoronaDecomposition& D) {
  nlohmann::ordered_json j;
  j["params"] = {{"alpha", D.params.alpha}, {"delta", D.params.delta}, {"d0", D.params.d0}, {"lambda", D.params.lambda}};
  nlohmann::ordered_json regions = nlohmann::ordered_json::array();
  for (const auto& r : D.regions) {
    std::vector<double> dir;
    for (int i = 0; i < r.direction.ambient(); ++i) dir.push_back(r.direction.basis()(i, 0));
    regions.push_back({{"top", r.top}, {"members", r.members}, {"direction", dir}});
  }
  j["regions"] = regions;
  j["bad"] = D.bad;
  return j.dump(2);
}

}  // namespace ctf
