#include "ctf/tst.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ctf {

namespace {

struct Term {
  int level = 0;
  double value = 0.0;
};

SumReport reduce(const std::vector<Term>& terms, double length, std::map<std::string, double> params) {
  SumReport r;
  CompensatedSum total;
  std::map<int, CompensatedSum> lv;
  for (const auto& t : terms) {
    total.add(t.value);
    lv[t.level].add(t.value);
    ++r.per_level_count[t.level];
  }
  for (auto& [l, s] : lv) r.per_level[l] = s.value();
  r.total = total.value();
  r.counted_balls = static_cast<int>(terms.size());
  r.length = length;
  r.ratio = length > 0 ? r.total / length : (r.total > 0 ? std::numeric_limits<double>::infinity() : 0.0);
  r.params = std::move(params);
  return r;
}

std::vector<Vec> points_in(const PointSet& F, const Ball& B) {
  std::vector<int> ids;
  F.index().radius(B.center, B.radius, ids);
  std::sort(ids.begin(), ids.end());
  std::vector<Vec> out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(F.point(i));
  return out;
}

}  // namespace

std::string SumReport::csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "level,partial_sum,count\n";
  for (const auto& [l, v] : per_level) os << l << ',' << v << ',' << per_level_count.at(l) << '\n';
  return os.str();
}

std::string SumReport::json() const {
  nlohmann::ordered_json j;
  j["total"] = total;
  j["ratio"] = ratio;
  j["length"] = length;
  j["counted_balls"] = counted_balls;
  j["params"] = params;
  return j.dump(2);
}

Polyline construct_tst_curve(const PointSet& F, const NetHierarchy& H) {
  const int m = F.size();
  std::vector<int> next(m, -1), prev(m, -1);
  std::vector<char> on(m, 0);
  const std::vector<int>& top = H.net(H.k_min);
  int head = top.front(), tail = top.front();
  if (top.size() > 1) {
    double far = -1.0;
    for (std::size_t a = 0; a < top.size(); ++a)
      for (std::size_t b = a + 1; b < top.size(); ++b) {
        const double d = (F.point(top[a]) - F.point(top[b])).norm();
        if (d > far) {
          far = d;
          head = top[a];
          tail = top[b];
        }
      }
    next[head] = tail;
    prev[tail] = head;
  }
  on[head] = on[tail] = 1;

  // Cheapest splice next to the nearest existing vertex `v`.
  auto insert = [&](int p, int v) {
    const Vec x = F.point(p);
    if ((x - F.point(v)).norm() == 0.0) {
      on[p] = 2;  // duplicate of a vertex, visited through it
      return;
    }
    auto d = [&](int a, int b) { return (F.point(a) - F.point(b)).norm(); };
    double best = std::numeric_limits<double>::infinity();
    int mode = 0;
    if (prev[v] >= 0) {
      const double c = d(prev[v], p) + d(p, v) - d(prev[v], v);
      if (c < best) best = c, mode = 1;
    }
    if (next[v] >= 0) {
      const double c = d(v, p) + d(p, next[v]) - d(v, next[v]);
      if (c < best) best = c, mode = 2;
    }
    if (v == head && d(p, v) < best) best = d(p, v), mode = 3;
    if (v == tail && d(p, v) < best) best = d(p, v), mode = 4;
    switch (mode) {
      case 1: {
        const int a = prev[v];
        next[a] = p, prev[p] = a, next[p] = v, prev[v] = p;
        break;
      }
      case 2: {
        const int b = next[v];
        next[v] = p, prev[p] = v, next[p] = b, prev[b] = p;
        break;
      }
      case 3:
        next[p] = head, prev[head] = p, head = p;
        break;
      default:
        prev[p] = tail, next[tail] = p, tail = p;
        break;
    }
    on[p] = 1;
  };

  // Remaining top-level points splice next to their nearest vertex on the curve.
  for (int p : top) {
    if (on[p]) continue;
    int v = head;
    for (int u = head; u >= 0; u = next[u])
      if ((F.point(p) - F.point(u)).norm() < (F.point(p) - F.point(v)).norm()) v = u;
    insert(p, v);
  }
  for (int k = H.k_min + 1; k <= H.k_max; ++k) {
    const auto& lv = H.net(k);
    const auto& par = H.parent.at(k - H.k_min);
    for (std::size_t i = 0; i < lv.size(); ++i)
      if (!on[lv[i]]) insert(lv[i], par[i]);
  }
  // Points below the finest net attach to their nearest finest-net point.
  const KdTree finest(F.matrix(), H.net(H.k_max));
  for (int p = 0; p < m; ++p)
    if (!on[p]) insert(p, finest.nearest(F.point(p)).index);

  std::vector<Vec> verts;
  for (int v = head; v >= 0; v = next[v]) verts.push_back(F.point(v));
  return Polyline(std::move(verts));
}

SumReport point_beta_sum(const PointSet& F, const NetHierarchy& H, double A, double p, Exec ex) {
  if (!(A >= 1) || !(p > 0)) throw Error("beta sum needs A >= 1 and p > 0");
  const std::vector<FamilyBall> balls = multiresolution_family(H, F);
  std::vector<Term> terms(balls.size());
  for_each_index(ex, balls.size(), [&](std::size_t i) {
    const Ball AB = balls[i].ball.scaled(A);
    FitTarget T;
    T.pts = points_in(F, AB);
    const double b = beta_of(T, AB).value;
    terms[i] = {balls[i].level, std::pow(b, p) * balls[i].ball.diam()};
  });
  return reduce(terms, 0.0, {{"A", A}, {"p", p}});
}

TstCheck check_tst_curve(const PointSet& F, const NetHierarchy& H, const Polyline& curve, double A) {
  TstCheck c;
  c.length = curve.length();
  c.diam = F.diameter();
  c.beta_sum = point_beta_sum(F, H, A).total;
  const double denom = c.diam + c.beta_sum;
  c.C = denom > 0 ? c.length / denom : (c.length > 0 ? std::numeric_limits<double>::infinity() : 0.0);
  c.connected = curve.vertex_count() >= 1;
  // Every point of F must coincide with a vertex.
  Eigen::MatrixXd vm(F.dim(), curve.vertex_count());
  for (int i = 0; i < curve.vertex_count(); ++i) vm.col(i) = curve.vertex(i);
  const KdTree vt(vm);
  c.visits_all = true;
  for (int i = 0; i < F.size() && c.visits_all; ++i) c.visits_all = vt.nearest(F.point(i)).dist == 0.0;
  return c;
}

CurveFamily curve_family(const Polyline& G, int k_min, int k_max, double scale) {
  const double h = 0.5 * std::ldexp(scale, -k_max);
  const std::vector<Vec> s = G.dyadic_sample(h);
  Eigen::MatrixXd m(G.dim(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i) m.col(i) = s[i];
  CurveFamily f{PointSet(std::move(m), scale), {}, {}};
  f.nets = build_nested_nets(f.sample, k_min, k_max);
  f.balls = multiresolution_family(f.nets, f.sample);
  return f;
}

SumReport curve_restricted_beta_sum(const Polyline& G, const std::vector<FamilyBall>& balls,
                                    const std::function<const Subspace*(std::size_t)>& dir, double A, double p,
                                    Exec ex) {
  if (!(A >= 1) || !(p > 0)) throw Error("beta sum needs A >= 1 and p > 0");
  const double dg = G.diameter();
  std::vector<std::size_t> sel;
  for (std::size_t i = 0; i < balls.size(); ++i)
    if (balls[i].ball.diam() <= dg && G.meets(balls[i].ball)) sel.push_back(i);
  std::vector<Term> terms(sel.size());
  for_each_index(ex, sel.size(), [&](std::size_t t) {
    const FamilyBall& fb = balls[sel[t]];
    const Ball AB = fb.ball.scaled(A);
    const FitTarget T = target_from_polyline(G, AB);
    const Subspace* V = dir ? dir(sel[t]) : nullptr;
    const double b = V ? beta_restricted_of(T, AB, *V).value : beta_of(T, AB).value;
    terms[t] = {fb.level, std::pow(b, p) * fb.ball.diam()};
  });
  return reduce(terms, G.length(), {{"A", A}, {"p", p}});
}

SumReport curve_beta_sum(const Polyline& G, const std::vector<FamilyBall>& balls, double A, double p, Exec ex) {
  return curve_restricted_beta_sum(G, balls, nullptr, A, p, ex);
}

std::vector<int> cubes_meeting(const Polyline& G, const CubeTree& tree, double mult) {
  // Descendant balls of Q lie in B(z(Q), (1 + mult * s) r(Q)) because centers of
  // descendants are members of Q and members lie within C1 * side <= r(Q).
  const double reach = std::max(mult, 1.0 + mult * tree.s);
  const double dg = G.diameter();
  std::vector<int> out, stack = tree.roots();
  while (!stack.empty()) {
    const int q = stack.back();
    stack.pop_back();
    const Ball B = tree.ball(q);
    if (!G.meets(B.scaled(reach))) continue;
    if (B.diam() <= dg && G.meets(B.scaled(mult))) out.push_back(q);
    for (int c : tree.cubes[q].children) stack.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

SumReport curve_theta_cube_sum(const Polyline& G, const CubeTree& tree, double lambda, Exec ex) {
  if (!(lambda > 1)) throw Error("theta cube sum needs lambda > 1");
  const std::vector<int> ids = cubes_meeting(G, tree, lambda);
  std::vector<Term> terms(ids.size());
  for_each_index(ex, ids.size(), [&](std::size_t i) {
    const Ball B = tree.ball(ids[i]);
    const Ball LB = B.scaled(lambda);
    const double t = theta_of(target_from_polyline(G, LB), LB).value;
    terms[i] = {tree.cubes[ids[i]].level, t * t * B.diam()};
  });
  return reduce(terms, G.length(), {{"lambda", lambda}});
}

SumReport curve_d_sum(const Polyline& G, const CubeTree& tree, const PointSet& E, double lambda, Exec ex) {
  if (!(lambda > 1)) throw Error("d sum needs lambda > 1");
  const std::vector<int> ids = cubes_meeting(G, tree, lambda);
  std::vector<Term> terms(ids.size());
  for_each_index(ex, ids.size(), [&](std::size_t i) {
    const Ball B = tree.ball(ids[i]);
    const double d = d_gamma_E(G, B.scaled(lambda), E);
    terms[i] = {tree.cubes[ids[i]].level, d * d * B.diam()};
  });
  return reduce(terms, G.length(), {{"lambda", lambda}});
}

SumReport weak_type_sum(const Polyline& G, const CubeTree& tree, const CoarseField& field, double A, double eps,
                        Exec ex, const WeakSumOptions& opt) {
  if (!(A >= 1) || !(eps > 0)) throw Error("weak-type sum needs A >= 1 and eps > 0");
  const std::vector<int> ids = cubes_meeting(G, tree, 1.0);
  for (int q : ids) field.at(q);
  std::vector<Term> terms(ids.size());
  std::vector<char> counted(ids.size(), 0);
  for_each_index(ex, ids.size(), [&](std::size_t i) {
    const int q = ids[i];
    const Ball B = tree.ball(q);
    const Ball AB = B.scaled(A);
    const Subspace& V = field.at(q);
    const FitTarget T = target_from_polyline(G, AB);
    // β^τ <= θ^τ, so a unilateral value above eps already selects the ball.
    bool sel = opt.shortcut && beta_restricted_of(T, AB, V, opt.fit).value >= eps;
    if (!sel) sel = theta_restricted_of(T, AB, V, opt.fit).value >= eps;
    counted[i] = sel;
    terms[i] = {tree.cubes[q].level, B.diam()};
  });
  std::vector<Term> kept;
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (counted[i]) kept.push_back(terms[i]);
  return reduce(kept, G.length(), {{"A", A}, {"eps", eps}});
}

}  // namespace ctf
