#include "ctf/diamond.hpp"

#include "ctf/beta.hpp"
#include "ctf/field.hpp"
#include "ctf/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <unordered_map>

namespace ctf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

P2 rot90(const P2& v) { return P2(-v.y(), v.x()); }
P2 lerp(const P2& x0, const P2& x1, double t) { return t * x1 + (1.0 - t) * x0; }
double cross(const P2& a, const P2& b) { return a.x() * b.y() - a.y() * b.x(); }
double orient(const P2& a, const P2& b, const P2& c) { return cross(b - a, c - a); }
double side_factor(double a) { return std::sqrt(1.0 / 16.0 + a * a); }

double pt_seg(const P2& p, const P2& a, const P2& b) {
  const P2 d = b - a;
  const double l2 = d.squaredNorm();
  const double t = l2 > 0 ? std::clamp((p - a).dot(d) / l2, 0.0, 1.0) : 0.0;
  return (p - (a + t * d)).norm();
}

bool on_segment(const P2& a, const P2& b, const P2& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) && std::min(a.y(), b.y()) <= p.y() &&
         p.y() <= std::max(a.y(), b.y());
}

// Closed segments intersect.
bool segments_meet(const P2& a, const P2& b, const P2& c, const P2& d) {
  const double o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0))) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

double seg_seg(const P2& a, const P2& b, const P2& c, const P2& d) {
  if (segments_meet(a, b, c, d)) return 0.0;
  return std::min({pt_seg(a, c, d), pt_seg(b, c, d), pt_seg(c, a, b), pt_seg(d, a, b)});
}

// Corners of D_b(I), counter-clockwise.
std::array<P2, 4> rhombus(const P2& x0, const P2& x1, double b) {
  const P2 m = lerp(x0, x1, 0.5), off = b * rot90(x1 - x0);
  return {x0, m - off, x1, m + off};
}

// Signed distance-like margin of p inside a CCW convex polygon (min edge cross / edge length).
template <std::size_t K>
double inside_margin(const std::array<P2, K>& poly, const P2& p) {
  double m = kInf;
  for (std::size_t i = 0; i < K; ++i) {
    const P2& u = poly[i];
    const P2& v = poly[(i + 1) % K];
    m = std::min(m, cross(v - u, p - u) / (v - u).norm());
  }
  return m;
}

// Largest overlap of the two convex polygons along any edge normal; <= 0 means disjoint interiors.
template <std::size_t K>
double interior_overlap(const std::array<P2, K>& A, const std::array<P2, K>& B) {
  double best = kInf;
  auto axes = [&](const std::array<P2, K>& P) {
    for (std::size_t i = 0; i < K; ++i) {
      const P2 e = P[(i + 1) % K] - P[i];
      const P2 n = rot90(e).normalized();
      double a0 = kInf, a1 = -kInf, b0 = kInf, b1 = -kInf;
      for (const P2& p : A) a0 = std::min(a0, n.dot(p)), a1 = std::max(a1, n.dot(p));
      for (const P2& p : B) b0 = std::min(b0, n.dot(p)), b1 = std::max(b1, n.dot(p));
      best = std::min(best, std::min(a1, b1) - std::max(a0, b0));
    }
  };
  axes(A);
  axes(B);
  return best;
}

// Uniform grid over segments for exhaustive pair enumeration and nearest queries.
class SegmentGrid {
 public:
  SegmentGrid(const std::vector<OrientedSegment>& segs, double cell) : segs_(segs), h_(cell) {
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const P2 lo = segs[i].x0.cwiseMin(segs[i].x1), hi = segs[i].x0.cwiseMax(segs[i].x1);
      for (long x = cell_of(lo.x()); x <= cell_of(hi.x()); ++x)
        for (long y = cell_of(lo.y()); y <= cell_of(hi.y()); ++y) cells_[key(x, y)].push_back(static_cast<int>(i));
    }
  }

  template <class F>
  void for_each_cell(F&& f) const {
    for (const auto& [k, v] : cells_) f(v);
  }

  double nearest(const P2& p) const {
    const long cx = cell_of(p.x()), cy = cell_of(p.y());
    double best = kInf;
    for (long R = 0;; ++R) {
      for (long x = cx - R; x <= cx + R; ++x)
        for (long y = cy - R; y <= cy + R; ++y) {
          if (std::max(std::abs(x - cx), std::abs(y - cy)) != R) continue;
          const auto it = cells_.find(key(x, y));
          if (it == cells_.end()) continue;
          for (int i : it->second) best = std::min(best, pt_seg(p, segs_[i].x0, segs_[i].x1));
        }
      if (best <= R * h_ || R > 4096) return best;
    }
  }

 private:
  long cell_of(double v) const { return static_cast<long>(std::floor(v / h_)); }
  static std::int64_t key(long x, long y) { return (static_cast<std::int64_t>(x) << 32) ^ (y & 0xffffffffLL); }

  const std::vector<OrientedSegment>& segs_;
  double h_;
  std::unordered_map<std::int64_t, std::vector<int>> cells_;
};

// Minimum distance between non-adjacent edges of three consecutive unit diamonds.
double unit_separation(double a) {
  std::vector<OrientedSegment> segs;
  for (int m = -1; m <= 1; ++m) {
    OrientedSegment s;
    s.x0 = P2(m, 0);
    s.x1 = P2(m + 1, 0);
    for (const auto& e : t_a_operation(s, a)) segs.push_back(e);
  }
  double sep = kInf;
  for (std::size_t i = 0; i < segs.size(); ++i)
    for (std::size_t j = i + 1; j < segs.size(); ++j) {
      const auto& u = segs[i];
      const auto& v = segs[j];
      if (u.x0 == v.x0 || u.x0 == v.x1 || u.x1 == v.x0 || u.x1 == v.x1) continue;
      sep = std::min(sep, seg_seg(u.x0, u.x1, v.x0, v.x1));
    }
  return sep;
}

void fill_lengths(DiamondSchedule& S) {
  const int ops = S.operations();
  S.s.assign(S.levels, 1.0);
  S.s_min.assign(S.levels, 1.0);
  for (int n = 1; n <= ops; ++n) {
    const double a = S.a[n - 1];
    const double N = static_cast<double>(S.N[n - 1]);
    S.s[n] = S.s[n - 1] / N * side_factor(a);
    S.s_min[n] = S.s_min[n - 1] / N * 0.25;
  }
}

// r_{n+1} = min(s_n / 2, sep_n / 4) with sep_n the non-adjacent separation of P_n (halved for
// the corners between consecutive edges).
double next_r(const DiamondSchedule& S, int n) {
  double sep = kInf;
  if (n >= 2) sep = 0.5 * unit_separation(S.a[n - 2]) * S.s_min[n - 2] / static_cast<double>(S.N[n - 2]);
  return std::min(S.s[n - 1] / 2.0, sep / 4.0);
}

}  // namespace

std::array<OrientedSegment, 6> t_a_operation(const OrientedSegment& seg, double a) {
  if (!(a > 0.0) || !(a < 0.25)) throw Error("diamond parameter a must lie in (0, 1/4)");
  const P2 q1 = lerp(seg.x0, seg.x1, 0.25), q3 = lerp(seg.x0, seg.x1, 0.75), m = lerp(seg.x0, seg.x1, 0.5);
  const P2 off = a * rot90(seg.x1 - seg.x0);
  const P2 top = m + off, bot = m - off;
  std::array<OrientedSegment, 6> out;
  const P2 ends[6][2] = {{seg.x0, q1}, {q3, seg.x1}, {q1, top}, {q1, bot}, {top, q3}, {bot, q3}};
  for (int i = 0; i < 6; ++i) {
    out[i].x0 = ends[i][0];
    out[i].x1 = ends[i][1];
    out[i].piece = i;
  }
  return out;
}

double t_a_length(double a) { return 0.5 + 4.0 * side_factor(a); }
double path_factor(double a) { return 0.5 + 2.0 * side_factor(a); }

DiamondSchedule default_schedule(int levels, double a1) {
  if (levels < 1) throw Error("diamond needs at least one level");
  if (!(a1 > 0) || !(a1 < 1e-3)) throw Error("a_1 must lie in (0, 1e-3)");
  DiamondSchedule S;
  S.levels = levels;
  const int ops = levels - 1;
  const double c0 = a1 * std::log(3.0);
  double sq = 0.0;
  for (int n = 1; n <= ops; ++n) {
    S.a.push_back(c0 / (std::sqrt(static_cast<double>(n)) * std::log(n + 2.0)));
    sq += S.a.back() * S.a.back();
  }
  if (sq > 1.0)
    for (double& a : S.a) a /= std::sqrt(sq);
  S.s.assign(levels, 1.0);
  S.s_min.assign(levels, 1.0);
  S.r.assign(levels, 1.0);
  S.N.assign(ops, 1);
  for (int n = 1; n <= ops; ++n) {
    const double rn1 = next_r(S, n);
    S.r[n] = rn1;
    const long forced = static_cast<long>(std::floor(S.s[n - 1] / rn1)) + 1;
    S.N[n - 1] = std::max(static_cast<long>(std::ceil(10.0 / S.a[n - 1])), forced);
    S.s[n] = S.s[n - 1] / static_cast<double>(S.N[n - 1]) * side_factor(S.a[n - 1]);
    S.s_min[n] = S.s_min[n - 1] / static_cast<double>(S.N[n - 1]) * 0.25;
  }
  return S;
}

DiamondSchedule custom_schedule(int levels, std::vector<double> a, std::vector<long> N, bool strict) {
  if (levels < 1) throw Error("diamond needs at least one level");
  const std::size_t ops = static_cast<std::size_t>(levels - 1);
  if (a.size() < ops || N.size() < ops) throw Error("schedule shorter than the number of operations");
  a.resize(ops);
  N.resize(ops);
  for (std::size_t i = 0; i < ops; ++i) {
    if (!(a[i] > 0) || !(a[i] < (strict ? 1e-3 : 0.25))) throw Error("a_n out of range");
    if (strict && i > 0 && !(a[i] < a[i - 1])) throw Error("a_n must be decreasing");
    if (N[i] < 1) throw Error("N_n must be positive");
  }
  DiamondSchedule S;
  S.levels = levels;
  S.a = std::move(a);
  S.N = std::move(N);
  fill_lengths(S);
  S.r.assign(levels, 1.0);
  for (int n = 1; n <= static_cast<int>(ops); ++n) S.r[n] = next_r(S, n);
  return S;
}

ValidationReport validate_schedule(const DiamondSchedule& S) {
  ValidationReport rep;
  double sq = 0.0;
  for (int n = 1; n <= S.operations(); ++n) {
    const double a = S.a[n - 1];
    sq += a * a;
    if (!(a > 0 && a < 1e-3)) rep.fail("a_" + std::to_string(n) + " outside (0, 1e-3)");
    if (n > 1 && !(a < S.a[n - 2])) rep.fail("a_n not decreasing at n = " + std::to_string(n));
    const double sN = S.s[n - 1] / static_cast<double>(S.N[n - 1]);
    if (!(sN < S.r[n] && S.r[n] < S.s[n - 1])) rep.fail("s_n/N_n < r_{n+1} < s_n fails at n = " + std::to_string(n));
    if (n >= 2 && !(S.s[n - 1] < S.r[n - 1])) rep.fail("s_n < r_n fails at n = " + std::to_string(n));
  }
  if (sq > 1.0) rep.fail("sum of a_n^2 exceeds 1");
  rep.measured = sq;
  return rep;
}

std::vector<DiamondLevel> build_diamond(const DiamondSchedule& S, long max_edges) {
  std::vector<DiamondLevel> out;
  DiamondLevel L;
  L.n = 1;
  OrientedSegment unit;
  unit.x1 = P2(1, 0);
  L.edges.push_back(unit);
  for (int n = 1; n <= S.operations(); ++n) {
    const double a = S.a[n - 1];
    const long N = S.N[n - 1];
    L.a = a;
    L.N = N;
    const double count = static_cast<double>(L.edges.size()) * static_cast<double>(N) * 6.0;
    if (count > static_cast<double>(max_edges)) {
      std::ostringstream os;
      os << "diamond level " << n + 1 << " would have " << count << " edges (limit " << max_edges << ")";
      throw Error(os.str());
    }
    DiamondLevel next;
    next.n = n + 1;
    next.edges.reserve(static_cast<std::size_t>(count));
    std::vector<P2> pts(N + 1);
    for (std::size_t i = 0; i < L.edges.size(); ++i) {
      const auto& e = L.edges[i];
      for (long k = 0; k <= N; ++k) pts[k] = lerp(e.x0, e.x1, static_cast<double>(k) / static_cast<double>(N));
      for (long k = 0; k < N; ++k) {
        OrientedSegment J;
        J.x0 = pts[k];
        J.x1 = pts[k + 1];
        for (auto s : t_a_operation(J, a)) {
          s.parent = static_cast<int>(i);
          next.edges.push_back(s);
        }
      }
    }
    out.push_back(std::move(L));
    L = std::move(next);
  }
  out.push_back(std::move(L));
  for (auto& lv : out) {
    const ValidationReport r = check_disjoint(lv);
    if (!r.ok) throw Error("diamond construction error at level " + std::to_string(lv.n) + ": " + r.failures.front());
  }
  return out;
}

ValidationReport check_disjoint(const DiamondLevel& L) {
  ValidationReport rep;
  double longest = 0.0;
  for (const auto& e : L.edges) longest = std::max(longest, e.length());
  if (L.edges.size() < 2 || longest == 0.0) return rep;
  const SegmentGrid grid(L.edges, longest);
  std::vector<std::pair<int, int>> pairs;
  grid.for_each_cell([&](const std::vector<int>& ids) {
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t j = i + 1; j < ids.size(); ++j) pairs.emplace_back(std::min(ids[i], ids[j]), std::max(ids[i], ids[j]));
  });
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  for (const auto& [i, j] : pairs) {
    const auto& u = L.edges[i];
    const auto& v = L.edges[j];
    int shared = 0;
    P2 p, ou, ov;
    const P2 ue[2] = {u.x0, u.x1}, ve[2] = {v.x0, v.x1};
    for (int s = 0; s < 2; ++s)
      for (int t = 0; t < 2; ++t)
        if (ue[s] == ve[t]) ++shared, p = ue[s], ou = ue[1 - s], ov = ve[1 - t];
    bool bad = false;
    if (shared == 0)
      bad = segments_meet(u.x0, u.x1, v.x0, v.x1);
    else if (shared > 1)
      bad = true;
    else
      bad = orient(p, ou, ov) == 0 && (ou - p).dot(ov - p) > 0;
    if (bad) rep.fail("edges " + std::to_string(i) + " and " + std::to_string(j) + " intersect");
  }
  rep.measured = static_cast<double>(pairs.size());
  return rep;
}

ValidationReport check_hausdorff(const std::vector<DiamondLevel>& levels, const DiamondSchedule& S) {
  ValidationReport rep;
  auto directed = [](const DiamondLevel& from, const DiamondLevel& to, int per_edge) {
    double longest = 0.0;
    for (const auto& e : to.edges) longest = std::max(longest, e.length());
    const SegmentGrid grid(to.edges, longest);
    double d = 0.0;
    for (const auto& e : from.edges)
      for (int i = 0; i <= per_edge; ++i) d = std::max(d, grid.nearest(lerp(e.x0, e.x1, static_cast<double>(i) / per_edge)));
    return d;
  };
  for (std::size_t i = 0; i < levels.size(); ++i)
    for (std::size_t j = i + 1; j < levels.size(); ++j) {
      const int n = levels[i].n;
      const long N = S.N[n - 1];
      // Sample the coarse edges finely enough to hit every sub-edge midpoint.
      const int per_edge = static_cast<int>(std::min<long>(8 * N, 4096));
      const double dh = std::max(directed(levels[i], levels[j], per_edge), directed(levels[j], levels[i], 4));
      const double bound = 1e-3 * S.s[n - 1] / static_cast<double>(N);
      if (!(dh <= bound))
        rep.fail("d_H(P_" + std::to_string(n) + ", P_" + std::to_string(levels[j].n) + ") = " + std::to_string(dh) +
                 " exceeds " + std::to_string(bound));
      rep.measured = std::max(rep.measured, dh / bound);
    }
  return rep;
}

ValidationReport disjointness_certificate(const DiamondSchedule& S) {
  ValidationReport rep;
  OrientedSegment I;
  I.x1 = P2(1, 0);
  const double tol = 1e-14;
  for (int n = 1; n <= S.operations(); ++n) {
    const double a = S.a[n - 1];
    const std::string tag = " (n = " + std::to_string(n) + ")";
    const auto T = t_a_operation(I, a);
    const auto Da = rhombus(I.x0, I.x1, a);
    const auto Db = rhombus(I.x0, I.x1, a * (1.0 + 1e-6));
    for (const auto& e : T)
      for (const P2& p : {e.x0, e.x1}) {
        if (inside_margin(Da, p) < -tol) rep.fail("T_a(I) leaves D_a(I)" + tag);
        if (p != I.x0 && p != I.x1 && !(inside_margin(Db, p) > 0)) rep.fail("T_a(I) touches the boundary of D_b(I)" + tag);
      }
    for (int i = 0; i < 6; ++i)
      for (int j = i + 1; j < 6; ++j)
        if (interior_overlap(rhombus(T[i].x0, T[i].x1, a), rhombus(T[j].x0, T[j].x1, a)) > tol)
          rep.fail("rhombi of edges " + std::to_string(i) + ", " + std::to_string(j) + " of T_a(I) overlap" + tag);
    if (n < S.operations()) {
      const double b = S.a[n];
      const long N = S.N[n];
      if (!(b < a)) rep.fail("a_{n+1} >= a_n" + tag);
      for (const auto& e : T)
        for (long k = 0; k < N; ++k) {
          const P2 u = lerp(e.x0, e.x1, static_cast<double>(k) / N), v = lerp(e.x0, e.x1, static_cast<double>(k + 1) / N);
          for (const P2& p : rhombus(u, v, b))
            if (inside_margin(Da, p) < -tol) {
              rep.fail("D_b(J) not inside D_a(I) for a subdivision edge" + tag);
              k = N;
              break;
            }
        }
    }
  }
  return rep;
}

double descendant_deviation(const DiamondSchedule& S, int n, double len) {
  double dev = 0.0, L = len;
  for (int u = n; u <= S.operations(); ++u) {
    const double sub = L / static_cast<double>(S.N[u - 1]);
    dev += S.a[u - 1] * sub;
    L = sub * side_factor(S.a[u - 1]);
  }
  return dev;
}

ValidationReport hausdorff_certificate(const DiamondSchedule& S) {
  ValidationReport rep;
  for (int n = 1; n <= S.operations(); ++n) {
    const double bound = 1e-3 * S.s[n - 1] / static_cast<double>(S.N[n - 1]);
    const double dh = descendant_deviation(S, n, S.s[n - 1]);
    if (!(dh <= bound)) rep.fail("Hausdorff bound fails at n = " + std::to_string(n));
    if (!(bound <= std::ldexp(1.0, -n))) rep.fail("1e-3 s_n/N_n exceeds 2^-n at n = " + std::to_string(n));
    rep.measured = std::max(rep.measured, dh / bound);
  }
  return rep;
}

BitSequence BitSequence::random(int count, std::uint64_t seed, std::uint64_t stream) {
  BitSequence b;
  b.seed = seed;
  Rng rng(seed, stream);
  for (int i = 0; i < count; ++i) b.bits.push_back(rng.sign());
  return b;
}

BitSequence BitSequence::flipped(int n) const {
  BitSequence b = *this;
  b.bits.at(n - 1) = -b.bits.at(n - 1);
  return b;
}

Polyline sample_monotone_curve(const BitSequence& b, const DiamondSchedule& S, long max_vertices) {
  if (static_cast<int>(b.bits.size()) < S.operations()) throw Error("bit sequence shorter than the built levels");
  std::vector<P2> v = {P2(0, 0), P2(1, 0)};
  for (int n = 1; n <= S.operations(); ++n) {
    const double a = S.a[n - 1];
    const long N = S.N[n - 1];
    const double count = static_cast<double>(v.size() - 1) * N * 4 + 1;
    if (count > static_cast<double>(max_vertices)) throw Error("monotone curve too large to materialize");
    std::vector<P2> w;
    w.reserve(static_cast<std::size_t>(count));
    w.push_back(v.front());
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
      P2 prev = v[i];
      for (long k = 1; k <= N; ++k) {
        const P2 next = k == N ? v[i + 1] : lerp(v[i], v[i + 1], static_cast<double>(k) / N);
        const P2 off = a * rot90(next - prev);
        w.push_back(lerp(prev, next, 0.25));
        w.push_back(lerp(prev, next, 0.5) + (b.bits[n - 1] > 0 ? off : P2(-off)));
        w.push_back(lerp(prev, next, 0.75));
        w.push_back(next);
        prev = next;
      }
    }
    v = std::move(w);
  }
  std::vector<Vec> out;
  out.reserve(v.size());
  for (const P2& p : v) out.push_back(Vec(p));
  return Polyline(std::move(out));
}

double monotone_length(const DiamondSchedule& S) {
  double l = 1.0;
  for (int n = 1; n <= S.operations(); ++n) l *= path_factor(S.a[n - 1]);
  return l;
}

namespace {

void descend_distance(const DiamondSchedule& S, int m, int n, const P2& x0, const P2& x1, const P2& y, double& best) {
  if (n == m) {
    best = std::min(best, pt_seg(y, x0, x1));
    return;
  }
  const long N = S.N[n - 1];
  const double a = S.a[n - 1];
  const double sub = (x1 - x0).norm() / static_cast<double>(N);
  const double dev = a * sub + descendant_deviation(S, n + 1, sub * side_factor(a));
  const P2 d = x1 - x0;
  const double t = std::clamp((y - x0).dot(d) / d.squaredNorm(), 0.0, 1.0);
  const long k0 = std::min(N - 1, static_cast<long>(t * static_cast<double>(N)));
  auto visit = [&](long k) {
    const P2 u = lerp(x0, x1, static_cast<double>(k) / N), v = lerp(x0, x1, static_cast<double>(k + 1) / N);
    if (pt_seg(y, u, v) - dev > best) return false;
    OrientedSegment J;
    J.x0 = u;
    J.x1 = v;
    for (const auto& e : t_a_operation(J, a)) descend_distance(S, m, n + 1, e.x0, e.x1, y, best);
    return true;
  };
  visit(k0);
  for (long k = k0 - 1; k >= 0 && visit(k); --k) {
  }
  for (long k = k0 + 1; k < N && visit(k); ++k) {
  }
}

}  // namespace

double distance_to_level(const DiamondSchedule& S, int m, const P2& y) {
  if (m < 1 || m > S.levels) throw Error("level out of range");
  double best = kInf;
  descend_distance(S, m, 1, P2(0, 0), P2(1, 0), y, best);
  return best;
}

PorosityReport porosity_probe(const DiamondSchedule& S, double delta, int probes, std::uint64_t seed) {
  PorosityReport rep;
  rep.delta = delta;
  rep.min_ratio = kInf;
  const int m = S.levels;
  const double r_lo = S.s[m - 1];
  for (int i = 0; i < probes; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i));
    P2 x0(0, 0), x1(1, 0);
    for (int n = 1; n < m; ++n) {
      const long N = S.N[n - 1];
      const long k = static_cast<long>(rng.below(static_cast<std::uint64_t>(N)));
      OrientedSegment J;
      J.x0 = lerp(x0, x1, static_cast<double>(k) / N);
      J.x1 = lerp(x0, x1, static_cast<double>(k + 1) / N);
      const auto e = t_a_operation(J, S.a[n - 1])[rng.below(6)];
      x0 = e.x0;
      x1 = e.x1;
    }
    const P2 x = lerp(x0, x1, rng.uniform());
    const double r = std::exp(rng.uniform(std::log(r_lo), 0.0));
    ++rep.probes;
    const double reach = (1.0 - delta) * r;
    bool found = false;
    for (int ring = 1; ring <= 8 && !found; ++ring)
      for (int j = 0; j < 8 * ring && !found; ++j) {
        const double ang = 2.0 * std::numbers::pi * j / (8.0 * ring);
        const P2 y = x + reach * ring / 8.0 * P2(std::cos(ang), std::sin(ang));
        const double dy = distance_to_level(S, m, y);
        if (dy > delta * r) {
          found = true;
          rep.min_ratio = std::min(rep.min_ratio, dy / r);
        }
      }
    if (found) ++rep.successes;
  }
  return rep;
}

std::string to_string(DiamondField f) {
  switch (f) {
    case DiamondField::built: return "built";
    case DiamondField::horizontal: return "horizontal";
    case DiamondField::vertical: return "vertical";
    default: return "random";
  }
}

DiamondField parse_diamond_field(const std::string& s) {
  if (s == "built") return DiamondField::built;
  if (s == "horizontal") return DiamondField::horizontal;
  if (s == "vertical") return DiamondField::vertical;
  if (s == "random") return DiamondField::random;
  throw Error("unknown diamond field '" + s + "' (expected built, horizontal, vertical or random)");
}

namespace {

// Family balls of ℱ^n(I) in the coordinates of I = [(0,0),(1,0)], from nets of the nearby part
// of P_{n+1} at the absolute dyadic radii 2^-k.
struct Window {
  double len = 0.0;  // |I|
  std::vector<Ball> balls;
  std::vector<int> levels;
  std::vector<P2> built;  // direction of τ(B) for the built field, when requested
};

constexpr int kNetHalfWidth = 4;
constexpr int kCurveHalfWidth = 3;

std::vector<OrientedSegment> local_diamonds(double a, int half) {
  std::vector<OrientedSegment> segs;
  for (int m = -half; m <= half; ++m) {
    OrientedSegment s;
    s.x0 = P2(m, 0);
    s.x1 = P2(m + 1, 0);
    for (const auto& e : t_a_operation(s, a)) segs.push_back(e);
  }
  return segs;
}

std::vector<P2> local_curve(double a, int sign, int half) {
  std::vector<P2> v;
  v.emplace_back(-half, 0);
  for (int m = -half; m <= half; ++m) {
    v.emplace_back(m + 0.25, 0);
    v.emplace_back(m + 0.5, sign * a);
    v.emplace_back(m + 0.75, 0);
    v.emplace_back(m + 1, 0);
  }
  return v;
}

Window make_window(double a, double len, bool with_field, double field_eps, double A) {
  Window W;
  W.len = len;
  const int k_max = static_cast<int>(std::floor(std::log2(4.0 / (a * len))));
  const int k_min = static_cast<int>(std::ceil(-std::log2(len))) - 2;
  const double h = 0.25 * std::ldexp(1.0, -k_max) / len;
  std::vector<P2> pts;
  std::set<std::pair<double, double>> verts;
  for (const auto& e : local_diamonds(a, kNetHalfWidth)) {
    verts.insert({e.x0.x(), e.x0.y()});
    verts.insert({e.x1.x(), e.x1.y()});
    const int n = std::max(1, static_cast<int>(std::ceil(e.length() / h)));
    for (int i = 1; i < n; ++i) pts.push_back(lerp(e.x0, e.x1, static_cast<double>(i) / n));
  }
  for (const auto& [x, y] : verts) pts.emplace_back(x, y);
  Eigen::MatrixXd M(2, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) M.col(static_cast<Eigen::Index>(i)) = pts[i];
  const PointSet E(std::move(M), 1.0 / len);
  const NetHierarchy H = build_nested_nets(E, k_min, k_max);
  CubeOptions co;
  co.a0_min = 0.0;
  const CubeTree T = build_christ_cubes(H, E, 0.5, co);
  CoarseField F;
  if (with_field) F = build_epsilon_field(T, E, FieldParams::make(field_eps, A, 2), Exec::parallel);
  Vec m0(2), m1(2);
  m0 << 0.25, 0.0;
  m1 << 0.75, 0.0;
  for (int q = 0; q < T.size(); ++q) {
    const Ball B = T.ball(q);
    double t0, t1;
    if (B.diam() < a || B.diam() > 1.0 || !segment_ball_interval(m0, m1, B, t0, t1)) continue;
    W.balls.push_back(B);
    W.levels.push_back(T.cubes[q].level);
    if (with_field) {
      const Subspace& V = F.at(q);
      if (V.dim() != 1) throw Error("built diamond field is not a line field at cube " + std::to_string(q));
      W.built.push_back(P2(V.basis()(0, 0), V.basis()(1, 0)));
    }
  }
  return W;
}

P2 line_at(double angle) { return P2(std::cos(angle), std::sin(angle)); }

double random_angle(std::uint64_t seed, int level, const P2& c) {
  const double g = std::ldexp(1.0, level + 24);
  std::uint64_t h = splitmix64(seed ^ static_cast<std::uint64_t>(level + 1024));
  h = splitmix64(h ^ static_cast<std::uint64_t>(std::llround(c.x() * g)));
  h = splitmix64(h ^ static_cast<std::uint64_t>(std::llround(c.y() * g)));
  return static_cast<double>(h >> 11) * 0x1.0p-53 * std::numbers::pi;
}

// Restricted beta of a planar polyline in a ball: half the spread of Γ ∩ C across the
// direction u, over diam(C).
double beta_line(const std::vector<P2>& G, const P2& c, double radius, const P2& u) {
  const P2 nrm = rot90(u);
  double lo = kInf, hi = -kInf;
  for (std::size_t i = 0; i + 1 < G.size(); ++i) {
    const P2 d = G[i + 1] - G[i], f = G[i] - c;
    const double A = d.squaredNorm(), B = f.dot(d), C = f.squaredNorm() - radius * radius;
    const double disc = B * B - A * C;
    if (disc < 0) continue;
    const double sq = std::sqrt(disc);
    const double t0 = std::max(0.0, (-B - sq) / A), t1 = std::min(1.0, (-B + sq) / A);
    if (t0 > t1) continue;
    for (double t : {t0, t1}) {
      const double v = nrm.dot(G[i] + t * d);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  return hi >= lo ? 0.5 * (hi - lo) / (2.0 * radius) : 0.0;
}

// Same, lowered to a bound valid for any curve within Hausdorff distance h of Γ.
double beta_lower(const std::vector<P2>& G, const P2& c, double radius, const P2& u, double h) {
  if (h <= 0) return beta_line(G, c, radius, u);
  if (radius <= h) return 0.0;
  const double b = beta_line(G, c, radius - h, u);
  return std::max(0.0, (b * 2.0 * (radius - h) - h) / (2.0 * radius));
}

}  // namespace

std::string BlowupReport::csv() const {
  std::ostringstream os;
  os.precision(10);
  os << "level,a_n,mean_sum,ratio_to_bound,trials,seed,certified_sum,certified_ratio,stderr,balls,field,A,p\n";
  for (const auto& r : rows)
    os << r.level << ',' << r.a << ',' << r.mean_sum << ',' << r.ratio << ',' << r.trials << ',' << r.seed << ','
       << r.certified_sum << ',' << r.certified_ratio << ',' << r.stderr_sum << ',' << r.balls << ',' << field << ','
       << A << ',' << p << '\n';
  return os.str();
}

BlowupReport expected_blowup(const DiamondSchedule& S, const BlowupOptions& opt) {
  if (!(opt.A >= 3)) throw Error("expected_blowup needs A >= 3");
  if (opt.trials < 2) throw Error("expected_blowup needs at least 2 trials");
  if (!(opt.p > 0)) throw Error("expected_blowup needs p > 0");
  BlowupReport rep;
  rep.field = to_string(opt.field);
  rep.A = opt.A;
  rep.p = opt.p;
  const bool built = opt.field == DiamondField::built;
  double L_t = 1.0;
  for (int t = 1; t <= S.operations(); ++t) {
    const double a = S.a[t - 1];
    const long N = S.N[t - 1];
    // Windows are keyed by the straight/side choices above I, which fix |I| exactly.
    std::map<std::uint64_t, Window> windows;
    auto length_of = [&](std::uint64_t mask) {
      double l = 1.0;
      for (int u = 1; u < t; ++u)
        l = l / static_cast<double>(S.N[u - 1]) * ((mask >> (u - 1)) & 1 ? side_factor(S.a[u - 1]) : 0.25);
      return l / static_cast<double>(N);
    };
    for (std::uint64_t mask = 0; mask < (1ULL << (t - 1)); ++mask)
      windows.emplace(mask, make_window(a, length_of(mask), built, opt.field_eps, opt.A));
    const std::vector<P2> gp = local_curve(a, +1, kCurveHalfWidth);
    const std::vector<P2> gm = local_curve(a, -1, kCurveHalfWidth);

    std::vector<double> est(opt.trials), cert(opt.trials);
    for_each_index(opt.ex, static_cast<std::size_t>(opt.trials), [&](std::size_t trial) {
      Rng rng(opt.seed, (static_cast<std::uint64_t>(t) << 32) + trial);
      const BitSequence b = BitSequence::random(S.operations(), opt.seed, (static_cast<std::uint64_t>(t) << 48) + trial);
      CompensatedSum se, sc;
      for (int smp = 0; smp < opt.samples_per_trial; ++smp) {
        P2 x0(0, 0), x1(1, 0);
        std::uint64_t mask = 0;
        for (int u = 1; u < t; ++u) {
          const double au = S.a[u - 1], q = side_factor(au);
          const long Nu = S.N[u - 1];
          const long k = static_cast<long>(rng.below(static_cast<std::uint64_t>(Nu)));
          const P2 u0 = lerp(x0, x1, static_cast<double>(k) / Nu), u1 = lerp(x0, x1, static_cast<double>(k + 1) / Nu);
          const P2 apex = lerp(u0, u1, 0.5) + (b.bits[u - 1] > 0 ? 1.0 : -1.0) * au * rot90(u1 - u0);
          const double w = rng.uniform() * (0.5 + 2.0 * q);
          if (w < 0.25) {
            x0 = u0, x1 = lerp(u0, u1, 0.25);
          } else if (w < 0.25 + q) {
            x0 = lerp(u0, u1, 0.25), x1 = apex, mask |= 1ULL << (u - 1);
          } else if (w < 0.25 + 2.0 * q) {
            x0 = apex, x1 = lerp(u0, u1, 0.75), mask |= 1ULL << (u - 1);
          } else {
            x0 = lerp(u0, u1, 0.75), x1 = u1;
          }
        }
        const long k = static_cast<long>(rng.below(static_cast<std::uint64_t>(N)));
        const P2 i0 = lerp(x0, x1, static_cast<double>(k) / N), i1 = lerp(x0, x1, static_cast<double>(k + 1) / N);
        const double theta = std::atan2(i1.y() - i0.y(), i1.x() - i0.x());
        const Window& W = windows.at(mask);
        // Finer levels move γ_b by at most this much, in units of |I|.
        const double tail = t < S.operations() ? descendant_deviation(S, t + 1, W.len * side_factor(a)) / W.len : 0.0;
        const Eigen::Rotation2Dd R(theta);
        CompensatedSum s_e, s_c;
        for (std::size_t i = 0; i < W.balls.size(); ++i) {
          const Ball& B = W.balls[i];
          P2 V;
          switch (opt.field) {
            case DiamondField::built: V = W.built[i]; break;
            case DiamondField::horizontal: V = line_at(-theta); break;
            case DiamondField::vertical: V = line_at(std::numbers::pi / 2 - theta); break;
            default: {
              const P2 c = i0 + W.len * (R * P2(B.center(0), B.center(1)));
              V = line_at(random_angle(opt.seed, W.levels[i], c) - theta);
            }
          }
          const P2 c(B.center(0), B.center(1));
          const double rA = opt.A * B.radius;
          const double bp = beta_line(gp, c, rA, V), bm = beta_line(gm, c, rA, V);
          s_e.add((std::pow(bp, opt.p) + std::pow(bm, opt.p)) * B.diam());
          const double cp = beta_lower(gp, c, rA, V, tail), cm = beta_lower(gm, c, rA, V, tail);
          s_c.add((std::pow(cp, opt.p) + std::pow(cm, opt.p)) * B.diam());
        }
        se.add(s_e.value());
        sc.add(s_c.value());
      }
      est[trial] = L_t * se.value() / opt.samples_per_trial;
      cert[trial] = L_t * sc.value() / opt.samples_per_trial;
    });
    BlowupRow row;
    row.level = t;
    row.a = a;
    row.trials = opt.trials;
    row.seed = opt.seed;
    row.balls = static_cast<int>(windows.begin()->second.balls.size());
    row.mean_sum = ordered_sum(est) / opt.trials;
    row.certified_sum = ordered_sum(cert) / opt.trials;
    CompensatedSum var;
    for (double e : est) var.add((e - row.mean_sum) * (e - row.mean_sum));
    row.stderr_sum = std::sqrt(var.value() / (opt.trials - 1) / opt.trials);
    row.bound = std::pow(a, opt.p) * std::log(1.0 / a);
    row.ratio = row.mean_sum / row.bound;
    row.certified_ratio = row.certified_sum / row.bound;
    rep.rows.push_back(row);
    L_t *= path_factor(a);
  }
  return rep;
}

std::string diamond_to_json(const std::vector<DiamondLevel>& levels, const DiamondSchedule& S) {
  nlohmann::ordered_json j;
  j["levels"] = S.levels;
  j["a"] = S.a;
  j["N"] = S.N;
  nlohmann::ordered_json lv = nlohmann::ordered_json::array();
  for (const auto& L : levels) {
    nlohmann::ordered_json edges = nlohmann::ordered_json::array();
    for (const auto& e : L.edges)
      edges.push_back({{"x0", {e.x0.x(), e.x0.y()}}, {"x1", {e.x1.x(), e.x1.y()}}, {"parent", e.parent}, {"piece", e.piece}});
    lv.push_back({{"n", L.n}, {"a", L.a}, {"N", L.N}, {"edges", edges}});
  }
  j["construction"] = lv;
  return j.dump();
}

}  // namespace ctf
