#include "ctf/polyline.hpp"

#include "ctf/pointset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ctf {

bool segment_ball_interval(const Vec& a, const Vec& b, const Ball& B, double& t0, double& t1) {
  const Vec d = b - a;
  const Vec f = a - B.center;
  const double A = d.squaredNorm();
  const double C = f.squaredNorm() - B.radius * B.radius;
  if (A == 0.0) {
    if (C > 0) return false;
    t0 = 0.0;
    t1 = 1.0;
    return true;
  }
  const double Bh = d.dot(f);
  const double disc = Bh * Bh - A * C;
  if (disc < 0) return false;
  const double sq = std::sqrt(disc);
  // Stable roots of A t^2 + 2 Bh t + C.
  double r0, r1;
  if (Bh >= 0) {
    const double q = -(Bh + sq);
    r0 = q / A;
    r1 = q != 0.0 ? C / q : 0.0;
  } else {
    const double q = -Bh + sq;
    r1 = q / A;
    r0 = C / q;
  }
  if (r0 > r1) std::swap(r0, r1);
  t0 = std::max(0.0, r0);
  t1 = std::min(1.0, r1);
  return t0 <= t1;
}

double point_segment_dist(const Vec& p, const Vec& a, const Vec& b) {
  const Vec d = b - a;
  const double L2 = d.squaredNorm();
  double t = L2 > 0 ? (p - a).dot(d) / L2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (a + t * d - p).norm();
}

Polyline::Polyline(std::vector<Vec> vertices) : verts_(std::move(vertices)) {
  if (verts_.empty()) throw Error("polyline needs at least one vertex");
  const auto n = verts_[0].size();
  cum_.assign(verts_.size(), 0.0);
  for (std::size_t i = 1; i < verts_.size(); ++i) {
    if (verts_[i].size() != n) throw Error("polyline vertices have mixed dimensions");
    const double len = (verts_[i] - verts_[i - 1]).norm();
    if (len == 0.0) throw Error("polyline has consecutive duplicate vertices");
    cum_[i] = cum_[i - 1] + len;
  }
  Eigen::MatrixXd m(n, verts_.size());
  for (std::size_t i = 0; i < verts_.size(); ++i) m.col(i) = verts_[i];
  diam_ = diameter_of(m);
  if (segment_count() > 0) build(0, segment_count());
}

int Polyline::build(int lo, int hi) {
  const int id = static_cast<int>(nodes_.size());
  Node nd;
  nd.lo = lo;
  nd.hi = hi;
  nd.mn = verts_[lo];
  nd.mx = verts_[lo];
  for (int v = lo + 1; v <= hi; ++v) {
    nd.mn = nd.mn.cwiseMin(verts_[v]);
    nd.mx = nd.mx.cwiseMax(verts_[v]);
  }
  nodes_.push_back(nd);
  if (hi - lo > 4) {
    const int mid = (lo + hi) / 2;
    const int l = build(lo, mid);
    const int r = build(mid, hi);
    nodes_[id].left = l;
    nodes_[id].right = r;
  }
  return id;
}

double Polyline::box_dist(const Node& nd, const Vec& p) const {
  return (p - p.cwiseMax(nd.mn).cwiseMin(nd.mx)).norm();
}

Vec Polyline::point_at(double s) const {
  if (verts_.size() == 1 || s <= 0) return verts_.front();
  if (s >= length()) return verts_.back();
  const auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
  const int i = static_cast<int>(it - cum_.begin()) - 1;
  const double t = (s - cum_[i]) / (cum_[i + 1] - cum_[i]);
  return (1.0 - t) * verts_[i] + t * verts_[i + 1];
}

std::vector<int> Polyline::segments_meeting(const Ball& B) const {
  std::vector<int> out;
  if (nodes_.empty()) {
    if (B.contains(verts_[0])) out.push_back(-1);
    return out;
  }
  std::vector<int> stack{0};
  double t0, t1;
  while (!stack.empty()) {
    const Node& nd = nodes_[stack.back()];
    stack.pop_back();
    if (box_dist(nd, B.center) > B.radius) continue;
    if (nd.left < 0) {
      for (int s = nd.lo; s < nd.hi; ++s)
        if (segment_ball_interval(verts_[s], verts_[s + 1], B, t0, t1)) out.push_back(s);
      continue;
    }
    stack.push_back(nd.right);
    stack.push_back(nd.left);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool Polyline::meets(const Ball& B) const { return !segments_meeting(B).empty(); }

std::vector<Polyline::Piece> Polyline::clip(const Ball& B) const {
  std::vector<Piece> out;
  for (int s : segments_meeting(B)) {
    if (s < 0) {
      out.push_back(Piece{verts_[0], verts_[0], -1});
      continue;
    }
    double t0, t1;
    segment_ball_interval(verts_[s], verts_[s + 1], B, t0, t1);
    const Vec d = verts_[s + 1] - verts_[s];
    out.push_back(Piece{verts_[s] + t0 * d, verts_[s] + t1 * d, s});
  }
  return out;
}

double Polyline::dist(const Vec& p) const {
  if (nodes_.empty()) return (p - verts_[0]).norm();
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& nd = nodes_[stack.back()];
    stack.pop_back();
    if (box_dist(nd, p) >= best) continue;
    if (nd.left < 0) {
      for (int s = nd.lo; s < nd.hi; ++s) best = std::min(best, point_segment_dist(p, verts_[s], verts_[s + 1]));
      continue;
    }
    const double dl = box_dist(nodes_[nd.left], p), dr = box_dist(nodes_[nd.right], p);
    if (dl <= dr) {
      stack.push_back(nd.right);
      stack.push_back(nd.left);
    } else {
      stack.push_back(nd.left);
      stack.push_back(nd.right);
    }
  }
  return best;
}

double Polyline::dist_local(const Vec& p, const Ball& region) const {
  double best = std::numeric_limits<double>::infinity();
  for (int s : segments_meeting(region))
    best = std::min(best, s < 0 ? (p - verts_[0]).norm() : point_segment_dist(p, verts_[s], verts_[s + 1]));
  return best;
}

Polyline Polyline::refined(int factor) const {
  if (factor < 1) throw Error("refinement factor must be >= 1");
  std::vector<Vec> v;
  v.reserve(static_cast<std::size_t>(segment_count()) * factor + 1);
  for (int s = 0; s < segment_count(); ++s)
    for (int i = 0; i < factor; ++i) {
      const double t = static_cast<double>(i) / factor;
      v.push_back((1.0 - t) * verts_[s] + t * verts_[s + 1]);
    }
  v.push_back(verts_.back());
  return Polyline(std::move(v));
}

Polyline Polyline::transformed(double scale, const Vec& shift) const {
  std::vector<Vec> v;
  v.reserve(verts_.size());
  for (const auto& x : verts_) v.push_back(scale * x + shift);
  return Polyline(std::move(v));
}

std::vector<Vec> Polyline::dyadic_sample(double h) const {
  if (!(h > 0)) throw Error("sample spacing must be positive");
  const double len = length();
  if (len == 0.0) return {verts_[0]};
  int L = 0;
  while (std::ldexp(len, -L) > h) ++L;
  const long M = 1L << L;
  std::vector<Vec> out;
  out.reserve(M + 1);
  auto at = [&](long i) { return point_at(static_cast<double>(i) * len / static_cast<double>(M)); };
  out.push_back(at(0));
  out.push_back(at(M));
  for (long step = M / 2; step >= 1; step /= 2)
    for (long i = step; i < M; i += 2 * step) out.push_back(at(i));
  return out;
}

}  // namespace ctf
