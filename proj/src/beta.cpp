#include "ctf/beta.hpp"

#include "ctf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

namespace ctf {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kGolden = 0.6180339887498949;
constexpr int kSearchSamples = 64;

double cross2(const Vec& o, const Vec& a, const Vec& b) {
  return (a(0) - o(0)) * (b(1) - o(1)) - (a(1) - o(1)) * (b(0) - o(0));
}

std::vector<Vec> hull_2d(std::vector<Vec> p) {
  std::sort(p.begin(), p.end(), [](const Vec& a, const Vec& b) {
    return a(0) < b(0) || (a(0) == b(0) && a(1) < b(1));
  });
  p.erase(std::unique(p.begin(), p.end(), [](const Vec& a, const Vec& b) { return a == b; }), p.end());
  if (p.size() < 3) return p;
  std::vector<Vec> h(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && cross2(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross2(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  h.resize(k - 1);
  return h;
}

// Orthonormal basis of the orthogonal complement of span(V).
Basis complement(const Basis& V) {
  const int n = static_cast<int>(V.rows());
  const int k = static_cast<int>(V.cols());
  if (k == 0) return Basis::Identity(n, n);
  Eigen::HouseholderQR<Basis> qr(V);
  Basis q = qr.householderQ();
  return q.rightCols(n - k);
}

// Smallest enclosing ball of the columns of Y (exact in 1D, Badoiu-Clarkson above).
double enclosing_ball(const Eigen::MatrixXd& Y, Eigen::VectorXd& c) {
  const int m = static_cast<int>(Y.rows());
  if (Y.cols() == 0) {
    c = Eigen::VectorXd::Zero(m);
    return 0.0;
  }
  if (m == 0) {
    c.resize(0);
    return 0.0;
  }
  if (m == 1) {
    const double lo = Y.row(0).minCoeff(), hi = Y.row(0).maxCoeff();
    c.resize(1);
    c(0) = 0.5 * (lo + hi);
    return 0.5 * (hi - lo);
  }
  c = Y.col(0);
  Eigen::Index far = 0;
  for (int it = 1; it <= 200; ++it) {
    (Y.colwise() - c).colwise().squaredNorm().maxCoeff(&far);
    c += (Y.col(far) - c) / (it + 1.0);
  }
  return std::sqrt((Y.colwise() - c).colwise().squaredNorm().maxCoeff());
}

struct LineFit {
  double value = std::numeric_limits<double>::infinity();
  Vec anchor;
  Vec dir;
};

// Best unilateral line with direction u: enclosing ball of projections onto u-perp.
LineFit unilateral_for_direction(const std::vector<Vec>& pts, const Vec& u, double diam) {
  Basis ub(u.size(), 1);
  ub.col(0) = u;
  const Basis W = complement(ub);
  Eigen::MatrixXd Y(W.cols(), pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) Y.col(i) = W.transpose() * pts[i];
  Eigen::VectorXd c;
  const double r = enclosing_ball(Y, c);
  LineFit f;
  f.value = r / diam;
  f.anchor = W * c;
  f.dir = u;
  return f;
}

// Quasi-uniform unit vectors in R^k, one per antipodal pair where that matters.
std::vector<Eigen::VectorXd> sphere_points(int k, int count) {
  std::vector<Eigen::VectorXd> out;
  if (k == 1) {
    out.push_back(Eigen::VectorXd::Ones(1));
    return out;
  }
  if (k == 2) {
    for (int i = 0; i < count; ++i) {
      const double a = kPi * i / count;
      Eigen::VectorXd v(2);
      v << std::cos(a), std::sin(a);
      out.push_back(v);
    }
    return out;
  }
  if (k == 3) {
    // Fibonacci points on the upper hemisphere.
    const double ga = kPi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
      const double z = 1.0 - (i + 0.5) / count;
      const double rr = std::sqrt(std::max(0.0, 1.0 - z * z));
      Eigen::VectorXd v(3);
      v << rr * std::cos(ga * i), rr * std::sin(ga * i), z;
      out.push_back(v);
    }
    return out;
  }
  Rng rng(0x5eed5eedULL, static_cast<std::uint64_t>(k));
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd v(k);
    for (int d = 0; d < k; ++d) v(d) = rng.normal();
    v.normalize();
    out.push_back(v);
  }
  return out;
}

double chord_bilateral(const FitTarget& T, const Ball& B, const Vec& anchor, const Vec& u, int samples) {
  const Vec foot = anchor + u * u.dot(B.center - anchor);
  const double h2 = (foot - B.center).squaredNorm();
  const double r2 = B.radius * B.radius;
  if (h2 > r2) return 0.0;
  const double half = std::sqrt(r2 - h2);
  double worst = 0.0;
  const int m = std::max(2, samples);
  for (int i = 0; i < m; ++i) {
    const double t = -half + 2.0 * half * i / (m - 1);
    worst = std::max(worst, T.dist(foot + t * u));
  }
  return worst;
}

double unilateral_sup(const std::vector<Vec>& pts, const Vec& anchor, const Vec& u) {
  double worst = 0.0;
  for (const auto& x : pts) {
    const Vec d = x - anchor;
    worst = std::max(worst, (d - u * u.dot(d)).norm());
  }
  return worst;
}

double line_value(const FitTarget& T, const Ball& B, const Vec& anchor, const Vec& u, int samples) {
  return (unilateral_sup(T.pts, anchor, u) + chord_bilateral(T, B, anchor, u, samples)) / B.diam();
}

template <class F>
double golden_min(F f, double lo, double hi, int steps, double& arg) {
  double a = lo, b = hi;
  double x1 = b - kGolden * (b - a), x2 = a + kGolden * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < steps; ++i) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = f(x2);
    }
  }
  if (f1 <= f2) {
    arg = x1;
    return f1;
  }
  arg = x2;
  return f2;
}

// Best bilateral line with fixed direction u, searching over offsets of lines meeting B.
LineFit theta_for_direction(const FitTarget& T, const Ball& B, const Vec& u, int samples) {
  const int n = static_cast<int>(u.size());
  const LineFit uni = unilateral_for_direction(T.pts, u, B.diam());
  LineFit best;
  best.dir = u;
  if (n == 2) {
    Vec nrm(2);
    nrm << -u(1), u(0);
    const double cz = nrm.dot(B.center);
    const double lo = cz - B.radius, hi = cz + B.radius;
    auto g = [&](double c) { return line_value(T, B, Vec(c * nrm), u, samples); };
    double cbest = std::clamp(nrm.dot(uni.anchor), lo, hi);
    double vbest = g(cbest);
    const int grid = 16;
    const double step = (hi - lo) / grid;
    for (int i = 0; i <= grid; ++i) {
      const double c = lo + i * step;
      const double v = g(c);
      if (v < vbest) {
        vbest = v;
        cbest = c;
      }
    }
    double arg = cbest;
    const double v = golden_min(g, std::max(lo, cbest - step), std::min(hi, cbest + step), 12, arg);
    if (v < vbest) {
      vbest = v;
      cbest = arg;
    }
    best.value = vbest;
    best.anchor = cbest * nrm;
    return best;
  }
  // Pattern search over offsets in u-perp, started from the unilateral optimum.
  Basis ub(n, 1);
  ub.col(0) = u;
  const Basis W = complement(ub);
  Vec c = uni.anchor;
  const Vec cz = B.center - u * u.dot(B.center);
  auto feasible = [&](const Vec& x) { return (x - cz).norm() <= B.radius; };
  if (!feasible(c)) c = cz + (c - cz) * (B.radius / (c - cz).norm());
  double v = line_value(T, B, c, u, samples);
  double step = B.radius / 4;
  for (int it = 0; it < 40 && step > 1e-6 * B.radius; ++it) {
    bool moved = false;
    for (int j = 0; j < W.cols() && !moved; ++j)
      for (double sgn : {1.0, -1.0}) {
        const Vec trial = c + sgn * step * W.col(j);
        if (!feasible(trial)) continue;
        const double tv = line_value(T, B, trial, u, samples);
        if (tv < v) {
          v = tv;
          c = trial;
          moved = true;
          break;
        }
      }
    if (!moved) step *= 0.5;
  }
  best.value = v;
  best.anchor = c;
  return best;
}

FlatFit to_fit(const LineFit& lf, FitMethod m) {
  FlatFit f;
  f.value = lf.value;
  f.flat = AffineFlat{lf.anchor, Subspace::line(lf.dir)};
  f.method = m;
  return f;
}

FlatFit empty_fit(const Ball& B) {
  FlatFit f;
  f.flat = AffineFlat{B.center, Subspace::axis(static_cast<int>(B.center.size()), 0)};
  return f;
}

// Minimizes eval(u) over unit u in span(Vb): grid, then local refinement.
template <class F>
LineFit direction_search(const Basis& Vb, F eval, int grid, int refine_steps, int keep = 1) {
  const int k = static_cast<int>(Vb.cols());
  std::vector<LineFit> found;
  for (const auto& w : sphere_points(k, k == 1 ? 1 : grid)) found.push_back(eval(Vec(Vb * w)));
  std::sort(found.begin(), found.end(), [](const LineFit& a, const LineFit& b) { return a.value < b.value; });
  if (k == 1) return found.front();
  found.resize(std::min<std::size_t>(found.size(), keep));
  LineFit best = found.front();
  for (const LineFit& start : found) {
    if (k == 2) {
      const Eigen::Vector2d w = (Vb.transpose() * start.dir).head<2>();
      const double a0 = std::atan2(w(1), w(0));
      const double da = kPi / grid;
      LineFit local = start;
      auto g = [&](double a) {
        const LineFit lf = eval(Vec(Vb.col(0) * std::cos(a) + Vb.col(1) * std::sin(a)));
        if (lf.value < local.value) local = lf;
        return lf.value;
      };
      double arg;
      golden_min(g, a0 - da, a0 + da, refine_steps, arg);
      if (local.value < best.value) best = local;
      continue;
    }
    LineFit cur = start;
    double step = std::sqrt(4.0 * kPi / grid);
    for (int it = 0; it < refine_steps; ++it) {
      Basis ub(Vb.rows(), 1);
      ub.col(0) = cur.dir;
      // Tangent directions at cur.dir inside span(Vb).
      Basis inV = Vb * complement(Basis(Vb.transpose() * ub));
      bool moved = false;
      for (int j = 0; j < inV.cols() && !moved; ++j)
        for (double sgn : {1.0, -1.0}) {
          const Vec trial = (cur.dir + sgn * step * inV.col(j)).normalized();
          const LineFit lf = eval(trial);
          if (lf.value < cur.value) {
            cur = lf;
            moved = true;
            break;
          }
        }
      if (!moved) step *= 0.5;
    }
    if (cur.value < best.value) best = cur;
  }
  return best;
}

bool spans_ambient(const Subspace& V) { return V.dim() == V.ambient(); }

FlatFit point_fit(const FitTarget& T, const Ball& B, bool bilateral) {
  const int n = static_cast<int>(B.center.size());
  Eigen::MatrixXd Y(n, T.pts.size());
  for (std::size_t i = 0; i < T.pts.size(); ++i) Y.col(i) = T.pts[i];
  Eigen::VectorXd c;
  enclosing_ball(Y, c);
  auto value = [&](const Vec& p) {
    double v = 0.0;
    for (const auto& x : T.pts) v = std::max(v, (x - p).norm());
    if (bilateral && B.contains(p)) v += T.dist(p);
    return v / B.diam();
  };
  Vec p = c;
  double v = value(p);
  if (bilateral) {
    double step = B.radius / 4;
    for (int it = 0; it < 40 && step > 1e-6 * B.radius; ++it) {
      bool moved = false;
      for (int j = 0; j < n && !moved; ++j)
        for (double sgn : {1.0, -1.0}) {
          Vec trial = p;
          trial(j) += sgn * step;
          const double tv = value(trial);
          if (tv < v) {
            v = tv;
            p = trial;
            moved = true;
            break;
          }
        }
      if (!moved) step *= 0.5;
    }
  }
  FlatFit f;
  f.value = v;
  f.flat = AffineFlat{p, Subspace(n)};
  f.method = FitMethod::point_fit;
  f.degenerate = true;
  return f;
}

}  // namespace

std::string to_string(FitMethod m) {
  switch (m) {
    case FitMethod::empty: return "empty";
    case FitMethod::exact2d: return "exact2d";
    case FitMethod::grid: return "grid";
    case FitMethod::pca_bound: return "pca_bound";
    case FitMethod::point_fit: return "point_fit";
  }
  return "unknown";
}

FitTarget target_from_points(const std::vector<Vec>& F, const Ball& B) {
  FitTarget T;
  for (const auto& x : F)
    if (B.contains(x)) T.pts.push_back(x);
  if (F.size() > 256) {
    Eigen::MatrixXd m(F.front().size(), F.size());
    for (std::size_t i = 0; i < F.size(); ++i) m.col(i) = F[i];
    auto tree = std::make_shared<KdTree>(m);
    T.dist = [tree](const Vec& y) { return tree->nearest(y).dist; };
  } else {
    auto all = std::make_shared<std::vector<Vec>>(F);
    T.dist = [all](const Vec& y) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& x : *all) best = std::min(best, (x - y).norm());
      return best;
    };
  }
  return T;
}

FitTarget target_from_polyline(const Polyline& G, const Ball& B) {
  FitTarget T;
  for (const auto& pc : G.clip(B)) {
    T.pts.push_back(pc.a);
    T.pts.push_back(pc.b);
  }
  // For y in B with Γ ∩ B nonempty, the nearest curve point lies within 3 radii of the center.
  const Ball region = B.scaled(3.0);
  auto segs = std::make_shared<std::vector<int>>(G.segments_meeting(region));
  const Polyline* g = &G;
  if (segs->size() > 8) {  // the whole-curve search returns the same nearest point faster
    T.dist = [g](const Vec& y) { return g->dist(y); };
    return T;
  }
  T.dist = [g, segs](const Vec& y) {
    double best = std::numeric_limits<double>::infinity();
    for (int s : *segs)
      best = std::min(best, s < 0 ? (y - g->vertex(0)).norm()
                                  : point_segment_dist(y, g->vertex(s), g->vertex(s + 1)));
    return best;
  };
  return T;
}

std::vector<Vec> convex_hull_2d(std::vector<Vec> pts) { return hull_2d(std::move(pts)); }

double min_width_2d(const std::vector<Vec>& pts, Vec* direction) {
  const std::vector<Vec> h = hull_2d(pts);
  Vec dir = Vec::Zero(2);
  dir(0) = 1.0;
  double best = 0.0;
  if (h.size() == 2) dir = (h[1] - h[0]).normalized();
  if (h.size() >= 3) {
    best = std::numeric_limits<double>::infinity();
    const std::size_t m = h.size();
    std::size_t j = 1;
    for (std::size_t i = 0; i < m; ++i) {
      const Vec& a = h[i];
      const Vec& b = h[(i + 1) % m];
      while (cross2(a, b, h[(j + 1) % m]) > cross2(a, b, h[j])) j = (j + 1) % m;
      const double w = cross2(a, b, h[j]) / (b - a).norm();
      if (w < best) {
        best = w;
        dir = (b - a).normalized();
      }
    }
  }
  if (direction) *direction = dir;
  return best;
}

double theta_line_value(const FitTarget& T, const Ball& B, const AffineFlat& L, int line_samples) {
  if (T.pts.empty()) return 0.0;
  const Vec u = L.direction.basis().col(0);
  return line_value(T, B, L.anchor, u, line_samples);
}

FlatFit beta_of(const FitTarget& T, const Ball& B, const FitOptions& opt) {
  if (T.pts.empty()) return empty_fit(B);
  const int n = static_cast<int>(B.center.size());
  if (n == 2) {
    Vec dir;
    min_width_2d(T.pts, &dir);
    return to_fit(unilateral_for_direction(T.pts, dir, B.diam()), FitMethod::exact2d);
  }
  auto eval = [&](const Vec& u) { return unilateral_for_direction(T.pts, u, B.diam()); };
  return to_fit(direction_search(Basis::Identity(n, n), eval, opt.sphere_directions, opt.refine_steps, 3),
                FitMethod::grid);
}

FlatFit theta_of(const FitTarget& T, const Ball& B, const FitOptions& opt) {
  if (T.pts.empty()) return empty_fit(B);
  const int n = static_cast<int>(B.center.size());
  auto eval = [&](const Vec& u) { return theta_for_direction(T, B, u, kSearchSamples); };
  std::vector<Vec> dirs;
  const FlatFit b = beta_of(T, B, opt);
  dirs.push_back(b.flat.direction.basis().col(0));
  std::vector<Vec> base = n == 2 ? hull_2d(T.pts) : T.pts;
  if (base.size() > 8) {
    std::vector<Vec> sub;
    for (std::size_t i = 0; i < 8; ++i) sub.push_back(base[i * base.size() / 8]);
    base.swap(sub);
  }
  for (std::size_t i = 0; i < base.size(); ++i)
    for (std::size_t j = i + 1; j < base.size(); ++j) {
      const Vec d = base[j] - base[i];
      if (d.norm() > 1e-12 * B.radius) dirs.push_back(d.normalized());
    }
  const int grid = n == 2 ? 32 : 256;
  for (const auto& w : sphere_points(n, grid)) dirs.push_back(Vec(w));
  std::vector<LineFit> found;
  for (const auto& u : dirs) found.push_back(eval(u));
  std::sort(found.begin(), found.end(), [](const LineFit& a, const LineFit& c) { return a.value < c.value; });
  found.resize(std::min<std::size_t>(found.size(), 3));

  LineFit best = found.front();
  for (const LineFit& start : found) {
    LineFit local = start;
    if (n == 2) {
      const double a0 = std::atan2(start.dir(1), start.dir(0));
      auto g = [&](double a) {
        const LineFit lf = eval(unit_2d(a));
        if (lf.value < local.value) local = lf;
        return lf.value;
      };
      double arg;
      golden_min(g, a0 - kPi / 64, a0 + kPi / 64, 12, arg);
    } else {
      double step = 0.1;
      for (int it = 0; it < opt.refine_steps; ++it) {
        Basis ub(n, 1);
        ub.col(0) = local.dir;
        const Basis tang = complement(ub);
        bool moved = false;
        for (int j = 0; j < tang.cols() && !moved; ++j)
          for (double sgn : {1.0, -1.0}) {
            const LineFit lf = eval((local.dir + sgn * step * tang.col(j)).normalized());
            if (lf.value < local.value) {
              local = lf;
              moved = true;
              break;
            }
          }
        if (!moved) step *= 0.5;
      }
    }
    if (local.value < best.value) best = local;
  }
  LineFit fin = theta_for_direction(T, B, best.dir, opt.line_samples);
  const double at_best = line_value(T, B, best.anchor, best.dir, opt.line_samples);
  if (at_best < fin.value) {
    fin.value = at_best;
    fin.anchor = best.anchor;
  }
  return to_fit(fin, n == 2 ? FitMethod::exact2d : FitMethod::grid);
}

FlatFit beta_restricted_of(const FitTarget& T, const Ball& B, const Subspace& V, const FitOptions& opt) {
  if (T.pts.empty()) return empty_fit(B);
  if (V.dim() == 0) return point_fit(T, B, false);
  if (spans_ambient(V)) return beta_of(T, B, opt);
  auto eval = [&](const Vec& u) { return unilateral_for_direction(T.pts, u, B.diam()); };
  const LineFit lf = direction_search(V.basis(), eval, V.dim() == 2 ? 720 : opt.sphere_directions,
                                     opt.refine_steps, 3);
  return to_fit(lf, V.dim() == 1 && B.center.size() == 2 ? FitMethod::exact2d : FitMethod::grid);
}

FlatFit theta_restricted_of(const FitTarget& T, const Ball& B, const Subspace& V, const FitOptions& opt) {
  if (T.pts.empty()) return empty_fit(B);
  if (V.dim() == 0) return point_fit(T, B, true);
  if (spans_ambient(V)) return theta_of(T, B, opt);
  if (V.dim() == 1)
    return to_fit(theta_for_direction(T, B, V.basis().col(0), opt.line_samples),
                  B.center.size() == 2 ? FitMethod::exact2d : FitMethod::grid);
  auto eval = [&](const Vec& u) { return theta_for_direction(T, B, u, kSearchSamples); };
  const LineFit lf = direction_search(V.basis(), eval, V.dim() == 2 ? 64 : 256, opt.refine_steps, 2);
  return to_fit(theta_for_direction(T, B, lf.dir, opt.line_samples), FitMethod::grid);
}

FlatFit beta(const std::vector<Vec>& F, const Ball& B, const FitOptions& opt) {
  return beta_of(target_from_points(F, B), B, opt);
}
FlatFit theta(const std::vector<Vec>& F, const Ball& B, const FitOptions& opt) {
  return theta_of(target_from_points(F, B), B, opt);
}
FlatFit beta_restricted(const std::vector<Vec>& F, const Ball& B, const Subspace& V, const FitOptions& opt) {
  return beta_restricted_of(target_from_points(F, B), B, V, opt);
}
FlatFit theta_restricted(const std::vector<Vec>& F, const Ball& B, const Subspace& V, const FitOptions& opt) {
  return theta_restricted_of(target_from_points(F, B), B, V, opt);
}

double d_gamma_E(const Polyline& G, const Ball& B, const PointSet& E) {
  const auto pieces = G.clip(B);
  if (pieces.empty()) return 0.0;
  const double step = B.diam() / 256.0;
  double worst = 0.0;
  for (const auto& pc : pieces) {
    const double len = (pc.b - pc.a).norm();
    const int m = std::max(1, static_cast<int>(std::ceil(len / step)));
    for (int i = 0; i <= m; ++i) {
      const double t = static_cast<double>(i) / m;
      worst = std::max(worst, E.dist_to((1.0 - t) * pc.a + t * pc.b));
    }
  }
  return worst / B.diam();
}

BadlyFitsEstimate estimate_badly_fits(const PointSet& E, int d, const CubeTree& tree,
                                      const BadlyFitsOptions& opt) {
  const int n = E.dim();
  if (d < 1 || d > n) throw Error("plane dimension d exceeds the ambient dimension");
  BadlyFitsEstimate est;
  est.eps0 = std::numeric_limits<double>::infinity();
  est.min_diam = std::numeric_limits<double>::infinity();
  const double min_diam = opt.min_diam_resolutions * E.resolution();
  std::vector<int> hits;
  for (const auto& cube : tree.cubes) {
    const Ball B = tree.ball(cube.id);
    if (B.diam() < min_diam) continue;
    ++est.balls;
    est.min_diam = std::min(est.min_diam, B.diam());
    est.max_diam = std::max(est.max_diam, B.diam());
    const Vec z = B.center;
    // Pool of spread-out points of E near B to span candidate planes through z.
    hits.clear();
    E.index().radius(z, B.radius, hits);
    std::sort(hits.begin(), hits.end());
    std::vector<Vec> pool;
    const double sep = B.radius / 4;
    for (int i : hits) {
      const Vec p = E.point(i);
      if ((p - z).norm() < sep) continue;
      bool far = true;
      for (const auto& q : pool)
        if ((q - p).norm() < sep) {
          far = false;
          break;
        }
      if (far) pool.push_back(p);
    }
    std::vector<Subspace> planes;
    if (d == n) {
      planes.push_back(Subspace::full(n));
    } else {
      std::vector<int> idx(d);
      for (int i = 0; i < d; ++i) idx[i] = i;
      while (static_cast<int>(planes.size()) < opt.max_planes_per_ball && d <= static_cast<int>(pool.size())) {
        Basis m(n, d);
        for (int i = 0; i < d; ++i) m.col(i) = pool[idx[i]] - z;
        Subspace S = Subspace::span(m, 1e-6);
        if (S.dim() == d) planes.push_back(S);
        int i = d - 1;
        while (i >= 0 && idx[i] == static_cast<int>(pool.size()) - d + i) --i;
        if (i < 0) break;
        ++idx[i];
        for (int t = i + 1; t < d; ++t) idx[t] = idx[t - 1] + 1;
      }
    }
    for (const auto& S : planes) {
      ++est.planes;
      const AffineFlat V{z, S};
      const double dv = B.diam();
      double worst = 0.0;
      for (const auto& y : flat_ball_sample(V, B, dv / opt.grid_per_diam)) {
        worst = std::max(worst, E.dist_to(y) / dv);
        if (worst >= est.eps0) break;
      }
      est.eps0 = std::min(est.eps0, worst);
    }
  }
  if (est.balls == 0) throw Error("no cube ball above the sampling resolution");
  return est;
}

}  // namespace ctf
