#include "ctf/field.hpp"

#include "ctf/beta.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <unordered_map>

namespace ctf {

namespace {

constexpr double kPi = std::numbers::pi;

// Cube centers of one level with a spatial index; kd-tree hits are cube ids.
struct LevelIndex {
  std::vector<KdTree> trees;
  int j_min = 0;

  explicit LevelIndex(const CubeTree& T) : j_min(T.j_min) {
    for (int j = T.j_min; j <= T.j_max; ++j) trees.emplace_back(T.centers, T.level(j));
  }
  void query(int level, const Vec& c, double r, std::vector<int>& out) const {
    out.clear();
    trees.at(level - j_min).radius(c, r, out);
    std::sort(out.begin(), out.end());
  }
};

double line_angle(const Vec& a, const Vec& b) {
  return std::acos(std::clamp(std::abs(a.dot(b)) / (a.norm() * b.norm()), 0.0, 1.0));
}

// Fine cube level used as the candidate net for a cube at level j.
int pool_level(const CubeTree& T, int j) { return std::min(j + 1, T.j_max); }

struct PairDir {
  Vec dir;
  double sep = 0.0;
};

// Difference directions y - z over the pool of finer centers in 5B̃, separated by at least r̃.
void pair_directions(int q, const CubeTree& T, const LevelIndex& idx, const FieldParams& P,
                     const std::vector<int>& y0s, std::vector<PairDir>& out) {
  const Ball Bt = tilde_ball(T, q, P.A);
  std::vector<int> pool;
  idx.query(pool_level(T, T.cubes[q].level), Bt.center, 5.0 * Bt.radius, pool);
  out.clear();
  for (int pass = 0; pass < 2 && out.empty(); ++pass) {
    const double min_sep = pass == 0 ? Bt.radius : 0.0;
    for (int a : y0s)
      for (int b : pool) {
        const Vec d = T.center(b) - T.center(a);
        const double sep = d.norm();
        if (sep > min_sep && sep > 0.0) out.push_back({d / sep, sep});
      }
  }
}

// Angle bins of width w in [0, pi); each bin is represented by its most frequent exact angle.
struct AngleBins {
  double w;
  int count;
  struct Bin {
    std::map<double, std::pair<int, double>> exact;  // angle -> (multiplicity, max separation)
    long support = 0;
  };
  std::map<int, Bin> bins;

  explicit AngleBins(double width) : w(width), count(std::max(1, static_cast<int>(std::ceil(kPi / width)))) {}

  void add(double ang, double sep) {
    int b = static_cast<int>(ang / w);
    if (b >= count) b = count - 1;
    Bin& bin = bins[b];
    auto& e = bin.exact[ang];
    ++e.first;
    e.second = std::max(e.second, sep);
    ++bin.support;
  }
  void merge(const AngleBins& o) {
    for (const auto& [b, ob] : o.bins) {
      Bin& bin = bins[b];
      bin.support += ob.support;
      for (const auto& [a, e] : ob.exact) {
        auto& m = bin.exact[a];
        m.first += e.first;
        m.second = std::max(m.second, e.second);
      }
    }
  }
  // Representative angles ordered by bin support, then bin index.
  std::vector<double> representatives() const {
    std::vector<std::pair<long, int>> order;
    for (const auto& [b, bin] : bins) order.push_back({-bin.support, b});
    std::sort(order.begin(), order.end());
    std::vector<double> out;
    for (const auto& [neg, b] : order) {
      (void)neg;
      const Bin& bin = bins.at(b);
      double best = 0.0;
      std::pair<int, double> key{-1, -1.0};
      for (const auto& [a, e] : bin.exact)
        if (e > key) {
          key = e;
          best = a;
        }
      out.push_back(best);
    }
    return out;
  }
};

std::vector<int> nearest_centers(const CubeTree& T, const LevelIndex& idx, int q, double r, int cap) {
  std::vector<int> ids;
  idx.query(T.cubes[q].level, T.center(q), r, ids);
  const Vec z = T.center(q);
  std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
    return (T.center(a) - z).squaredNorm() < (T.center(b) - z).squaredNorm();
  });
  if (static_cast<int>(ids.size()) > cap) ids.resize(cap);
  return ids;
}

std::vector<Subspace> candidates_impl(int q, int k, const Subspace& base, const CubeTree& T,
                                      const LevelIndex& idx, const FieldParams& P) {
  if (k < 1 || base.dim() != k - 1) throw Error("candidate_directions: base must have dimension k - 1");
  const Ball Bt = tilde_ball(T, q, P.A);
  const std::vector<int> y0s = nearest_centers(T, idx, q, 3.0 * Bt.radius, 8);
  std::vector<PairDir> pairs;
  pair_directions(q, T, idx, P, y0s, pairs);
  std::vector<int> pool;
  idx.query(pool_level(T, T.cubes[q].level), Bt.center, 5.0 * Bt.radius, pool);
  if (static_cast<int>(pool.size()) < k + 1) return {};
  const int n = T.centers.rows();
  const double w = P.dedup_angle(k);
  std::vector<Subspace> out;
  if (n == 2 && k == 1) {
    AngleBins bins(w);
    for (const auto& pd : pairs) bins.add(line_angle_2d(pd.dir), pd.sep);
    for (double a : bins.representatives()) {
      out.push_back(Subspace::line(unit_2d(a)));
      if (static_cast<int>(out.size()) >= P.max_candidates) break;
    }
    return out;
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const PairDir& a, const PairDir& b) { return a.sep > b.sep; });
  for (const auto& pd : pairs) {
    const Vec r = base.reject(pd.dir);
    if (r.norm() < 1e-9) continue;
    Basis m(n, k);
    if (k > 1) m.leftCols(k - 1) = base.basis();
    m.col(k - 1) = r.normalized();
    const Subspace cand = Subspace::span(m);
    if (cand.dim() != k) continue;
    bool dup = false;
    for (const auto& c : out)
      if (angle_D(cand, c) <= w) {
        dup = true;
        break;
      }
    if (dup) continue;
    out.push_back(cand);
    if (static_cast<int>(out.size()) >= P.max_candidates) break;
  }
  return out;
}

// Generic N(τ, Q): anchors are the projections of nearby E points, deduplicated.
int N_of_direction_impl(const Subspace& tau, int q, const CubeTree& T, const PointSet& E,
                        const FieldParams& P, AffineFlat* best) {
  const int k = tau.dim();
  const Ball Bt = tilde_ball(T, q, P.A);
  const double tol = P.tolerance(k, Bt.diam());
  std::vector<int> near;
  E.index().radius(Bt.center, 3.0 * Bt.radius + tol, near);
  std::sort(near.begin(), near.end());
  std::vector<Vec> anchors;
  anchors.push_back(tau.reject(Bt.center));
  for (int i : near) anchors.push_back(tau.reject(E.point(i)));
  const Vec zc = tau.reject(Bt.center);
  std::stable_sort(anchors.begin(), anchors.end(),
                   [&](const Vec& a, const Vec& b) { return (a - zc).squaredNorm() < (b - zc).squaredNorm(); });
  std::vector<Vec> kept;
  for (const auto& a : anchors) {
    bool dup = false;
    for (const auto& b : kept)
      if ((a - b).norm() < 0.5 * tol) {
        dup = true;
        break;
      }
    if (!dup) kept.push_back(a);
    if (kept.size() >= 256) break;
  }
  const int cap = T.depth(q) + 1;
  int bestN = -1;
  for (const auto& a : kept) {
    AffineFlat V{a, tau};
    const int n = N_of_flat(V, q, T, E, P);
    if (n > bestN) {
      bestN = n;
      if (best) *best = V;
    }
    if (bestN >= cap) break;
  }
  return std::max(bestN, 0);
}

// --- planar line fields ---------------------------------------------------------------

struct PlanarSweep {
  const CubeTree& T;
  const PointSet& E;
  const FieldParams& P;
  std::vector<double> tol_by_level;
  double tol_min = 0.0, tol_max = 0.0;

  PlanarSweep(const CubeTree& t, const PointSet& e, const FieldParams& p) : T(t), E(e), P(p) {
    for (int j = T.j_min; j <= T.j_max; ++j)
      tol_by_level.push_back(P.tolerance(1, 2.0 * P.A * T.ball_factor * T.side(j)));
    tol_min = *std::min_element(tol_by_level.begin(), tol_by_level.end());
    tol_max = *std::max_element(tol_by_level.begin(), tol_by_level.end());
  }

  // N(V, Q) maximized over offsets on a grid of step tol/2, for every cube at once.
  std::vector<std::uint16_t> sweep(double theta) const {
    const Vec u = unit_2d(theta);
    Vec nrm(2);
    nrm << -u(1), u(0);
    const Eigen::MatrixXd& pts = E.matrix();
    const int m = E.size();
    std::vector<double> px(m), py(m);
    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
    for (int i = 0; i < m; ++i) {
      px[i] = u(0) * pts(0, i) + u(1) * pts(1, i);
      py[i] = nrm(0) * pts(0, i) + nrm(1) * pts(1, i);
      xlo = std::min(xlo, px[i]);
      xhi = std::max(xhi, px[i]);
      ylo = std::min(ylo, py[i]);
      yhi = std::max(yhi, py[i]);
    }
    xlo -= tol_max;
    xhi += tol_max;
    ylo -= tol_max;
    yhi += tol_max;
    double h = 0.5 * tol_min;
    constexpr double kMaxCells = 1.6e7;
    while ((xhi - xlo) / h * (yhi - ylo) / h > kMaxCells) h *= 1.25;
    const int W = static_cast<int>(std::floor((xhi - xlo) / h)) + 1;
    const int H = static_cast<int>(std::floor((yhi - ylo) / h)) + 1;
    const std::size_t cells = static_cast<std::size_t>(W) * H;
    std::vector<float> D(cells, std::numeric_limits<float>::infinity());
    for (int i = 0; i < m; ++i) {
      const int c0 = std::max(0, static_cast<int>(std::ceil((px[i] - tol_max - xlo) / h)));
      const int c1 = std::min(W - 1, static_cast<int>(std::floor((px[i] + tol_max - xlo) / h)));
      const int r0 = std::max(0, static_cast<int>(std::ceil((py[i] - tol_max - ylo) / h)));
      const int r1 = std::min(H - 1, static_cast<int>(std::floor((py[i] + tol_max - ylo) / h)));
      for (int r = r0; r <= r1; ++r) {
        const double dy = ylo + r * h - py[i];
        float* row = D.data() + static_cast<std::size_t>(r) * W;
        for (int c = c0; c <= c1; ++c) {
          const double dx = xlo + c * h - px[i];
          const float d = static_cast<float>(std::sqrt(dx * dx + dy * dy));
          if (d < row[c]) row[c] = d;
        }
      }
    }
    // Next cell at or after c in the row whose distance exceeds the smallest tolerance.
    std::vector<int> next_bad(cells);
    for (int r = 0; r < H; ++r) {
      const std::size_t o = static_cast<std::size_t>(r) * W;
      int nb = W;
      for (int c = W - 1; c >= 0; --c) {
        if (D[o + c] > tol_min) nb = c;
        next_bad[o + c] = nb;
      }
    }
    auto chord_good = [&](int r, double zx, double half, double tol) {
      int a = static_cast<int>(std::ceil((zx - half - xlo) / h));
      int b = static_cast<int>(std::floor((zx + half - xlo) / h));
      if (a > b) a = b = static_cast<int>(std::lround((zx - xlo) / h));
      if (a < 0 || b >= W) return false;
      const std::size_t o = static_cast<std::size_t>(r) * W;
      for (int c = next_bad[o + a]; c <= b;) {
        if (D[o + c] > tol) return false;
        c = c + 1 < W ? next_bad[o + c + 1] : W;
      }
      return true;
    };

    std::vector<std::uint16_t> N(T.size(), 0);
    std::vector<int> win_lo(T.size(), 0);
    std::vector<std::vector<std::uint16_t>> run(T.size());
    for (int j = T.j_min; j <= T.j_max; ++j) {
      const double tol = tol_by_level[j - T.j_min];
      const double rt = P.A * T.ball_factor * T.side(j);
      const double r5 = 5.0 * rt;
      for (int q : T.level(j)) {
        const Vec z = T.center(q);
        const double zx = u.dot(z), zy = nrm.dot(z);
        const int lo = std::max(0, static_cast<int>(std::ceil((zy - 3.0 * rt - ylo) / h)));
        const int hi = std::min(H - 1, static_cast<int>(std::floor((zy + 3.0 * rt - ylo) / h)));
        win_lo[q] = lo;
        auto& rq = run[q];
        rq.assign(hi >= lo ? hi - lo + 1 : 0, 0);
        const int p = T.cubes[q].parent;
        std::uint16_t best = 0;
        for (int r = lo; r <= hi; ++r) {
          const double dy = ylo + r * h - zy;
          const double half = std::sqrt(std::max(0.0, r5 * r5 - dy * dy));
          if (!chord_good(r, zx, half, tol)) continue;
          std::uint16_t up = 0;
          if (p >= 0) {
            const int k = r - win_lo[p];
            if (k >= 0 && k < static_cast<int>(run[p].size())) up = run[p][k];
          }
          rq[r - lo] = static_cast<std::uint16_t>(up + 1);
          best = std::max(best, rq[r - lo]);
        }
        N[q] = best;
      }
      if (j - 1 >= T.j_min)
        for (int q : T.level(j - 1)) std::vector<std::uint16_t>().swap(run[q]);
    }
    return N;
  }
};

std::vector<double> global_planar_directions(const CubeTree& T, const LevelIndex& idx, const FieldParams& P) {
  AngleBins all(P.dedup_angle(1));
  std::vector<PairDir> pairs;
  for (int q = 0; q < T.size(); ++q) {
    pair_directions(q, T, idx, P, {q}, pairs);
    for (const auto& pd : pairs) all.add(line_angle_2d(pd.dir), pd.sep);
  }
  std::vector<double> reps = all.representatives();
  if (reps.empty()) reps.push_back(0.0);
  return reps;
}

double directional_width(const std::vector<Vec>& hull, const Vec& nrm) {
  if (hull.empty()) return 0.0;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& p : hull) {
    const double t = nrm.dot(p);
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  return hi - lo;
}

CoarseField planar_line_field(const CubeTree& T, const PointSet& E, const FieldParams& P, Exec ex) {
  const LevelIndex idx(T);
  const std::vector<double> dirs = global_planar_directions(T, idx, P);
  const PlanarSweep sweep(T, E, P);
  std::vector<std::vector<std::uint16_t>> table(dirs.size());
  for_each_index(ex, dirs.size(), [&](std::size_t i) { table[i] = sweep.sweep(dirs[i]); });

  std::vector<int> choice(T.size(), 0), nbest(T.size(), 0);
  for_each_index(ex, static_cast<std::size_t>(T.size()), [&](std::size_t qi) {
    const int q = static_cast<int>(qi);
    int best = -1;
    std::vector<int> tied;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      const int n = table[i][q];
      if (n > best) {
        best = n;
        tied.assign(1, static_cast<int>(i));
      } else if (n == best) {
        tied.push_back(static_cast<int>(i));
      }
    }
    int pick = tied.front();
    if (tied.size() > 1) {
      const Ball Bt = tilde_ball(T, q, P.A);
      std::vector<int> ids;
      E.index().radius(Bt.center, Bt.radius, ids);
      std::sort(ids.begin(), ids.end());
      std::vector<Vec> pts;
      for (int i : ids) pts.push_back(E.point(i));
      const std::vector<Vec> hull = convex_hull_2d(pts);
      double wbest = std::numeric_limits<double>::infinity();
      for (int i : tied) {
        Vec nrm(2);
        nrm << -std::sin(dirs[i]), std::cos(dirs[i]);
        const double w = directional_width(hull, nrm);
        if (w < wbest) {
          wbest = w;
          pick = i;
        }
      }
    }
    choice[q] = pick;
    nbest[q] = best;
  });

  CoarseField F;
  F.params = P;
  for (int q = 0; q < T.size(); ++q) {
    F.entries.emplace(q, Subspace::line(unit_2d(dirs[choice[q]])));
    F.N[q] = nbest[q];
    F.khat[q] = nbest[q] == 0 ? 1 : 2;
  }
  return F;
}

CoarseField generic_field(const CubeTree& T, const PointSet& E, const FieldParams& P, Exec ex) {
  const LevelIndex idx(T);
  const int n = E.dim();
  std::vector<Subspace> tau(T.size());
  std::vector<int> nlast(T.size(), 0), khat(T.size(), P.d);
  for_each_index(ex, static_cast<std::size_t>(T.size()), [&](std::size_t qi) {
    const int q = static_cast<int>(qi);
    Subspace base(n);
    int kh = P.d;
    int nk = 0;
    for (int k = 1; k <= P.d - 1; ++k) {
      std::vector<Subspace> cands = candidates_impl(q, k, base, T, idx, P);
      if (cands.empty())
        for (int i = 0; i < n; ++i) {
          const Subspace c = span_join(base, Subspace::axis(n, i));
          if (c.dim() == k) cands.push_back(c);
        }
      int best = -1;
      Subspace pick;
      for (const auto& c : cands) {
        const int v = N_of_direction_impl(c, q, T, E, P, nullptr);
        if (v > best) {
          best = v;
          pick = c;
        }
      }
      base = pick;
      nk = best;
      if (best == 0 && kh == P.d) kh = k;
    }
    tau[q] = base;
    nlast[q] = nk;
    khat[q] = kh;
  });
  CoarseField F;
  F.params = P;
  for (int q = 0; q < T.size(); ++q) {
    F.entries.emplace(q, tau[q]);
    F.N[q] = nlast[q];
    F.khat[q] = khat[q];
  }
  return F;
}

}  // namespace

FieldParams FieldParams::make(double eps, double A, int d, double eps0, double slack) {
  FieldParams P;
  P.eps = eps;
  P.A = A;
  P.d = d;
  P.eps0 = eps0;
  P.slack = slack;
  P.derive();
  P.validate();
  return P;
}

void FieldParams::derive() {
  if (!(eps > 0) || !(A >= 1) || d < 1) throw Error("field parameters need eps > 0, A >= 1, d >= 1");
  eps1 = eps / (2.0 * A);
  Lambda = 100.0 * A / eps1;
  eps2.assign(d + 1, 0.0);
  const double r = chain_ratio / (Lambda * Lambda);
  for (int k = 1; k <= d; ++k) eps2[k] = eps0 * std::pow(r, d - k);
}

void FieldParams::validate() const {
  if (!(eps > 0)) throw Error("field parameter eps must be positive");
  if (!(A >= 1)) throw Error("field parameter A must be >= 1");
  if (d < 1 || d > kMaxDim) throw Error("field parameter d out of range");
  if (!(eps0 > 0 && eps0 < 1)) throw Error("field parameter eps0 must lie in (0, 1)");
  if (!(slack >= 0)) throw Error("field slack must be nonnegative");
  if (max_candidates < 1) throw Error("max_candidates must be positive");
  if (std::abs(eps1 - eps / (2 * A)) > 1e-12 * eps1) throw Error("eps1 must equal eps / (2A)");
  if (std::abs(Lambda - 100 * A / eps1) > 1e-9 * Lambda) throw Error("Lambda must equal 100 A / eps1");
  if (static_cast<int>(eps2.size()) != d + 1) throw Error("eps2 chain has the wrong length");
  for (int k = 1; k < d; ++k)
    if (!(eps2[k] > 0) || eps2[k] > chain_ratio * eps2[k + 1] / (Lambda * Lambda) * (1 + 1e-12))
      throw Error("eps2 chain violates eps2(k) <= ratio * eps2(k+1) / Lambda^2");
  if (!(eps2[d] <= eps0)) throw Error("eps2(d) must not exceed eps0");
}

FieldParams FieldParams::resolved_for(const PointSet& E) const {
  FieldParams P = *this;
  if (P.slack == 0.0) P.slack = E.resolution();
  if (P.slack == 0.0) P.slack = 1e-9 * std::max(E.scale(), E.diameter());
  return P;
}

double FieldParams::dedup_angle(int k) const { return std::max(C_d * eps2.at(k), angle_floor); }

const Subspace* CoarseField::find(int id) const {
  const auto it = entries.find(id);
  return it == entries.end() ? nullptr : &it->second;
}

const Subspace& CoarseField::at(int id) const {
  const Subspace* s = find(id);
  if (!s) throw Error("field incomplete: no entry for cube " + std::to_string(id));
  return *s;
}

int CoarseField::max_dim() const {
  int m = 0;
  for (const auto& [id, s] : entries) m = std::max(m, s.dim());
  return m;
}

Ball tilde_ball(const CubeTree& T, int q, double A) { return T.ball(q).scaled(A); }

bool is_good(const AffineFlat& V, int q, const CubeTree& T, const PointSet& E, const FieldParams& P) {
  const int k = V.direction.dim();
  if (k < 1 || k > P.d) throw Error("is_good: flat dimension must lie in 1..d");
  const Ball Bt = tilde_ball(T, q, P.A);
  if (dist_to_flat(Bt.center, V) > 3.0 * Bt.radius) return false;
  const double tol = P.tolerance(k, Bt.diam());
  const std::vector<Vec> s = flat_ball_sample(V, Bt.scaled(5.0), 0.5 * tol);
  // Strided order finds a gap early without changing the outcome.
  const std::size_t stride = 17;
  for (std::size_t start = 0; start < stride; ++start)
    for (std::size_t i = start; i < s.size(); i += stride)
      if (E.dist_to(s[i]) > tol) return false;
  return true;
}

int N_of_flat(const AffineFlat& V, int q, const CubeTree& T, const PointSet& E, const FieldParams& P) {
  int n = 0;
  for (int r = q; r >= 0 && is_good(V, r, T, E, P); r = T.cubes[r].parent) ++n;
  return n;
}

int N_of_direction(const Subspace& tau, int q, const CubeTree& T, const PointSet& E, const FieldParams& P,
                   AffineFlat* best) {
  if (tau.dim() < 1) throw Error("N_of_direction: direction must have dimension >= 1");
  return N_of_direction_impl(tau, q, T, E, P, best);
}

std::vector<Subspace> candidate_directions(int q, int k, const Subspace& base, const CubeTree& T,
                                           const PointSet& E, const FieldParams& P) {
  (void)E;
  const LevelIndex idx(T);
  return candidates_impl(q, k, base, T, idx, P);
}

CoarseField build_epsilon_field(const CubeTree& T, const PointSet& E, FieldParams P, Exec ex) {
  P.validate();
  P = P.resolved_for(E);
  if (P.d > E.dim()) throw Error("field dimension d exceeds the ambient dimension");
  if (P.d == 1) {
    CoarseField F;
    F.params = P;
    for (int q = 0; q < T.size(); ++q) {
      F.entries.emplace(q, Subspace(E.dim()));
      F.khat[q] = 1;
    }
    return F;
  }
  if (E.dim() == 2 && P.d == 2 && P.fast_planar) return planar_line_field(T, E, P, ex);
  return generic_field(T, E, P, ex);
}

CoarseField constant_field(const CubeTree& T, const Subspace& dir, const FieldParams& P) {
  CoarseField F;
  F.params = P;
  for (int q = 0; q < T.size(); ++q) F.entries.emplace(q, dir);
  return F;
}

ValidationReport validate_field(const CoarseField& F, const CubeTree& T) {
  ValidationReport rep;
  for (int q = 0; q < T.size(); ++q) {
    const Subspace* s = F.find(q);
    if (!s) {
      rep.fail("field incomplete: cube " + std::to_string(q));
      continue;
    }
    if (s->dim() > F.params.d - 1) rep.fail("cube " + std::to_string(q) + " has a subspace of dimension > d - 1");
    if (s->ambient() != T.centers.rows()) rep.fail("cube " + std::to_string(q) + " has the wrong ambient dimension");
    if (s->dim() > 0 && s->orthonormality_error() > 1e-9) rep.fail("cube " + std::to_string(q) + " basis not orthonormal");
  }
  rep.measured = F.max_dim();
  return rep;
}

namespace {

// Direction in the intersection of the first K cones, K maximal; planar case is exact.
Vec aggregate_planar(const std::vector<Vec>& u, int& K) {
  const double phi0 = line_angle_2d(u[0]);
  double lo = phi0 - 0.5, hi = phi0 + 0.5;
  K = 1;
  for (std::size_t i = 1; i < u.size(); ++i) {
    const double rho = std::ldexp(1.0, -static_cast<int>(i) - 1);
    const double mid = 0.5 * (lo + hi);
    double phi = line_angle_2d(u[i]);
    phi += kPi * std::round((mid - phi) / kPi);
    const double nlo = std::max(lo, phi - rho), nhi = std::min(hi, phi + rho);
    if (nlo > nhi) break;
    lo = nlo;
    hi = nhi;
    K = static_cast<int>(i) + 1;
  }
  return unit_2d(0.5 * (lo + hi));
}

bool feasible_direction(const std::vector<Vec>& u, int K, Vec& v) {
  for (int i = 0; i < K; ++i)
    for (int j = i + 1; j < K; ++j)
      if (line_angle(u[i], u[j]) > std::ldexp(1.0, -i - 1) + std::ldexp(1.0, -j - 1) + 1e-12) return false;
  for (int sweep = 0; sweep < 500; ++sweep) {
    bool ok = true;
    for (int k = 0; k < K; ++k) {
      const double rho = std::ldexp(1.0, -k - 1);
      Vec uk = u[k];
      if (uk.dot(v) < 0) uk = -uk;
      const double a = line_angle(v, uk);
      if (a <= rho + 1e-13) continue;
      ok = false;
      Vec w = v - uk * uk.dot(v);
      w.normalize();
      const double target = rho * (1 - 1e-9);
      v = std::cos(target) * uk + std::sin(target) * w;
    }
    if (ok) return true;
  }
  for (int k = 0; k < K; ++k)
    if (line_angle(v, u[k]) > std::ldexp(1.0, -k - 1) + 1e-12) return false;
  return true;
}

}  // namespace

AggregatedField aggregate_field(const std::vector<CoarseField>& fields) {
  if (fields.empty()) throw Error("aggregation needs at least one field");
  for (const auto& f : fields)
    if (f.max_dim() > 1) throw Error("aggregation implemented for line fields only");
  AggregatedField out;
  out.field.params = fields.front().params;
  for (const auto& [q, s0] : fields.front().entries) {
    std::vector<Vec> u;
    for (const auto& f : fields) {
      const Subspace* s = f.find(q);
      if (!s) throw Error("aggregation: fields are defined on different cubes");
      if (s->dim() != 1) throw Error("aggregation implemented for line fields only");
      u.push_back(s->basis().col(0));
    }
    int K = 1;
    Vec v;
    if (u[0].size() == 2) {
      v = aggregate_planar(u, K);
    } else {
      v = u[0];
      for (int k = 2; k <= static_cast<int>(u.size()); ++k) {
        Vec trial = v;
        if (!feasible_direction(u, k, trial)) break;
        v = trial;
        K = k;
      }
    }
    out.field.entries.emplace(q, Subspace::line(v));
    out.K[q] = K;
  }
  return out;
}

ValidationReport validate_aggregation(const AggregatedField& agg, const std::vector<CoarseField>& fields) {
  ValidationReport rep;
  int good = 0;
  for (const auto& [q, s] : agg.field.entries) {
    const int K = agg.K.at(q);
    const Vec v = s.basis().col(0);
    bool ok = true;
    for (int k = 1; k <= K; ++k) {
      const Vec uk = fields[k - 1].at(q).basis().col(0);
      if (line_angle(v, uk) > std::ldexp(1.0, -k) + 1e-9) {
        ok = false;
        rep.fail("cube " + std::to_string(q) + ": cone " + std::to_string(k) + " violated");
      }
    }
    // Maximality in the plane: a nonempty arc intersection contains the lower end of some arc.
    if (v.size() == 2 && K < static_cast<int>(fields.size())) {
      const int K1 = K + 1;
      std::vector<double> phi(K1), rho(K1);
      for (int k = 0; k < K1; ++k) {
        phi[k] = line_angle_2d(fields[k].at(q).basis().col(0));
        rho[k] = std::ldexp(1.0, -k - 1);
      }
      for (int c = 0; c < K1 && ok; ++c) {
        const double x = phi[c] - rho[c];
        bool inside_all = true;
        for (int k = 0; k < K1 && inside_all; ++k) {
          double diff = std::fmod(std::abs(x - phi[k]), kPi);
          diff = std::min(diff, kPi - diff);
          inside_all = diff <= rho[k] + 1e-12;
        }
        if (inside_all) {
          ok = false;
          rep.fail("cube " + std::to_string(q) + ": K not maximal");
        }
      }
    }
    if (ok) ++good;
  }
  rep.measured = agg.field.entries.empty() ? 1.0 : static_cast<double>(good) / agg.field.entries.size();
  return rep;
}

}  // namespace ctf
