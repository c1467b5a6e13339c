#include "ctf/nets.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace ctf {

namespace {

struct CellKey {
  std::array<long, kMaxDim> c{};
  bool operator==(const CellKey& o) const { return c == o.c; }
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const {
    std::size_t h = 0x9e3779b97f4a7c15ULL;
    for (long v : k.c) h = (h ^ static_cast<std::size_t>(v)) * 0x100000001b3ULL;
    return h;
  }
};

// Uniform grid over inserted points for "is anything closer than r" queries with r <= cell.
class NetGrid {
 public:
  NetGrid(const Eigen::MatrixXd& pts, double cell) : pts_(pts), cell_(cell), n_(pts.rows()) {
    use_cells_ = n_ <= 4;
    if (use_cells_) {
      int total = 1;
      for (int i = 0; i < n_; ++i) total *= 3;
      offsets_.reserve(total);
      for (int t = 0; t < total; ++t) {
        std::array<long, kMaxDim> o{};
        int r = t;
        for (int i = 0; i < n_; ++i) {
          o[i] = r % 3 - 1;
          r /= 3;
        }
        offsets_.push_back(o);
      }
    }
  }

  void insert(int idx) {
    if (use_cells_)
      cells_[key(pts_.col(idx))].push_back(idx);
    else
      flat_.push_back(idx);
  }

  bool any_closer(int idx, double r) const {
    const double r2 = r * r;
    auto close = [&](int j) { return (pts_.col(j) - pts_.col(idx)).squaredNorm() < r2; };
    if (!use_cells_) return std::any_of(flat_.begin(), flat_.end(), close);
    const CellKey base = key(pts_.col(idx));
    for (const auto& o : offsets_) {
      CellKey k = base;
      for (int i = 0; i < n_; ++i) k.c[i] += o[i];
      auto it = cells_.find(k);
      if (it != cells_.end() && std::any_of(it->second.begin(), it->second.end(), close)) return true;
    }
    return false;
  }

 private:
  template <class V>
  CellKey key(const V& p) const {
    CellKey k;
    for (int i = 0; i < n_; ++i) k.c[i] = static_cast<long>(std::floor(p(i) / cell_));
    return k;
  }

  const Eigen::MatrixXd& pts_;
  double cell_;
  int n_;
  bool use_cells_;
  std::vector<std::array<long, kMaxDim>> offsets_;
  std::unordered_map<CellKey, std::vector<int>, CellHash> cells_;
  std::vector<int> flat_;
};

int log2_of_inverse(double s) {
  for (int m = 1; m <= 3; ++m)
    if (s == std::ldexp(1.0, -m)) return m;
  throw Error("cube scale s must be one of 1/2, 1/4, 1/8");
}

}  // namespace

double NetHierarchy::radius(int k) const { return std::ldexp(scale, -k); }

NetHierarchy build_nested_nets(const PointSet& E, int k_min, int k_max) {
  if (k_min > k_max) throw Error("build_nested_nets: k_min > k_max");
  NetHierarchy H;
  H.k_min = k_min;
  H.k_max = k_max;
  H.scale = E.scale();
  const auto& pts = E.matrix();
  const int N = E.size();
  std::vector<char> in_net(N, 0);
  std::vector<int> current;
  for (int k = k_min; k <= k_max; ++k) {
    const double delta = H.radius(k);
    NetGrid grid(pts, delta);
    for (int i : current) grid.insert(i);
    std::vector<int> net = current;
    for (int i = 0; i < N; ++i) {
      if (in_net[i]) continue;
      if (!grid.any_closer(i, delta)) {
        grid.insert(i);
        net.push_back(i);
        in_net[i] = 1;
      }
    }
    std::vector<int> par(net.size(), -1);
    if (k > k_min) {
      KdTree coarse(pts, current);
      for (std::size_t t = 0; t < net.size(); ++t) par[t] = coarse.nearest(pts.col(net[t])).index;
    }
    H.levels.push_back(net);
    H.parent.push_back(std::move(par));
    current = std::move(net);
  }
  return H;
}

std::vector<FamilyBall> multiresolution_family(const NetHierarchy& H, const PointSet& E) {
  std::vector<FamilyBall> out;
  for (int k = H.k_min; k <= H.k_max; ++k)
    for (int p : H.net(k)) out.push_back(FamilyBall{Ball{E.point(p), 2.0 * H.radius(k)}, k, p});
  return out;
}

double CubeTree::side(int level) const { return scale * std::pow(s, level); }

Ball CubeTree::ball(int id) const {
  return Ball{centers.col(id), ball_factor * side(cubes[id].level)};
}

int CubeTree::ancestor(int id, int n) const {
  while (n-- > 0 && id >= 0) id = cubes[id].parent;
  return id;
}

int CubeTree::depth(int id) const {
  int d = 0;
  while (cubes[id].parent >= 0) {
    id = cubes[id].parent;
    ++d;
  }
  return d;
}

std::vector<int> CubeTree::roots() const {
  std::vector<int> r;
  for (const auto& c : cubes)
    if (c.parent < 0) r.push_back(c.id);
  return r;
}

CubeTree build_christ_cubes(const NetHierarchy& H, const PointSet& E, double s, const CubeOptions& opt) {
  const int m = log2_of_inverse(s);
  CubeTree T;
  T.s = s;
  T.net_step = m;
  T.scale = H.scale;
  T.ball_factor = opt.ball_factor;
  T.j_min = static_cast<int>(std::ceil(static_cast<double>(H.k_min) / m));
  T.j_max = static_cast<int>(std::floor(static_cast<double>(H.k_max) / m));
  if (T.j_min > T.j_max) throw Error("net levels do not cover any cube scale");
  const auto& pts = E.matrix();
  const int N = E.size();
  const int L = T.j_max - T.j_min + 1;

  // Cube ids: level by level, in net insertion order.
  std::vector<std::unordered_map<int, int>> id_of(L);
  for (int j = T.j_min; j <= T.j_max; ++j) {
    std::vector<int> ids;
    for (int p : H.net(m * j)) {
      Cube c;
      c.id = T.size();
      c.level = j;
      c.center = p;
      id_of[j - T.j_min][p] = c.id;
      ids.push_back(c.id);
      T.cubes.push_back(std::move(c));
    }
    T.by_level.push_back(std::move(ids));
  }
  T.centers.resize(E.dim(), T.size());
  for (const auto& c : T.cubes) T.centers.col(c.id) = pts.col(c.center);

  // Parent of each center: nearest center one level up (ties to the smaller point index).
  for (int j = T.j_min + 1; j <= T.j_max; ++j) {
    KdTree up(pts, H.net(m * (j - 1)));
    for (int id : T.level(j)) {
      const int p = up.nearest(pts.col(T.cubes[id].center)).index;
      const int pid = id_of[j - 1 - T.j_min].at(p);
      T.cubes[id].parent = pid;
      T.cubes[pid].children.push_back(id);
    }
  }

  // Finest membership by nearest finest center, then closure up the chain.
  KdTree fine(pts, H.net(m * T.j_max));
  for (int i = 0; i < N; ++i) {
    int id = id_of.back().at(fine.nearest(pts.col(i)).index);
    while (id >= 0) {
      T.cubes[id].members.push_back(i);
      id = T.cubes[id].parent;
    }
  }

  double c1 = 0.0;
  for (const auto& c : T.cubes) {
    const double side = T.side(c.level);
    for (int i : c.members) c1 = std::max(c1, (pts.col(i) - pts.col(c.center)).norm() / side);
  }
  T.C1 = c1;

  // a0: closest non-member to each center, via the nearest foreign center of every point.
  double a0 = std::numeric_limits<double>::infinity();
  std::vector<int> owner(N);
  for (int j = T.j_min; j <= T.j_max; ++j) {
    const auto& ids = T.level(j);
    if (ids.size() < 2) continue;
    for (int id : ids)
      for (int i : T.cubes[id].members) owner[i] = T.cubes[id].center;
    KdTree centers(pts, H.net(m * j));
    const double side = T.side(j);
    for (int i = 0; i < N; ++i) {
      const int own = owner[i];
      auto h = centers.nearest_if(pts.col(i), [own](int q) { return q != own; });
      if (h.index >= 0) a0 = std::min(a0, h.dist / side);
    }
  }
  T.a0 = std::isfinite(a0) ? a0 : opt.ball_factor;

  if (T.C1 > T.ball_factor * (1 + 1e-12)) {
    std::ostringstream os;
    os << "outer-ball violation: measured C1 " << T.C1 << " exceeds ball factor " << T.ball_factor;
    throw Error(os.str());
  }
  if (T.a0 < opt.a0_min) {
    std::ostringstream os;
    os << "inner-ball violation: measured a0 " << T.a0 << " below " << opt.a0_min;
    throw Error(os.str());
  }
  return T;
}

ValidationReport validate_nets(const NetHierarchy& H, const PointSet& E) {
  ValidationReport rep;
  const auto& pts = E.matrix();
  std::vector<char> prev(E.size(), 0);
  for (int k = H.k_min; k <= H.k_max; ++k) {
    const auto& net = H.net(k);
    const double delta = H.radius(k);
    std::vector<char> cur(E.size(), 0);
    for (int p : net) cur[p] = 1;
    if (k > H.k_min)
      for (int i = 0; i < E.size(); ++i)
        if (prev[i] && !cur[i]) rep.fail("nesting broken at level " + std::to_string(k));
    KdTree idx(pts, net);
    std::vector<int> hits;
    for (int p : net) {
      hits.clear();
      idx.radius(pts.col(p), delta, hits);
      for (int q : hits)
        if (q != p && (pts.col(p) - pts.col(q)).norm() < delta)
          rep.fail("separation broken at level " + std::to_string(k));
    }
    double cover = 0.0;
    for (int i = 0; i < E.size(); ++i) cover = std::max(cover, idx.nearest(pts.col(i)).dist);
    if (cover > delta) rep.fail("covering broken at level " + std::to_string(k));
    rep.measured = std::max(rep.measured, cover / delta);
    prev.swap(cur);
  }
  return rep;
}

ValidationReport validate_cube_tree(const CubeTree& T, const PointSet& E, double A) {
  ValidationReport rep;
  const auto& pts = E.matrix();
  const int N = E.size();
  const int L = T.j_max - T.j_min + 1;
  std::vector<std::vector<int>> cube_of(L, std::vector<int>(N, -1));
  for (const auto& c : T.cubes) {
    auto& row = cube_of[c.level - T.j_min];
    for (int i : c.members) {
      if (row[i] >= 0) rep.fail("cubes overlap at level " + std::to_string(c.level));
      row[i] = c.id;
    }
  }
  for (int l = 0; l < L; ++l)
    for (int i = 0; i < N; ++i)
      if (cube_of[l][i] < 0) rep.fail("level " + std::to_string(l + T.j_min) + " does not cover E");
  if (!rep.ok) return rep;

  // Nesting and unique ancestry: a point's cube at level j+1 has its level-j cube as parent.
  for (int l = 1; l < L; ++l)
    for (int i = 0; i < N; ++i)
      if (T.cubes[cube_of[l][i]].parent != cube_of[l - 1][i]) rep.fail("nesting broken");
  for (const auto& c : T.cubes)
    for (int ch : c.children)
      if (T.cubes[ch].parent != c.id || T.cubes[ch].level != c.level + 1) rep.fail("bad child link");

  // Inner and outer balls with the tree's constants.
  if (!(T.a0 > 0)) rep.fail("nonpositive a0");
  std::vector<int> hits;
  for (const auto& c : T.cubes) {
    const double side = T.side(c.level);
    const Vec z = T.center(c.id);
    for (int i : c.members)
      if ((pts.col(i) - z).norm() > T.C1 * side * (1 + 1e-12)) rep.fail("outer ball violated");
    hits.clear();
    E.index().radius(z, T.a0 * side * (1 - 1e-12), hits);
    for (int i : hits)
      if (cube_of[c.level - T.j_min][i] != c.id) rep.fail("inner ball violated");
  }
  if (T.C1 > T.ball_factor * (1 + 1e-12)) rep.fail("C1 exceeds ball factor");

  // Inflated balls are monotone along every ancestor chain.
  for (const auto& c : T.cubes) {
    const Ball b = T.ball(c.id);
    for (int a = c.parent; a >= 0; a = T.cubes[a].parent) {
      const Ball ba = T.ball(a);
      if (A * b.radius + (b.center - ba.center).norm() > A * ba.radius * (1 + 1e-12))
        rep.fail("inflated ball not monotone");
    }
  }
  rep.measured = T.C1;
  return rep;
}

int doubling_diagnostic(const NetHierarchy& H, const PointSet& E) {
  int worst = 0;
  std::vector<int> hits;
  for (int k = H.k_min; k <= H.k_max; ++k) {
    KdTree idx(E.matrix(), H.net(k));
    for (int p : H.net(k)) {
      hits.clear();
      idx.radius(E.point(p), 2.0 * H.radius(k), hits);
      worst = std::max(worst, static_cast<int>(hits.size()));
    }
  }
  return worst;
}

}  // namespace ctf
