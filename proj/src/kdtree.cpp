#include "ctf/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace ctf {

namespace {
constexpr int kLeaf = 12;
}

KdTree::KdTree(const Eigen::MatrixXd& pts, const std::vector<int>& subset) {
  dim_ = static_cast<int>(pts.rows());
  if (subset.empty()) {
    ids_.resize(pts.cols());
    std::iota(ids_.begin(), ids_.end(), 0);
  } else {
    ids_ = subset;
  }
  if (ids_.empty()) return;
  pts_.resize(dim_, static_cast<Eigen::Index>(ids_.size()));
  for (std::size_t i = 0; i < ids_.size(); ++i) pts_.col(i) = pts.col(ids_[i]);
  nodes_.reserve(2 * ids_.size() / kLeaf + 2);
  boxes_.resize(2 * dim_, 0);
  build(0, static_cast<int>(ids_.size()));
}

int KdTree::build(int lo, int hi) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{lo, hi});
  if (boxes_.cols() <= id) boxes_.conservativeResize(Eigen::NoChange, 2 * (id + 1));
  Eigen::VectorXd mn = pts_.middleCols(lo, hi - lo).rowwise().minCoeff();
  Eigen::VectorXd mx = pts_.middleCols(lo, hi - lo).rowwise().maxCoeff();
  boxes_.col(id) << mn, mx;
  if (hi - lo <= kLeaf) return id;
  int axis = 0;
  (mx - mn).maxCoeff(&axis);
  const int mid = (lo + hi) / 2;
  std::vector<int> order(hi - lo);
  std::iota(order.begin(), order.end(), lo);
  std::nth_element(order.begin(), order.begin() + (mid - lo), order.end(), [&](int a, int b) {
    const double va = pts_(axis, a), vb = pts_(axis, b);
    return va < vb || (va == vb && ids_[a] < ids_[b]);
  });
  Eigen::MatrixXd block(dim_, hi - lo);
  std::vector<int> idblock(hi - lo);
  for (int i = 0; i < hi - lo; ++i) {
    block.col(i) = pts_.col(order[i]);
    idblock[i] = ids_[order[i]];
  }
  pts_.middleCols(lo, hi - lo) = block;
  std::copy(idblock.begin(), idblock.end(), ids_.begin() + lo);
  const int l = build(lo, mid);
  const int r = build(mid, hi);
  nodes_[id].left = l;
  nodes_[id].right = r;
  return id;
}

double KdTree::box_dist2(int node, const Vec& q) const {
  double s = 0.0;
  for (int d = 0; d < dim_; ++d) {
    const double lo = boxes_(d, node), hi = boxes_(dim_ + d, node);
    const double e = q(d) < lo ? lo - q(d) : (q(d) > hi ? q(d) - hi : 0.0);
    s += e * e;
  }
  return s;
}

KdTree::Hit KdTree::nearest(const Vec& q) const {
  return nearest_if(q, nullptr);
}

KdTree::Hit KdTree::nearest_if(const Vec& q, const std::function<bool(int)>& keep) const {
  Hit best;
  if (ids_.empty()) return best;
  double best2 = std::numeric_limits<double>::infinity();
  int stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const int id = stack[--top];
    if (box_dist2(id, q) > best2) continue;
    const Node& nd = nodes_[id];
    if (nd.left < 0) {
      for (int i = nd.lo; i < nd.hi; ++i) {
        const double d2 = (pts_.col(i) - q).squaredNorm();
        if (d2 < best2 || (d2 == best2 && ids_[i] < best.index)) {
          if (keep && !keep(ids_[i])) continue;
          best2 = d2;
          best.index = ids_[i];
        }
      }
      continue;
    }
    const double dl = box_dist2(nd.left, q), dr = box_dist2(nd.right, q);
    if (dl <= dr) {
      stack[top++] = nd.right;
      stack[top++] = nd.left;
    } else {
      stack[top++] = nd.left;
      stack[top++] = nd.right;
    }
  }
  if (best.index >= 0) best.dist = std::sqrt(best2);
  return best;
}

void KdTree::radius(const Vec& q, double r, std::vector<int>& out) const {
  if (ids_.empty()) return;
  const double r2 = r * r;
  int stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const int id = stack[--top];
    if (box_dist2(id, q) > r2) continue;
    const Node& nd = nodes_[id];
    if (nd.left < 0) {
      for (int i = nd.lo; i < nd.hi; ++i)
        if ((pts_.col(i) - q).squaredNorm() <= r2) out.push_back(ids_[i]);
      continue;
    }
    stack[top++] = nd.left;
    stack[top++] = nd.right;
  }
}

bool KdTree::any_within(const Vec& q, double r) const {
  if (ids_.empty()) return false;
  const double r2 = r * r;
  int stack[128];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const int id = stack[--top];
    if (box_dist2(id, q) > r2) continue;
    const Node& nd = nodes_[id];
    if (nd.left < 0) {
      for (int i = nd.lo; i < nd.hi; ++i)
        if ((pts_.col(i) - q).squaredNorm() <= r2) return true;
      continue;
    }
    const double dl = box_dist2(nd.left, q), dr = box_dist2(nd.right, q);
    if (dl <= dr) {
      stack[top++] = nd.right;
      stack[top++] = nd.left;
    } else {
      stack[top++] = nd.left;
      stack[top++] = nd.right;
    }
  }
  return false;
}

}  // namespace ctf
