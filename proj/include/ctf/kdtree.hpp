#pragma once

#include "ctf/geometry.hpp"

#include <functional>
#include <vector>

namespace ctf {

// Exact kd-tree over columns of a point matrix (or a subset of them).
class KdTree {
 public:
  struct Hit {
    int index = -1;
    double dist = 0.0;
  };

  KdTree() = default;
  explicit KdTree(const Eigen::MatrixXd& pts, const std::vector<int>& subset = {});

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  Hit nearest(const Vec& q) const;
  // Nearest among original indices accepted by `keep`.
  Hit nearest_if(const Vec& q, const std::function<bool(int)>& keep) const;
  // Original indices within distance r (inclusive), in unspecified order.
  void radius(const Vec& q, double r, std::vector<int>& out) const;
  bool any_within(const Vec& q, double r) const;

 private:
  struct Node {
    int lo, hi;
    int left = -1, right = -1;
  };
  int build(int lo, int hi);
  double box_dist2(int node, const Vec& q) const;

  int dim_ = 0;
  Eigen::MatrixXd pts_;  // reordered copy
  Eigen::MatrixXd boxes_;  // per node: [min; max]
  std::vector<int> ids_;
  std::vector<Node> nodes_;
};

}  // namespace ctf
