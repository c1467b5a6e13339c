#pragma once

#include "ctf/geometry.hpp"
#include "ctf/kdtree.hpp"

#include <memory>

namespace ctf {

// Finite sample of the ambient set E with an exact nearest-neighbour index.
class PointSet {
 public:
  PointSet() = default;
  PointSet(Eigen::MatrixXd points, double scale = 1.0);

  int dim() const { return static_cast<int>(pts_.rows()); }
  int size() const { return static_cast<int>(pts_.cols()); }
  double scale() const { return scale_; }
  const Eigen::MatrixXd& matrix() const { return pts_; }
  Vec point(int i) const { return pts_.col(i); }
  const KdTree& index() const { return *index_; }

  double dist_to(const Vec& p) const { return index_->nearest(p).dist; }
  double diameter() const;
  // Largest nearest-neighbour distance; the sampling resolution of the set.
  double resolution() const;

 private:
  Eigen::MatrixXd pts_;
  double scale_ = 1.0;
  std::shared_ptr<const KdTree> index_;
  mutable double diam_ = -1.0;
  mutable double resolution_ = -1.0;
};

double dist_to_E(const Vec& p, const PointSet& E);
double diameter_of(const Eigen::MatrixXd& pts);

}  // namespace ctf
