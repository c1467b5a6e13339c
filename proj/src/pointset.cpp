#include "ctf/pointset.hpp"

#include <algorithm>

namespace ctf {

PointSet::PointSet(Eigen::MatrixXd points, double scale) : pts_(std::move(points)), scale_(scale) {
  if (pts_.cols() == 0) throw Error("point set must be nonempty");
  if (pts_.rows() < 1 || pts_.rows() > kMaxDim) throw Error("unsupported ambient dimension");
  if (!pts_.allFinite()) throw Error("point set has non-finite coordinates");
  if (!(scale_ > 0)) throw Error("point set scale must be positive");
  index_ = std::make_shared<const KdTree>(pts_);
}

double PointSet::diameter() const {
  if (diam_ < 0) diam_ = diameter_of(pts_);
  return diam_;
}

double PointSet::resolution() const {
  if (resolution_ < 0) {
    double r = 0.0;
    for (int i = 0; i < size(); ++i) {
      auto h = index_->nearest_if(pts_.col(i), [i](int j) { return j != i; });
      if (h.index >= 0) r = std::max(r, h.dist);
    }
    resolution_ = r;
  }
  return resolution_;
}

double dist_to_E(const Vec& p, const PointSet& E) { return E.dist_to(p); }

double diameter_of(const Eigen::MatrixXd& pts) {
  const Eigen::Index m = pts.cols();
  if (m < 2) return 0.0;
  if (pts.rows() == 2 && m > 64) {
    // The diameter is attained on hull vertices.
    std::vector<std::pair<double, double>> p(m);
    for (Eigen::Index i = 0; i < m; ++i) p[i] = {pts(0, i), pts(1, i)};
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    auto cross = [](auto o, auto a, auto b) {
      return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
    };
    std::vector<std::pair<double, double>> h(2 * p.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      while (k >= 2 && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
      h[k++] = p[i];
    }
    for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
      while (k >= t && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
      h[k++] = p[i];
    }
    h.resize(k > 1 ? k - 1 : k);
    double best = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i)
      for (std::size_t j = i + 1; j < h.size(); ++j) {
        const double dx = h[i].first - h[j].first, dy = h[i].second - h[j].second;
        best = std::max(best, dx * dx + dy * dy);
      }
    return std::sqrt(best);
  }
  double best = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j) best = std::max(best, (pts.col(i) - pts.col(j)).squaredNorm());
  return std::sqrt(best);
}

}  // namespace ctf
