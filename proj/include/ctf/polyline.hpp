#pragma once

#include "ctf/geometry.hpp"

#include <vector>

namespace ctf {

// Rectifiable test curve: ordered vertices, cached arclength and a segment hierarchy
// for exact ball-intersection and distance queries.
class Polyline {
 public:
  struct Piece {
    Vec a, b;
    int segment = -1;
  };

  Polyline() = default;
  explicit Polyline(std::vector<Vec> vertices);

  int dim() const { return verts_.empty() ? 0 : static_cast<int>(verts_[0].size()); }
  int vertex_count() const { return static_cast<int>(verts_.size()); }
  int segment_count() const { return vertex_count() > 0 ? vertex_count() - 1 : 0; }
  const Vec& vertex(int i) const { return verts_[i]; }
  const std::vector<Vec>& vertices() const { return verts_; }
  double length() const { return cum_.empty() ? 0.0 : cum_.back(); }
  double diameter() const { return diam_; }

  Vec point_at(double s) const;  // arclength parameter, clamped
  bool meets(const Ball& B) const;
  // Γ ∩ B as clipped segment pieces, in curve order.
  std::vector<Piece> clip(const Ball& B) const;
  double dist(const Vec& p) const;
  // Distance computed only against segments meeting `region`; exact when the true nearest
  // point lies in it.
  double dist_local(const Vec& p, const Ball& region) const;
  std::vector<int> segments_meeting(const Ball& B) const;

  // Inserts `factor - 1` equally spaced points inside every segment; same point set.
  Polyline refined(int factor) const;
  Polyline transformed(double scale, const Vec& shift) const;
  // Points at arclength spacing <= h, ordered coarse-to-fine so that halving h only appends.
  std::vector<Vec> dyadic_sample(double h) const;

 private:
  struct Node {
    int lo, hi;  // segment range
    int left = -1, right = -1;
    Vec mn, mx;
  };
  int build(int lo, int hi);
  double box_dist(const Node& nd, const Vec& p) const;

  std::vector<Vec> verts_;
  std::vector<double> cum_;
  std::vector<Node> nodes_;
  double diam_ = 0.0;
};

// Exact parameter interval of segment [a,b] inside B; false if disjoint.
bool segment_ball_interval(const Vec& a, const Vec& b, const Ball& B, double& t0, double& t1);
double point_segment_dist(const Vec& p, const Vec& a, const Vec& b);

}  // namespace ctf
