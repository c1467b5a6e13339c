#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace ctf {

constexpr int kMaxDim = 16;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Basis = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Linear subspace stored as an n x k matrix with orthonormal columns.
class Subspace {
 public:
  Subspace() = default;
  explicit Subspace(int ambient) : basis_(ambient, 0) {}

  // Orthonormalizes the columns of `m`, dropping numerically dependent ones.
  static Subspace span(const Basis& m, double rank_tol = 1e-10);
  static Subspace line(const Vec& v);
  static Subspace axis(int ambient, int i);
  static Subspace full(int ambient);
  // Takes an already orthonormal basis; no re-orthogonalization.
  static Subspace from_orthonormal(const Basis& m);

  int ambient() const { return static_cast<int>(basis_.rows()); }
  int dim() const { return static_cast<int>(basis_.cols()); }
  const Basis& basis() const { return basis_; }

  Vec project(const Vec& v) const;
  Vec reject(const Vec& v) const { return v - project(v); }
  // Largest deviation from orthonormality of the stored basis.
  double orthonormality_error() const;

 private:
  Basis basis_;
};

struct AffineFlat {
  Vec anchor;
  Subspace direction;

  Vec foot(const Vec& p) const { return anchor + direction.project(p - anchor); }
};

struct Ball {
  Vec center;
  double radius = 1.0;

  double diam() const { return 2.0 * radius; }
  Ball scaled(double a) const { return Ball{center, a * radius}; }
  bool contains(const Vec& p, double slack = 0.0) const {
    return (p - center).norm() <= radius + slack;
  }
};

// One-sided angle sup_{v in s1} inf_{w in s2} angle(v, w), in radians.
double angle(const Subspace& s1, const Subspace& s2);
// Two-sided distance max(angle(s1,s2), angle(s2,s1)).
double angle_D(const Subspace& s1, const Subspace& s2);

double dist_to_flat(const Vec& p, const AffineFlat& L);
Subspace span_join(const Subspace& s1, const Subspace& s2);

// Grid points of L ∩ B with in-flat covering radius at most spacing / 2.
std::vector<Vec> flat_ball_sample(const AffineFlat& L, const Ball& B, double spacing);

// Angle of a 2D direction folded into [0, pi).
double line_angle_2d(const Vec& dir);
Vec unit_2d(double angle);

}  // namespace ctf
