#include "ctf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ctf {

Subspace Subspace::span(const Basis& m, double rank_tol) {
  const int n = static_cast<int>(m.rows());
  Subspace out(n);
  if (m.cols() == 0) return out;
  Eigen::ColPivHouseholderQR<Basis> qr(m);
  qr.setThreshold(rank_tol);
  const int r = static_cast<int>(qr.rank());
  if (r == 0) return out;
  Basis q = qr.householderQ();
  out.basis_ = q.leftCols(r);
  return out;
}

Subspace Subspace::line(const Vec& v) {
  Basis m(v.size(), 1);
  m.col(0) = v;
  return span(m);
}

Subspace Subspace::axis(int ambient, int i) {
  Basis m = Basis::Zero(ambient, 1);
  m(i, 0) = 1.0;
  return from_orthonormal(m);
}

Subspace Subspace::full(int ambient) {
  return from_orthonormal(Basis::Identity(ambient, ambient));
}

Subspace Subspace::from_orthonormal(const Basis& m) {
  Subspace out;
  out.basis_ = m;
  return out;
}

Vec Subspace::project(const Vec& v) const {
  if (dim() == 0) return Vec::Zero(v.size());
  return basis_ * (basis_.transpose() * v);
}

double Subspace::orthonormality_error() const {
  if (dim() == 0) return 0.0;
  Basis g = basis_.transpose() * basis_;
  g -= Basis::Identity(dim(), dim());
  return g.cwiseAbs().maxCoeff();
}

double angle(const Subspace& s1, const Subspace& s2) {
  if (s1.dim() == 0) throw Error("undefined angle source");
  if (s2.dim() < s1.dim()) return std::numbers::pi / 2;
  // Sine of the largest principal angle from the residual, cosine from the cross product.
  Basis resid = s1.basis() - s2.basis() * (s2.basis().transpose() * s1.basis());
  Eigen::JacobiSVD<Basis> sr(resid);
  const double smax = std::clamp(sr.singularValues()(0), 0.0, 1.0);
  if (smax * smax < 0.5) return std::asin(smax);
  Basis cross = s2.basis().transpose() * s1.basis();
  Eigen::JacobiSVD<Basis> sc(cross);
  const double cmin = std::clamp(sc.singularValues()(s1.dim() - 1), 0.0, 1.0);
  return std::acos(cmin);
}

double angle_D(const Subspace& s1, const Subspace& s2) {
  if (s1.dim() == 0 && s2.dim() == 0) return 0.0;
  if (s1.dim() == 0 || s2.dim() == 0) return std::numbers::pi / 2;
  return std::max(angle(s1, s2), angle(s2, s1));
}

double dist_to_flat(const Vec& p, const AffineFlat& L) {
  return L.direction.reject(p - L.anchor).norm();
}

Subspace span_join(const Subspace& s1, const Subspace& s2) {
  Basis m(s1.ambient(), s1.dim() + s2.dim());
  m << s1.basis(), s2.basis();
  return Subspace::span(m);
}

std::vector<Vec> flat_ball_sample(const AffineFlat& L, const Ball& B, double spacing) {
  if (!(spacing > 0)) throw Error("flat_ball_sample: spacing must be positive");
  std::vector<Vec> out;
  const Vec foot = L.foot(B.center);
  const double h = (foot - B.center).norm();
  if (h > B.radius) return out;
  const int k = L.direction.dim();
  if (k == 0) {
    out.push_back(L.anchor);
    return out;
  }
  const double rho = std::sqrt(std::max(0.0, B.radius * B.radius - h * h));
  // Step spacing/sqrt(k) gives covering radius spacing/2; points just outside the disc
  // are pulled radially onto it, which never increases distances to disc points.
  const double step = spacing / std::sqrt(static_cast<double>(k));
  const double reach = rho + 0.5 * step * std::sqrt(static_cast<double>(k));
  const int m = static_cast<int>(std::floor(reach / step));
  std::vector<int> idx(k, -m);
  Vec local(k);
  while (true) {
    for (int i = 0; i < k; ++i) local(i) = idx[i] * step;
    const double r = local.norm();
    if (r <= reach) {
      if (r > rho) local *= (rho > 0 ? rho / r : 0.0);
      out.push_back(foot + L.direction.basis() * local);
    }
    int d = 0;
    while (d < k && ++idx[d] > m) idx[d++] = -m;
    if (d == k) break;
  }
  return out;
}

double line_angle_2d(const Vec& dir) {
  double a = std::atan2(dir(1), dir(0));
  if (a < 0) a += std::numbers::pi;
  if (a >= std::numbers::pi) a -= std::numbers::pi;
  return a;
}

Vec unit_2d(double angle) {
  Vec v(2);
  v << std::cos(angle), std::sin(angle);
  return v;
}

}  // namespace ctf
