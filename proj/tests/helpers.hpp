#pragma once

#include "ctf/geometry.hpp"

#include <vector>

namespace ctf::test {

inline Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

// Brute-force minimum width of a planar set: every direction normal to a pair of points.
inline double brute_min_width(const std::vector<Vec>& pts) {
  double best = 1e300;
  bool any = false;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const Vec d = pts[j] - pts[i];
      if (d.norm() == 0) continue;
      any = true;
      const Vec n = v2(-d(1), d(0)) / d.norm();
      double lo = 1e300, hi = -1e300;
      for (const auto& p : pts) {
        lo = std::min(lo, n.dot(p));
        hi = std::max(hi, n.dot(p));
      }
      best = std::min(best, hi - lo);
    }
  return any ? best : 0.0;
}

}  // namespace ctf::test
