#pragma once

#include "ctf/pointset.hpp"

#include <string>
#include <vector>

namespace ctf {

// Nested nets N_k, k_min <= k <= k_max, with separation and covering radius 2^-k * scale.
struct NetHierarchy {
  int k_min = 0;
  int k_max = 0;
  double scale = 1.0;
  std::vector<std::vector<int>> levels;  // point indices of N_k, in insertion order
  std::vector<std::vector<int>> parent;  // parent point index (in N_{k-1}) per entry of N_k

  int level_count() const { return k_max - k_min + 1; }
  const std::vector<int>& net(int k) const { return levels.at(k - k_min); }
  double radius(int k) const;
};

NetHierarchy build_nested_nets(const PointSet& E, int k_min, int k_max);

struct FamilyBall {
  Ball ball;
  int level = 0;
  int point = -1;
};

// Balls B(z, 2 * 2^-k * scale) over every net point of every level.
std::vector<FamilyBall> multiresolution_family(const NetHierarchy& H, const PointSet& E);

struct Cube {
  int id = -1;
  int level = 0;
  int center = -1;  // point index of z(Q); -1 when loaded without the point set
  int parent = -1;
  std::vector<int> children;
  std::vector<int> members;
};

struct CubeOptions {
  double a0_min = 0.05;
  // B(Q) = B(z(Q), ball_factor * s^j * scale); must dominate the measured C1.
  double ball_factor = 2.0;
};

class CubeTree {
 public:
  double s = 0.25;
  int net_step = 2;  // cube level j uses net level net_step * j
  double scale = 1.0;
  int j_min = 0;
  int j_max = 0;
  double a0 = 0.0;
  double C1 = 0.0;
  double ball_factor = 2.0;
  std::vector<Cube> cubes;
  Eigen::MatrixXd centers;  // column per cube id
  std::vector<std::vector<int>> by_level;

  int size() const { return static_cast<int>(cubes.size()); }
  double side(int level) const;
  Ball ball(int id) const;
  Vec center(int id) const { return centers.col(id); }
  const std::vector<int>& level(int j) const { return by_level.at(j - j_min); }
  // Q^{↑n}, or -1 past the root.
  int ancestor(int id, int n) const;
  // Number of proper ancestors of a cube.
  int depth(int id) const;
  std::vector<int> roots() const;
};

CubeTree build_christ_cubes(const NetHierarchy& H, const PointSet& E, double s,
                            const CubeOptions& opt = {});

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> failures;
  double measured = 0.0;  // check-specific headline number

  void fail(std::string msg) {
    ok = false;
    if (failures.size() < 20) failures.push_back(std::move(msg));
  }
};

// Separation, covering and nesting of every level; exhaustive.
ValidationReport validate_nets(const NetHierarchy& H, const PointSet& E);
// Partition, nesting, unique ancestry, inner/outer balls and monotone inflated balls for A.
ValidationReport validate_cube_tree(const CubeTree& T, const PointSet& E, double A = 2.0);
// Max number of same-level net points inside a family ball B(z, 2 * 2^-k), the double of
// the net ball.
int doubling_diagnostic(const NetHierarchy& H, const PointSet& E);

}  // namespace ctf
