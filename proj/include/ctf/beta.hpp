#pragma once

#include "ctf/geometry.hpp"
#include "ctf/nets.hpp"
#include "ctf/polyline.hpp"

#include <functional>
#include <string>
#include <vector>

namespace ctf {

enum class FitMethod { empty, exact2d, grid, pca_bound, point_fit };
std::string to_string(FitMethod m);

// Normalized fit value together with the line (or point) achieving it.
struct FlatFit {
  double value = 0.0;
  AffineFlat flat;
  FitMethod method = FitMethod::empty;
  bool degenerate = false;
};

// What a fit measures: the points of F ∩ B (any finite set with the same convex hull works
// for the unilateral term) and a distance oracle to F for the bilateral term.
struct FitTarget {
  std::vector<Vec> pts;
  std::function<double(const Vec&)> dist;
};

FitTarget target_from_points(const std::vector<Vec>& F, const Ball& B);
// Γ ∩ B by exact clipping; distances against the segments near B.
FitTarget target_from_polyline(const Polyline& G, const Ball& B);

struct FitOptions {
  int sphere_directions = 4096;
  int refine_steps = 20;
  int line_samples = 256;
};

FlatFit beta(const std::vector<Vec>& F, const Ball& B, const FitOptions& opt = {});
FlatFit theta(const std::vector<Vec>& F, const Ball& B, const FitOptions& opt = {});
FlatFit beta_restricted(const std::vector<Vec>& F, const Ball& B, const Subspace& V,
                        const FitOptions& opt = {});
FlatFit theta_restricted(const std::vector<Vec>& F, const Ball& B, const Subspace& V,
                         const FitOptions& opt = {});

FlatFit beta_of(const FitTarget& T, const Ball& B, const FitOptions& opt = {});
FlatFit theta_of(const FitTarget& T, const Ball& B, const FitOptions& opt = {});
FlatFit beta_restricted_of(const FitTarget& T, const Ball& B, const Subspace& V,
                           const FitOptions& opt = {});
FlatFit theta_restricted_of(const FitTarget& T, const Ball& B, const Subspace& V,
                            const FitOptions& opt = {});

// Both terms of the bilateral functional for one given line, normalized by diam(B).
double theta_line_value(const FitTarget& T, const Ball& B, const AffineFlat& L, int line_samples);

// Convex hull of a planar point set, counter-clockwise, collinear points dropped.
std::vector<Vec> convex_hull_2d(std::vector<Vec> pts);

// Exact minimum width of a planar point set (rotating calipers), with the attaining direction.
double min_width_2d(const std::vector<Vec>& pts, Vec* direction = nullptr);

// sup over Γ ∩ B of dist(x, E) / diam(B), sampled at step <= diam(B)/256.
double d_gamma_E(const Polyline& G, const Ball& B, const PointSet& E);

struct BadlyFitsEstimate {
  double eps0 = 0.0;
  double min_diam = 0.0;  // scale range the estimate certifies
  double max_diam = 0.0;
  int balls = 0;
  int planes = 0;
};

struct BadlyFitsOptions {
  int max_planes_per_ball = 64;
  int grid_per_diam = 32;
  // Only balls with diameter >= this multiple of the sample resolution are used.
  double min_diam_resolutions = 8.0;
};

BadlyFitsEstimate estimate_badly_fits(const PointSet& E, int d, const CubeTree& tree,
                                      const BadlyFitsOptions& opt = {});

}  // namespace ctf
