#pragma once

#include "ctf/beta.hpp"
#include "ctf/exec.hpp"
#include "ctf/field.hpp"
#include "ctf/nets.hpp"
#include "ctf/polyline.hpp"

#include <map>
#include <string>

namespace ctf {

struct SumReport {
  double total = 0.0;
  std::map<int, double> per_level;
  std::map<int, int> per_level_count;
  int counted_balls = 0;
  double length = 0.0;
  double ratio = 0.0;
  std::map<std::string, double> params;

  std::string csv() const;   // level,partial_sum,count
  std::string json() const;  // {total, ratio, params}
};

// Hierarchical nearest-splice curve through every point of F.
Polyline construct_tst_curve(const PointSet& F, const NetHierarchy& H);

// Σ β_F(A B)^p diam(B) over the multiresolution family of F.
SumReport point_beta_sum(const PointSet& F, const NetHierarchy& H, double A, double p = 2.0,
                         Exec ex = Exec::serial);

struct TstCheck {
  double length = 0.0;
  double diam = 0.0;
  double beta_sum = 0.0;
  double C = 0.0;  // length / (diam + beta_sum)
  bool visits_all = false;
  bool connected = false;
};
TstCheck check_tst_curve(const PointSet& F, const NetHierarchy& H, const Polyline& curve, double A);

// Multiresolution family on a dyadic arclength sample of a curve.
struct CurveFamily {
  PointSet sample;
  NetHierarchy nets;
  std::vector<FamilyBall> balls;
};
CurveFamily curve_family(const Polyline& G, int k_min, int k_max, double scale = 1.0);

// Σ β_Γ(A B)^p diam(B) over family balls meeting Γ with diam(B) <= diam(Γ).
SumReport curve_beta_sum(const Polyline& G, const std::vector<FamilyBall>& balls, double A, double p,
                         Exec ex = Exec::serial);
// Same with lines restricted to dir(ball index); a null direction means unrestricted.
SumReport curve_restricted_beta_sum(const Polyline& G, const std::vector<FamilyBall>& balls,
                                    const std::function<const Subspace*(std::size_t)>& dir, double A,
                                    double p, Exec ex = Exec::serial);

// Cubes of E with mult*B(Q) ∩ Γ nonempty and diam(B(Q)) <= diam(Γ), sorted by id.
std::vector<int> cubes_meeting(const Polyline& G, const CubeTree& tree, double mult);

SumReport curve_theta_cube_sum(const Polyline& G, const CubeTree& tree, double lambda,
                               Exec ex = Exec::serial);
SumReport curve_d_sum(const Polyline& G, const CubeTree& tree, const PointSet& E, double lambda,
                      Exec ex = Exec::serial);

struct WeakSumOptions {
  // Decide the selector from the unilateral lower bound when it already clears epsilon.
  bool shortcut = true;
  FitOptions fit;
};

// Σ diam(B(Q)) over cubes with Γ ∩ B(Q) nonempty, diam(B(Q)) <= diam(Γ) and
// θ^τ_Γ(A B(Q)) >= ε with τ = field(Q).
SumReport weak_type_sum(const Polyline& G, const CubeTree& tree, const CoarseField& field, double A,
                        double eps, Exec ex = Exec::serial, const WeakSumOptions& opt = {});

}  // namespace ctf
