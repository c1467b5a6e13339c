#pragma once

#include "ctf/beta.hpp"
#include "ctf/exec.hpp"
#include "ctf/field.hpp"
#include "ctf/nets.hpp"
#include "ctf/polyline.hpp"

#include <string>
#include <vector>

namespace ctf {

struct CoronaParams {
  double alpha = 0.1;
  double delta = 0.02;
  double d0 = 0.02;
  double lambda = 16000.0;  // A * Lambda for eps = 0.1, A = 2

  static CoronaParams from_field(const FieldParams& P);
  void validate() const;
};

struct StoppingRegion {
  int top = -1;
  std::vector<int> members;  // sorted, includes top
  Subspace direction;        // best-fit line of Γ in λB(top)
};

// Per-cube best-fit data, kept so the thresholds can be re-checked.
struct CubeFit {
  double theta = 0.0;
  double d = 0.0;
  AffineFlat line;
};

struct CoronaDecomposition {
  std::vector<StoppingRegion> regions;
  std::vector<int> bad;
  std::vector<int> cubes;  // C_Γ, sorted
  std::map<int, CubeFit> fits;
  CoronaParams params;
  double length = 0.0;
};

// C_Γ = {Q : B(Q) ∩ Γ nonempty, diam(B(Q)) <= diam(Γ)}.
std::vector<int> collect_curve_cubes(const Polyline& G, const CubeTree& tree);
// Every cube of the set whose parent meets the selector has its parent in the set too.
bool upward_connected(const std::vector<int>& cubes, const Polyline& G, const CubeTree& tree);

CoronaDecomposition decompose(const std::vector<int>& cubes, const Polyline& G, const CubeTree& tree,
                              const PointSet& E, const CoronaParams& params, Exec ex = Exec::serial);

struct Packing {
  double tops = 0.0;  // Σ diam(B(Q(S))) / ℓ(Γ)
  double bad = 0.0;   // Σ_{Q in bad} diam(B(Q)) / ℓ(Γ)
};
Packing packing_report(const CoronaDecomposition& D, const CubeTree& tree);

// Partition, tree-connectedness, containment in the top, and thresholds re-evaluated from
// scratch for every member.
ValidationReport verify_corona(const CoronaDecomposition& D, const Polyline& G, const CubeTree& tree,
                               const PointSet& E);

std::string corona_to_json(const CoronaDecomposition& D);

}  // namespace ctf
