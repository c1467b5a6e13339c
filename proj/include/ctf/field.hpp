#pragma once

#include "ctf/exec.hpp"
#include "ctf/geometry.hpp"
#include "ctf/nets.hpp"

#include <map>
#include <string>
#include <vector>

namespace ctf {

struct FieldParams {
  double eps = 0.1;
  double A = 2.0;
  int d = 2;
  double eps0 = 0.5;
  double eps1 = 0.0;
  double Lambda = 0.0;
  std::vector<double> eps2;  // eps2[k] for k = 1..d; eps2[0] unused
  // Absolute tolerance added to every good test; 0 means "use the sampling resolution of E".
  double slack = 0.0;
  double chain_ratio = 1e-2;
  double C_d = 8.0;
  double angle_floor = 0.02;
  int max_candidates = 128;
  // Planar line fields via the per-direction raster sweep; false forces the generic path.
  bool fast_planar = true;

  static FieldParams make(double eps, double A, int d, double eps0 = 0.5, double slack = 0.0);
  // Recomputes eps1, Lambda and the eps2 chain from (eps, A, d, eps0).
  void derive();
  void validate() const;
  // Copy with slack replaced by E.resolution() when it is 0.
  FieldParams resolved_for(const PointSet& E) const;
  // Radius of the good-test neighbourhood for a k-flat at a ball of diameter diam_tilde.
  double tolerance(int k, double diam_tilde) const { return eps2.at(k) * diam_tilde + slack; }
  // Width of one direction bin for k-dimensional candidates.
  double dedup_angle(int k) const;
};

struct CoarseField {
  FieldParams params;
  std::map<int, Subspace> entries;
  // Diagnostics, present for built fields.
  std::map<int, int> N;     // N(τ(Q), Q)
  std::map<int, int> khat;  // min{k : n_k(Q) = 0}, d when no reduction applies

  const Subspace* find(int id) const;
  const Subspace& at(int id) const;  // throws "field incomplete"
  int max_dim() const;
};

// Geometry of the inflated cube ball B̃(Q) = A B(Q).
Ball tilde_ball(const CubeTree& T, int q, double A);

bool is_good(const AffineFlat& V, int q, const CubeTree& T, const PointSet& E, const FieldParams& P);
int N_of_flat(const AffineFlat& V, int q, const CubeTree& T, const PointSet& E, const FieldParams& P);
int N_of_direction(const Subspace& tau, int q, const CubeTree& T, const PointSet& E,
                   const FieldParams& P, AffineFlat* best = nullptr);
std::vector<Subspace> candidate_directions(int q, int k, const Subspace& base, const CubeTree& T,
                                           const PointSet& E, const FieldParams& P);

CoarseField build_epsilon_field(const CubeTree& T, const PointSet& E, FieldParams P,
                                Exec ex = Exec::serial);
CoarseField constant_field(const CubeTree& T, const Subspace& dir, const FieldParams& P = {});

// Completeness over the tree and dimension bound d - 1.
ValidationReport validate_field(const CoarseField& F, const CubeTree& T);

struct AggregatedField {
  CoarseField field;
  std::map<int, int> K;
};

// fields[i] is the field for eps = 2^-(i+1).
AggregatedField aggregate_field(const std::vector<CoarseField>& fields);
// angle(τ(Q), τ^{2^-k}(Q)) <= 2^-k for k <= K(Q), and K(Q) maximal.
ValidationReport validate_aggregation(const AggregatedField& agg, const std::vector<CoarseField>& fields);

}  // namespace ctf
