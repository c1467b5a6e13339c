#pragma once

#include "ctf/exec.hpp"
#include "ctf/nets.hpp"
#include "ctf/polyline.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace ctf {

using P2 = Eigen::Vector2d;

struct OrientedSegment {
  P2 x0 = P2::Zero();
  P2 x1 = P2::Zero();
  int parent = -1;  // index of the edge of the previous level it descends from
  int piece = -1;   // 0..5, position inside T_a of the parent sub-edge

  double length() const { return (x1 - x0).norm(); }
};

// The six segments of the diamond operation, in the order
// [x0,x1/4], [x3/4,x1], [x1/4,top], [x1/4,bottom], [top,x3/4], [bottom,x3/4],
// where top = x1/2 + aJ(x1 - x0) and J is the counter-clockwise quarter turn.
std::array<OrientedSegment, 6> t_a_operation(const OrientedSegment& seg, double a);
// Length of T_a applied to a unit segment: 1/2 + 4 sqrt(1/16 + a^2).
double t_a_length(double a);
// Length of one monotone path through T_a of a unit segment: 1/2 + 2 sqrt(1/16 + a^2).
double path_factor(double a);

// a[n-1] = a_n and N[n-1] = N_n for the operations n = 1..levels-1.
struct DiamondSchedule {
  int levels = 1;
  std::vector<double> a;
  std::vector<long> N;
  std::vector<double> s;      // s[n-1]: longest edge of P_n
  std::vector<double> s_min;  // shortest edge of P_n
  std::vector<double> r;      // r[n-1] = r_n, Claim 7.4 radii (r_1 = 1)

  int operations() const { return levels - 1; }
};

// a_n = c0 / (sqrt(n) log(n + 2)) with c0 chosen so that a_1 = a1, rescaled if the prefix has
// Σ a_n^2 > 1; N_n = max(ceil(10 / a_n), value forced by the r_n recursion).
DiamondSchedule default_schedule(int levels, double a1 = 0.9e-3);
// Explicit schedule; a must be decreasing in (0, 1e-3) unless `strict` is false.
DiamondSchedule custom_schedule(int levels, std::vector<double> a, std::vector<long> N, bool strict = true);
// Checks s_n/N_n < r_{n+1} < s_n < r_n and the a_n conditions.
ValidationReport validate_schedule(const DiamondSchedule& S);

struct DiamondLevel {
  int n = 1;
  double a = 0.0;  // a_n used to build P_{n+1}; 0 on the last level
  long N = 0;
  std::vector<OrientedSegment> edges;
};

// Explicit P_1..P_levels; throws when the edge count would exceed max_edges.
std::vector<DiamondLevel> build_diamond(const DiamondSchedule& S, long max_edges = 4000000);

// Exhaustive test: two edges may only meet at a shared endpoint, and then not overlap.
ValidationReport check_disjoint(const DiamondLevel& L);
// Sampled d_H(P_n, P_m) for every built pair n < m against 1e-3 s_n / N_n.
ValidationReport check_hausdorff(const std::vector<DiamondLevel>& levels, const DiamondSchedule& S);
// Facts behind the disjointness of every P_n for the schedule, checked numerically on the
// prototype diamonds: T_a(I) in D_a(I), touching ∂D_b(I) only at the endpoints for b > a;
// the rhombi of distinct edges of T_a(I) have disjoint interiors; D_b(J) ⊂ D_a(I) for every
// subdivision edge J of T_a(I) with b = a_{n+1}.
ValidationReport disjointness_certificate(const DiamondSchedule& S);
// Upper bound of d_H(P_n, P_levels) from the apex heights, against 1e-3 s_n / N_n.
ValidationReport hausdorff_certificate(const DiamondSchedule& S);
// Upper bound on how far the descendants of a level-n edge of length len wander from it.
double descendant_deviation(const DiamondSchedule& S, int n, double len);

struct BitSequence {
  std::vector<int> bits;  // bits[n-1] = b_n in {+1, -1}
  std::uint64_t seed = 0;

  static BitSequence random(int count, std::uint64_t seed, std::uint64_t stream = 0);
  BitSequence flipped(int n) const;  // b^{-,n}
};

// Monotone path γ_b through P_levels; explicit, guarded by max_vertices.
Polyline sample_monotone_curve(const BitSequence& b, const DiamondSchedule& S, long max_vertices = 4000000);
// ℓ(γ_b) at the finest level, the same for every b: Π path_factor(a_n).
double monotone_length(const DiamondSchedule& S);

// Distance from y to P_m (m <= levels) by branch and bound over the implicit hierarchy.
double distance_to_level(const DiamondSchedule& S, int m, const P2& y);

struct PorosityReport {
  int probes = 0;
  int successes = 0;
  double delta = 0.0;
  double min_ratio = 0.0;  // smallest found empty-ball ratio among successes
};
// Random balls B(x, r), x on P_levels, r log-uniform in [s_levels, 1]; a probe succeeds when
// some y in B(x, (1 - δ) r) has B(y, δ r) missing P (distance to P_levels above δ r plus the
// Hausdorff tail).
PorosityReport porosity_probe(const DiamondSchedule& S, double delta, int probes, std::uint64_t seed);

enum class DiamondField { built, horizontal, vertical, random };
std::string to_string(DiamondField f);
DiamondField parse_diamond_field(const std::string& s);

struct BlowupOptions {
  double A = 3.0;
  int trials = 64;  // antithetic pairs
  std::uint64_t seed = 1;
  int samples_per_trial = 2;
  double p = 2.0;
  DiamondField field = DiamondField::horizontal;
  double field_eps = 0.1;  // ε for the built field
  Exec ex = Exec::serial;
};

struct BlowupRow {
  int level = 0;
  double a = 0.0;
  double mean_sum = 0.0;
  double certified_sum = 0.0;  // lower bound accounting for the finer levels
  double bound = 0.0;          // a^p log(1/a)
  double ratio = 0.0;
  double certified_ratio = 0.0;
  double stderr_sum = 0.0;
  int balls = 0;  // balls of one window family
  int trials = 0;
  std::uint64_t seed = 0;
};

struct BlowupReport {
  std::vector<BlowupRow> rows;
  std::string field;
  double A = 0.0;
  double p = 2.0;

  std::string csv() const;  // level,a_n,mean_sum,ratio_to_bound,trials,seed,...
};

// Monte Carlo over pairs (b, b^{-,n}) of the paired sums over ℱ^n(I), estimated from windows
// around length-biased samples of I among the edges of S_{N_n}(P_n) crossed by γ_b.
BlowupReport expected_blowup(const DiamondSchedule& S, const BlowupOptions& opt);

std::string diamond_to_json(const std::vector<DiamondLevel>& levels, const DiamondSchedule& S);

}  // namespace ctf
