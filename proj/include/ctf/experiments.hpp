#pragma once

#include "ctf/corona.hpp"
#include "ctf/diamond.hpp"
#include "ctf/field.hpp"
#include "ctf/nets.hpp"
#include "ctf/polyline.hpp"
#include "ctf/tst.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ctf {

enum class CurveKind { monotone, segment, arc, self_similar };
std::string to_string(CurveKind k);

struct SuiteCurve {
  CurveKind kind = CurveKind::segment;
  Polyline curve;
};

// Seeded planar curves inside [0,1]^2 whose lengths spread over [min_len, max_len], cycling
// through random monotone polylines, segments at swept angles, circle arcs and scaled copies
// of one base zigzag.
std::vector<SuiteCurve> curve_suite(int count, std::uint64_t seed, double min_len = 0.01, double max_len = 1.0);
// Segments along direction (1,1) of the given lengths, centered in [0,1]^2.
std::vector<SuiteCurve> diagonal_suite(int count, std::uint64_t seed, double min_len = 0.05, double max_len = 1.0);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_se = 0.0;  // standard error of the slope
  int n = 0;

  // Two-sided 95% interval half-width for the slope (Student t).
  double slope_halfwidth95() const;
};
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);
double student_t975(int dof);

struct CurveResult {
  std::string kind;
  double length = 0.0;
  double weak_sum = 0.0;
  double weak_ratio = 0.0;
  double beta_ratio = -1.0;    // Σβ²diam / ℓ, -1 when not computed
  double corona_tops = -1.0;   // packing ratios, -1 when not computed
  double corona_bad = -1.0;
  bool corona_ok = true;
};

struct VerifyOptions {
  double A = 2.0;
  double eps = 0.1;
  bool corona = false;
  CoronaParams corona_params;
  int corona_max_level = 1 << 20;  // cubes deeper than this are left out of C_Γ
  bool beta = false;
  int beta_kmin = 0;
  int beta_kmax = 8;
};

struct VerificationReport {
  std::vector<CurveResult> curves;
  std::map<std::string, double> params;
  std::uint64_t seed = 0;
  double max_weak_ratio = 0.0;
  LinearFit loglog;  // log(weak_sum) against log(length) over curves with a positive sum
  bool ok = true;    // all ratios finite and nonnegative, coronas verified
  std::vector<std::string> failures;

  std::string json() const;
  std::string csv() const;
};

VerificationReport verify_suite(const std::vector<SuiteCurve>& curves, const CubeTree& tree, const PointSet& E,
                                const CoarseField& field, const VerifyOptions& opt, Exec ex = Exec::serial);

// Field battery shared by the experiments.
enum class BatteryField { built, horizontal, vertical, random };
std::string to_string(BatteryField f);
std::vector<BatteryField> full_battery();
// Line field on the tree of the given kind; the built one uses (eps, A, d = 2).
CoarseField battery_field(BatteryField kind, const CubeTree& T, const PointSet& E, double eps, double A,
                          std::uint64_t seed = 7, Exec ex = Exec::serial);
CoarseField random_line_field(const CubeTree& T, std::uint64_t seed);

// Σ diam(B(Q)) over cubes with Γ ∩ B(Q) nonempty, min_diam <= diam(B(Q)) <= max_diam and
// θ^τ_Γ(A B(Q)) >= ε.
double selector_sum(const Polyline& G, const CubeTree& T, const CoarseField& F, double A, double eps,
                    double min_diam, double max_diam);

enum class ConverseSource { disk, carpet };

struct ConverseOptions {
  double A = 2.0;
  double eps = 0.1;
  int directions = 16;
  int offsets = 4;
  std::uint64_t seed = 7;
  int carpet_depth = 5;
  Exec ex = Exec::serial;
};

struct ConverseRow {
  double delta = 0.0;
  double worst_sum = 0.0;
  int points = 0;
  int lines = 0;
};

struct ConverseTable {
  std::string source;
  std::string field;
  std::vector<ConverseRow> rows;
  LinearFit fit;  // worst_sum against log(1/δ)

  std::string csv() const;
};

// For each δ: E is the δ-grid of the unit disk (or the carpet truncated at scale δ), the family
// is the cube tree with s = 1/2, and the lines through the half-radius disk are sampled by a
// direction × offset product; reports the largest selector sum over diam(B) <= 1/4.
ConverseTable converse_experiment(const std::vector<double>& deltas, ConverseSource src, BatteryField field,
                                  const ConverseOptions& opt = {});
PointSet thickened_disk(double delta);

// "2^-4..2^-8" (every power in between), or a comma list of numbers and powers "2^-k".
std::vector<double> parse_deltas(const std::string& text);
// Comma-separated reals.
std::vector<double> parse_real_list(const std::string& text);

struct PSweepRow {
  double p = 0.0;
  BlowupRow row;
};
std::vector<PSweepRow> p_sweep(const DiamondSchedule& S, const std::vector<double>& p_list, const BlowupOptions& base);
std::string p_sweep_csv(const std::vector<PSweepRow>& rows);

}  // namespace ctf
