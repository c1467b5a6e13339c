// ctf: generation, construction and verification pipeline.
//
// Each stage reads the previous stage's file from --dir and writes its own there:
//   points.json -> nets.json -> cubes.json -> field.json -> report.{json,csv}
// Exit status is 0 only when every invariant validated by the command holds.

#include "ctf/corona.hpp"
#include "ctf/diamond.hpp"
#include "ctf/experiments.hpp"
#include "ctf/field.hpp"
#include "ctf/io.hpp"
#include "ctf/nets.hpp"
#include "ctf/sets.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

using namespace ctf;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string dir = ".";
  bool serial = false;

  std::string path(const std::string& name) const { return (fs::path(dir) / name).string(); }
  Exec ex() const { return serial ? Exec::serial : Exec::parallel; }
};

PointSet load_points(const std::string& path) {
  if (!fs::exists(path)) throw Error("missing input file: " + path + " (produce it with `ctf gen` first)");
  return load_pointset(path);
}

int report(const ValidationReport& v, const std::string& what) {
  if (v.ok) {
    std::cout << what << ": ok\n";
    return 0;
  }
  std::cerr << what << ": FAILED\n";
  for (const auto& f : v.failures) std::cerr << "  " << f << "\n";
  return 1;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coarse tangent fields: experiments on point sets, curves and the diamond construction"};
  app.require_subcommand(1);
  Common com;
  app.add_option("--dir", com.dir, "Working directory for stage files")->capture_default_str();
  app.add_flag("--serial", com.serial, "Use the serial reference kernels");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a point set");
  std::string set_name = "carpet", gen_out = "points.json", gen_in;
  GeneratorSpec spec;
  std::string seg_ends;
  gen->add_option("--set", set_name, "carpet|cantor|circle|segment|grid|random|file")->capture_default_str();
  gen->add_option("--depth", spec.depth, "Depth for carpet/cantor")->capture_default_str();
  gen->add_option("--count", spec.count, "Point count for circle/segment/random, side for grid")->capture_default_str();
  gen->add_option("--ambient", spec.dim, "Dimension of the random cloud")->capture_default_str();
  gen->add_option("--seed", spec.seed, "Seed of the random cloud")->capture_default_str();
  gen->add_option("--ends", seg_ends, "Segment endpoints a1,..,an,b1,..,bn");
  gen->add_option("--in", gen_in, "Input file for --set file");
  gen->add_option("--out", gen_out, "Output file (relative to --dir)")->capture_default_str();

  // nets
  auto* nets = app.add_subcommand("nets", "Build nested nets");
  std::string nets_in = "points.json";
  int kmin = 0, kmax = 8;
  nets->add_option("--in", nets_in, "Point-set file")->capture_default_str();
  nets->add_option("--kmin", kmin)->capture_default_str();
  nets->add_option("--kmax", kmax)->capture_default_str();

  // cubes
  auto* cubes = app.add_subcommand("cubes", "Build the cube tree");
  double s = 0.25;
  cubes->add_option("--s", s, "Scale ratio, a power of 1/2")->capture_default_str();

  // field
  auto* field = app.add_subcommand("field", "Build the coarse tangent field");
  double f_eps = 0.1, f_A = 2.0;
  int f_d = 2;
  field->add_option("--eps", f_eps)->capture_default_str();
  field->add_option("--A", f_A)->capture_default_str();
  field->add_option("--d", f_d)->capture_default_str();

  // verify
  auto* verify = app.add_subcommand("verify", "Weak-type sums over a seeded curve suite");
  int v_curves = 100;
  std::uint64_t v_seed = 1;
  double v_min = 0.015, v_max = 1.5;
  VerifyOptions vo;
  verify->add_option("--curves", v_curves)->capture_default_str();
  verify->add_option("--seed", v_seed)->capture_default_str();
  verify->add_option("--min-length", v_min)->capture_default_str();
  verify->add_option("--max-length", v_max)->capture_default_str();
  verify->add_option("--A", vo.A, "Inflation of the selector")->capture_default_str();
  verify->add_option("--eps", vo.eps, "Selector threshold")->capture_default_str();
  verify->add_flag("--corona", vo.corona, "Also decompose and verify coronas");
  verify->add_flag("--beta", vo.beta, "Also report curve beta sums");

  // diamond
  auto* diamond = app.add_subcommand("diamond", "Diamond construction checks and blow-up estimate");
  int d_levels = 4;
  double d_a1 = 0.9e-3;
  BlowupOptions bo;
  std::string d_field = "horizontal", d_explicit;
  diamond->add_option("--levels", d_levels)->capture_default_str();
  diamond->add_option("--trials", bo.trials, "Antithetic pairs")->capture_default_str();
  diamond->add_option("--A", bo.A)->capture_default_str();
  diamond->add_option("--seed", bo.seed)->capture_default_str();
  diamond->add_option("--a1", d_a1)->capture_default_str();
  diamond->add_option("--field", d_field, "built|horizontal|vertical|random")->capture_default_str();
  diamond->add_option("--explicit-N", d_explicit, "Comma list of N_n for an explicit edge-list export");

  // converse
  auto* converse = app.add_subcommand("converse", "Log-divergence sweep on thickened disks");
  std::string c_deltas = "2^-4..2^-8", c_field = "built", c_source = "disk";
  ConverseOptions co;
  converse->add_option("--deltas", c_deltas)->capture_default_str();
  converse->add_option("--field", c_field, "built|horizontal|vertical|random")->capture_default_str();
  converse->add_option("--source", c_source, "disk|carpet")->capture_default_str();
  converse->add_option("--A", co.A)->capture_default_str();
  converse->add_option("--eps", co.eps)->capture_default_str();

  // psweep
  auto* psweep = app.add_subcommand("psweep", "Per-level paired sums on the diamond for several p");
  std::string p_list = "1.5,2,2.5,3";
  int p_levels = 3;
  BlowupOptions pbo;
  pbo.trials = 16;
  psweep->add_option("--p", p_list)->capture_default_str();
  psweep->add_option("--levels", p_levels)->capture_default_str();
  psweep->add_option("--trials", pbo.trials)->capture_default_str();
  psweep->add_option("--seed", pbo.seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    fs::create_directories(com.dir);
    const Exec ex = com.ex();

    if (*gen) {
      spec.kind = parse_set_kind(set_name);
      spec.path = gen_in;
      if (!seg_ends.empty()) spec.params = parse_real_list(seg_ends);
      if (spec.kind == SetKind::file && gen_in.empty()) throw Error("--set file needs --in");
      const PointSet E = generate(spec);
      save_pointset(E, com.path(gen_out));
      std::cout << "wrote " << com.path(gen_out) << " (" << E.size() << " points, dim " << E.dim() << ")\n";
      return 0;
    }

    if (*nets) {
      const PointSet E = load_points(com.path(nets_in));
      const NetHierarchy H = build_nested_nets(E, kmin, kmax);
      write_text(com.path("nets.json"), nets_to_json(H));
      nlohmann::ordered_json meta{{"points", nets_in}};
      write_text(com.path("nets.meta.json"), meta.dump());
      std::cout << "doubling count " << doubling_diagnostic(H, E) << "\n";
      return report(validate_nets(H, E), "nets");
    }

    // Later stages find the point set through the metadata written by `nets`.
    auto points_file = [&]() {
      const auto meta = nlohmann::json::parse(read_text(com.path("nets.meta.json"), "nets"));
      return com.path(meta.at("points").get<std::string>());
    };

    if (*cubes) {
      const PointSet E = load_points(points_file());
      const NetHierarchy H = nets_from_json(read_text(com.path("nets.json"), "nets"));
      const CubeTree T = build_christ_cubes(H, E, s);
      write_text(com.path("cubes.json"), cube_tree_to_json(T));
      std::cout << "cubes " << T.size() << " levels " << T.j_min << ".." << T.j_max << " a0 " << T.a0 << " C1 "
                << T.C1 << "\n";
      return report(validate_cube_tree(T, E), "cubes");
    }

    if (*field) {
      const PointSet E = load_points(points_file());
      const CubeTree T = cube_tree_from_json(read_text(com.path("cubes.json"), "cubes"));
      FieldParams P = FieldParams::make(f_eps, f_A, f_d);
      P.validate();
      const CoarseField F = build_epsilon_field(T, E, P, ex);
      write_text(com.path("field.json"), field_to_json(F));
      std::cout << "field entries " << F.entries.size() << " max dim " << F.max_dim() << "\n";
      return report(validate_field(F, T), "field");
    }

    if (*verify) {
      const PointSet E = load_points(points_file());
      const CubeTree T = cube_tree_from_json(read_text(com.path("cubes.json"), "cubes"));
      const CoarseField F = field_from_json(read_text(com.path("field.json"), "field"));
      if (vo.corona) vo.corona_params = CoronaParams::from_field(F.params);
      const auto suite = curve_suite(v_curves, v_seed, v_min, v_max);
      VerificationReport R = verify_suite(suite, T, E, F, vo, ex);
      R.seed = v_seed;
      R.params["curves"] = v_curves;
      write_text(com.path("report.json"), R.json());
      write_text(com.path("report.csv"), R.csv());
      std::cout << "max weak ratio " << fmt(R.max_weak_ratio) << ", log-log slope " << fmt(R.loglog.slope) << " +- "
                << fmt(R.loglog.slope_halfwidth95()) << "\n";
      ValidationReport v;
      for (const auto& f : R.failures) v.fail(f);
      if (!R.ok && v.ok) v.fail("report invariants failed");
      return report(v, "verify");
    }

    if (*diamond) {
      const DiamondSchedule S = default_schedule(d_levels, d_a1);
      ValidationReport all = validate_schedule(S);
      for (const ValidationReport& r : {disjointness_certificate(S), hausdorff_certificate(S)})
        for (const auto& f : r.failures) all.fail(f);
      if (!d_explicit.empty()) {
        std::vector<long> N;
        for (double x : parse_real_list(d_explicit)) N.push_back(static_cast<long>(x));
        const DiamondSchedule R = custom_schedule(d_levels, S.a, N);
        const auto levels = build_diamond(R);
        for (const auto& f : check_hausdorff(levels, R).failures) all.fail(f);
        write_text(com.path("diamond.json"), diamond_to_json(levels, R));
      }
      bo.field = parse_diamond_field(d_field);
      bo.ex = ex;
      const BlowupReport rep = expected_blowup(S, bo);
      write_text(com.path("diamond_blowup.csv"), rep.csv());
      std::cout << rep.csv();
      return report(all, "diamond certificates");
    }

    if (*converse) {
      const auto deltas = parse_deltas(c_deltas);
      BatteryField bf = BatteryField::built;
      bool found = false;
      for (BatteryField f : full_battery())
        if (to_string(f) == c_field) bf = f, found = true;
      if (!found) throw Error("unknown field '" + c_field + "'");
      if (c_source != "disk" && c_source != "carpet") throw Error("unknown source '" + c_source + "'");
      co.ex = ex;
      const ConverseTable t =
          converse_experiment(deltas, c_source == "disk" ? ConverseSource::disk : ConverseSource::carpet, bf, co);
      write_text(com.path("converse.csv"), t.csv());
      std::cout << t.csv() << "slope " << fmt(t.fit.slope) << " +- " << fmt(t.fit.slope_halfwidth95()) << " r2 "
                << fmt(t.fit.r2) << "\n";
      ValidationReport v;
      for (const auto& r : t.rows)
        if (!std::isfinite(r.worst_sum) || r.worst_sum < 0) v.fail("non-finite sum at delta " + fmt(r.delta));
      return report(v, "converse");
    }

    if (*psweep) {
      const DiamondSchedule S = default_schedule(p_levels);
      pbo.ex = ex;
      const auto rows = p_sweep(S, parse_real_list(p_list), pbo);
      write_text(com.path("psweep.csv"), p_sweep_csv(rows));
      std::cout << p_sweep_csv(rows);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
