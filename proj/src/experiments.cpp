#include "ctf/experiments.hpp"

#include "ctf/rng.hpp"
#include "ctf/sets.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace ctf {

namespace {

constexpr double kPi = std::numbers::pi;

Vec v2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

// Rescales and places a planar curve inside [0,1]^2 with the requested length when it fits.
Polyline place(std::vector<Vec> pts, double length, Rng& rng) {
  Polyline raw(pts);
  double f = raw.length() > 0 ? length / raw.length() : 1.0;
  Vec lo = pts[0], hi = pts[0];
  for (const Vec& p : pts) lo = lo.cwiseMin(p), hi = hi.cwiseMax(p);
  const double ext = std::max((hi - lo).maxCoeff() * f, 1e-300);
  if (ext > 0.98) f *= 0.98 / ext;
  const Vec size = (hi - lo) * f;
  const Vec off = v2(0.01 + rng.uniform() * (0.98 - size(0)), 0.01 + rng.uniform() * (0.98 - size(1)));
  for (Vec& p : pts) p = off + (p - lo) * f;
  return Polyline(std::move(pts));
}

std::vector<Vec> rotate(std::vector<Vec> pts, double ang) {
  const double c = std::cos(ang), s = std::sin(ang);
  for (Vec& p : pts) p = v2(c * p(0) - s * p(1), s * p(0) + c * p(1));
  return pts;
}

double log_uniform(Rng& rng, double lo, double hi) { return std::exp(rng.uniform(std::log(lo), std::log(hi))); }

}  // namespace

std::string to_string(CurveKind k) {
  switch (k) {
    case CurveKind::monotone: return "monotone";
    case CurveKind::segment: return "segment";
    case CurveKind::arc: return "arc";
    default: return "self_similar";
  }
}

std::vector<SuiteCurve> curve_suite(int count, std::uint64_t seed, double min_len, double max_len) {
  std::vector<SuiteCurve> out;
  for (int i = 0; i < count; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i));
    const double L = log_uniform(rng, min_len, max_len);
    SuiteCurve c;
    c.kind = static_cast<CurveKind>(i % 4);
    std::vector<Vec> pts;
    switch (c.kind) {
      case CurveKind::monotone: {
        const int k = 4 + static_cast<int>(rng.below(7));
        double x = 0, y = 0;
        for (int j = 0; j <= k; ++j) {
          pts.push_back(v2(x, y));
          x += rng.uniform(0.2, 1.0);
          y += rng.uniform(-0.8, 0.8);
        }
        pts = rotate(pts, rng.uniform(0, kPi));
        break;
      }
      case CurveKind::segment: {
        const double ang = kPi * (i / 4) / std::max(1, (count + 3) / 4);
        pts = {v2(0, 0), v2(std::cos(ang), std::sin(ang))};
        break;
      }
      case CurveKind::arc: {
        const double span = rng.uniform(0.3, 1.8 * kPi), a0 = rng.uniform(0, 2 * kPi);
        for (int j = 0; j <= 64; ++j) {
          const double t = a0 + span * j / 64.0;
          pts.push_back(v2(std::cos(t), std::sin(t)));
        }
        break;
      }
      default: {
        // Zigzag with two levels of self-similar detail.
        std::vector<Vec> base = {v2(0, 0), v2(1, 0)};
        for (int lvl = 0; lvl < 2; ++lvl) {
          std::vector<Vec> nb = {base[0]};
          for (std::size_t j = 0; j + 1 < base.size(); ++j) {
            const Vec d = base[j + 1] - base[j], n = v2(-d(1), d(0));
            nb.push_back(base[j] + d / 3.0);
            nb.push_back(base[j] + d / 2.0 + n * 0.25);
            nb.push_back(base[j] + 2.0 * d / 3.0);
            nb.push_back(base[j + 1]);
          }
          base = std::move(nb);
        }
        pts = rotate(base, rng.uniform(0, kPi));
      }
    }
    c.curve = place(std::move(pts), L, rng);
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<SuiteCurve> diagonal_suite(int count, std::uint64_t seed, double min_len, double max_len) {
  std::vector<SuiteCurve> out;
  for (int i = 0; i < count; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i) + 0x5151);
    const double L = std::min(log_uniform(rng, min_len, max_len), 0.98 * std::sqrt(2.0));
    const double h = L / (2.0 * std::sqrt(2.0));
    const double slack = 0.49 - h;
    const double cx = 0.5 + rng.uniform(-slack, slack), cy = 0.5 + rng.uniform(-slack, slack);
    SuiteCurve c;
    c.kind = CurveKind::segment;
    c.curve = Polyline({v2(cx - h, cy - h), v2(cx + h, cy + h)});
    out.push_back(std::move(c));
  }
  return out;
}

double student_t975(int dof) {
  static const double table[] = {0,      12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
                                  2.201, 2.179,  2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086};
  if (dof < 1) return std::numeric_limits<double>::infinity();
  if (dof <= 20) return table[dof];
  // Cornish-Fisher expansion around the normal quantile.
  const double z = 1.959963984540054, v = dof;
  return z + (z * z * z + z) / (4 * v) + (5 * std::pow(z, 5) + 16 * z * z * z + 3 * z) / (96 * v * v);
}

double LinearFit::slope_halfwidth95() const { return n > 2 ? student_t975(n - 2) * slope_se : std::numeric_limits<double>::infinity(); }

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  LinearFit f;
  f.n = static_cast<int>(std::min(x.size(), y.size()));
  if (f.n < 2) return f;
  double mx = 0, my = 0;
  for (int i = 0; i < f.n; ++i) mx += x[i], my += y[i];
  mx /= f.n;
  my /= f.n;
  double sxx = 0, sxy = 0, syy = 0;
  for (int i = 0; i < f.n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  const double sse = std::max(0.0, syy - f.slope * sxy);
  f.r2 = syy > 0 ? 1.0 - sse / syy : 1.0;
  if (f.n > 2) f.slope_se = std::sqrt(sse / (f.n - 2) / sxx);
  return f;
}

std::string VerificationReport::json() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["params"] = params;
  j["ok"] = ok;
  j["max_weak_ratio"] = max_weak_ratio;
  j["loglog_slope"] = loglog.slope;
  j["loglog_slope_halfwidth95"] = loglog.slope_halfwidth95();
  j["loglog_n"] = loglog.n;
  nlohmann::ordered_json cs = nlohmann::ordered_json::array();
  for (const auto& c : curves)
    cs.push_back({{"kind", c.kind},
                  {"length", c.length},
                  {"weak_sum", c.weak_sum},
                  {"weak_ratio", c.weak_ratio},
                  {"beta_ratio", c.beta_ratio},
                  {"corona_tops", c.corona_tops},
                  {"corona_bad", c.corona_bad},
                  {"corona_ok", c.corona_ok}});
  j["curves"] = cs;
  j["failures"] = failures;
  return j.dump(2);
}

std::string VerificationReport::csv() const {
  std::ostringstream os;
  os.precision(12);
  os << "index,kind,length,weak_sum,weak_ratio,beta_ratio,corona_tops,corona_bad,corona_ok\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& c = curves[i];
    os << i << ',' << c.kind << ',' << c.length << ',' << c.weak_sum << ',' << c.weak_ratio << ',' << c.beta_ratio << ','
       << c.corona_tops << ',' << c.corona_bad << ',' << (c.corona_ok ? 1 : 0) << '\n';
  }
  return os.str();
}

VerificationReport verify_suite(const std::vector<SuiteCurve>& curves, const CubeTree& tree, const PointSet& E,
                                const CoarseField& field, const VerifyOptions& opt, Exec ex) {
  VerificationReport rep;
  rep.params = {{"A", opt.A}, {"eps", opt.eps}, {"field_eps", field.params.eps}, {"field_A", field.params.A},
                {"d", field.params.d}, {"eps0", field.params.eps0}, {"s", tree.s}, {"C1", tree.C1}, {"a0", tree.a0}};
  if (opt.corona) rep.params["corona_lambda"] = opt.corona_params.lambda;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const Polyline& G = curves[i].curve;
    CurveResult r;
    r.kind = to_string(curves[i].kind);
    r.length = G.length();
    const SumReport w = weak_type_sum(G, tree, field, opt.A, opt.eps, ex);
    r.weak_sum = w.total;
    r.weak_ratio = w.ratio;
    if (opt.beta) {
      const CurveFamily fam = curve_family(G, opt.beta_kmin, opt.beta_kmax);
      r.beta_ratio = curve_beta_sum(G, fam.balls, opt.A, 2.0, ex).ratio;
    }
    if (opt.corona) {
      std::vector<int> cubes;
      for (int q : collect_curve_cubes(G, tree))
        if (tree.cubes[q].level <= opt.corona_max_level) cubes.push_back(q);
      const CoronaDecomposition D = decompose(cubes, G, tree, E, opt.corona_params, ex);
      const ValidationReport v = verify_corona(D, G, tree, E);
      const Packing pk = packing_report(D, tree);
      r.corona_tops = pk.tops;
      r.corona_bad = pk.bad;
      r.corona_ok = v.ok;
      if (!v.ok) rep.failures.push_back("curve " + std::to_string(i) + ": " + v.failures.front());
    }
    for (double v : {r.weak_ratio, r.beta_ratio, r.corona_tops, r.corona_bad})
      if (!std::isfinite(v) || (v < 0 && v != -1.0)) {
        rep.ok = false;
        rep.failures.push_back("curve " + std::to_string(i) + ": non-finite or negative ratio");
      }
    if (!r.corona_ok) rep.ok = false;
    rep.max_weak_ratio = std::max(rep.max_weak_ratio, r.weak_ratio);
    if (r.weak_sum > 0 && r.length > 0) {
      lx.push_back(std::log(r.length));
      ly.push_back(std::log(r.weak_sum));
    }
    rep.curves.push_back(r);
  }
  rep.loglog = linear_fit(lx, ly);
  return rep;
}

std::string to_string(BatteryField f) {
  switch (f) {
    case BatteryField::built: return "built";
    case BatteryField::horizontal: return "horizontal";
    case BatteryField::vertical: return "vertical";
    default: return "random";
  }
}

std::vector<BatteryField> full_battery() {
  return {BatteryField::built, BatteryField::horizontal, BatteryField::vertical, BatteryField::random};
}

CoarseField random_line_field(const CubeTree& T, std::uint64_t seed) {
  CoarseField F;
  for (int q = 0; q < T.size(); ++q) {
    const double ang = static_cast<double>(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(q))) >> 11) * 0x1.0p-53 * kPi;
    F.entries.emplace(q, Subspace::line(unit_2d(ang)));
  }
  return F;
}

CoarseField battery_field(BatteryField kind, const CubeTree& T, const PointSet& E, double eps, double A,
                          std::uint64_t seed, Exec ex) {
  switch (kind) {
    case BatteryField::built: return build_epsilon_field(T, E, FieldParams::make(eps, A, 2), ex);
    case BatteryField::horizontal: return constant_field(T, Subspace::axis(2, 0), FieldParams::make(eps, A, 2));
    case BatteryField::vertical: return constant_field(T, Subspace::axis(2, 1), FieldParams::make(eps, A, 2));
    default: {
      CoarseField F = random_line_field(T, seed);
      F.params = FieldParams::make(eps, A, 2);
      return F;
    }
  }
}

double selector_sum(const Polyline& G, const CubeTree& T, const CoarseField& F, double A, double eps, double min_diam,
                    double max_diam) {
  CompensatedSum s;
  for (int q : cubes_meeting(G, T, 1.0)) {
    const Ball B = T.ball(q);
    if (B.diam() < min_diam || B.diam() > max_diam) continue;
    const Ball AB = B.scaled(A);
    const Subspace& V = F.at(q);
    const FitTarget tg = target_from_polyline(G, AB);
    bool sel = beta_restricted_of(tg, AB, V).value >= eps;
    if (!sel) sel = theta_restricted_of(tg, AB, V).value >= eps;
    if (sel) s.add(B.diam());
  }
  return s.value();
}

PointSet thickened_disk(double delta) {
  std::vector<Vec> pts;
  const int m = static_cast<int>(std::ceil(1.0 / delta));
  for (int i = -m; i <= m; ++i)
    for (int j = -m; j <= m; ++j) {
      const double x = i * delta, y = j * delta;
      if (x * x + y * y <= 1.0 + 1e-12) pts.push_back(v2(x, y));
    }
  Eigen::MatrixXd M(2, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) M.col(static_cast<Eigen::Index>(i)) = pts[i];
  return PointSet(std::move(M));
}

std::string ConverseTable::csv() const {
  std::ostringstream os;
  os.precision(12);
  os << "delta,log_inv_delta,worst_sum,points,lines,source,field\n";
  for (const auto& r : rows)
    os << r.delta << ',' << std::log(1.0 / r.delta) << ',' << r.worst_sum << ',' << r.points << ',' << r.lines << ','
       << source << ',' << field << '\n';
  return os.str();
}

ConverseTable converse_experiment(const std::vector<double>& deltas, ConverseSource src, BatteryField field,
                                  const ConverseOptions& opt) {
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0 && deltas[i] < 1)) throw Error("converse deltas must lie in (0, 1)");
    if (i > 0 && !(deltas[i] < deltas[i - 1])) throw Error("converse deltas must be decreasing");
  }
  ConverseTable tab;
  tab.source = src == ConverseSource::disk ? "disk" : "carpet";
  tab.field = to_string(field);
  CubeOptions co;
  co.a0_min = 0.0;
  // The carpet is built once; δ only truncates the scales.
  PointSet carpet;
  CubeTree carpet_tree;
  CoarseField carpet_field;
  if (src == ConverseSource::carpet && !deltas.empty()) {
    carpet = gen_sierpinski_carpet(opt.carpet_depth);
    const int kmax = static_cast<int>(std::ceil(std::log2(1.0 / deltas.back())));
    carpet_tree = build_christ_cubes(build_nested_nets(carpet, -1, kmax), carpet, 0.5, co);
    carpet_field = battery_field(field, carpet_tree, carpet, opt.eps, opt.A, opt.seed, opt.ex);
  }
  std::vector<double> lx, ly;
  for (double delta : deltas) {
    PointSet E;
    CubeTree T;
    CoarseField F;
    Vec c = v2(0, 0);
    double R = 1.0;
    const CubeTree* tp = &T;
    const CoarseField* fp = &F;
    int points = 0;
    if (src == ConverseSource::disk) {
      E = thickened_disk(delta);
      const int kmax = static_cast<int>(std::ceil(std::log2(1.0 / delta)));
      T = build_christ_cubes(build_nested_nets(E, -1, kmax), E, 0.5, co);
      F = battery_field(field, T, E, opt.eps, opt.A, opt.seed, opt.ex);
      points = E.size();
    } else {
      c = v2(0.5, 0.5);
      R = 0.5;
      tp = &carpet_tree;
      fp = &carpet_field;
      points = carpet.size();
    }
    const int lines = opt.directions * opt.offsets;
    std::vector<double> sums(lines);
    for_each_index(opt.ex, static_cast<std::size_t>(lines), [&](std::size_t l) {
      const int di = static_cast<int>(l) / opt.offsets, oi = static_cast<int>(l) % opt.offsets;
      const double ang = kPi * (di + 0.5) / opt.directions;
      const Vec u = unit_2d(ang), n = v2(-u(1), u(0));
      const double o = R * (-0.25 + 0.5 * (oi + 0.5) / opt.offsets);
      const double h = std::sqrt(R * R - o * o);
      const Polyline G({Vec(c + o * n - h * u), Vec(c + o * n + h * u)});
      sums[l] = selector_sum(G, *tp, *fp, opt.A, opt.eps, 4.0 * delta * 0.999, 0.25);
    });
    ConverseRow row;
    row.delta = delta;
    row.worst_sum = *std::max_element(sums.begin(), sums.end());
    row.points = points;
    row.lines = lines;
    tab.rows.push_back(row);
    lx.push_back(std::log(1.0 / delta));
    ly.push_back(row.worst_sum);
  }
  tab.fit = linear_fit(lx, ly);
  return tab;
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  return s.substr(a, s.find_last_not_of(" \t") - a + 1);
}

double parse_real(const std::string& raw) {
  const std::string t = trim(raw);
  try {
    std::size_t used = 0;
    double v;
    if (t.rfind("2^", 0) == 0) {
      const int e = std::stoi(t.substr(2), &used);
      used += 2;
      v = std::ldexp(1.0, e);
    } else {
      v = std::stod(t, &used);
    }
    if (used != t.size()) throw Error("");
    return v;
  } catch (const std::exception&) {
    throw Error("cannot parse number '" + t + "'");
  }
}

}  // namespace

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!trim(item).empty()) out.push_back(parse_real(item));
  return out;
}

std::vector<double> parse_deltas(const std::string& text) {
  const auto dots = text.find("..");
  if (dots == std::string::npos) return parse_real_list(text);
  const std::string a = trim(text.substr(0, dots)), b = trim(text.substr(dots + 2));
  if (a.rfind("2^", 0) != 0 || b.rfind("2^", 0) != 0) throw Error("ranges must be written 2^i..2^j");
  const int i = static_cast<int>(std::lround(std::log2(parse_real(a))));
  const int j = static_cast<int>(std::lround(std::log2(parse_real(b))));
  std::vector<double> out;
  for (int e = i; i >= j ? e >= j : e <= j; e += i >= j ? -1 : 1) out.push_back(std::ldexp(1.0, e));
  return out;
}

std::vector<PSweepRow> p_sweep(const DiamondSchedule& S, const std::vector<double>& p_list, const BlowupOptions& base) {
  std::vector<PSweepRow> out;
  for (double p : p_list) {
    if (!(p > 0 && p <= 4)) throw Error("p values must lie in (0, 4]");
    BlowupOptions o = base;
    o.p = p;
    for (const auto& r : expected_blowup(S, o).rows) out.push_back({p, r});
  }
  return out;
}

std::string p_sweep_csv(const std::vector<PSweepRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "p,level,a_n,mean_sum,ratio_to_bound,trials,seed\n";
  for (const auto& r : rows)
    os << r.p << ',' << r.row.level << ',' << r.row.a << ',' << r.row.mean_sum << ',' << r.row.ratio << ','
       << r.row.trials << ',' << r.row.seed << '\n';
  return os.str();
}

}  // namespace ctf
