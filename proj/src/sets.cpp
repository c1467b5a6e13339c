#include "ctf/sets.hpp"

#include "ctf/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace ctf {

using nlohmann::json;

PointSet gen_sierpinski_carpet(int depth) {
  if (depth < 0 || depth > 8) throw Error("carpet depth must be in [0, 8]");
  std::vector<std::pair<long, long>> cells{{0, 0}};
  for (int l = 0; l < depth; ++l) {
    std::vector<std::pair<long, long>> next;
    next.reserve(cells.size() * 8);
    for (auto [x, y] : cells)
      for (long j = 0; j < 3; ++j)
        for (long i = 0; i < 3; ++i)
          if (i != 1 || j != 1) next.emplace_back(3 * x + i, 3 * y + j);
    cells.swap(next);
  }
  const double denom = 2.0 * std::pow(3.0, depth);
  Eigen::MatrixXd m(2, cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    m(0, c) = (2.0 * cells[c].first + 1.0) / denom;
    m(1, c) = (2.0 * cells[c].second + 1.0) / denom;
  }
  return PointSet(std::move(m), 1.0);
}

PointSet gen_circle(int count) {
  if (count < 3) throw Error("circle needs at least 3 points");
  Eigen::MatrixXd m(2, count);
  for (int i = 0; i < count; ++i) {
    const double t = 2.0 * std::numbers::pi * i / count;
    m(0, i) = std::cos(t);
    m(1, i) = std::sin(t);
  }
  return PointSet(std::move(m), 1.0);
}

PointSet gen_four_corner_cantor(int depth) {
  if (depth < 0 || depth > 10) throw Error("cantor depth must be in [0, 10]");
  std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
  double step = 0.75;
  for (int l = 0; l < depth; ++l) {
    std::vector<std::pair<double, double>> next;
    next.reserve(pts.size() * 4);
    for (auto [x, y] : pts)
      for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 2; ++i) next.emplace_back(x + i * step, y + j * step);
    pts.swap(next);
    step /= 4.0;
  }
  Eigen::MatrixXd m(2, pts.size());
  for (std::size_t c = 0; c < pts.size(); ++c) m.col(c) << pts[c].first, pts[c].second;
  return PointSet(std::move(m), 1.0);
}

PointSet gen_segment(int count, const Vec& a, const Vec& b) {
  if (count < 1) throw Error("segment needs at least one point");
  Eigen::MatrixXd m(a.size(), count);
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    m.col(i) = (1.0 - t) * a + t * b;
  }
  return PointSet(std::move(m), 1.0);
}

PointSet gen_grid(int side_count) {
  if (side_count < 1) throw Error("grid needs at least one point per side");
  Eigen::MatrixXd m(2, side_count * side_count);
  const double h = side_count == 1 ? 0.0 : 1.0 / (side_count - 1);
  for (int j = 0; j < side_count; ++j)
    for (int i = 0; i < side_count; ++i) m.col(j * side_count + i) << i * h, j * h;
  return PointSet(std::move(m), 1.0);
}

PointSet gen_random_cloud(int count, int dim, std::uint64_t seed) {
  if (count < 1 || dim < 1 || dim > kMaxDim) throw Error("bad random cloud parameters");
  Rng rng(seed);
  Eigen::MatrixXd m(dim, count);
  for (int i = 0; i < count; ++i)
    for (int d = 0; d < dim; ++d) m(d, i) = rng.uniform();
  return PointSet(std::move(m), 1.0);
}

SetKind parse_set_kind(const std::string& name) {
  if (name == "carpet") return SetKind::carpet;
  if (name == "cantor") return SetKind::four_corner_cantor;
  if (name == "circle") return SetKind::circle;
  if (name == "segment") return SetKind::segment;
  if (name == "grid") return SetKind::grid;
  if (name == "random") return SetKind::random_cloud;
  if (name == "file") return SetKind::file;
  throw Error("unknown set kind '" + name + "'");
}

PointSet generate(const GeneratorSpec& spec) {
  switch (spec.kind) {
    case SetKind::carpet: return gen_sierpinski_carpet(spec.depth);
    case SetKind::four_corner_cantor: return gen_four_corner_cantor(spec.depth);
    case SetKind::circle: return gen_circle(spec.count);
    case SetKind::grid: return gen_grid(spec.count);
    case SetKind::random_cloud: return gen_random_cloud(spec.count, spec.dim, spec.seed);
    case SetKind::file: return load_pointset(spec.path);
    case SetKind::segment: {
      Vec a = Vec::Zero(2), b = Vec::Zero(2);
      b(0) = 1.0;
      if (!spec.params.empty()) {
        if (spec.params.size() % 2 != 0) throw Error("segment endpoints need 2n numbers");
        const int n = static_cast<int>(spec.params.size() / 2);
        a.resize(n);
        b.resize(n);
        for (int i = 0; i < n; ++i) {
          a(i) = spec.params[i];
          b(i) = spec.params[n + i];
        }
      }
      return gen_segment(spec.count, a, b);
    }
  }
  throw Error("unhandled set kind");
}

std::string pointset_to_json_text(const PointSet& E) {
  json j;
  j["dim"] = E.dim();
  j["scale"] = E.scale();
  json pts = json::array();
  for (int i = 0; i < E.size(); ++i) {
    json p = json::array();
    for (int d = 0; d < E.dim(); ++d) p.push_back(E.matrix()(d, i));
    pts.push_back(std::move(p));
  }
  j["points"] = std::move(pts);
  return j.dump();
}

PointSet pointset_from_json_text(const std::string& text, int expected_dim) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t off = std::min<std::size_t>(e.byte, text.size());
    const long line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(off), '\n');
    std::ostringstream os;
    os << "parse error at line " << line << ", offset " << e.byte << ": " << e.what();
    throw Error(os.str());
  }
  try {
    const int dim = j.at("dim").get<int>();
    if (expected_dim > 0 && dim != expected_dim)
      throw Error("dimension mismatch: file has dim " + std::to_string(dim) + ", session expects " +
                  std::to_string(expected_dim));
    const double scale = j.value("scale", 1.0);
    const auto& pts = j.at("points");
    Eigen::MatrixXd m(dim, pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (pts[i].size() != static_cast<std::size_t>(dim))
        throw Error("dimension mismatch: point " + std::to_string(i) + " has " +
                    std::to_string(pts[i].size()) + " coordinates");
      for (int d = 0; d < dim; ++d) m(d, i) = pts[i][d].get<double>();
    }
    return PointSet(std::move(m), scale);
  } catch (const json::exception& e) {
    throw Error(std::string("invalid point-set file: ") + e.what());
  }
}

void save_pointset(const PointSet& E, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << pointset_to_json_text(E) << '\n';
}

PointSet load_pointset(const std::string& path, int expected_dim) {
  std::ifstream in(path);
  if (!in) throw Error("missing point-set file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return pointset_from_json_text(ss.str(), expected_dim);
}

}  // namespace ctf
