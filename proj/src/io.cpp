#include "ctf/io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace ctf {

using json = nlohmann::ordered_json;

std::string read_text(const std::string& path, const std::string& producer) {
  std::ifstream in(path);
  if (!in) {
    std::string msg = "missing input file: " + path;
    if (!producer.empty()) msg += " (produce it with `ctf " + producer + "` first)";
    throw Error(msg);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

std::string nets_to_json(const NetHierarchy& H) {
  json j;
  j["k_min"] = H.k_min;
  j["k_max"] = H.k_max;
  j["scale"] = H.scale;
  j["levels"] = H.levels;
  j["parent"] = H.parent;
  return j.dump();
}

NetHierarchy nets_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    NetHierarchy H;
    H.k_min = j.at("k_min").get<int>();
    H.k_max = j.at("k_max").get<int>();
    H.scale = j.at("scale").get<double>();
    H.levels = j.at("levels").get<std::vector<std::vector<int>>>();
    H.parent = j.at("parent").get<std::vector<std::vector<int>>>();
    if (static_cast<int>(H.levels.size()) != H.level_count()) throw Error("net level count mismatch");
    return H;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed nets file: ") + e.what());
  }
}

std::string cube_tree_to_json(const CubeTree& T) {
  json j;
  j["s"] = T.s;
  j["net_step"] = T.net_step;
  j["scale"] = T.scale;
  j["j_min"] = T.j_min;
  j["j_max"] = T.j_max;
  j["a0"] = T.a0;
  j["C1"] = T.C1;
  j["ball_factor"] = T.ball_factor;
  json cubes = json::array();
  for (const Cube& c : T.cubes) {
    std::vector<double> z(T.centers.rows());
    for (Eigen::Index d = 0; d < T.centers.rows(); ++d) z[d] = T.centers(d, c.id);
    cubes.push_back({{"id", c.id},
                     {"level", c.level},
                     {"center", c.center},
                     {"z", z},
                     {"radius", T.ball(c.id).radius},
                     {"parent", c.parent},
                     {"children", c.children},
                     {"members", c.members}});
  }
  j["cubes"] = cubes;
  return j.dump();
}

CubeTree cube_tree_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    CubeTree T;
    T.s = j.at("s").get<double>();
    T.net_step = j.at("net_step").get<int>();
    T.scale = j.at("scale").get<double>();
    T.j_min = j.at("j_min").get<int>();
    T.j_max = j.at("j_max").get<int>();
    T.a0 = j.at("a0").get<double>();
    T.C1 = j.at("C1").get<double>();
    T.ball_factor = j.at("ball_factor").get<double>();
    const auto& cs = j.at("cubes");
    const int n = static_cast<int>(cs.size());
    const int dim = n > 0 ? static_cast<int>(cs[0].at("z").size()) : 0;
    T.centers.resize(dim, n);
    T.by_level.assign(T.j_max - T.j_min + 1, {});
    for (int i = 0; i < n; ++i) {
      const auto& c = cs[i];
      Cube q;
      q.id = c.at("id").get<int>();
      if (q.id != i) throw Error("cube ids must be consecutive");
      q.level = c.at("level").get<int>();
      q.center = c.at("center").get<int>();
      q.parent = c.at("parent").get<int>();
      q.children = c.at("children").get<std::vector<int>>();
      q.members = c.at("members").get<std::vector<int>>();
      const auto z = c.at("z").get<std::vector<double>>();
      for (int d = 0; d < dim; ++d) T.centers(d, i) = z[d];
      T.by_level.at(q.level - T.j_min).push_back(i);
      T.cubes.push_back(std::move(q));
    }
    return T;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed cube file: ") + e.what());
  }
}

std::string field_to_json(const CoarseField& F) {
  const FieldParams& P = F.params;
  json j;
  j["params"] = {{"eps", P.eps},
                 {"A", P.A},
                 {"d", P.d},
                 {"eps0", P.eps0},
                 {"eps1", P.eps1},
                 {"Lambda", P.Lambda},
                 {"eps2", P.eps2},
                 {"slack", P.slack},
                 {"chain_ratio", P.chain_ratio},
                 {"C_d", P.C_d},
                 {"angle_floor", P.angle_floor},
                 {"max_candidates", P.max_candidates},
                 {"fast_planar", P.fast_planar}};
  json entries = json::object();
  for (const auto& [id, V] : F.entries) {
    json basis = json::array();
    for (int c = 0; c < V.dim(); ++c) {
      std::vector<double> col(V.ambient());
      for (int r = 0; r < V.ambient(); ++r) col[r] = V.basis()(r, c);
      basis.push_back(col);
    }
    json e = {{"dim", V.dim()}, {"ambient", V.ambient()}, {"basis", basis}};
    if (F.N.count(id)) e["N"] = F.N.at(id);
    if (F.khat.count(id)) e["khat"] = F.khat.at(id);
    entries[std::to_string(id)] = e;
  }
  j["entries"] = entries;
  return j.dump();
}

CoarseField field_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    CoarseField F;
    const auto& p = j.at("params");
    FieldParams& P = F.params;
    P.eps = p.at("eps").get<double>();
    P.A = p.at("A").get<double>();
    P.d = p.at("d").get<int>();
    P.eps0 = p.at("eps0").get<double>();
    P.eps1 = p.at("eps1").get<double>();
    P.Lambda = p.at("Lambda").get<double>();
    P.eps2 = p.at("eps2").get<std::vector<double>>();
    P.slack = p.at("slack").get<double>();
    P.chain_ratio = p.at("chain_ratio").get<double>();
    P.C_d = p.at("C_d").get<double>();
    P.angle_floor = p.at("angle_floor").get<double>();
    P.max_candidates = p.at("max_candidates").get<int>();
    P.fast_planar = p.at("fast_planar").get<bool>();
    for (const auto& [key, e] : j.at("entries").items()) {
      const int id = std::stoi(key);
      const int dim = e.at("dim").get<int>(), amb = e.at("ambient").get<int>();
      Basis B(amb, dim);
      const auto& cols = e.at("basis");
      for (int c = 0; c < dim; ++c)
        for (int r = 0; r < amb; ++r) B(r, c) = cols.at(c).at(r).get<double>();
      F.entries.emplace(id, dim == 0 ? Subspace(amb) : Subspace::from_orthonormal(B));
      if (e.contains("N")) F.N[id] = e.at("N").get<int>();
      if (e.contains("khat")) F.khat[id] = e.at("khat").get<int>();
    }
    return F;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed field file: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw Error("malformed field file: non-numeric cube id");
  }
}

}  // namespace ctf
