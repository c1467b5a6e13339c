#pragma once

#include "ctf/pointset.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ctf {

enum class SetKind { carpet, four_corner_cantor, circle, segment, grid, random_cloud, file };

struct GeneratorSpec {
  SetKind kind = SetKind::carpet;
  int depth = 3;   // carpet, cantor
  int count = 64;  // circle, segment, grid side, random cloud size
  int dim = 2;     // random cloud
  std::uint64_t seed = 1;
  std::vector<double> params;  // segment: endpoints a, b (2n numbers)
  std::string path;            // file
};

// Centers of the 8^depth surviving squares of side 3^-depth in [0,1]^2.
PointSet gen_sierpinski_carpet(int depth);
PointSet gen_circle(int count);
// Lower-left corners of the 4^depth squares of side 4^-depth kept by the four-corner
// construction (each square keeps its four corner sub-squares of side 1/4).
PointSet gen_four_corner_cantor(int depth);
PointSet gen_segment(int count, const Vec& a, const Vec& b);
PointSet gen_grid(int side_count);
PointSet gen_random_cloud(int count, int dim, std::uint64_t seed);
PointSet generate(const GeneratorSpec& spec);
SetKind parse_set_kind(const std::string& name);

void save_pointset(const PointSet& E, const std::string& path);
// expected_dim = 0 accepts any dimension.
PointSet load_pointset(const std::string& path, int expected_dim = 0);
PointSet pointset_from_json_text(const std::string& text, int expected_dim = 0);
std::string pointset_to_json_text(const PointSet& E);

}  // namespace ctf
