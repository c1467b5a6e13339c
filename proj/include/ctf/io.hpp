#pragma once

#include "ctf/field.hpp"
#include "ctf/nets.hpp"

#include <string>

namespace ctf {

std::string read_text(const std::string& path, const std::string& producer = "");
void write_text(const std::string& path, const std::string& text);

std::string nets_to_json(const NetHierarchy& H);
NetHierarchy nets_from_json(const std::string& text);

// Cubes with level, center point, parent, children, members and the ball geometry.
std::string cube_tree_to_json(const CubeTree& T);
CubeTree cube_tree_from_json(const std::string& text);

// {params, entries: {cube_id: {dim, basis}}}; doubles round-trip exactly.
std::string field_to_json(const CoarseField& F);
CoarseField field_from_json(const std::string& text);

}  // namespace ctf
