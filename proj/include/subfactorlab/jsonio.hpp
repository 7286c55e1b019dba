#pragma once

#include <string>

#include "json.hpp"
#include "subfactorlab/graph.hpp"
#include "subfactorlab/types.hpp"

namespace sfl {

using Json = nlohmann::json;

// File helpers; both throw InputError on unreadable files or malformed JSON.
Json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const Json& j);

// Scalar conventions: weights travel as decimal strings (numbers are also
// accepted on input), complex numbers as [re, im] pairs.
double parse_weight(const Json& v, const std::string& where);
Json emit_weight(double v);
cx parse_complex(const Json& v, const std::string& where);
Json emit_complex(cx v);

// Bipartite graph schema:
//   {"v0": [...], "v1": [...],
//    "edges": [{"id": ..., "src": ..., "dst": ..., "w": "1.5"}, ...],
//    "bar": {"ab": "ba", ...}}
// The vertex-weighted variant omits "w" on edges and instead carries a
// top-level "nu": {vertex: weight} object.
WeightedBipartiteGraph graph_from_json(const Json& j);
Json graph_to_json(const WeightedBipartiteGraph& g);

bool has_vertex_weighting(const Json& j);
VertexWeighting vertex_weighting_from_json(const Json& j);

// Loads either schema variant; when "nu" is present the edge weights are the
// ratios it induces.
WeightedBipartiteGraph resolved_graph_from_json(const Json& j);

// Square-partite schema: the four bipartite subgraphs nested under
// "lambda0", "lambda1", "omega0", "omega1" (corner vertex lists are read off
// the subgraphs and cross-checked).
SquarePartiteGraph square_from_json(const Json& j);
Json square_to_json(const SquarePartiteGraph& sq);

} // namespace sfl
