#include "subfactorlab/jsonio.hpp"

#include <cstdio>
#include <fstream>

#include "subfactorlab/errors.hpp"

namespace sfl {

Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded()) throw InputError("malformed JSON in '" + path + "'");
    return j;
}

void save_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

double parse_weight(const Json& v, const std::string& where) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        try {
            std::size_t used = 0;
            const std::string s = v.get<std::string>();
            double out = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return out;
        } catch (const std::exception&) {
            throw InputError(where + ": '" + v.get<std::string>() + "' is not a decimal number");
        }
    }
    throw InputError(where + ": expected a decimal number or string");
}

Json emit_weight(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return Json(std::string(buf));
}

cx parse_complex(const Json& v, const std::string& where) {
    if (v.is_number()) return cx(v.get<double>(), 0.0);
    if (!v.is_array() || v.size() != 2)
        throw InputError(where + ": expected a [re, im] pair");
    return cx(parse_weight(v[0], where + "[0]"), parse_weight(v[1], where + "[1]"));
}

Json emit_complex(cx v) { return Json::array({emit_weight(v.real()), emit_weight(v.imag())}); }

namespace {

std::vector<std::string> string_list(const Json& j, const std::string& where) {
    if (!j.is_array()) throw InputError(where + ": expected an array of strings");
    std::vector<std::string> out;
    for (const auto& v : j) {
        if (!v.is_string()) throw InputError(where + ": expected an array of strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

const Json& field(const Json& j, const std::string& key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw InputError(where + ": missing key \"" + key + "\"");
    return *it;
}

WeightedBipartiteGraph graph_from_json_impl(const Json& j, bool require_weights) {
    if (!j.is_object()) throw InputError("graph: expected a JSON object");
    WeightedBipartiteGraph g;
    g.v0 = string_list(field(j, "v0", "graph"), "graph.v0");
    g.v1 = string_list(field(j, "v1", "graph"), "graph.v1");
    const Json& edges = field(j, "edges", "graph");
    if (!edges.is_array()) throw InputError("graph.edges: expected an array");
    int k = 0;
    for (const auto& e : edges) {
        const std::string where = "graph.edges[" + std::to_string(k++) + "]";
        if (!e.is_object()) throw InputError(where + ": expected an object");
        GraphEdge ge;
        ge.id = field(e, "id", where).get<std::string>();
        ge.src = field(e, "src", where).get<std::string>();
        ge.dst = field(e, "dst", where).get<std::string>();
        if (require_weights)
            g.weight[ge.id] = parse_weight(field(e, "w", where), where + ".w");
        else
            g.weight[ge.id] = e.contains("w") ? parse_weight(e["w"], where + ".w") : 1.0;
        g.edges.push_back(ge);
    }
    const Json& bar = field(j, "bar", "graph");
    if (!bar.is_object()) throw InputError("graph.bar: expected an object");
    for (const auto& [id, rid] : bar.items()) {
        if (!rid.is_string()) throw InputError("graph.bar: values must be edge ids");
        g.bar[id] = rid.get<std::string>();
    }
    try {
        g.validate();
    } catch (const InputError& err) {
        throw InputError(std::string("graph: ") + err.what());
    }
    return g;
}

} // namespace

WeightedBipartiteGraph graph_from_json(const Json& j) { return graph_from_json_impl(j, true); }

Json graph_to_json(const WeightedBipartiteGraph& g) {
    Json j;
    j["v0"] = g.v0;
    j["v1"] = g.v1;
    j["edges"] = Json::array();
    for (const auto& e : g.edges)
        j["edges"].push_back(
            {{"id", e.id}, {"src", e.src}, {"dst", e.dst}, {"w", emit_weight(g.weight.at(e.id))}});
    j["bar"] = Json::object();
    for (const auto& [id, rid] : g.bar) j["bar"][id] = rid;
    return j;
}

bool has_vertex_weighting(const Json& j) { return j.is_object() && j.contains("nu"); }

VertexWeighting vertex_weighting_from_json(const Json& j) {
    const Json& nu = field(j, "nu", "graph");
    if (!nu.is_object()) throw InputError("graph.nu: expected an object");
    VertexWeighting w;
    for (const auto& [vert, val] : nu.items())
        w.nu[vert] = parse_weight(val, "graph.nu." + vert);
    return w;
}

WeightedBipartiteGraph resolved_graph_from_json(const Json& j) {
    if (!has_vertex_weighting(j)) return graph_from_json(j);
    WeightedBipartiteGraph g = graph_from_json_impl(j, false);
    g.weight = edge_weights_from_vertex_weighting(g, vertex_weighting_from_json(j));
    return g;
}

SquarePartiteGraph square_from_json(const Json& j) {
    if (!j.is_object()) throw InputError("square graph: expected a JSON object");
    SquarePartiteGraph sq;
    sq.lambda0 = graph_from_json(field(j, "lambda0", "square graph"));
    sq.lambda1 = graph_from_json(field(j, "lambda1", "square graph"));
    sq.omega0 = graph_from_json(field(j, "omega0", "square graph"));
    sq.omega1 = graph_from_json(field(j, "omega1", "square graph"));
    sq.v00 = sq.lambda0.v0;
    sq.v10 = sq.lambda0.v1;
    sq.v01 = sq.lambda1.v0;
    sq.v11 = sq.lambda1.v1;
    try {
        sq.validate();
    } catch (const InputError& err) {
        throw InputError(std::string("square graph: ") + err.what());
    }
    return sq;
}

Json square_to_json(const SquarePartiteGraph& sq) {
    Json j;
    j["lambda0"] = graph_to_json(sq.lambda0);
    j["lambda1"] = graph_to_json(sq.lambda1);
    j["omega0"] = graph_to_json(sq.omega0);
    j["omega1"] = graph_to_json(sq.omega1);
    return j;
}

} // namespace sfl
