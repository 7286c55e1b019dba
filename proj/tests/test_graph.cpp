#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "subfactorlab/errors.hpp"
#include "subfactorlab/graph.hpp"
#include "subfactorlab/jsonio.hpp"
#include "subfactorlab/types.hpp"

namespace {

using namespace sfl;

std::string fixture(const std::string& name) {
    return std::string(SFL_FIXTURE_DIR) + "/" + name;
}

// Three-vertex path a - b - c with the fair weighting at sqrt(2), written out
// by hand so library constructions can be checked against it.
WeightedBipartiteGraph a3_graph() {
    WeightedBipartiteGraph g;
    g.v0 = {"a", "c"};
    g.v1 = {"b"};
    const double r2 = std::sqrt(2.0);
    g.edges = {{"ab", "a", "b"}, {"ba", "b", "a"}, {"cb", "c", "b"}, {"bc", "b", "c"}};
    g.weight = {{"ab", r2}, {"ba", 1.0 / r2}, {"cb", r2}, {"bc", 1.0 / r2}};
    g.bar = {{"ab", "ba"}, {"ba", "ab"}, {"cb", "bc"}, {"bc", "cb"}};
    return g;
}

// Complete bipartite graph on 2+2 vertices, all weights one (2-regular).
WeightedBipartiteGraph k22_graph() {
    WeightedBipartiteGraph g;
    g.v0 = {"u1", "u2"};
    g.v1 = {"w1", "w2"};
    for (const std::string& u : g.v0)
        for (const std::string& w : g.v1) {
            g.edges.push_back({u + w, u, w});
            g.edges.push_back({w + u, w, u});
            g.weight[u + w] = 1.0;
            g.weight[w + u] = 1.0;
            g.bar[u + w] = w + u;
            g.bar[w + u] = u + w;
        }
    return g;
}

// Independent path-count oracle for square associativity: assemble directed
// multiplicity matrices over the union of all corners and compare the two
// matrix products entrywise (the per-pair loop in the library never forms
// matrices).
bool associative_by_matrix_oracle(const SquarePartiteGraph& sq) {
    std::vector<std::string> all = sq.v00;
    all.insert(all.end(), sq.v01.begin(), sq.v01.end());
    all.insert(all.end(), sq.v10.begin(), sq.v10.end());
    all.insert(all.end(), sq.v11.begin(), sq.v11.end());
    std::map<std::string, int> idx;
    for (int k = 0; k < static_cast<int>(all.size()); ++k) idx[all[k]] = k;
    const int n = static_cast<int>(all.size());
    auto adjacency = [&](const WeightedBipartiteGraph& g) {
        RMat m = RMat::Zero(n, n);
        for (const auto& e : g.edges) m(idx.at(e.src), idx.at(e.dst)) += 1.0;
        return m;
    };
    RMat l0 = adjacency(sq.lambda0), l1 = adjacency(sq.lambda1);
    RMat o0 = adjacency(sq.omega0), o1 = adjacency(sq.omega1);
    double worst = 0.0;
    RMat d1 = o0 * l1 - l0 * o1; // v00 -> v11 both ways
    for (const auto& p : sq.v00)
        for (const auto& r : sq.v11) worst = std::max(worst, std::abs(d1(idx[p], idx[r])));
    RMat d2 = o0 * l0 - l1 * o1; // v01 -> v10 both ways
    for (const auto& q : sq.v01)
        for (const auto& s : sq.v10) worst = std::max(worst, std::abs(d2(idx[q], idx[s])));
    return worst < 0.5;
}

} // namespace

TEST_CASE("fairness holds on the three-vertex path at sqrt(2)") {
    WeightedBipartiteGraph g = a3_graph();
    const double d = std::sqrt(2.0);

    // Hand sums first: one edge leaves each endpoint, two leave the middle.
    CHECK(std::abs(g.weight["ab"] - d) < 1e-15);
    CHECK(std::abs(g.weight["ba"] + g.weight["bc"] - d) < 1e-15);

    CheckReport rep = check_fair(g, d, 1e-12);
    CHECK(rep.passed());
    CHECK(rep.worst() < 1e-15);

    // The middle vertex meets the degree bound with equality: 2 = d^2.
    CHECK(g.degree("b") == 2);

    // Auto-detection finds the same value.
    CHECK(check_fair(g).passed());
}

TEST_CASE("a single unit-weight edge is fair exactly at one") {
    WeightedBipartiteGraph g;
    g.v0 = {"p"};
    g.v1 = {"q"};
    g.edges = {{"pq", "p", "q"}, {"qp", "q", "p"}};
    g.weight = {{"pq", 1.0}, {"qp", 1.0}};
    g.bar = {{"pq", "qp"}, {"qp", "pq"}};
    CHECK(check_fair(g, 1.0).passed());
    CHECK(!check_fair(g, 1.3).passed());
}

TEST_CASE("a perturbed weight fails fairness and the failure names the vertex") {
    WeightedBipartiteGraph g = a3_graph();
    g.weight["ba"] = 0.8;
    CheckReport rep = check_fair(g, std::sqrt(2.0));
    CHECK(!rep.passed());
    CHECK(rep.first_failure().find("[b]") != std::string::npos);
}

TEST_CASE("a vertex weighting induces fair balanced edge weights") {
    WeightedBipartiteGraph g = a3_graph();
    const double d = std::sqrt(2.0);
    VertexWeighting nu;
    nu.nu = {{"a", 1.0}, {"b", d}, {"c", 1.0}};

    auto w = edge_weights_from_vertex_weighting(g, nu);
    CHECK(std::abs(w["ab"] - d) < 1e-15);
    CHECK(std::abs(w["ba"] - 1.0 / d) < 1e-15);
    CHECK(std::abs(w["cb"] - d) < 1e-15);
    // Balance holds to the last bit: reversal weights are stored reciprocals.
    CHECK(w["ab"] * w["ba"] == 1.0);
    CHECK(w["cb"] * w["bc"] == 1.0);

    g.weight = w;
    CheckReport rep = check_fair(g, d, 1e-10);
    CHECK(rep.passed());
}

TEST_CASE("a constant weighting on a regular graph gives unit weights") {
    WeightedBipartiteGraph g = k22_graph();
    VertexWeighting nu;
    for (const auto& v : {"u1", "u2", "w1", "w2"}) nu.nu[v] = 3.7;
    auto w = edge_weights_from_vertex_weighting(g, nu);
    for (const auto& [id, val] : w) {
        (void)id;
        CHECK(val == 1.0);
    }
    g.weight = w;
    CHECK(check_fair(g, 2.0, 1e-12).passed()); // fair at the degree
}

TEST_CASE("the sine weighting on the four-vertex path is fair at the golden mean") {
    WeightedBipartiteGraph g = path_graph(4, "x");
    VertexWeighting nu = path_graph_sine_weighting(4, "x");
    g.weight = edge_weights_from_vertex_weighting(g, nu);
    const double golden = 2.0 * std::cos(std::acos(-1.0) / 5.0);
    CheckReport rep = check_fair(g, golden, 1e-12);
    CHECK(rep.passed());
    // The spectral radius found numerically matches the closed form too.
    CHECK(std::abs(perron_data(g).d - golden) < 1e-12);
}

TEST_CASE("a non-eigenvector weighting is rejected") {
    WeightedBipartiteGraph g = a3_graph();
    VertexWeighting nu;
    nu.nu = {{"a", 1.0}, {"b", std::sqrt(2.0)}, {"c", 1.2}};
    CHECK_THROWS_AS(edge_weights_from_vertex_weighting(g, nu), AxiomViolationError);
}

TEST_CASE("power iteration reproduces closed-form spectral radii") {
    // Path on m vertices has spectral radius 2 cos(pi/(m+1)).
    const double pi = std::acos(-1.0);
    for (int m : {2, 3, 4, 5, 6}) {
        WeightedBipartiteGraph g = path_graph(m, "p");
        PerronData pd = perron_data(g);
        CHECK(std::abs(pd.d - 2.0 * std::cos(pi / (m + 1))) < 1e-12);
        // Residual oracle: neighbour sums reproduce d * nu at every vertex.
        for (const auto& [v, val] : pd.nu.nu) {
            double s = 0.0;
            for (const auto& id : g.edges_from(v)) s += pd.nu.nu.at(g.edge(id).dst);
            CHECK(std::abs(s - pd.d * val) < 1e-12);
        }
    }
    CHECK(std::abs(perron_data(a3_graph()).d - std::sqrt(2.0)) < 1e-13);
    // The five-vertex path's eigenvector is the sine profile.
    PerronData p5 = perron_data(path_graph(5, "p"));
    CHECK(std::abs(p5.d - std::sqrt(3.0)) < 1e-12);
    VertexWeighting sine = path_graph_sine_weighting(5, "p");
    double ratio = sine.nu.at("p1") / p5.nu.nu.at("p1");
    for (int k = 1; k <= 5; ++k) {
        std::string v = "p" + std::to_string(k);
        CHECK(std::abs(p5.nu.nu.at(v) * ratio - sine.nu.at(v)) < 1e-10);
    }
}

TEST_CASE("degenerate spectral inputs are rejected") {
    WeightedBipartiteGraph lonely;
    lonely.v0 = {"p"};
    CHECK_THROWS_AS(perron_data(lonely), AxiomViolationError);

    // Two disjoint edges: structurally valid but disconnected.
    WeightedBipartiteGraph two;
    two.v0 = {"p", "r"};
    two.v1 = {"q", "s"};
    two.edges = {{"pq", "p", "q"}, {"qp", "q", "p"}, {"rs", "r", "s"}, {"sr", "s", "r"}};
    two.weight = {{"pq", 1.0}, {"qp", 1.0}, {"rs", 1.0}, {"sr", 1.0}};
    two.bar = {{"pq", "qp"}, {"qp", "pq"}, {"rs", "sr"}, {"sr", "rs"}};
    CHECK_THROWS_AS(perron_data(two), AxiomViolationError);
}

TEST_CASE("the product square of two paths is associative and corner-fair") {
    SquarePartiteGraph sq = square_product(a3_graph(), a3_graph());
    CHECK(sq.v00.size() == 4);
    CHECK(sq.v01.size() == 2);
    CHECK(sq.v10.size() == 2);
    CHECK(sq.v11.size() == 1);

    CheckReport rep = check_associative(sq);
    CHECK(rep.passed());
    CHECK(associative_by_matrix_oracle(sq));

    const double d = std::sqrt(2.0);
    CHECK(check_fair(sq.lambda0, d).passed());
    CHECK(check_fair(sq.lambda1, d).passed());
    CHECK(check_fair(sq.omega0, d).passed());
    CHECK(check_fair(sq.omega1, d).passed());
}

TEST_CASE("deleting one edge pair breaks associativity") {
    SquarePartiteGraph sq = square_product(a3_graph(), a3_graph());
    auto& l1 = sq.lambda1;
    std::erase_if(l1.edges, [](const GraphEdge& e) { return e.id == "cb|b" || e.id == "bc|b"; });
    l1.weight.erase("cb|b");
    l1.weight.erase("bc|b");
    l1.bar.erase("cb|b");
    l1.bar.erase("bc|b");

    CheckReport rep = check_associative(sq);
    CHECK(!rep.passed());
    CHECK(!associative_by_matrix_oracle(sq));
    CHECK(!rep.first_failure().empty());
}

TEST_CASE("the all-singleton square passes associativity") {
    WeightedBipartiteGraph one;
    one.v0 = {"p"};
    one.v1 = {"q"};
    one.edges = {{"pq", "p", "q"}, {"qp", "q", "p"}};
    one.weight = {{"pq", 1.0}, {"qp", 1.0}};
    one.bar = {{"pq", "qp"}, {"qp", "pq"}};
    SquarePartiteGraph sq = square_product(one, one);
    CHECK(check_associative(sq).passed());
    CHECK(associative_by_matrix_oracle(sq));
}

TEST_CASE("graph JSON fixtures load, round-trip, and validate") {
    WeightedBipartiteGraph g = graph_from_json(load_json_file(fixture("a3.json")));
    WeightedBipartiteGraph ref = a3_graph();
    CHECK(g.v0 == ref.v0);
    CHECK(g.v1 == ref.v1);
    REQUIRE(g.edges.size() == ref.edges.size());
    for (const auto& e : ref.edges) {
        CHECK(std::abs(g.weight.at(e.id) - ref.weight.at(e.id)) < 1e-15);
        CHECK(g.bar.at(e.id) == ref.bar.at(e.id));
    }
    CHECK(check_fair(g, std::sqrt(2.0)).passed());

    // Serialization round-trip is the identity.
    WeightedBipartiteGraph h = graph_from_json(graph_to_json(g));
    for (const auto& e : g.edges) CHECK(h.weight.at(e.id) == g.weight.at(e.id));

    // Vertex-weighted variant resolves to the same weights.
    Json jnu = load_json_file(fixture("a3_nu.json"));
    CHECK(has_vertex_weighting(jnu));
    WeightedBipartiteGraph gnu = resolved_graph_from_json(jnu);
    for (const auto& e : ref.edges) CHECK(std::abs(gnu.weight.at(e.id) - ref.weight.at(e.id)) < 1e-12);

    // Sine-weighted path fixtures are fair at their closed-form values.
    WeightedBipartiteGraph a4 = resolved_graph_from_json(load_json_file(fixture("a4_nu.json")));
    CHECK(check_fair(a4, 2.0 * std::cos(std::acos(-1.0) / 5.0), 1e-9).passed());
    WeightedBipartiteGraph a5 = resolved_graph_from_json(load_json_file(fixture("a5_nu.json")));
    CHECK(check_fair(a5, std::sqrt(3.0), 1e-9).passed());

    // The perturbed fixture fails fairness.
    WeightedBipartiteGraph bad = graph_from_json(load_json_file(fixture("a3_bad_weight.json")));
    CHECK(!check_fair(bad, std::sqrt(2.0)).passed());

    // Square fixtures.
    SquarePartiteGraph sq = square_from_json(load_json_file(fixture("square_a3xa3.json")));
    CHECK(check_associative(sq).passed());
    SquarePartiteGraph broken =
        square_from_json(load_json_file(fixture("square_missing_edge.json")));
    CHECK(!check_associative(broken).passed());

    // Round-trip through JSON for the square.
    SquarePartiteGraph sq2 = square_from_json(square_to_json(sq));
    CHECK(sq2.v00 == sq.v00);
    CHECK(sq2.lambda0.edges.size() == sq.lambda0.edges.size());
}

TEST_CASE("malformed JSON inputs are rejected with input errors") {
    CHECK_THROWS_AS(load_json_file(fixture("no_such_file.json")), InputError);
    CHECK_THROWS_AS(graph_from_json(Json::parse(R"({"v0": ["a"]})")), InputError);
    CHECK_THROWS_AS(graph_from_json(Json::parse(
                        R"({"v0":["a"],"v1":["b"],"edges":[{"id":"ab","src":"a","dst":"b","w":"x"}],"bar":{}})")),
                    InputError);
    // Edge staying inside one part.
    CHECK_THROWS_AS(graph_from_json(Json::parse(
                        R"({"v0":["a","c"],"v1":["b"],"edges":[{"id":"ac","src":"a","dst":"c","w":"1"}],"bar":{"ac":"ac"}})")),
                    InputError);
    // Broken involution.
    WeightedBipartiteGraph g = a3_graph();
    g.bar["ab"] = "bc";
    CHECK_THROWS_AS(g.validate(), InputError);
}
