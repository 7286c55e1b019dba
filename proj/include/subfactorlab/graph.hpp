#pragma once

#include <map>
#include <string>
#include <vector>

#include "subfactorlab/report.hpp"
#include "subfactorlab/types.hpp"

namespace sfl {

// One directed edge. Undirected graphs are encoded as pairs of opposite
// directed edges linked by the `bar` involution of the owning graph.
struct GraphEdge {
    std::string id;
    std::string src;
    std::string dst;
};

// Edge-weighted bipartite graph: the vertex set splits into two parts, every
// edge joins the parts, and `bar` pairs each edge with its reversal. The
// interesting weightings are *fair* (outgoing weights sum to a common value d
// at every vertex) and *balanced* (weight(e) * weight(bar(e)) = 1).
struct WeightedBipartiteGraph {
    std::vector<std::string> v0;
    std::vector<std::string> v1;
    std::vector<GraphEdge> edges;
    std::map<std::string, double> weight; // edge id -> positive weight
    std::map<std::string, std::string> bar; // edge id -> id of the reversed edge

    const GraphEdge& edge(const std::string& id) const;
    bool has_vertex(const std::string& v) const;
    bool in_v0(const std::string& v) const;
    // Ids of edges leaving v, in input order.
    std::vector<std::string> edges_from(const std::string& v) const;
    // Ids of edges u -> v, in input order (the basis of the (u,v) block of the
    // graph's Hilbert-space generator).
    std::vector<std::string> edge_ids(const std::string& u, const std::string& v) const;
    // Number of edges u -> v.
    int multiplicity(const std::string& u, const std::string& v) const;
    int degree(const std::string& v) const;

    // Structural sanity: parts disjoint and nonempty labels, edges join the
    // parts, bar is an endpoint-swapping involution defined on every edge,
    // weights positive and defined on every edge. Throws InputError.
    void validate() const;
};

// Positive weighting on vertices; induces a fair balanced edge weighting
// whenever it is an eigenvector of the adjacency matrix (see
// edge_weights_from_vertex_weighting).
struct VertexWeighting {
    std::map<std::string, double> nu;

    double at(const std::string& v) const;
};

// Four bipartite graphs on the corners of a square:
//
//     v10 --omega1-- v11
//      |              |
//   lambda0        lambda1
//      |              |
//     v00 --omega0-- v01
//
// lambda0: v00 <-> v10 and lambda1: v01 <-> v11 are the vertical pair;
// omega0: v00 <-> v01 and omega1: v10 <-> v11 are the horizontal pair.
struct SquarePartiteGraph {
    std::vector<std::string> v00, v01, v10, v11;
    WeightedBipartiteGraph lambda0, lambda1, omega0, omega1;

    // Subgraph corner lists must agree with the stored corners (as sets).
    // Throws InputError.
    void validate() const;
};

// ---------------------------------------------------------------------------
// Verification.
// ---------------------------------------------------------------------------

// Fairness, balance, and local finiteness in one report:
//   - every vertex's outgoing weights sum to d (pass d <= 0 to auto-detect the
//     common sum from the first vertex, commonality tolerance 1e-8),
//   - weight(e) * weight(bar(e)) = 1,
//   - vertex degrees respect the bound degree <= d^2 forced by the two
//     properties above.
CheckReport check_fair(const WeightedBipartiteGraph& g, double d = -1.0,
                       double tol = kDefaultTol);

// Edge weights induced by a vertex weighting: w(e) = nu(dst(e)) / nu(src(e)).
// Requires nu to be a positive adjacency eigenvector, i.e.
//   sum over edges e out of P of nu(dst(e)) = d * nu(P)
// for a common d (auto-detected, tolerance tol); the returned weights are then
// d-fair, and balanced exactly because opposite edges receive reciprocal
// values. Throws AxiomViolationError when no common d exists.
std::map<std::string, double> edge_weights_from_vertex_weighting(
    const WeightedBipartiteGraph& g, const VertexWeighting& w, double tol = 1e-8);

struct PerronData {
    VertexWeighting nu; // positive eigenvector, first part-0 vertex scaled to 1
    double d = 0.0;     // spectral radius of the adjacency matrix
};

// Dominant eigenpair of the (symmetric, nonnegative) adjacency matrix, by
// power iteration on A + I so the bipartite +/- d eigenvalue pair cannot make
// the iteration oscillate. Residual ||A nu - d nu||_inf < 1e-12 on return.
// Throws AxiomViolationError when the graph has no edges or is disconnected.
PerronData perron_data(const WeightedBipartiteGraph& g);

// Opposite-corner path counting: for each pair (P in v00, R in v11) the number
// of length-2 paths P -> R through v01 equals the number through v10, and
// likewise for pairs (Q in v01, S in v10) through v00 versus v11.
CheckReport check_associative(const SquarePartiteGraph& sq);

// ---------------------------------------------------------------------------
// Constructions used by fixtures and higher modules.
// ---------------------------------------------------------------------------

// Path graph on m vertices prefix+"1" .. prefix+"m" (odd positions in part 0),
// consecutive vertices joined by an edge pair, all weights 1.
WeightedBipartiteGraph path_graph(int m, const std::string& prefix = "x");

// nu(prefix+k) = sin(k*pi/(m+1)): the Perron eigenvector of path_graph(m).
VertexWeighting path_graph_sine_weighting(int m, const std::string& prefix = "x");

// Product square: corner (i,j) holds pairs (x, y) with x in part i of a and
// y in part j of b, written "x|y". Vertical subgraphs copy a's edges with the
// second coordinate fixed, horizontal subgraphs copy b's edges; weights are
// inherited from the respective factor, so the square is (d_a, d_b)-fair and
// always associative.
SquarePartiteGraph square_product(const WeightedBipartiteGraph& a,
                                  const WeightedBipartiteGraph& b);

} // namespace sfl
