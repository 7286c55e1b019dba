#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "subfactorlab/bighilb.hpp"
#include "subfactorlab/graph.hpp"
#include "subfactorlab/lattice.hpp"
#include "subfactorlab/report.hpp"
#include "subfactorlab/types.hpp"

namespace sfl {

// ---------------------------------------------------------------------------
// Block-diagonal elements and towers of finite-dimensional algebras.
// ---------------------------------------------------------------------------

// Element of a finite-dimensional *-algebra presented as a direct sum of full
// matrix algebras: one dense complex matrix per central summand.
struct AlgElem {
    std::vector<Mat> blocks;

    static AlgElem zeros(const std::vector<int>& dims);
    static AlgElem identity(const std::vector<int>& dims);
    // Zero everywhere except entry (i,j) of block c.
    static AlgElem unit(const std::vector<int>& dims, int c, int i, int j);
    std::vector<int> dims() const;
};

AlgElem alg_add(const AlgElem& a, const AlgElem& b);
AlgElem alg_sub(const AlgElem& a, const AlgElem& b);
AlgElem alg_mul(const AlgElem& a, const AlgElem& b);
AlgElem alg_scale(const AlgElem& a, cx s);
AlgElem alg_adjoint(const AlgElem& a);
// Largest entry magnitude of a - b (the blocks must be parallel in shape).
double alg_distance(const AlgElem& a, const AlgElem& b);
double alg_norm_max(const AlgElem& a);
// All block entries concatenated into one column vector (blockwise
// column-major); fixes the coordinates used for rank/kernel computations.
Vec alg_flatten(const AlgElem& a);

// An increasing chain M_0 ⊆ M_1 ⊆ ... ⊆ M_{n_max} of block algebras with
// conditional expectations E_n: M_n -> M_{n-1} and distinguished projections
// e_n ∈ M_{n+1}.  Levels are explicit block-dimension lists; the connecting
// maps act on block-diagonal elements and are supplied as callables, so both
// graph-derived towers and hand-built ones share one representation.
//
// Index conventions: inclusions[n] maps level n to level n+1 and
// expectations[n] is E_{n+1}: level n+1 -> level n (both for
// 0 <= n < n_max); jones[n] = e_n lives in level n+1 (1 <= n < n_max,
// index 0 unused).
struct AbstractTower {
    double d = 0.0;
    std::vector<std::vector<int>> level_dims;
    std::vector<std::function<AlgElem(const AlgElem&)>> inclusions;
    std::vector<std::function<AlgElem(const AlgElem&)>> expectations;
    std::vector<AlgElem> jones;

    int n_max() const { return static_cast<int>(level_dims.size()) - 1; }
    // Linear dimension of level n (sum of squared block dims).
    int level_dim(int n) const;
    // M_n -> M_{n+1}; throws IndexError outside 0 <= n < n_max.
    AlgElem include(int n, const AlgElem& x) const;
    // Iterated inclusion M_from -> M_to (from <= to).
    AlgElem include_to(int from, int to, const AlgElem& x) const;
    // E_k: M_k -> M_{k-1}; throws IndexError outside 1 <= k <= n_max.
    AlgElem expect(int k, const AlgElem& x) const;
    // e_k ∈ M_{k+1}; throws IndexError outside 1 <= k < n_max.
    const AlgElem& e(int k) const;
    // Matrix-unit basis of level n (block-major, then row-major per block).
    std::vector<AlgElem> basis(int n) const;
    // Shape consistency of all stored data; throws InputError.
    void validate() const;
};

// The state E_1 ∘ E_2 ∘ ... ∘ E_n applied to x ∈ M_n (a positive unital
// functional; tracial exactly when the tower admits a Markov trace).
cx expectation_state(const AbstractTower& t, int n, const AlgElem& x);

// ---------------------------------------------------------------------------
// Towers built from a weighted bipartite graph.
// ---------------------------------------------------------------------------

// Level n is End of the base-row restriction of the n-th alternating tensor
// power of the graph's generator, one block per terminal vertex; e_n is the
// normalized cup-cap insertion at tensor positions n, n+1 and E_{n+1} closes
// the last strand with the weighting's duality pair (choice fixed by the
// position parity).
struct MarkovTower {
    AbstractTower core;
    WeightedBipartiteGraph graph;
    std::string base;
    DualityData duality;
    // Row-restricted alternating powers, one per level.
    std::vector<BigradedSpace> spaces;
    // Terminal vertex of each block, per level (ascending vertex order).
    std::vector<std::vector<std::string>> block_vertex;
};

// Requires a fair balanced weighting (AxiomViolationError otherwise), base in
// part 0 (InputError), 0 <= n_max <= 8 and block dims <= 64 (IndexError).
MarkovTower build_path_tower(const WeightedBipartiteGraph& g, const std::string& base,
                             int n_max);
// Convenience overload: derives the edge weighting from a vertex weighting
// first (see edge_weights_from_vertex_weighting).
MarkovTower build_path_tower(const WeightedBipartiteGraph& g, const VertexWeighting& nu,
                             const std::string& base, int n_max);

// Checks, per level: inclusions are unital *-homomorphisms; expectations are
// unital bimodule retractions; the e_n are self-adjoint idempotents obeying
// the distant-commutation and modulus braid relations; e_n x e_n = E_n(x) e_n;
// E_{n+1}(e_n) = d^{-2}; pull-down y e_n = d² E_{n+1}(y e_n) e_n; compression
// by e_n retracts the level below; later projections commute with earlier
// levels; the commutant of e_n inside level n is level n-1; and the corner
// e_n M_{n+1} e_n collapses onto M_{n-1} e_n.  The two commutant-dimension
// items are skipped at levels whose linear dimension exceeds an internal work
// cap (the detail string records the coverage).
CheckReport verify_markov_axioms(const AbstractTower& t, double tol = kDefaultTol);
inline CheckReport verify_markov_axioms(const MarkovTower& t, double tol = kDefaultTol) {
    return verify_markov_axioms(t.core, tol);
}

// The 2x2-matrix-factor tower without a trace: level n is the full 2^n x 2^n
// matrix algebra (n-fold tensor power of the 2x2 factor), inclusions append a
// tensor-identity leg, expectations contract the last leg against the state
// diag(mu, 1-mu), and the projections are the rank-1 idempotents built from
// the vector (sqrt(1-mu), 0, 0, sqrt(mu)) on the last two legs — with mu
// alternating between the two roots lambda, 1-lambda of x(1-x) = d^{-2}.
// Requires d^2 > 4 (InputError) so the roots are distinct and in (0,1), and
// n_max <= 6 (IndexError, 64x64 block cap).
AbstractTower example_traceless_tower(double d, int n_max);

// ---------------------------------------------------------------------------
// Old/new decomposition, Bratteli diagram, principal graph.
// ---------------------------------------------------------------------------

// Level n+1 split by the central support of e_n: the blocks where e_n acts
// nonzero span the two-sided ideal M_n e_n M_n ("old"), the rest is its
// central complement ("new").
struct OldNewSplit {
    int n = 0; // the split concerns level n+1
    std::vector<int> old_blocks;
    std::vector<int> new_blocks;
    AlgElem x_projection; // central projection onto the ideal
    AlgElem y_projection; // central projection onto the complement
};

// Requires 1 <= n < n_max.
OldNewSplit old_new_decomposition(const AbstractTower& t, int n);

// Inclusion multiplicities and old/new bookkeeping for every level.
// mult[n](p,q) is the multiplicity of level-n block p inside level-(n+1)
// block q; vertex[n][c] names the principal-graph vertex block c sits over.
struct BratteliData {
    std::vector<std::vector<int>> dims;
    std::vector<RMat> mult;
    std::vector<std::vector<bool>> is_new;
    std::vector<std::vector<std::string>> vertex;
};

struct PrincipalGraphData {
    BratteliData bratteli;
    // The principal graph; all weights are 1 until recover_edge_weighting
    // fills them in.
    WeightedBipartiteGraph graph;
    std::map<std::string, int> depth;       // vertex -> depth of first appearance
    std::map<std::string, int> vertex_dim;  // vertex -> block dim at first appearance
    std::string root;
};

// Computes inclusion multiplicities from block traces of included units,
// classifies blocks old/new by the support of the e's, matches each old block
// to its vertex two levels down through the ideal structure, checks the
// reflection symmetry of the multiplicity data, and assembles the principal
// graph from the new parts (vertices named d<depth>n<index>, root d0n0).
// Throws InputError unless level 0 is one-dimensional; throws
// ExtractionError on non-integral multiplicities, dimension mismatches, or
// reflection failures (non-semisimple numerical degeneracy).
PrincipalGraphData bratteli_and_principal_graph(const AbstractTower& t, double tol = 1e-7);

// ---------------------------------------------------------------------------
// Edge-weighting recovery.
// ---------------------------------------------------------------------------

// Result of transporting the tower onto the path model of its principal
// graph: per adjacent vertex pair (p even depth, q odd depth), the ascending
// eigenvalue multisets weighting the edges p->q (forward) and q->p (reverse),
// plus the principal graph with those weights assigned.
struct RecoveredWeighting {
    PrincipalGraphData principal;
    WeightedBipartiteGraph graph;
    std::map<VertexPair, std::vector<double>> forward;
    std::map<VertexPair, std::vector<double>> reverse;
    CheckReport checks;
};

// Builds level isomorphisms onto the path model inductively (matching
// inclusion multiplicities with seeded random block unitaries), factors each
// transported projection through its last two tensor legs as eps = r† r with
// r of rank one per block, and reads the edge weights off the d^{1/2}-scaled
// reshapes of r: the multiset for a pair at depths (m, m+1) comes from the
// smallest covering level of each parity.  The checks report records the
// factorization residuals, unitarity of the linking maps between consecutive
// splittings, the composite/normalization identities of the transfer maps,
// balance and fairness of the result, agreement across extraction levels,
// and independence from the random isomorphism choice (the pipeline runs
// twice with different seeds).  Pairs whose covering level would exceed
// n_max - 1 fall back to reciprocals of the opposite direction; pairs with
// no data at all keep weight 1 and are flagged.  Throws ExtractionError when
// a splitting has rank != 1 per block or the path model does not match the
// Bratteli data.
RecoveredWeighting recover_edge_weighting(const AbstractTower& t, unsigned seed = 0,
                                          double tol = 1e-7);

// ---------------------------------------------------------------------------
// The diagram-algebra window as a standard module.
// ---------------------------------------------------------------------------

// Represents the lattice cells inside the tower through the evaluation
// e_i -> jones[i] (every cell basis diagram is expanded into a word in the
// generators once, by breadth-first search over diagram products) and checks:
//   (a) the cell (0,i) maps onto a unital subalgebra of M_i whose dimension
//       is the rank of the cell's trace form at this modulus (the action
//       factors through the trace-form radical and no further, because the
//       tower state is faithful), multiplicatively and *-compatibly;
//   (b) E_i intertwines the map with the diagrammatic right expectation;
//   (c) images of cells (k,l) commute with M_i for i <= k <= l.
// Requires |t.d - L.d| <= 1e-9 (InputError): the window and the tower must
// share one modulus.
CheckReport verify_standard_module(const AbstractTower& t, const LambdaLattice& L,
                                   double tol = kDefaultTol);

// ---------------------------------------------------------------------------
// DOT export.
// ---------------------------------------------------------------------------

// Layered view of the inclusion data: one row of nodes per level annotated
// with block dims, parallel edges per multiplicity, new blocks doubly
// circled.
std::string bratteli_dot(const PrincipalGraphData& pg);
// The principal graph alone: vertices annotated with depth and block dim.
std::string principal_graph_dot(const PrincipalGraphData& pg);

} // namespace sfl
