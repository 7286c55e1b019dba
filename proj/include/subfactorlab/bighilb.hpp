#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "subfactorlab/graph.hpp"
#include "subfactorlab/report.hpp"
#include "subfactorlab/types.hpp"

namespace sfl {

using VertexPair = std::pair<std::string, std::string>;

// Finitely supported bigraded Hilbert space: a finite ordered orthonormal
// basis per vertex pair, identified by string labels; an absent pair is the
// zero space. Labels never contain '.', which is reserved for joining the
// labels of tensor factors, and each pair's list is kept sorted — so two
// parenthesisations of the same tensor product produce literally equal
// spaces, and the tensor unit (empty label on the diagonal) is strict.
struct BigradedSpace {
    std::map<VertexPair, std::vector<std::string>> basis;

    int dim(const std::string& u, const std::string& v) const;
    const std::vector<std::string>& labels(const std::string& u, const std::string& v) const;
    // Position of a label within its block; throws IndexError when absent.
    int label_index(const std::string& u, const std::string& v, const std::string& label) const;
    int total_dim() const;
    // Sorted, duplicate-free, '.'-clean labels. Throws InputError.
    void validate() const;
    bool operator==(const BigradedSpace&) const = default;
};

// The identity 1-morphism on a vertex set: one basis vector, labeled by the
// empty string, at every diagonal pair.
BigradedSpace unit_space(const std::vector<std::string>& vertices);

// Bigraded operator between two spaces with the same grading: one complex
// matrix per vertex pair, of shape target dim x source dim; absent pair means
// the zero block.
struct BigradedOp {
    BigradedSpace source;
    BigradedSpace target;
    std::map<VertexPair, Mat> blocks;

    // Zero-filled when absent.
    Mat block(const std::string& u, const std::string& v) const;
    void set_block(const std::string& u, const std::string& v, Mat m);
    // Shapes match the endpoint dims; no block outside either support.
    void validate() const;

    static BigradedOp zero(BigradedSpace src, BigradedSpace tgt);
    static BigradedOp identity(const BigradedSpace& h);
};

// ---------------------------------------------------------------------------
// The 2-category operations.
// ---------------------------------------------------------------------------

// Joined label of two tensor factors: the pieces separated by '.', with the
// empty label acting as a strict unit. Single labels never contain '.', so
// the decomposition of a joined label is unambiguous.
std::string join_labels(const std::string& a, const std::string& b);

// One basis vector of a two-step tensor block traced back to its factors:
// the joined label, the middle vertex, and the positions within the factor
// blocks H_{u,mid} and G_{mid,w}.
struct TensorEntry {
    std::string label;
    std::string mid;
    int i = 0;
    int j = 0;
};

// All two-step paths u -> mid -> w through h then g, sorted by joined label —
// the basis order of the (u,w) block of h (x) g. Throws InputError when two
// joined labels collide.
std::vector<TensorEntry> tensor_entries(const BigradedSpace& h, const BigradedSpace& g,
                                        const std::string& u, const std::string& w);

// (H (x) G)_{uw} = direct sum over v of H_{uv} (x) G_{vw}; the basis is the
// set of two-step paths with joined labels, sorted.
BigradedSpace tensor_spaces(const BigradedSpace& h, const BigradedSpace& g);

// Conjugate space: same labels at the transposed pair. An involution.
BigradedSpace dual_space(const BigradedSpace& h);

// Blockwise Kronecker product along each middle vertex, in the basis order of
// tensor_spaces. Strictly associative and unital.
BigradedOp tensor_ops(const BigradedOp& f, const BigradedOp& g);

// Entrywise adjoint per block.
BigradedOp op_dagger(const BigradedOp& f);

// Conjugate operator between the conjugate spaces: entrywise conjugate at the
// transposed pair.
BigradedOp op_dual(const BigradedOp& f);

// g after f, blockwise.
BigradedOp op_compose(const BigradedOp& g, const BigradedOp& f);

BigradedOp op_add(const BigradedOp& a, const BigradedOp& b);
BigradedOp op_scale(const BigradedOp& a, cx s);

// Largest entry of any block of a - b; the operators must be parallel.
double op_distance(const BigradedOp& a, const BigradedOp& b);
double op_norm_max(const BigradedOp& a);

// ---------------------------------------------------------------------------
// Generators and duality data.
// ---------------------------------------------------------------------------

// The graph's Hilbert-space generator K: at (P in part 0, Q in part 1) the
// span of the edges P -> Q, labeled by their edge ids.
BigradedSpace generator_space(const WeightedBipartiteGraph& g);
// The dual generator: edges Q -> P at (Q, P).
BigradedSpace generator_dual_space(const WeightedBipartiteGraph& g);
// K (x) Kbar (x) K (x) ... with n alternating factors.
BigradedSpace alternating_power(const WeightedBipartiteGraph& g, int n);
// Keep only the blocks in the given row.
BigradedSpace row_restrict(const BigradedSpace& h, const std::string& row);

// Evaluation/coevaluation pair for a generator K and its conjugate Kbar:
//   ev_k    : Kbar (x) K -> unit     coev_k  : unit -> K (x) Kbar
// and the derived pair for Kbar, defined as the adjoints
//   ev_kbar   = coev_k^dagger : K (x) Kbar -> unit
//   coev_kbar = ev_k^dagger   : unit -> Kbar (x) K.
// `conj` pairs each K label with its conjugate Kbar label (both directions).
struct DualityData {
    std::vector<std::string> vertices;
    BigradedSpace k;
    BigradedSpace kbar;
    std::map<std::string, std::string> conj;
    BigradedOp ev_k;
    BigradedOp coev_k;

    BigradedOp ev_kbar() const;
    BigradedOp coev_kbar() const;
    BigradedSpace unit() const { return unit_space(vertices); }
};

// The weighting's distinguished duality: coev couples each edge to its
// reversal with coefficient w(e)^{1/2}, ev with w(ebar)^{1/2}; the zigzag
// identities then hold because the weighting is balanced.
DualityData duality_from_weighting(const WeightedBipartiteGraph& g);

// The orthonormal-basis pairing: coefficients are Kronecker deltas. The kbar
// labels are the k labels suffixed by '~' unless a conjugate space is
// supplied.
DualityData standard_duality(const BigradedSpace& k);

// Zigzags for K and Kbar, the adjoint conventions, and (when d > 0) the
// fairness identities ev_kbar o coev_k = d and ev_k o coev_kbar = d.
CheckReport check_duality(const DualityData& dd, double d = -1.0, double tol = kDefaultTol);

// The intrinsic one-sided maps comparing the distinguished duality with the
// standard one: for each generator block (P,Q), the matrix of
//   (id (x) C^st) o (D (x) v^dagger) : Kbar_{QP} -> K_{PQ}
// in the stored bases, which is the coevaluation coefficient matrix
// phi[i][j] = <e_i (x) ebar_j, coev(1)>.
std::map<VertexPair, Mat> phi_maps(const DualityData& dd);
// The same for the conjugate generator, keyed by (Q,P).
std::map<VertexPair, Mat> phi_maps_dual(const DualityData& dd);

// Edge-weight multisets recovered from the duality data alone: for every
// generator block, the eigenvalues of phi phi^dagger (ascending), keyed by
// (P,Q) for the K blocks and (Q,P) for the Kbar blocks.
std::map<VertexPair, std::vector<double>> weighting_from_duality(const DualityData& dd);

} // namespace sfl
