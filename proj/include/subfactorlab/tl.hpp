#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "subfactorlab/errors.hpp"
#include "subfactorlab/types.hpp"

namespace sfl {

// A planar cup/cap diagram on a rectangle with n points on the bottom edge and
// n on the top edge.  Boundary points are numbered 1..2n counterclockwise from
// the bottom-left corner: bottom points 1..n run left to right, top points
// n+1..2n run right to left (the top point of column c is 2n+1-c).
//
// `pairs` is the perfect noncrossing matching of the 2n points, stored
// canonically: each pair (a,b) has a < b and the list is sorted.
//
// Regions between strands are shaded alternately; `shaded_left` records
// whether the region touching the left edge is shaded.  The flag is a type tag
// (it never changes scalar coefficients, which depend on d alone).
struct TLDiagram {
    int n = 0;
    bool shaded_left = false;
    std::vector<std::pair<int, int>> pairs;

    // Sorts endpoints within pairs and pairs within the list.
    void canonicalize();
    // The point matched with p, or throws IndexError if p is unmatched.
    int partner(int p) const;
    // True iff `pairs` is a noncrossing perfect matching of 1..2n.
    bool well_formed() const;
    // True iff column c is a vertical through strand (bottom c joined to top c).
    bool is_through_column(int c) const;

    bool operator==(const TLDiagram& o) const {
        return n == o.n && shaded_left == o.shaded_left && pairs == o.pairs;
    }
    bool operator<(const TLDiagram& o) const {
        if (n != o.n) return n < o.n;
        if (shaded_left != o.shaded_left) return shaded_left < o.shaded_left;
        return pairs < o.pairs;
    }
};

// Ambient algebra parameters: strand count, loop modulus, boundary shading.
struct TLContext {
    int n = 0;
    double d = 2.3;
    bool shaded_left = false;
};

// A finite linear combination of diagrams sharing n, shading and modulus.
// Coefficients with |c| < kPruneEps are dropped by prune().
struct TLElement {
    int n = 0;
    bool shaded_left = false;
    double d = 2.3;
    std::map<TLDiagram, cx> terms;

    static TLElement zero(const TLContext& ctx) {
        return TLElement{ctx.n, ctx.shaded_left, ctx.d, {}};
    }
    TLContext context() const { return TLContext{n, d, shaded_left}; }
    bool is_zero() const { return terms.empty(); }
    // Largest coefficient magnitude (0 for the zero element).
    double sup_norm() const;
    // Drops negligible coefficients in place and returns *this.
    TLElement& prune(double eps = kPruneEps);
};

// All noncrossing perfect matchings on 2n points; the count is Catalan(n).
std::vector<TLDiagram> enumerate_basis(int n, bool shaded_left = false);

// The identity: every column a through strand.
TLElement tl_identity(const TLContext& ctx);
// A single diagram with coefficient 1.
TLElement tl_from_diagram(const TLDiagram& D, double d);

TLElement add(const TLElement& x, const TLElement& y);
TLElement scale(const TLElement& x, cx c);

// Diagrammatic product x.y: x stacked on top of y, matched along the middle
// boundary; every closed loop produced is removed and contributes a factor d.
TLElement multiply(const TLElement& x, const TLElement& y);

// The Jones projection e_i = d^{-1} U_i, where U_i caps strands i,i+1 on the
// bottom and cups them on the top.  Requires 1 <= i <= n-1.
TLElement jones_generator(const TLContext& ctx, int i);

// The adjoint *: reflect every diagram top-to-bottom and conjugate
// coefficients.  Anti-multiplicative and involutive.
TLElement involution(const TLElement& x);

// The normalized Markov trace: a single diagram D contributes
// d^{loops(right closure of D) - n}; tr(identity) = 1 and tr(xy) = tr(yx).
cx markov_trace(const TLElement& x);

// Conditional expectation onto one strand fewer: bends the rightmost strand
// around the right edge with a factor d^{-1}.  Result lives at n-1 strands.
TLElement right_expectation(const TLElement& x);

// Conditional expectation cutting the leftmost non-through strand: requires
// columns 1..i of every diagram to be through strands, bends column i+1
// around the left edge with a factor d^{-1}, and returns an element of the
// same ambient algebra whose columns 1..i+1 are through strands.
TLElement left_expectation(const TLElement& x, int i);

// Prepends m vertical through strands on the left (m >= 0).  For even m = 2k
// this is the unital *-embedding shifting e_i to e_{i+m}; odd m additionally
// flips the boundary shading flag.
TLElement shift_insert(const TLElement& x, int m);

// Appends m vertical through strands on the right (the inclusion into the
// algebra on n+m strands).
TLElement extend_right(const TLElement& x, int m);

// Inserts m vertical through strands between columns pos and pos+1
// (0 <= pos <= n).  pos = 0 matches shift_insert, pos = n extend_right.
TLElement insert_through(const TLElement& x, int pos, int m);

// The partial projection family: for k >= 1,
//   word(i, k) = d^{k(k-1)} * product over t = 0..k-1 of the descending run
//                e_{k+i+t} e_{k+i+t-1} ... e_{i+t+1},
// and partial_projection(ctx, i, j, k) = d^{jk} word(i,k) word(i+1,k) ...
// word(i+j,k), an element whose columns 1..i are through strands.  k = 0
// gives the identity.  Requires i, j, k >= 0 and i + j + 2k <= ctx.n.
TLElement partial_projection(const TLContext& ctx, int i, int j, int k);

// Largest absolute coefficient difference between x and y (union of terms).
double coef_distance(const TLElement& x, const TLElement& y);

// Human-readable rendering for error messages and debugging.
std::string to_string(const TLDiagram& D);
std::string to_string(const TLElement& x);

inline TLElement operator+(const TLElement& x, const TLElement& y) { return add(x, y); }
inline TLElement operator-(const TLElement& x, const TLElement& y) { return add(x, scale(y, cx(-1.0, 0.0))); }
inline TLElement operator*(const TLElement& x, const TLElement& y) { return multiply(x, y); }
inline TLElement operator*(cx c, const TLElement& x) { return scale(x, c); }
inline TLElement operator*(double c, const TLElement& x) { return scale(x, cx(c, 0.0)); }

} // namespace sfl
