#pragma once

#include <map>
#include <vector>

#include "subfactorlab/tl.hpp"
#include "subfactorlab/types.hpp"

namespace sfl {

// Coordinates on the diagram algebra: fixes the full diagram basis at a given
// strand count and converts elements to/from coefficient vectors.
class TLVectorizer {
public:
    TLVectorizer(int n, bool shaded_left);
    int dim() const { return static_cast<int>(diags_.size()); }
    Vec to_vec(const TLElement& x) const;
    TLElement from_vec(const Vec& v, double d) const;
    const std::vector<TLDiagram>& diagrams() const { return diags_; }

private:
    int n_;
    bool shaded_left_;
    std::vector<TLDiagram> diags_;
    std::map<TLDiagram, int> index_;
};

// Gram matrix G(a,b) = trace(v_a^* v_b) under the Markov trace.
Mat gram_trace(const std::vector<TLElement>& v);

// Numerical rank at threshold tol relative to the largest singular value.
int rank_of(const Mat& M, double tol = kDefaultTol);

// Columns spanning the numerical kernel of M (singular value <= tol scale).
Mat kernel_basis(const Mat& M, double tol = kDefaultTol);

// Distance from x to span(spanning) measured with the trace inner product
// (orthogonal projection residual).
double span_residual(const std::vector<TLElement>& spanning, const TLElement& x);

bool span_contains(const std::vector<TLElement>& spanning, const TLElement& x,
                   double tol = kDefaultTol);

// Mutual containment of two spans under the trace inner product.
bool subspace_equal(const std::vector<TLElement>& a, const std::vector<TLElement>& b,
                    double tol = kDefaultTol);

} // namespace sfl
