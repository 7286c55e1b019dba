#pragma once

#include <map>
#include <utility>
#include <vector>

#include "subfactorlab/report.hpp"
#include "subfactorlab/tl.hpp"
#include "subfactorlab/tl_linalg.hpp"

namespace sfl {

// One cell of the double filtration: the subalgebra of the diagram algebra on
// j strands whose diagrams keep columns 1..i as through strands.
struct LambdaCell {
    int i = 0;
    int j = 0;
    std::vector<TLElement> basis; // linearly independent, single-diagram spans
};

// The grid of cells for 0 <= i <= j <= j_max, all at one modulus.
struct LambdaLattice {
    double d = 2.3;
    int j_max = 0;
    std::map<std::pair<int, int>, LambdaCell> cells;

    const LambdaCell& cell(int i, int j) const;
};

// Populates every cell by closing the Jones generators e_{i+1}..e_{j-1} under
// multiplication (word length capped at 2(j-i), redundant spans pruned).
// Requires d >= 2 and j_max <= 7.
LambdaLattice build_tlj_lattice(double d, int j_max);

// The expectation onto the cell one row up: the unique y in cell (i+1, j)
// solving y e = e x e against the Jones generator bordering the window from
// below (the solve runs with one strand prepended so that the bordering
// generator exists for every i >= 0).  Throws AxiomViolationError when the
// linear system is rank-deficient or inconsistent beyond tol.
TLElement vertical_expectation(const LambdaLattice& L, int i, int j, const TLElement& x,
                               double tol = kDefaultTol);

// Verifies that going right-then-up equals up-then-right out of cell (i, j+1),
// on the whole cell basis.
CheckReport check_commuting_square(const LambdaLattice& L, int i, int j,
                                   double tol = kDefaultTol);

// The 2-shift: evaluates d^{2(j-i)+2} E^l(e_{i+1}...e_j x e_{j+1}...e_{i+1})
// at ambient j+2, landing two cells down the diagonal.  Requires j+2 <= j_max
// so the expectation can be solved.
TLElement shift_map(const LambdaLattice& L, int i, int j, const TLElement& x,
                    double tol = kDefaultTol);

// Basis of {x in span(ambient) : [x, c] = 0 for every constraint c}, computed
// as the kernel of the stacked commutator maps.
std::vector<TLElement> relative_commutant(const std::vector<TLElement>& ambient,
                                          const std::vector<TLElement>& constraints,
                                          double tol = kDefaultTol);

// Verifies that cells over disjoint index windows commute elementwise:
// [cell(i,j), cell(k,l)] = 0 whenever i <= j <= k <= l <= j_max.
CheckReport check_standardness(const LambdaLattice& L, double tol = kDefaultTol);

} // namespace sfl
