#include "subfactorlab/lattice.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>

#include "subfactorlab/parallel.hpp"

namespace sfl {

// ---------------------------------------------------------------------------
// Coordinates and span utilities.
// ---------------------------------------------------------------------------

TLVectorizer::TLVectorizer(int n, bool shaded_left) : n_(n), shaded_left_(shaded_left) {
    diags_ = enumerate_basis(n, shaded_left);
    for (int k = 0; k < static_cast<int>(diags_.size()); ++k) index_[diags_[k]] = k;
}

Vec TLVectorizer::to_vec(const TLElement& x) const {
    if (x.n != n_ || x.shaded_left != shaded_left_)
        throw DimensionMismatchError("to_vec: element does not match the coordinate system");
    Vec v = Vec::Zero(dim());
    for (const auto& [D, c] : x.terms) {
        auto it = index_.find(D);
        if (it == index_.end())
            throw DimensionMismatchError("to_vec: diagram outside the enumerated basis");
        v[it->second] = c;
    }
    return v;
}

TLElement TLVectorizer::from_vec(const Vec& v, double d) const {
    if (v.size() != dim()) throw DimensionMismatchError("from_vec: wrong coordinate length");
    TLElement out{n_, shaded_left_, d, {}};
    for (int k = 0; k < dim(); ++k)
        if (std::abs(v[k]) >= kPruneEps) out.terms[diags_[k]] = v[k];
    return out;
}

Mat gram_trace(const std::vector<TLElement>& v) {
    const int m = static_cast<int>(v.size());
    Mat G = Mat::Zero(m, m);
    std::vector<TLElement> adj;
    adj.reserve(v.size());
    for (const auto& x : v) adj.push_back(involution(x));
    par::parallel_for_upper(static_cast<std::size_t>(m), [&](std::size_t a, std::size_t b) {
        cx g = markov_trace(multiply(adj[a], v[b]));
        G(static_cast<int>(a), static_cast<int>(b)) = g;
        if (a != b) G(static_cast<int>(b), static_cast<int>(a)) = std::conj(g);
    });
    return G;
}

int rank_of(const Mat& M, double tol) {
    if (M.size() == 0) return 0;
    Eigen::BDCSVD<Mat> svd(M);
    const auto& s = svd.singularValues();
    double cut = tol * std::max(1.0, s.size() ? s[0] : 0.0);
    int r = 0;
    for (int k = 0; k < s.size(); ++k)
        if (s[k] > cut) ++r;
    return r;
}

Mat kernel_basis(const Mat& M, double tol) {
    Eigen::BDCSVD<Mat> svd(M, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    double cut = tol * std::max(1.0, s.size() ? s[0] : 0.0);
    std::vector<int> keep;
    for (int k = 0; k < M.cols(); ++k)
        if (k >= s.size() || s[k] <= cut) keep.push_back(k);
    Mat K(M.cols(), static_cast<int>(keep.size()));
    for (int t = 0; t < static_cast<int>(keep.size()); ++t) K.col(t) = svd.matrixV().col(keep[t]);
    return K;
}

double span_residual(const std::vector<TLElement>& spanning, const TLElement& x) {
    double s = std::real(markov_trace(multiply(involution(x), x)));
    if (spanning.empty()) return std::sqrt(std::max(0.0, s));
    Mat G = gram_trace(spanning);
    Vec g(static_cast<int>(spanning.size()));
    for (int k = 0; k < g.size(); ++k)
        g[k] = markov_trace(multiply(involution(spanning[k]), x));
    Eigen::BDCSVD<Mat> svd(G, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vec alpha = svd.solve(g);
    // Form the best approximant explicitly and measure the leftover in the
    // trace norm.  Evaluating s - <g, alpha> instead would subtract two nearly
    // equal O(1) quantities and cap the attainable accuracy near sqrt(eps).
    TLElement diff = x;
    for (int k = 0; k < alpha.size(); ++k) diff = add(diff, scale(spanning[k], -alpha[k]));
    double r2 = std::real(markov_trace(multiply(involution(diff), diff)));
    return std::sqrt(std::max(0.0, r2));
}

bool span_contains(const std::vector<TLElement>& spanning, const TLElement& x, double tol) {
    double s = std::real(markov_trace(multiply(involution(x), x)));
    return span_residual(spanning, x) <= tol * (1.0 + std::sqrt(std::max(0.0, s)));
}

bool subspace_equal(const std::vector<TLElement>& a, const std::vector<TLElement>& b, double tol) {
    for (const auto& x : a)
        if (!span_contains(b, x, tol)) return false;
    for (const auto& y : b)
        if (!span_contains(a, y, tol)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Lattice construction.
// ---------------------------------------------------------------------------

const LambdaCell& LambdaLattice::cell(int i, int j) const {
    auto it = cells.find({i, j});
    if (it == cells.end())
        throw IndexError("cell (" + std::to_string(i) + "," + std::to_string(j) +
                         ") is outside the built window (j_max=" + std::to_string(j_max) + ")");
    return it->second;
}

LambdaLattice build_tlj_lattice(double d, int j_max) {
    if (d < 2.0)
        throw InputError("build_tlj_lattice: modulus " + std::to_string(d) +
                         " is below the generic regime d >= 2");
    if (j_max < 0 || j_max > 7)
        throw IndexError("build_tlj_lattice: depth must lie in 0..7");
    LambdaLattice L;
    L.d = d;
    L.j_max = j_max;
    for (int j = 0; j <= j_max; ++j) {
        for (int i = 0; i <= j; ++i) {
            LambdaCell cell;
            cell.i = i;
            cell.j = j;
            TLContext ctx{j, d, false};
            // Close the generating set under multiplication.  Products of
            // diagram words are single scaled diagrams, so span growth is
            // exactly "new diagram seen"; the word length cap bounds the
            // search (every diagram is reachable within 2(j-i) letters).
            std::set<TLDiagram> seen;
            std::deque<std::pair<TLDiagram, int>> queue;
            TLElement one = tl_identity(ctx);
            const TLDiagram& unit = one.terms.begin()->first;
            seen.insert(unit);
            queue.push_back({unit, 0});
            const int cap = 2 * (j - i);
            std::vector<TLElement> gens;
            for (int g = i + 1; g <= j - 1; ++g) gens.push_back(jones_generator(ctx, g));
            while (!queue.empty()) {
                auto [D, len] = queue.front();
                queue.pop_front();
                if (len >= cap) continue;
                TLElement x = tl_from_diagram(D, d);
                for (const auto& g : gens) {
                    TLElement p = multiply(x, g);
                    const TLDiagram& PD = p.terms.begin()->first;
                    if (seen.insert(PD).second) queue.push_back({PD, len + 1});
                }
            }
            for (const auto& D : seen) cell.basis.push_back(tl_from_diagram(D, d));
            L.cells[{i, j}] = std::move(cell);
        }
    }
    return L;
}

// ---------------------------------------------------------------------------
// Expectations, shifts, commutants.
// ---------------------------------------------------------------------------

TLElement vertical_expectation(const LambdaLattice& L, int i, int j, const TLElement& x,
                               double tol) {
    if (i < 0 || i >= j) throw IndexError("vertical_expectation: needs 0 <= i < j");
    if (x.n != j || x.d != L.d)
        throw DimensionMismatchError("vertical_expectation: element does not live at ambient " +
                                     std::to_string(j));
    const LambdaCell& target = L.cell(i + 1, j);

    // Prepend one strand so the generator bordering the window from below
    // exists for i = 0 as well; the window's rows shift up by one.
    TLElement xs = shift_insert(x, 1);
    TLContext cs = xs.context();
    TLElement e = jones_generator(cs, i + 1);
    TLElement rhs = multiply(multiply(e, xs), e);

    TLVectorizer coords(cs.n, cs.shaded_left);
    const int m = static_cast<int>(target.basis.size());
    Mat A(coords.dim(), m);
    for (int k = 0; k < m; ++k)
        A.col(k) = coords.to_vec(multiply(shift_insert(target.basis[k], 1), e));
    Vec b = coords.to_vec(rhs);

    Eigen::CompleteOrthogonalDecomposition<Mat> cod(A);
    if (cod.rank() < m)
        throw AxiomViolationError(
            "vertical_expectation: the pull-down map is rank-deficient; the expectation is not "
            "uniquely determined");
    Vec alpha = cod.solve(b);
    double residual = (A * alpha - b).norm();
    if (residual > tol * (1.0 + b.norm()))
        throw AxiomViolationError(
            "vertical_expectation: pull-down system inconsistent (residual " +
            std::to_string(residual) + "); the input does not lie in the expected cell");

    TLElement y = TLElement::zero(TLContext{j, L.d, false});
    for (int k = 0; k < m; ++k) y = add(y, scale(target.basis[k], alpha[k]));
    return y.prune();
}

CheckReport check_commuting_square(const LambdaLattice& L, int i, int j, double tol) {
    CheckReport report;
    const LambdaCell& top = L.cell(i, j + 1);
    double worst = 0.0;
    for (const auto& b : top.basis) {
        TLElement up_then_right = right_expectation(vertical_expectation(L, i, j + 1, b, tol));
        TLElement right_then_up =
            i < j ? vertical_expectation(L, i, j, right_expectation(b), tol)
                  : right_expectation(b); // one-dimensional corner: nothing to project
        worst = std::max(worst, coef_distance(up_then_right, right_then_up));
    }
    std::ostringstream name;
    name << "commuting_square(i=" << i << ",j=" << j << ")";
    report.add(name.str(), worst, tol);
    return report;
}

TLElement shift_map(const LambdaLattice& L, int i, int j, const TLElement& x, double tol) {
    if (i < 0 || i > j) throw IndexError("shift_map: needs 0 <= i <= j");
    if (j + 2 > L.j_max)
        throw IndexError("shift_map: ambient " + std::to_string(j + 2) +
                         " exceeds the built window");
    if (x.n != j) throw DimensionMismatchError("shift_map: element does not live at ambient j");
    TLContext big{j + 2, L.d, false};
    TLElement asc = tl_identity(big), desc = tl_identity(big);
    for (int k = i + 1; k <= j; ++k) asc = multiply(asc, jones_generator(big, k));
    for (int k = j + 1; k >= i + 1; --k) desc = multiply(desc, jones_generator(big, k));
    TLElement arg = multiply(multiply(asc, extend_right(x, 2)), desc);
    TLElement y = vertical_expectation(L, i, j + 2, arg, tol);
    return scale(y, cx(std::pow(L.d, 2 * (j - i) + 2), 0.0));
}

std::vector<TLElement> relative_commutant(const std::vector<TLElement>& ambient,
                                          const std::vector<TLElement>& constraints,
                                          double tol) {
    if (ambient.empty()) return {};
    if (constraints.empty()) return ambient;
    const TLElement& probe = ambient.front();
    TLVectorizer coords(probe.n, probe.shaded_left);
    const int K = static_cast<int>(ambient.size());
    const int C = static_cast<int>(constraints.size());
    Mat M(static_cast<long>(coords.dim()) * C, K);
    par::parallel_for(static_cast<std::size_t>(K), [&](std::size_t k) {
        for (int c = 0; c < C; ++c) {
            TLElement comm = multiply(ambient[k], constraints[c]) -
                             multiply(constraints[c], ambient[k]);
            M.block(static_cast<long>(c) * coords.dim(), static_cast<long>(k), coords.dim(), 1) =
                coords.to_vec(comm);
        }
    });
    Mat ker = kernel_basis(M, tol);
    std::vector<TLElement> out;
    for (int t = 0; t < ker.cols(); ++t) {
        TLElement x = TLElement::zero(probe.context());
        for (int k = 0; k < K; ++k) x = add(x, scale(ambient[k], ker(k, t)));
        out.push_back(x.prune());
    }
    return out;
}

CheckReport check_standardness(const LambdaLattice& L, double tol) {
    CheckReport report;
    struct Quad { int i, j, k, l; };
    std::vector<Quad> quads;
    for (int j = 0; j <= L.j_max; ++j)
        for (int i = 0; i <= j; ++i)
            for (int l = j; l <= L.j_max; ++l)
                for (int k = j; k <= l; ++k)
                    if (j - i > 0 && l - k > 0) quads.push_back({i, j, k, l});
    std::vector<double> devs(quads.size(), 0.0);
    par::parallel_for(quads.size(), [&](std::size_t q) {
        const auto [i, j, k, l] = quads[q];
        double worst = 0.0;
        for (const auto& x : L.cell(i, j).basis) {
            TLElement xe = extend_right(x, l - j);
            for (const auto& y : L.cell(k, l).basis)
                worst = std::max(worst, coef_distance(multiply(xe, y), multiply(y, xe)));
        }
        devs[q] = worst;
    });
    for (std::size_t q = 0; q < quads.size(); ++q) {
        std::ostringstream name;
        name << "window_commutation(" << quads[q].i << "," << quads[q].j << ";" << quads[q].k
             << "," << quads[q].l << ")";
        report.add(name.str(), devs[q], tol);
    }
    if (report.items.empty()) report.add_flag("window_commutation(vacuous)", true);
    return report;
}

} // namespace sfl
