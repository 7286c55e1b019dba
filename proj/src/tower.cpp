#include "subfactorlab/tower.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <random>
#include <set>
#include <sstream>

#include "subfactorlab/errors.hpp"
#include "subfactorlab/parallel.hpp"
#include "subfactorlab/tl_linalg.hpp"

namespace sfl {

// ===========================================================================
// AlgElem
// ===========================================================================

AlgElem AlgElem::zeros(const std::vector<int>& dims) {
    AlgElem a;
    a.blocks.reserve(dims.size());
    for (int d : dims) {
        if (d < 0) throw IndexError("negative block dimension");
        a.blocks.push_back(Mat::Zero(d, d));
    }
    return a;
}

AlgElem AlgElem::identity(const std::vector<int>& dims) {
    AlgElem a;
    a.blocks.reserve(dims.size());
    for (int d : dims) {
        if (d < 0) throw IndexError("negative block dimension");
        a.blocks.push_back(Mat::Identity(d, d));
    }
    return a;
}

AlgElem AlgElem::unit(const std::vector<int>& dims, int c, int i, int j) {
    if (c < 0 || c >= static_cast<int>(dims.size()))
        throw IndexError("block index out of range");
    if (i < 0 || i >= dims[c] || j < 0 || j >= dims[c])
        throw IndexError("matrix unit entry out of range");
    AlgElem a = zeros(dims);
    a.blocks[c](i, j) = cx(1.0, 0.0);
    return a;
}

std::vector<int> AlgElem::dims() const {
    std::vector<int> out;
    out.reserve(blocks.size());
    for (const auto& b : blocks) out.push_back(static_cast<int>(b.rows()));
    return out;
}

namespace {

void require_parallel(const AlgElem& a, const AlgElem& b) {
    if (a.blocks.size() != b.blocks.size())
        throw DimensionMismatchError("block counts differ");
    for (std::size_t c = 0; c < a.blocks.size(); ++c)
        if (a.blocks[c].rows() != b.blocks[c].rows())
            throw DimensionMismatchError("block shapes differ");
}

} // namespace

AlgElem alg_add(const AlgElem& a, const AlgElem& b) {
    require_parallel(a, b);
    AlgElem out = a;
    for (std::size_t c = 0; c < out.blocks.size(); ++c) out.blocks[c] += b.blocks[c];
    return out;
}

AlgElem alg_sub(const AlgElem& a, const AlgElem& b) {
    require_parallel(a, b);
    AlgElem out = a;
    for (std::size_t c = 0; c < out.blocks.size(); ++c) out.blocks[c] -= b.blocks[c];
    return out;
}

AlgElem alg_mul(const AlgElem& a, const AlgElem& b) {
    require_parallel(a, b);
    AlgElem out = a;
    for (std::size_t c = 0; c < out.blocks.size(); ++c)
        out.blocks[c] = a.blocks[c] * b.blocks[c];
    return out;
}

AlgElem alg_scale(const AlgElem& a, cx s) {
    AlgElem out = a;
    for (auto& b : out.blocks) b *= s;
    return out;
}

AlgElem alg_adjoint(const AlgElem& a) {
    AlgElem out = a;
    for (std::size_t c = 0; c < out.blocks.size(); ++c)
        out.blocks[c] = a.blocks[c].adjoint();
    return out;
}

double alg_distance(const AlgElem& a, const AlgElem& b) {
    require_parallel(a, b);
    double m = 0.0;
    for (std::size_t c = 0; c < a.blocks.size(); ++c)
        m = std::max(m, max_abs(a.blocks[c] - b.blocks[c]));
    return m;
}

double alg_norm_max(const AlgElem& a) {
    double m = 0.0;
    for (const auto& b : a.blocks) m = std::max(m, max_abs(b));
    return m;
}

Vec alg_flatten(const AlgElem& a) {
    Eigen::Index total = 0;
    for (const auto& b : a.blocks) total += b.size();
    Vec v(total);
    Eigen::Index at = 0;
    for (const auto& b : a.blocks) {
        v.segment(at, b.size()) = Eigen::Map<const Vec>(b.data(), b.size());
        at += b.size();
    }
    return v;
}

// ===========================================================================
// AbstractTower
// ===========================================================================

int AbstractTower::level_dim(int n) const {
    if (n < 0 || n > n_max()) throw IndexError("level out of range");
    int s = 0;
    for (int dim : level_dims[n]) s += dim * dim;
    return s;
}

AlgElem AbstractTower::include(int n, const AlgElem& x) const {
    if (n < 0 || n >= n_max()) throw IndexError("inclusion level out of range");
    return inclusions[n](x);
}

AlgElem AbstractTower::include_to(int from, int to, const AlgElem& x) const {
    if (from < 0 || to > n_max() || from > to)
        throw IndexError("inclusion range out of order");
    AlgElem y = x;
    for (int n = from; n < to; ++n) y = inclusions[n](y);
    return y;
}

AlgElem AbstractTower::expect(int k, const AlgElem& x) const {
    if (k < 1 || k > n_max()) throw IndexError("expectation level out of range");
    return expectations[k - 1](x);
}

const AlgElem& AbstractTower::e(int k) const {
    if (k < 1 || k >= n_max() || k >= static_cast<int>(jones.size()))
        throw IndexError("jones projection index out of range");
    return jones[k];
}

std::vector<AlgElem> AbstractTower::basis(int n) const {
    if (n < 0 || n > n_max()) throw IndexError("level out of range");
    std::vector<AlgElem> out;
    const auto& dims = level_dims[n];
    for (int c = 0; c < static_cast<int>(dims.size()); ++c)
        for (int i = 0; i < dims[c]; ++i)
            for (int j = 0; j < dims[c]; ++j) out.push_back(AlgElem::unit(dims, c, i, j));
    return out;
}

void AbstractTower::validate() const {
    if (!(d > 0.0)) throw InputError("tower modulus must be positive");
    if (level_dims.empty()) throw InputError("tower has no levels");
    for (const auto& dims : level_dims) {
        if (dims.empty()) throw InputError("a level has no blocks");
        for (int dim : dims)
            if (dim <= 0) throw InputError("block dimensions must be positive");
    }
    const int N = n_max();
    if (static_cast<int>(inclusions.size()) != N)
        throw InputError("inclusion count does not match the level count");
    if (static_cast<int>(expectations.size()) != N)
        throw InputError("expectation count does not match the level count");
    const int want_jones = N >= 1 ? N : 0;
    if (static_cast<int>(jones.size()) != want_jones)
        throw InputError("jones projection count does not match the level count");
    for (int k = 1; k < N; ++k)
        if (jones[k].dims() != level_dims[k + 1])
            throw InputError("a jones projection has the wrong block shapes");
    for (int n = 0; n < N; ++n) {
        if (inclusions[n](AlgElem::identity(level_dims[n])).dims() != level_dims[n + 1])
            throw InputError("an inclusion lands in the wrong block shapes");
        if (expectations[n](AlgElem::identity(level_dims[n + 1])).dims() != level_dims[n])
            throw InputError("an expectation lands in the wrong block shapes");
    }
}

cx expectation_state(const AbstractTower& t, int n, const AlgElem& x) {
    if (n < 0 || n > t.n_max()) throw IndexError("level out of range");
    if (t.level_dims[0].size() != 1 || t.level_dims[0][0] != 1)
        throw InputError("the base level is not the scalars");
    AlgElem y = x;
    for (int k = n; k >= 1; --k) y = t.expect(k, y);
    return y.blocks[0](0, 0);
}

// ===========================================================================
// Path-model towers over a weighted bipartite graph.
// ===========================================================================

namespace {

constexpr int kMaxTowerHeight = 8;
constexpr int kMaxBlockDim = 64;

std::vector<VertexPair> space_keys(const BigradedSpace& h) {
    std::vector<VertexPair> keys;
    keys.reserve(h.basis.size());
    for (const auto& [key, labels] : h.basis)
        if (!labels.empty()) keys.push_back(key);
    return keys; // map iteration order: sorted by (row, column)
}

AlgElem op_to_alg(const BigradedOp& f, const std::vector<VertexPair>& keys) {
    AlgElem a;
    a.blocks.reserve(keys.size());
    for (const auto& key : keys) a.blocks.push_back(f.block(key.first, key.second));
    return a;
}

BigradedOp alg_to_op(const AlgElem& x, const BigradedSpace& h,
                     const std::vector<VertexPair>& keys) {
    if (x.blocks.size() != keys.size())
        throw DimensionMismatchError("element does not match the space's block list");
    BigradedOp f = BigradedOp::zero(h, h);
    for (std::size_t c = 0; c < keys.size(); ++c)
        f.set_block(keys[c].first, keys[c].second, x.blocks[c]);
    return f;
}

struct PathCtx {
    double d = 0.0;
    std::string base;
    DualityData dd;
    std::vector<BigradedSpace> spaces;
    std::vector<std::vector<VertexPair>> keys;

    // Tensor factor appended by the step from level s to level s+1.
    const BigradedSpace& step(int s) const { return s % 2 == 0 ? dd.k : dd.kbar; }
};

} // namespace

MarkovTower build_path_tower(const WeightedBipartiteGraph& g, const std::string& base,
                             int n_max) {
    g.validate();
    if (!g.has_vertex(base) || !g.in_v0(base))
        throw InputError("the base vertex must belong to part 0 of the graph");
    if (n_max < 0 || n_max > kMaxTowerHeight)
        throw IndexError("tower height out of range (0..8)");

    double d = 0.0;
    for (const auto& id : g.edges_from(base)) d += g.weight.at(id);
    if (!(d > 0.0)) throw AxiomViolationError("the base vertex has no outgoing weight");
    {
        CheckReport fair = check_fair(g, d, 1e-8);
        if (!fair.passed())
            throw AxiomViolationError("the weighting is not fair and balanced: " +
                                      fair.first_failure());
    }

    auto ctx = std::make_shared<PathCtx>();
    ctx->d = d;
    ctx->base = base;
    ctx->dd = duality_from_weighting(g);
    ctx->spaces.reserve(n_max + 1);
    for (int n = 0; n <= n_max; ++n) {
        ctx->spaces.push_back(row_restrict(alternating_power(g, n), base));
        ctx->keys.push_back(space_keys(ctx->spaces.back()));
        if (ctx->keys.back().empty())
            throw AxiomViolationError("a tower level is empty; the graph does not reach far enough");
        for (const auto& key : ctx->keys.back())
            if (ctx->spaces.back().dim(key.first, key.second) > kMaxBlockDim)
                throw IndexError("a tower block exceeds the 64-dimension cap");
    }

    MarkovTower t;
    t.graph = g;
    t.base = base;
    t.duality = ctx->dd;
    t.spaces = ctx->spaces;
    t.block_vertex.reserve(n_max + 1);
    for (int n = 0; n <= n_max; ++n) {
        std::vector<std::string> verts;
        for (const auto& key : ctx->keys[n]) verts.push_back(key.second);
        t.block_vertex.push_back(std::move(verts));
    }

    AbstractTower core;
    core.d = d;
    for (int n = 0; n <= n_max; ++n) {
        std::vector<int> dims;
        for (const auto& key : ctx->keys[n])
            dims.push_back(ctx->spaces[n].dim(key.first, key.second));
        core.level_dims.push_back(std::move(dims));
    }

    for (int n = 0; n < n_max; ++n) {
        core.inclusions.push_back([ctx, n](const AlgElem& x) {
            BigradedOp f = alg_to_op(x, ctx->spaces[n], ctx->keys[n]);
            BigradedOp inc = tensor_ops(f, BigradedOp::identity(ctx->step(n)));
            return op_to_alg(inc, ctx->keys[n + 1]);
        });
        core.expectations.push_back([ctx, n](const AlgElem& x) {
            BigradedOp f = alg_to_op(x, ctx->spaces[n + 1], ctx->keys[n + 1]);
            const bool leg_is_k = (n % 2 == 0);
            const BigradedOp cup = leg_is_k ? ctx->dd.coev_k : ctx->dd.coev_kbar();
            const BigradedOp cap = leg_is_k ? ctx->dd.ev_kbar() : ctx->dd.ev_k;
            const BigradedOp idn = BigradedOp::identity(ctx->spaces[n]);
            const BigradedOp idd =
                BigradedOp::identity(leg_is_k ? ctx->dd.kbar : ctx->dd.k);
            BigradedOp out = op_compose(
                tensor_ops(idn, cap),
                op_compose(tensor_ops(f, idd), tensor_ops(idn, cup)));
            return op_to_alg(op_scale(out, cx(1.0 / ctx->d, 0.0)), ctx->keys[n]);
        });
    }

    if (n_max >= 1) {
        core.jones.resize(n_max); // index 0 unused
        for (int n = 1; n < n_max; ++n) {
            const BigradedOp pairing = (n % 2 == 1) ? ctx->dd.ev_kbar() : ctx->dd.ev_k;
            BigradedOp cupcap =
                op_scale(op_compose(op_dagger(pairing), pairing), cx(1.0 / d, 0.0));
            BigradedOp en =
                tensor_ops(BigradedOp::identity(ctx->spaces[n - 1]), cupcap);
            core.jones[n] = op_to_alg(en, ctx->keys[n + 1]);
        }
    }

    t.core = std::move(core);
    return t;
}

MarkovTower build_path_tower(const WeightedBipartiteGraph& g, const VertexWeighting& nu,
                             const std::string& base, int n_max) {
    WeightedBipartiteGraph weighted = g;
    weighted.weight = edge_weights_from_vertex_weighting(g, nu);
    return build_path_tower(weighted, base, n_max);
}

// ===========================================================================
// The traceless 2x2-factor tower.
// ===========================================================================

namespace {

Mat kron2(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

} // namespace

AbstractTower example_traceless_tower(double d, int n_max) {
    if (!(d > 0.0) || d * d <= 4.0 + 1e-12)
        throw InputError("the traceless tower needs d^2 > 4 (two distinct state weights)");
    if (n_max < 0 || n_max > 6)
        throw IndexError("tower height out of range (0..6, 64-dimension block cap)");

    const double lambda = (1.0 - std::sqrt(1.0 - 4.0 / (d * d))) / 2.0;
    // State weight used by E_k, and the idempotent weight used by e_k.
    auto state_mu = [lambda](int k) { return k % 2 == 1 ? lambda : 1.0 - lambda; };

    AbstractTower t;
    t.d = d;
    for (int n = 0; n <= n_max; ++n) t.level_dims.push_back({1 << n});

    for (int n = 0; n < n_max; ++n) {
        t.inclusions.push_back([](const AlgElem& x) {
            AlgElem y;
            y.blocks.push_back(kron2(x.blocks.at(0), Mat::Identity(2, 2)));
            return y;
        });
        const double mu = state_mu(n + 1);
        t.expectations.push_back([mu](const AlgElem& x) {
            const Mat& m = x.blocks.at(0);
            const Eigen::Index half = m.rows() / 2;
            Mat out(half, half);
            for (Eigen::Index i = 0; i < half; ++i)
                for (Eigen::Index j = 0; j < half; ++j)
                    out(i, j) = mu * m(2 * i, 2 * j) + (1.0 - mu) * m(2 * i + 1, 2 * j + 1);
            AlgElem y;
            y.blocks.push_back(std::move(out));
            return y;
        });
    }

    if (n_max >= 1) {
        t.jones.resize(n_max);
        for (int n = 1; n < n_max; ++n) {
            const double mu = n % 2 == 1 ? 1.0 - lambda : lambda;
            Mat e4 = Mat::Zero(4, 4);
            e4(0, 0) = 1.0 - mu;
            e4(3, 3) = mu;
            e4(0, 3) = e4(3, 0) = std::sqrt(mu * (1.0 - mu));
            AlgElem en;
            en.blocks.push_back(kron2(Mat::Identity(1 << (n - 1), 1 << (n - 1)), e4));
            t.jones[n] = std::move(en);
        }
    }
    return t;
}

// ===========================================================================
// Axiom verification.
// ===========================================================================

namespace {

AlgElem random_elem(const std::vector<int>& dims, std::mt19937& rng) {
    std::normal_distribution<double> gauss;
    AlgElem a = AlgElem::zeros(dims);
    for (auto& b : a.blocks)
        for (Eigen::Index i = 0; i < b.rows(); ++i)
            for (Eigen::Index j = 0; j < b.cols(); ++j) b(i, j) = cx(gauss(rng), gauss(rng));
    return a;
}

struct WorstDev {
    double dev = 0.0;
    std::string where;

    void feed(double v, const std::string& w) {
        if (v > dev) {
            dev = v;
            where = w;
        }
    }
};

std::string at_level(int n) { return "level " + std::to_string(n); }

} // namespace

CheckReport verify_markov_axioms(const AbstractTower& t, double tol) {
    t.validate();
    CheckReport rep;
    const int N = t.n_max();
    const double d = t.d;
    std::mt19937 rng(0x5f1u);

    std::vector<AlgElem> ones, rnd1, rnd2;
    for (int n = 0; n <= N; ++n) {
        ones.push_back(AlgElem::identity(t.level_dims[n]));
        rnd1.push_back(random_elem(t.level_dims[n], rng));
        rnd2.push_back(random_elem(t.level_dims[n], rng));
    }

    {
        WorstDev w;
        for (int n = 0; n < N; ++n) {
            w.feed(alg_distance(t.include(n, ones[n]), ones[n + 1]), at_level(n));
            w.feed(alg_distance(t.include(n, alg_mul(rnd1[n], rnd2[n])),
                                alg_mul(t.include(n, rnd1[n]), t.include(n, rnd2[n]))),
                   at_level(n));
            w.feed(alg_distance(t.include(n, alg_adjoint(rnd1[n])),
                                alg_adjoint(t.include(n, rnd1[n]))),
                   at_level(n));
        }
        rep.add("inclusions are unital *-homomorphisms", w.dev, tol, w.where);
    }

    {
        WorstDev w;
        for (int n = 0; n < N; ++n) {
            w.feed(alg_distance(t.expect(n + 1, ones[n + 1]), ones[n]), at_level(n + 1));
            w.feed(alg_distance(t.expect(n + 1, t.include(n, rnd1[n])), rnd1[n]),
                   at_level(n + 1));
            const AlgElem lhs = t.expect(
                n + 1, alg_mul(t.include(n, rnd1[n]), alg_mul(rnd1[n + 1], t.include(n, rnd2[n]))));
            const AlgElem rhs = alg_mul(rnd1[n], alg_mul(t.expect(n + 1, rnd1[n + 1]), rnd2[n]));
            w.feed(alg_distance(lhs, rhs), at_level(n + 1));
            // E(x*) = E(x)* and E(x* x) has a selfadjoint value.
            w.feed(alg_distance(t.expect(n + 1, alg_adjoint(rnd1[n + 1])),
                                alg_adjoint(t.expect(n + 1, rnd1[n + 1]))),
                   at_level(n + 1));
        }
        rep.add("expectations are unital bimodule retractions", w.dev, tol, w.where);
    }

    if (N >= 2) {
        {
            WorstDev w;
            for (int k = 1; k < N; ++k) {
                const AlgElem& ek = t.e(k);
                w.feed(alg_distance(ek, alg_adjoint(ek)), at_level(k));
                w.feed(alg_distance(alg_mul(ek, ek), ek), at_level(k));
            }
            rep.add("jones projections are self-adjoint idempotents", w.dev, tol, w.where);
        }

        {
            WorstDev w;
            for (int k = 1; k < N; ++k)
                for (int l = k + 2; l < N; ++l) {
                    const AlgElem a = t.include_to(k + 1, l + 1, t.e(k));
                    const AlgElem& b = t.e(l);
                    w.feed(alg_distance(alg_mul(a, b), alg_mul(b, a)),
                           "levels " + std::to_string(k) + "," + std::to_string(l));
                }
            rep.add("distant jones projections commute", w.dev, tol, w.where);
        }

        {
            WorstDev w;
            const double c = 1.0 / (d * d);
            for (int k = 1; k + 1 < N; ++k) {
                const AlgElem a = t.include(k + 1, t.e(k));
                const AlgElem& b = t.e(k + 1);
                w.feed(alg_distance(alg_mul(a, alg_mul(b, a)), alg_scale(a, c)), at_level(k));
                w.feed(alg_distance(alg_mul(b, alg_mul(a, b)), alg_scale(b, c)), at_level(k));
            }
            rep.add("adjacent jones projections satisfy the modulus braid relation", w.dev,
                    tol, w.where);
        }

        {
            WorstDev w;
            for (int n = 1; n < N; ++n) {
                const AlgElem ix = t.include(n, rnd1[n]);
                const AlgElem lhs = alg_mul(t.e(n), alg_mul(ix, t.e(n)));
                const AlgElem rhs =
                    alg_mul(t.include_to(n - 1, n + 1, t.expect(n, rnd1[n])), t.e(n));
                w.feed(alg_distance(lhs, rhs), at_level(n));
            }
            rep.add("jones projections implement the conditional expectations", w.dev, tol,
                    w.where);
        }

        {
            WorstDev w;
            const double c = 1.0 / (d * d);
            for (int n = 1; n < N; ++n)
                w.feed(alg_distance(t.expect(n + 1, t.e(n)), alg_scale(ones[n], c)),
                       at_level(n));
            rep.add("the expectation of each jones projection is the modulus constant",
                    w.dev, tol, w.where);
        }

        {
            WorstDev w;
            const double c = d * d;
            for (int n = 1; n < N; ++n) {
                const AlgElem ye = alg_mul(rnd1[n + 1], t.e(n));
                const AlgElem rhs =
                    alg_mul(alg_scale(t.include(n, t.expect(n + 1, ye)), c), t.e(n));
                w.feed(alg_distance(ye, rhs), at_level(n));
            }
            rep.add("multiples of a jones projection pull down to the level below", w.dev,
                    tol, w.where);
        }

        {
            WorstDev w;
            const double c = d * d;
            for (int n = 1; n < N; ++n) {
                const AlgElem lhs =
                    alg_scale(t.expect(n + 1, alg_mul(t.include(n, rnd1[n]), t.e(n))), c);
                w.feed(alg_distance(lhs, rnd1[n]), at_level(n));
            }
            rep.add("compression by a jones projection retracts the level below", w.dev, tol,
                    w.where);
        }

        {
            WorstDev w;
            for (int n = 1; n < N; ++n) {
                const AlgElem a = t.include_to(n - 1, n + 1, rnd1[n - 1]);
                w.feed(alg_distance(alg_mul(a, t.e(n)), alg_mul(t.e(n), a)), at_level(n));
            }
            rep.add("later jones projections commute with earlier levels", w.dev, tol,
                    w.where);
        }

        {
            // Kernel dimension of x -> [i(x), e_n] over M_n equals dim M_{n-1}.
            constexpr int kCommutantCap = 320;
            WorstDev w;
            std::vector<int> covered;
            for (int n = 1; n < N; ++n) {
                if (t.level_dim(n) > kCommutantCap) continue;
                covered.push_back(n);
                const std::vector<AlgElem> bs = t.basis(n);
                Mat K(t.level_dim(n + 1), static_cast<Eigen::Index>(bs.size()));
                par::parallel_for(bs.size(), [&](std::size_t c) {
                    const AlgElem ix = t.include(n, bs[c]);
                    K.col(static_cast<Eigen::Index>(c)) = alg_flatten(
                        alg_sub(alg_mul(ix, t.e(n)), alg_mul(t.e(n), ix)));
                });
                const int kernel = static_cast<int>(bs.size()) - rank_of(K, 1e-7);
                w.feed(std::abs(kernel - t.level_dim(n - 1)), at_level(n));
            }
            std::string detail = w.where.empty() ? "" : w.where + "; ";
            detail += "levels checked:";
            for (int n : covered) detail += " " + std::to_string(n);
            rep.add("the commutant of a jones projection is the level below", w.dev,
                    std::max(tol, 0.5), detail);
        }

        {
            // y -> i(y) e_n is injective on M_n, so pulled-down elements are unique.
            constexpr int kInjectivityCap = 320;
            WorstDev w;
            std::vector<int> covered;
            for (int n = 1; n < N; ++n) {
                if (t.level_dim(n) > kInjectivityCap) continue;
                covered.push_back(n);
                const std::vector<AlgElem> bs = t.basis(n);
                Mat K(t.level_dim(n + 1), static_cast<Eigen::Index>(bs.size()));
                par::parallel_for(bs.size(), [&](std::size_t c) {
                    K.col(static_cast<Eigen::Index>(c)) =
                        alg_flatten(alg_mul(t.include(n, bs[c]), t.e(n)));
                });
                const int kernel = static_cast<int>(bs.size()) - rank_of(K, 1e-7);
                w.feed(std::abs(kernel), at_level(n));
            }
            std::string detail = w.where.empty() ? "" : w.where + "; ";
            detail += "levels checked:";
            for (int n : covered) detail += " " + std::to_string(n);
            rep.add("right multiplication by a jones projection is injective below", w.dev,
                    std::max(tol, 0.5), detail);
        }

        {
            WorstDev w;
            const double c = d * d;
            for (int n = 1; n < N; ++n) {
                const AlgElem eye = alg_mul(t.e(n), alg_mul(rnd2[n + 1], t.e(n)));
                const AlgElem a = alg_scale(t.expect(n + 1, eye), c); // should lie in M_{n-1}
                w.feed(alg_distance(a, t.include(n - 1, t.expect(n, a))), at_level(n));
                w.feed(alg_distance(eye, alg_mul(t.include(n, a), t.e(n))), at_level(n));
            }
            rep.add("the corner by a jones projection collapses to the level below", w.dev,
                    tol, w.where);
        }
    }

    return rep;
}

// ===========================================================================
// Old/new decomposition.
// ===========================================================================

OldNewSplit old_new_decomposition(const AbstractTower& t, int n) {
    if (n < 1 || n >= t.n_max()) throw IndexError("split level out of range");
    constexpr double kSupportTol = 1e-8;
    OldNewSplit s;
    s.n = n;
    const auto& dims = t.level_dims[n + 1];
    s.x_projection = AlgElem::zeros(dims);
    s.y_projection = AlgElem::zeros(dims);
    const AlgElem& en = t.e(n);
    for (int c = 0; c < static_cast<int>(dims.size()); ++c) {
        if (max_abs(en.blocks[c]) > kSupportTol) {
            s.old_blocks.push_back(c);
            s.x_projection.blocks[c] = Mat::Identity(dims[c], dims[c]);
        } else {
            s.new_blocks.push_back(c);
            s.y_projection.blocks[c] = Mat::Identity(dims[c], dims[c]);
        }
    }
    return s;
}

// ===========================================================================
// Bratteli diagram and principal graph.
// ===========================================================================

PrincipalGraphData bratteli_and_principal_graph(const AbstractTower& t, double tol) {
    t.validate();
    if (t.level_dims[0].size() != 1 || t.level_dims[0][0] != 1)
        throw InputError("the base level must be the scalars");
    const int N = t.n_max();

    PrincipalGraphData pg;
    BratteliData& br = pg.bratteli;
    br.dims = t.level_dims;

    // Inclusion multiplicities from traces of included central units.
    for (int n = 0; n < N; ++n) {
        const auto& dlo = t.level_dims[n];
        const auto& dhi = t.level_dims[n + 1];
        RMat m = RMat::Zero(dlo.size(), dhi.size());
        for (int p = 0; p < static_cast<int>(dlo.size()); ++p) {
            AlgElem up = AlgElem::zeros(dlo);
            up.blocks[p] = Mat::Identity(dlo[p], dlo[p]);
            const AlgElem inc = t.include(n, up);
            for (int q = 0; q < static_cast<int>(dhi.size()); ++q) {
                const double trace = inc.blocks[q].trace().real();
                const double raw = trace / dlo[p];
                const double rounded = std::round(raw);
                if (std::abs(raw - rounded) > std::max(tol, 1e-6))
                    throw ExtractionError("an inclusion multiplicity is not an integer");
                m(p, q) = rounded;
            }
        }
        for (int q = 0; q < static_cast<int>(dhi.size()); ++q) {
            double sum = 0.0;
            for (int p = 0; p < static_cast<int>(dlo.size()); ++p) sum += m(p, q) * dlo[p];
            if (std::llround(sum) != dhi[q])
                throw ExtractionError("inclusion multiplicities do not add up to the block dimension");
        }
        br.mult.push_back(std::move(m));
    }

    // Old/new classification and the vertex each block sits over.
    br.is_new.resize(N + 1);
    br.vertex.resize(N + 1);
    std::vector<std::string> order; // vertices in order of first appearance
    std::map<std::string, int> depth, vdim;
    auto new_vertex = [&](int lev, int idx, int dim) {
        std::string name = "d" + std::to_string(lev) + "n" + std::to_string(idx);
        order.push_back(name);
        depth[name] = lev;
        vdim[name] = dim;
        return name;
    };

    br.is_new[0] = {true};
    br.vertex[0] = {new_vertex(0, 0, 1)};
    if (N >= 1) {
        const int b1 = static_cast<int>(t.level_dims[1].size());
        br.is_new[1].assign(b1, true);
        for (int c = 0; c < b1; ++c)
            br.vertex[1].push_back(new_vertex(1, c, t.level_dims[1][c]));
    }

    for (int n = 1; n < N; ++n) {
        const OldNewSplit split = old_new_decomposition(t, n);
        const auto& dhi = t.level_dims[n + 1];
        br.is_new[n + 1].assign(dhi.size(), false);
        br.vertex[n + 1].assign(dhi.size(), "");
        std::set<int> used_below;
        for (int q : split.old_blocks) {
            // The unique level-(n-1) block whose ideal copy meets block q.
            const auto& dlow = t.level_dims[n - 1];
            int found = -1;
            for (int r = 0; r < static_cast<int>(dlow.size()); ++r) {
                AlgElem ur = AlgElem::zeros(dlow);
                ur.blocks[r] = Mat::Identity(dlow[r], dlow[r]);
                const AlgElem probe = alg_mul(t.include_to(n - 1, n + 1, ur), t.e(n));
                if (max_abs(probe.blocks[q]) > std::max(tol, 1e-6)) {
                    if (found >= 0)
                        throw ExtractionError(
                            "an old block meets the ideal copies of two blocks two levels down");
                    found = r;
                }
            }
            if (found < 0)
                throw ExtractionError("an old block meets no ideal copy two levels down");
            if (!used_below.insert(found).second)
                throw ExtractionError("two old blocks meet the same ideal copy two levels down");
            br.vertex[n + 1][q] = br.vertex[n - 1][found];
        }
        int idx = 0;
        for (int q : split.new_blocks) {
            br.is_new[n + 1][q] = true;
            br.vertex[n + 1][q] = new_vertex(n + 1, idx++, dhi[q]);
        }
    }

    // Assemble the principal graph from the new blocks.
    WeightedBipartiteGraph g;
    for (const auto& v : order) (depth[v] % 2 == 0 ? g.v0 : g.v1).push_back(v);
    for (int lev = 1; lev <= N; ++lev) {
        for (int q = 0; q < static_cast<int>(br.vertex[lev].size()); ++q) {
            if (!br.is_new[lev][q]) continue;
            const std::string& v = br.vertex[lev][q];
            for (int p = 0; p < static_cast<int>(br.vertex[lev - 1].size()); ++p) {
                const int m = static_cast<int>(std::llround(br.mult[lev - 1](p, q)));
                if (m == 0) continue;
                const std::string& u = br.vertex[lev - 1][p];
                if (depth[u] != lev - 1)
                    throw ExtractionError(
                        "a new block has multiplicity into a vertex above the previous depth");
                for (int k = 0; k < m; ++k) {
                    const std::string suffix = "-" + std::to_string(k);
                    const std::string uv = u + "-" + v + suffix;
                    const std::string vu = v + "-" + u + suffix;
                    g.edges.push_back({uv, u, v});
                    g.edges.push_back({vu, v, u});
                    g.bar[uv] = vu;
                    g.bar[vu] = uv;
                    g.weight[uv] = 1.0;
                    g.weight[vu] = 1.0;
                }
            }
        }
    }

    // Reflection consistency: every multiplicity, old or new, must agree with
    // the graph assembled from first appearances.
    for (int n = 0; n < N; ++n)
        for (int p = 0; p < static_cast<int>(br.vertex[n].size()); ++p)
            for (int q = 0; q < static_cast<int>(br.vertex[n + 1].size()); ++q) {
                const int m = static_cast<int>(std::llround(br.mult[n](p, q)));
                if (m != g.multiplicity(br.vertex[n][p], br.vertex[n + 1][q]))
                    throw ExtractionError(
                        "inclusion multiplicities are not reflection-consistent with the principal graph");
            }

    pg.graph = std::move(g);
    pg.depth = std::move(depth);
    pg.vertex_dim = std::move(vdim);
    pg.root = "d0n0";
    return pg;
}

// ===========================================================================
// Edge-weighting recovery.
// ===========================================================================

namespace {

Mat random_unitary(int m, std::mt19937& rng) {
    std::normal_distribution<double> gauss;
    Mat g(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) g(i, j) = cx(gauss(rng), gauss(rng));
    Eigen::HouseholderQR<Mat> qr(g);
    Mat q = qr.householderQ() * Mat::Identity(m, m);
    const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < m; ++j) {
        const cx rj = r(j, j);
        if (std::abs(rj) > 0) q.col(j) *= rj / std::abs(rj);
    }
    return q;
}

struct TwoLegBasis {
    std::vector<TensorEntry> entries;
    std::map<std::string, int> index_of;
};

struct PipelineOut {
    // Measured multisets, keyed by the directed pair (source, destination).
    std::map<VertexPair, std::vector<double>> forward;
    std::map<VertexPair, std::vector<double>> reverse;
    CheckReport checks;
};

// Transport the tower onto the path model of its principal graph and read the
// edge weights off the rank-one splittings of the projections.
PipelineOut transport_pipeline(const AbstractTower& t, const PrincipalGraphData& pg,
                               unsigned seed, double tol) {
    PipelineOut out;
    const int N = t.n_max();
    const WeightedBipartiteGraph& g = pg.graph;
    const std::string& root = pg.root;
    const double d = t.d;

    const BigradedSpace genk = generator_space(g);
    const BigradedSpace genkbar = generator_dual_space(g);
    auto step = [&](int s) -> const BigradedSpace& { return s % 2 == 0 ? genk : genkbar; };

    std::vector<BigradedSpace> spaces;
    for (int n = 0; n <= N; ++n) spaces.push_back(row_restrict(alternating_power(g, n), root));

    // Tower block <-> path block bookkeeping.
    std::vector<std::map<std::string, int>> tower_block_of_vertex(N + 1);
    for (int n = 0; n <= N; ++n) {
        const auto keys = space_keys(spaces[n]);
        if (keys.size() != pg.bratteli.vertex[n].size())
            throw ExtractionError("the path model and the tower have different block counts");
        for (int c = 0; c < static_cast<int>(pg.bratteli.vertex[n].size()); ++c) {
            const std::string& v = pg.bratteli.vertex[n][c];
            if (spaces[n].dim(root, v) != t.level_dims[n][c])
                throw ExtractionError("a path-model block dimension does not match the tower");
            tower_block_of_vertex[n][v] = c;
        }
    }

    // Level isomorphisms onto the path model, one unitary per tower block.
    std::vector<std::vector<Mat>> psi(N + 1);
    psi[0] = {Mat::Ones(1, 1)};

    WorstDev intertwine_dev;
    std::mutex mu;

    for (int n = 0; n < N; ++n) {
        const int nblocks = static_cast<int>(t.level_dims[n + 1].size());
        psi[n + 1].resize(nblocks);

        // pi2 building blocks: the tower inclusion of every needed matrix unit.
        const auto& dlo = t.level_dims[n];
        std::vector<std::vector<AlgElem>> inc_units(dlo.size());
        for (int c = 0; c < static_cast<int>(dlo.size()); ++c) {
            inc_units[c].reserve(dlo[c]);
            for (int a = 0; a < dlo[c]; ++a)
                inc_units[c].push_back(t.include(n, AlgElem::unit(dlo, c, 0, a)));
        }

        std::vector<std::string> errors(nblocks);
        par::parallel_for(static_cast<std::size_t>(nblocks), [&](std::size_t qi) {
          try {
            const int qc = static_cast<int>(qi);
            const std::string& w = pg.bratteli.vertex[n + 1][qc];
            const int Dq = t.level_dims[n + 1][qc];
            const auto ent = tensor_entries(spaces[n], step(n), root, w);
            if (static_cast<int>(ent.size()) != Dq)
                throw ExtractionError("a path-model block dimension does not match the tower");

            // pi1(E^c_{ab})(r,r') = [paths agree outside the level-n factor]
            //                        * U_m(i_r, a) conj(U_m(i_r', b))
            auto pi1 = [&](int c, int a, int b) {
                Mat m = Mat::Zero(Dq, Dq);
                for (int r = 0; r < Dq; ++r) {
                    const int cm = tower_block_of_vertex[n].at(ent[r].mid);
                    if (cm != c) continue;
                    const Mat& um = psi[n][cm];
                    for (int s = 0; s < Dq; ++s) {
                        if (ent[s].mid != ent[r].mid || ent[s].j != ent[r].j) continue;
                        m(r, s) = um(ent[r].i, a) * std::conj(um(ent[s].i, b));
                    }
                }
                return m;
            };
            // pi2(E^c_{0a}): block qc of the tower inclusion of the matrix unit;
            // E^c_{a0} is its adjoint because the inclusion is a *-map.
            auto pi2_0a = [&](int c, int a) -> const Mat& {
                return inc_units[c][a].blocks[qc];
            };

            std::seed_seq sseq{seed, static_cast<unsigned>(n + 1), static_cast<unsigned>(qc)};
            std::mt19937 rng(sseq);

            Mat U = Mat::Zero(Dq, Dq);
            for (int c = 0; c < static_cast<int>(dlo.size()); ++c) {
                const int m = static_cast<int>(std::llround(pg.bratteli.mult[n](c, qc)));
                if (m == 0) continue;
                const Mat A1 = pi1(c, 0, 0);
                const Mat& A2 = pi2_0a(c, 0);
                auto range_basis = [&](const Mat& A) {
                    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (A + A.adjoint()));
                    int rank = 0;
                    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
                        if (es.eigenvalues()(k) > 0.5) ++rank;
                    if (rank != m)
                        throw ExtractionError(
                            "a projection rank does not match the inclusion multiplicity");
                    return Mat(es.eigenvectors().rightCols(m));
                };
                const Mat q1 = range_basis(A1);
                const Mat q2 = range_basis(A2);
                const Mat v = q1 * random_unitary(m, rng) * q2.adjoint();
                for (int a = 0; a < dlo[c]; ++a) U += pi1(c, a, 0) * v * pi2_0a(c, a);
            }

            double devu = max_abs(U * U.adjoint() - Mat::Identity(Dq, Dq));
            for (int c = 0; c < static_cast<int>(dlo.size()); ++c) {
                if (std::llround(pg.bratteli.mult[n](c, qc)) == 0) continue;
                const int a = dlo[c] - 1;
                devu = std::max(devu, max_abs(U * pi2_0a(c, a) - pi1(c, 0, a) * U));
                devu = std::max(devu,
                                max_abs(U * pi2_0a(c, a).adjoint() - pi1(c, a, 0) * U));
            }
            {
                std::lock_guard<std::mutex> lock(mu);
                intertwine_dev.feed(devu, at_level(n + 1) + " block " + w);
            }
            psi[n + 1][qc] = U;
          } catch (const std::exception& ex) {
            errors[qi] = ex.what();
          }
        });
        for (const auto& err : errors)
            if (!err.empty()) throw ExtractionError(err);
    }
    out.checks.add("transport unitaries intertwine the inclusions", intertwine_dev.dev,
                   std::max(tol, 1e-8), intertwine_dev.where);

    // Factor each transported projection through its last two tensor legs.
    std::vector<std::map<std::string, Vec>> rvec(std::max(N, 1));
    std::vector<std::map<std::string, TwoLegBasis>> twoleg(std::max(N, 1));
    WorstDev factor_dev, rank_dev;
    std::vector<std::string> rank_failures;

    for (int n = 1; n < N; ++n) {
        const BigradedSpace two = tensor_spaces(step(n - 1), step(n));
        const int nblocks = static_cast<int>(t.level_dims[n + 1].size());
        std::vector<std::pair<std::string, Mat>> found(nblocks);
        std::vector<std::string> errors(nblocks);
        par::parallel_for(static_cast<std::size_t>(nblocks), [&](std::size_t qi) {
          try {
            const int qc = static_cast<int>(qi);
            const std::string& w = pg.bratteli.vertex[n + 1][qc];
            const int Dq = t.level_dims[n + 1][qc];
            const Mat F = psi[n + 1][qc] * t.e(n).blocks[qc] * psi[n + 1][qc].adjoint();
            const auto ent = tensor_entries(spaces[n - 1], two, root, w);

            const int dim_ww = two.dim(w, w);
            std::vector<int> row_of(dim_ww, -1);
            for (int r = 0; r < Dq; ++r)
                if (ent[r].mid == w && ent[r].i == 0) row_of[ent[r].j] = r;
            Mat eps;
            bool have = dim_ww > 0 && spaces[n - 1].dim(root, w) > 0;
            if (have) {
                eps = Mat(dim_ww, dim_ww);
                for (int j = 0; j < dim_ww; ++j)
                    for (int j2 = 0; j2 < dim_ww; ++j2) eps(j, j2) = F(row_of[j], row_of[j2]);
            }

            double dev = 0.0;
            for (int r = 0; r < Dq; ++r)
                for (int s = 0; s < Dq; ++s) {
                    cx expected(0.0, 0.0);
                    if (have && ent[r].mid == w && ent[s].mid == w && ent[r].i == ent[s].i)
                        expected = eps(ent[r].j, ent[s].j);
                    dev = std::max(dev, std::abs(F(r, s) - expected));
                }
            {
                std::lock_guard<std::mutex> lock(mu);
                factor_dev.feed(dev, at_level(n + 1) + " block " + w);
                if (have) found[qc] = {w, eps};
            }
          } catch (const std::exception& ex) {
            errors[qi] = ex.what();
          }
        });
        for (const auto& err : errors)
            if (!err.empty()) throw ExtractionError(err);

        for (auto& [w, eps] : found) {
            if (w.empty()) continue;
            Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (eps + eps.adjoint()));
            const auto& ev = es.eigenvalues();
            const double top = ev(ev.size() - 1);
            const double second = ev.size() >= 2 ? std::abs(ev(ev.size() - 2)) : 0.0;
            if (second > 1e-4 * std::max(1.0, top))
                rank_failures.push_back(at_level(n + 1) + " block " + w);
            Vec u = es.eigenvectors().col(ev.size() - 1);
            const double umax = u.cwiseAbs().maxCoeff();
            for (Eigen::Index i = 0; i < u.size(); ++i)
                if (std::abs(u(i)) > 1e-8 * umax) {
                    u *= std::conj(u(i)) / std::abs(u(i));
                    break;
                }
            rank_dev.feed(std::abs(top - 1.0), at_level(n + 1) + " block " + w);
            rank_dev.feed(max_abs(eps - top * (u * u.adjoint())),
                          at_level(n + 1) + " block " + w);
            rvec[n][w] = std::sqrt(std::max(top, 0.0)) * u;

            TwoLegBasis tb;
            tb.entries = tensor_entries(step(n - 1), step(n), w, w);
            for (int i = 0; i < static_cast<int>(tb.entries.size()); ++i)
                tb.index_of[tb.entries[i].label] = i;
            if (static_cast<int>(tb.entries.size()) != static_cast<int>(rvec[n][w].size()))
                throw ExtractionError("a two-leg block does not match its splitting vector");
            twoleg[n][w] = std::move(tb);
        }
    }
    if (!rank_failures.empty())
        throw ExtractionError("a transported projection does not split with rank one per block (" +
                              rank_failures.front() + ")");
    out.checks.add("transported projections factor through the last two tensor legs",
                   factor_dev.dev, std::max(tol, 1e-8), factor_dev.where);
    out.checks.add("factored projections split as rank-one pairings", rank_dev.dev,
                   std::max(tol, 1e-8), rank_dev.where);

    // Weight multisets from the scaled reshapes of the splitting vectors.
    auto reshape_eigs = [&](int n, const std::string& rvert, const std::string& p,
                            const std::string& q, bool odd_level) {
        // Rows and columns run over the edges p -> q.
        const auto fids = g.edge_ids(p, q);
        const int m = static_cast<int>(fids.size());
        const Vec& r = rvec[n].at(rvert);
        const auto& tb = twoleg[n].at(rvert);
        Mat B(m, m);
        for (int fi = 0; fi < m; ++fi)
            for (int xi = 0; xi < m; ++xi) {
                const std::string joined =
                    odd_level ? join_labels(fids[xi], g.bar.at(fids[fi]))
                              : join_labels(g.bar.at(fids[fi]), fids[xi]);
                B(fi, xi) = std::sqrt(d) * r(tb.index_of.at(joined));
            }
        Eigen::SelfAdjointEigenSolver<Mat> es(B.adjoint() * B);
        std::vector<double> eigs(es.eigenvalues().data(),
                                 es.eigenvalues().data() + es.eigenvalues().size());
        return eigs;
    };

    WorstDev agree_dev;
    for (const auto& u : g.v0)
        for (const auto& v : g.v1) {
            if (g.multiplicity(u, v) == 0) continue;
            const int dp = pg.depth.at(u), dq = pg.depth.at(v);
            // Edges u -> v, measured at every odd level with the splitting at u.
            std::vector<double> fw;
            for (int n = dp + 1; n < N; n += 2) {
                if (!rvec[n].count(u)) continue;
                auto eigs = reshape_eigs(n, u, u, v, true);
                if (fw.empty())
                    fw = eigs;
                else
                    for (std::size_t k = 0; k < fw.size(); ++k)
                        agree_dev.feed(std::abs(eigs[k] - fw[k]),
                                       u + "->" + v + " " + at_level(n));
            }
            if (!fw.empty()) out.forward[{u, v}] = fw;
            // Edges v -> u, measured at every even level with the splitting at v.
            std::vector<double> rv;
            for (int n = dq + 1; n < N; n += 2) {
                if (!rvec[n].count(v)) continue;
                auto eigs = reshape_eigs(n, v, u, v, false);
                if (rv.empty())
                    rv = eigs;
                else
                    for (std::size_t k = 0; k < rv.size(); ++k)
                        agree_dev.feed(std::abs(eigs[k] - rv[k]),
                                       v + "->" + u + " " + at_level(n));
            }
            if (!rv.empty()) out.reverse[{v, u}] = rv;
        }
    out.checks.add("splittings at different levels recover matching weights", agree_dev.dev,
                   std::max(tol, 1e-8), agree_dev.where);

    // The linking map between consecutive splittings must be unitary.
    WorstDev link_dev;
    for (int k = 1; 2 * k + 1 < N; ++k) {
        for (const auto& [q, dq] : pg.depth) {
            if (dq % 2 == 0 || !rvec[2 * k].count(q)) continue;
            for (const auto& [p, dp] : pg.depth) {
                if (dp % 2 == 1 || !rvec[2 * k + 1].count(p)) continue;
                const auto fbar = g.edge_ids(q, p);
                if (fbar.empty()) continue;
                const auto fwd = g.edge_ids(p, q);
                const int m = static_cast<int>(fbar.size());
                const auto& tq = twoleg[2 * k].at(q);
                const auto& tp = twoleg[2 * k + 1].at(p);
                const Vec& rq = rvec[2 * k].at(q);
                const Vec& rp = rvec[2 * k + 1].at(p);
                Mat link = Mat::Zero(m, m);
                for (int fi = 0; fi < m; ++fi)
                    for (int gi = 0; gi < m; ++gi)
                        for (const auto& a : fwd)
                            link(fi, gi) +=
                                d * std::conj(rq(tq.index_of.at(join_labels(fbar[fi], a)))) *
                                rp(tp.index_of.at(join_labels(a, fbar[gi])));
                link_dev.feed(max_abs(link.adjoint() * link - Mat::Identity(m, m)),
                              q + "|" + p + " " + at_level(2 * k));
                link_dev.feed(max_abs(link * link.adjoint() - Mat::Identity(m, m)),
                              q + "|" + p + " " + at_level(2 * k));
            }
        }
    }
    out.checks.add("linking maps between consecutive splittings are unitary", link_dev.dev,
                   std::max(tol, 1e-8), link_dev.where);

    return out;
}

double multiset_gap(const std::map<VertexPair, std::vector<double>>& a,
                    const std::map<VertexPair, std::vector<double>>& b) {
    double gap = 0.0;
    for (const auto& [key, va] : a) {
        auto it = b.find(key);
        if (it == b.end() || it->second.size() != va.size()) return 1.0;
        for (std::size_t k = 0; k < va.size(); ++k)
            gap = std::max(gap, std::abs(va[k] - it->second[k]));
    }
    return a.size() == b.size() ? gap : 1.0;
}

} // namespace

RecoveredWeighting recover_edge_weighting(const AbstractTower& t, unsigned seed, double tol) {
    RecoveredWeighting out;
    out.principal = bratteli_and_principal_graph(t, tol);
    const PrincipalGraphData& pg = out.principal;

    PipelineOut run1 = transport_pipeline(t, pg, seed * 2654435761u + 1u, tol);
    PipelineOut run2 = transport_pipeline(t, pg, seed * 2654435761u + 2u, tol);
    out.checks = run1.checks;
    out.checks.add("recovered weights are independent of the transport choice",
                   std::max(multiset_gap(run1.forward, run2.forward),
                            multiset_gap(run1.reverse, run2.reverse)),
                   std::max(tol, 1e-8));

    WeightedBipartiteGraph g = pg.graph;
    const double d = t.d;
    WorstDev balance_dev;
    std::vector<std::string> by_balance, unmeasured;

    for (const auto& u : g.v0)
        for (const auto& v : g.v1) {
            const auto ids_uv = g.edge_ids(u, v);
            if (ids_uv.empty()) continue;
            const int m = static_cast<int>(ids_uv.size());
            std::vector<double> fw, rv;
            if (run1.forward.count({u, v})) fw = run1.forward.at({u, v});
            if (run1.reverse.count({v, u})) rv = run1.reverse.at({v, u});
            if (!fw.empty() && !rv.empty()) {
                for (int k = 0; k < m; ++k)
                    balance_dev.feed(std::abs(fw[k] * rv[m - 1 - k] - 1.0),
                                     u + "|" + v);
            } else if (fw.empty() && !rv.empty()) {
                fw.resize(m);
                for (int k = 0; k < m; ++k) fw[k] = 1.0 / rv[m - 1 - k];
                by_balance.push_back(u + "->" + v);
            } else if (rv.empty() && !fw.empty()) {
                rv.resize(m);
                for (int k = 0; k < m; ++k) rv[k] = 1.0 / fw[m - 1 - k];
                by_balance.push_back(v + "->" + u);
            } else {
                fw.assign(m, 1.0);
                rv.assign(m, 1.0);
                unmeasured.push_back(u + "|" + v);
            }
            out.forward[{u, v}] = fw;
            out.reverse[{v, u}] = rv;
            // Parallel edges get the ascending multiset in id order; reversed
            // edges get the exact reciprocals so the result is balanced.
            for (int k = 0; k < m; ++k) {
                g.weight[ids_uv[k]] = fw[k];
                g.weight[g.bar.at(ids_uv[k])] = 1.0 / fw[k];
            }
        }

    out.checks.add("recovered forward and return weights are reciprocal", balance_dev.dev,
                   std::max(tol, 1e-8), balance_dev.where);
    {
        std::string detail;
        for (const auto& s : by_balance) detail += (detail.empty() ? "" : ", ") + s;
        out.checks.add_flag("return directions at the truncation horizon filled in by balance",
                            true, detail);
        std::string miss;
        for (const auto& s : unmeasured) miss += (miss.empty() ? "" : ", ") + s;
        out.checks.add_flag("every adjacent pair received measured weights",
                            unmeasured.empty(), miss);
    }
    {
        WorstDev fair_dev;
        for (const auto& verts : {g.v0, g.v1})
            for (const auto& v : verts) {
                double s = 0.0;
                for (const auto& id : g.edges_from(v)) s += g.weight.at(id);
                fair_dev.feed(std::abs(s - d), v);
            }
        out.checks.add("the recovered weighting is fair", fair_dev.dev,
                       std::max(tol, 1e-8), fair_dev.where);
    }

    out.graph = std::move(g);
    return out;
}

// ===========================================================================
// The diagram-algebra window inside the tower.
// ===========================================================================

namespace {

struct DiagramWord {
    std::vector<int> word; // generator indices, product taken left to right
    double coef = 1.0;     // the product equals coef * diagram
};

// Expand every diagram on n strands as a word in the cap-cup generators by
// breadth-first search through right multiplication.
std::map<TLDiagram, DiagramWord> diagram_words(const TLContext& ctx) {
    std::map<TLDiagram, DiagramWord> out;
    std::vector<TLElement> gens;
    for (int i = 1; i < ctx.n; ++i)
        gens.push_back(scale(jones_generator(ctx, i), cx(ctx.d, 0.0)));

    const TLElement id = tl_identity(ctx);
    const TLDiagram start = id.terms.begin()->first;
    out[start] = {{}, 1.0};
    std::vector<TLDiagram> queue{start};
    for (std::size_t at = 0; at < queue.size(); ++at) {
        const TLDiagram cur = queue[at];
        const DiagramWord cw = out[cur];
        for (int i = 1; i < ctx.n; ++i) {
            const TLElement prod = multiply(tl_from_diagram(cur, ctx.d), gens[i - 1]);
            if (prod.terms.size() != 1)
                throw AxiomViolationError("a diagram product is not a single diagram");
            const auto& [next, c] = *prod.terms.begin();
            if (out.count(next)) continue;
            DiagramWord nw = cw;
            nw.word.push_back(i);
            nw.coef = cw.coef * c.real();
            out[next] = nw;
            queue.push_back(next);
        }
    }
    if (out.size() != enumerate_basis(ctx.n, ctx.shaded_left).size())
        throw AxiomViolationError("the generators did not reach every diagram");
    return out;
}

} // namespace

CheckReport verify_standard_module(const AbstractTower& t, const LambdaLattice& L,
                                   double tol) {
    t.validate();
    if (std::abs(t.d - L.d) > 1e-9)
        throw InputError("the diagram window and the tower have different moduli");
    CheckReport rep;
    const int imax = std::min(t.n_max(), L.j_max);
    const double d = t.d;
    std::mt19937 rng(0x7a21u);

    // Included generator cache: gen[l][i] = e_i viewed inside level l.
    std::vector<std::vector<AlgElem>> gen(imax + 1);
    for (int l = 2; l <= imax; ++l) {
        gen[l].resize(l);
        for (int i = 1; i < l; ++i) gen[l][i] = t.include_to(i + 1, l, t.e(i));
    }

    // Word expansions and images per ambient strand count.
    std::vector<std::map<TLDiagram, DiagramWord>> words(imax + 1);
    std::vector<std::map<TLDiagram, AlgElem>> image_cache(imax + 1);
    auto image_of = [&](int l, const TLElement& x) {
        if (words[l].empty() && l >= 0)
            words[l] = diagram_words(TLContext{l, d, x.shaded_left});
        AlgElem acc = AlgElem::zeros(t.level_dims[l]);
        for (const auto& [diag, coeff] : x.terms) {
            auto it = image_cache[l].find(diag);
            if (it == image_cache[l].end()) {
                const DiagramWord& dw = words[l].at(diag);
                AlgElem prod = AlgElem::identity(t.level_dims[l]);
                for (int i : dw.word) prod = alg_mul(prod, alg_scale(gen[l][i], cx(d, 0.0)));
                prod = alg_scale(prod, cx(1.0 / dw.coef, 0.0));
                it = image_cache[l].emplace(diag, std::move(prod)).first;
            }
            acc = alg_add(acc, alg_scale(it->second, coeff));
        }
        return acc;
    };

    {
        // The tower state is faithful and pulls words down through the cap-cup
        // projections, so the image of the diagram window is its quotient by
        // the radical of the trace form: the embedded rank must match the rank
        // of the trace-form Gram matrix at this modulus.
        WorstDev w;
        for (int i = 0; i <= imax; ++i) {
            const auto& basis = L.cell(0, i).basis;
            Mat flat(t.level_dim(i), static_cast<Eigen::Index>(basis.size()));
            for (std::size_t b = 0; b < basis.size(); ++b)
                flat.col(static_cast<Eigen::Index>(b)) = alg_flatten(image_of(i, basis[b]));
            const int expected = rank_of(gram_trace(basis), 1e-8);
            w.feed(std::abs(rank_of(flat, 1e-8) - expected),
                   "window 0.." + std::to_string(i) + " expected rank " +
                       std::to_string(expected));
        }
        rep.add("the diagram window embeds with the trace form rank", w.dev,
                std::max(tol, 0.5), w.where);
    }

    {
        WorstDev w;
        for (int i = 0; i <= imax; ++i) {
            const auto& basis = L.cell(0, i).basis;
            w.feed(alg_distance(image_of(i, tl_identity(TLContext{i, d, false})),
                                AlgElem::identity(t.level_dims[i])),
                   "window 0.." + std::to_string(i));
            const std::size_t nb = basis.size();
            std::vector<std::pair<std::size_t, std::size_t>> pairs;
            if (nb * nb <= 400) {
                for (std::size_t a = 0; a < nb; ++a)
                    for (std::size_t b = 0; b < nb; ++b) pairs.push_back({a, b});
            } else {
                std::uniform_int_distribution<std::size_t> pick(0, nb - 1);
                for (int s = 0; s < 50; ++s) pairs.push_back({pick(rng), pick(rng)});
            }
            for (auto [a, b] : pairs)
                w.feed(alg_distance(image_of(i, multiply(basis[a], basis[b])),
                                    alg_mul(image_of(i, basis[a]), image_of(i, basis[b]))),
                       "window 0.." + std::to_string(i));
        }
        rep.add("the diagram embedding is multiplicative and unital", w.dev, tol, w.where);
    }

    {
        WorstDev w;
        for (int i = 0; i <= imax; ++i)
            for (const auto& b : L.cell(0, i).basis)
                w.feed(alg_distance(image_of(i, involution(b)),
                                    alg_adjoint(image_of(i, b))),
                       "window 0.." + std::to_string(i));
        rep.add("the diagram embedding respects the adjoint", w.dev, tol, w.where);
    }

    {
        WorstDev w;
        for (int i = 1; i <= imax; ++i)
            for (const auto& b : L.cell(0, i).basis)
                w.feed(alg_distance(t.expect(i, image_of(i, b)),
                                    image_of(i - 1, right_expectation(b))),
                       "window 0.." + std::to_string(i));
        rep.add("the tower expectation extends the diagrammatic one", w.dev, tol, w.where);
    }

    {
        WorstDev w;
        for (int k = 1; k <= imax; ++k)
            for (int l = k; l <= imax; ++l) {
                std::vector<AlgElem> lows;
                if (t.level_dim(k) <= 64) {
                    lows = t.basis(k);
                } else {
                    for (int s = 0; s < 3; ++s)
                        lows.push_back(random_elem(t.level_dims[k], rng));
                }
                for (const auto& y : L.cell(k, l).basis) {
                    const AlgElem img = image_of(l, y);
                    for (const auto& x : lows) {
                        const AlgElem ix = t.include_to(k, l, x);
                        w.feed(alg_distance(alg_mul(ix, img), alg_mul(img, ix)),
                               "window " + std::to_string(k) + ".." + std::to_string(l));
                    }
                }
            }
        rep.add("shifted windows land in the relative commutant", w.dev, tol, w.where);
    }

    return rep;
}

// ===========================================================================
// DOT export.
// ===========================================================================

std::string bratteli_dot(const PrincipalGraphData& pg) {
    const BratteliData& br = pg.bratteli;
    std::ostringstream os;
    os << "digraph bratteli {\n  rankdir=BT;\n  node [shape=box];\n";
    for (std::size_t n = 0; n < br.dims.size(); ++n) {
        os << "  subgraph cluster_" << n << " {\n    label=\"level " << n << "\";\n";
        for (std::size_t c = 0; c < br.dims[n].size(); ++c) {
            os << "    b" << n << "_" << c << " [label=\"" << br.vertex[n][c] << " ("
               << br.dims[n][c] << ")\"";
            if (br.is_new[n][c]) os << ", peripheries=2";
            os << "];\n";
        }
        os << "  }\n";
    }
    for (std::size_t n = 0; n + 1 < br.dims.size(); ++n)
        for (std::size_t p = 0; p < br.dims[n].size(); ++p)
            for (std::size_t q = 0; q < br.dims[n + 1].size(); ++q) {
                const int m = static_cast<int>(std::llround(br.mult[n](p, q)));
                for (int k = 0; k < m; ++k)
                    os << "  b" << n << "_" << p << " -> b" << n + 1 << "_" << q << ";\n";
            }
    os << "}\n";
    return os.str();
}

std::string principal_graph_dot(const PrincipalGraphData& pg) {
    std::ostringstream os;
    os << "graph principal {\n  node [shape=circle];\n";
    auto emit_vertex = [&](const std::string& v) {
        os << "  \"" << v << "\" [label=\"" << v << "\\ndepth " << pg.depth.at(v)
           << ", dim " << pg.vertex_dim.at(v) << "\"];\n";
    };
    for (const auto& v : pg.graph.v0) emit_vertex(v);
    for (const auto& v : pg.graph.v1) emit_vertex(v);
    for (const auto& e : pg.graph.edges)
        if (pg.graph.in_v0(e.src))
            os << "  \"" << e.src << "\" -- \"" << e.dst << "\";\n";
    os << "}\n";
    return os.str();
}

} // namespace sfl
