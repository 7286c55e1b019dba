#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "subfactorlab/bighilb.hpp"
#include "subfactorlab/errors.hpp"
#include "subfactorlab/graph.hpp"
#include "subfactorlab/types.hpp"

namespace {

using namespace sfl;

WeightedBipartiteGraph weighted_path(int m, const std::string& prefix = "x") {
    WeightedBipartiteGraph g = path_graph(m, prefix);
    g.weight = edge_weights_from_vertex_weighting(g, path_graph_sine_weighting(m, prefix));
    g.validate();
    return g;
}

WeightedBipartiteGraph complete_22() {
    WeightedBipartiteGraph g;
    g.v0 = {"a1", "a2"};
    g.v1 = {"b1", "b2"};
    for (const std::string& a : g.v0)
        for (const std::string& b : g.v1) {
            g.edges.push_back({a + b, a, b});
            g.edges.push_back({b + a, b, a});
            g.weight[a + b] = 1.0;
            g.weight[b + a] = 1.0;
            g.bar[a + b] = b + a;
            g.bar[b + a] = a + b;
        }
    g.validate();
    return g;
}

// Two vertices joined by a double edge; weights x and 1/x are the unique
// fair balanced choice, with fairness constant x + 1/x.
WeightedBipartiteGraph double_edge(double x) {
    WeightedBipartiteGraph g;
    g.v0 = {"a"};
    g.v1 = {"b"};
    g.edges = {{"e1", "a", "b"}, {"e2", "a", "b"}, {"f1", "b", "a"}, {"f2", "b", "a"}};
    g.weight = {{"e1", x}, {"e2", 1.0 / x}, {"f1", 1.0 / x}, {"f2", x}};
    g.bar = {{"e1", "f1"}, {"f1", "e1"}, {"e2", "f2"}, {"f2", "e2"}};
    g.validate();
    return g;
}

Mat random_matrix(std::mt19937& r, int rows, int cols) {
    std::normal_distribution<double> n(0.0, 1.0);
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = cx(n(r), n(r));
    return m;
}

Mat random_unitary(std::mt19937& r, int n) {
    Eigen::HouseholderQR<Mat> qr(random_matrix(r, n, n));
    return Mat(qr.householderQ());
}

// Random space with blocks of dimension 0..2 between the given vertex rows
// and columns; labels get a per-space prefix so joined labels never collide.
BigradedSpace random_space(std::mt19937& r, const std::vector<std::string>& rows,
                           const std::vector<std::string>& cols, const std::string& prefix) {
    std::uniform_int_distribution<int> dist(0, 2);
    BigradedSpace s;
    int counter = 0;
    for (const auto& u : rows)
        for (const auto& v : cols) {
            const int d = dist(r);
            for (int t = 0; t < d; ++t)
                s.basis[{u, v}].push_back(prefix + std::string(1, char('a' + counter++)));
            if (d == 0) s.basis.erase({u, v});
        }
    s.validate();
    return s;
}

BigradedOp random_op(std::mt19937& r, const BigradedSpace& src, const BigradedSpace& tgt) {
    BigradedOp f = BigradedOp::zero(src, tgt);
    std::set<VertexPair> keys;
    for (const auto& [pr, l] : src.basis) keys.insert(pr);
    for (const auto& [pr, l] : tgt.basis) keys.insert(pr);
    for (const auto& pr : keys) {
        const int rc = tgt.dim(pr.first, pr.second);
        const int cc = src.dim(pr.first, pr.second);
        if (rc > 0 && cc > 0) f.blocks[pr] = random_matrix(r, rc, cc);
    }
    return f;
}

BigradedOp block_unitary(std::mt19937& r, const BigradedSpace& s) {
    BigradedOp u = BigradedOp::zero(s, s);
    for (const auto& [pr, l] : s.basis)
        if (!l.empty()) u.blocks[pr] = random_unitary(r, static_cast<int>(l.size()));
    return u;
}

// Re-express the pairing in new orthonormal block bases: u acts on the
// generator, w on its conjugate. Zigzags survive any unitary choice.
DualityData gauged(const DualityData& dd, const BigradedOp& u, const BigradedOp& w) {
    DualityData out = dd;
    out.coev_k = op_compose(tensor_ops(op_dagger(u), op_dagger(w)), dd.coev_k);
    out.ev_k = op_compose(dd.ev_k, tensor_ops(w, u));
    return out;
}

void require_close_multisets(const std::vector<double>& a, const std::vector<double>& b,
                             double tol) {
    REQUIRE(a.size() == b.size());
    std::vector<double> sa = a, sb = b;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    for (size_t i = 0; i < sa.size(); ++i) CHECK(std::abs(sa[i] - sb[i]) < tol);
}

} // namespace

TEST_CASE("generator spaces list the graph's edges block by block") {
    const WeightedBipartiteGraph g = weighted_path(3);
    const BigradedSpace k = generator_space(g);
    const BigradedSpace kbar = generator_dual_space(g);

    CHECK(k.dim("x1", "x2") == 1);
    CHECK(k.dim("x3", "x2") == 1);
    CHECK(k.total_dim() == 2);
    CHECK(k.labels("x1", "x2") == std::vector<std::string>{"x1x2"});
    CHECK(kbar.dim("x2", "x1") == 1);
    CHECK(kbar.dim("x2", "x3") == 1);
    CHECK(kbar.labels("x2", "x3") == std::vector<std::string>{"x2x3"});
    CHECK(k.label_index("x1", "x2", "x1x2") == 0);
    CHECK_THROWS_AS(k.label_index("x1", "x2", "zz"), IndexError);

    // One row of the two-step space: paths x1 -> x2 -> {x1, x3}.
    const BigradedSpace kk = tensor_spaces(k, kbar);
    CHECK(kk.dim("x1", "x1") == 1);
    CHECK(kk.dim("x1", "x3") == 1);
    CHECK(kk.dim("x3", "x1") == 1);
    CHECK(kk.dim("x3", "x3") == 1);
    CHECK(kk.dim("x2", "x2") == 0);
    CHECK(kk.labels("x1", "x3") == std::vector<std::string>{"x1x2.x2x3"});

    const BigradedSpace row = row_restrict(kk, "x1");
    CHECK(row.total_dim() == 2);
    CHECK(row.dim("x3", "x3") == 0);
    CHECK(row.dim("x1", "x3") == 1);
}

TEST_CASE("alternating powers count alternating paths, matching adjacency powers") {
    const WeightedBipartiteGraph g = weighted_path(5, "p");
    std::vector<std::string> verts = g.v0;
    verts.insert(verts.end(), g.v1.begin(), g.v1.end());
    std::map<std::string, int> index;
    for (const auto& v : verts) index[v] = static_cast<int>(index.size());

    RMat adj = RMat::Zero(verts.size(), verts.size());
    for (const auto& e : g.edges) adj(index[e.src], index[e.dst]) += 1.0;

    RMat power = RMat::Identity(verts.size(), verts.size());
    for (int n = 0; n <= 5; ++n) {
        const BigradedSpace h = alternating_power(g, n);
        for (const auto& u : verts)
            for (const auto& v : verts) {
                const bool row_ok = n == 0 || g.in_v0(u);
                const int expected = row_ok ? static_cast<int>(power(index[u], index[v])) : 0;
                CHECK(h.dim(u, v) == expected);
            }
        power = adj * power;
    }

    // Spot values for the four-step row at the leading vertex.
    const BigradedSpace h4 = alternating_power(g, 4);
    CHECK(h4.dim("p1", "p1") == 2);
    CHECK(h4.dim("p1", "p3") == 3);
    CHECK(h4.dim("p1", "p5") == 1);
}

TEST_CASE("tensor entries order blocks row-major within and across middle vertices") {
    BigradedSpace h, g;
    h.basis[{"u", "v1"}] = {"b"};
    h.basis[{"u", "v2"}] = {"a"};
    g.basis[{"v1", "w"}] = {"q"};
    g.basis[{"v2", "w"}] = {"p"};

    const BigradedSpace hg = tensor_spaces(h, g);
    CHECK(hg.labels("u", "w") == std::vector<std::string>{"a.p", "b.q"});

    BigradedOp f = BigradedOp::zero(h, h);
    f.set_block("u", "v1", Mat::Constant(1, 1, cx(2.0, 0.0)));
    f.set_block("u", "v2", Mat::Constant(1, 1, cx(3.0, 0.0)));
    BigradedOp s = BigradedOp::zero(g, g);
    s.set_block("v1", "w", Mat::Constant(1, 1, cx(5.0, 0.0)));
    s.set_block("v2", "w", Mat::Constant(1, 1, cx(7.0, 0.0)));

    const Mat blk = tensor_ops(f, s).block("u", "w");
    REQUIRE(blk.rows() == 2);
    CHECK(std::abs(blk(0, 0) - cx(21.0, 0.0)) < 1e-15); // a.p
    CHECK(std::abs(blk(1, 1) - cx(10.0, 0.0)) < 1e-15); // b.q
    CHECK(std::abs(blk(0, 1)) == 0.0);
    CHECK(std::abs(blk(1, 0)) == 0.0);

    // Single middle vertex: plain Kronecker ordering.
    BigradedSpace h2, g2;
    h2.basis[{"u", "v1"}] = {"e", "f"};
    g2.basis[{"v1", "w"}] = {"g", "h"};
    CHECK(tensor_spaces(h2, g2).labels("u", "w") ==
          std::vector<std::string>{"e.g", "e.h", "f.g", "f.h"});
}

TEST_CASE("tensor product is strictly associative and strictly unital") {
    std::mt19937 r(7101u);
    const std::vector<std::string> us = {"u1", "u2"}, vs = {"v1", "v2"}, ws = {"w1", "w2"},
                                   xs = {"x1", "x2"};
    for (int trial = 0; trial < 5; ++trial) {
        const BigradedSpace h = random_space(r, us, vs, "h");
        const BigradedSpace g = random_space(r, vs, ws, "g");
        const BigradedSpace l = random_space(r, ws, xs, "l");
        CHECK(tensor_spaces(tensor_spaces(h, g), l) == tensor_spaces(h, tensor_spaces(g, l)));

        std::vector<std::string> all;
        all.insert(all.end(), us.begin(), us.end());
        all.insert(all.end(), vs.begin(), vs.end());
        all.insert(all.end(), ws.begin(), ws.end());
        all.insert(all.end(), xs.begin(), xs.end());
        const BigradedSpace unit = unit_space(all);
        CHECK(tensor_spaces(unit, h) == h);
        CHECK(tensor_spaces(h, unit) == h);

        const BigradedOp f1 = random_op(r, h, random_space(r, us, vs, "H"));
        const BigradedOp g1 = random_op(r, g, random_space(r, vs, ws, "G"));
        const BigradedOp l1 = random_op(r, l, random_space(r, ws, xs, "L"));
        CHECK(op_distance(tensor_ops(tensor_ops(f1, g1), l1),
                          tensor_ops(f1, tensor_ops(g1, l1))) < 1e-12);
        CHECK(op_distance(tensor_ops(BigradedOp::identity(unit), f1), f1) == 0.0);
        CHECK(op_distance(tensor_ops(f1, BigradedOp::identity(unit)), f1) == 0.0);
    }
}

TEST_CASE("horizontal and vertical compositions satisfy the interchange law") {
    std::mt19937 r(7102u);
    const std::vector<std::string> us = {"u1", "u2"}, vs = {"v1", "v2"}, ws = {"w1", "w2"};
    for (int trial = 0; trial < 5; ++trial) {
        const BigradedSpace h1 = random_space(r, us, vs, "a");
        const BigradedSpace h2 = random_space(r, us, vs, "b");
        const BigradedSpace h3 = random_space(r, us, vs, "c");
        const BigradedSpace g1 = random_space(r, vs, ws, "d");
        const BigradedSpace g2 = random_space(r, vs, ws, "e");
        const BigradedSpace g3 = random_space(r, vs, ws, "f");
        const BigradedOp f1 = random_op(r, h1, h2), f2 = random_op(r, h2, h3);
        const BigradedOp s1 = random_op(r, g1, g2), s2 = random_op(r, g2, g3);

        CHECK(op_distance(tensor_ops(op_compose(f2, f1), op_compose(s2, s1)),
                          op_compose(tensor_ops(f2, s2), tensor_ops(f1, s1))) < 1e-11);
    }
}

TEST_CASE("dagger and conjugation are involutive functors") {
    std::mt19937 r(7103u);
    const std::vector<std::string> us = {"u1", "u2"}, vs = {"v1", "v2"};
    const BigradedSpace h1 = random_space(r, us, vs, "a");
    const BigradedSpace h2 = random_space(r, us, vs, "b");
    const BigradedSpace h3 = random_space(r, us, vs, "c");
    const BigradedOp f = random_op(r, h1, h2);
    const BigradedOp g = random_op(r, h2, h3);

    CHECK(op_distance(op_dagger(op_dagger(f)), f) == 0.0);
    CHECK(op_distance(op_dagger(op_compose(g, f)), op_compose(op_dagger(f), op_dagger(g))) <
          1e-12);
    CHECK(op_distance(op_dual(op_dual(f)), f) == 0.0);
    CHECK(dual_space(dual_space(h1)) == h1);
    CHECK(op_distance(op_dual(op_compose(g, f)), op_compose(op_dual(g), op_dual(f))) < 1e-12);
    CHECK(op_distance(op_dual(op_dagger(f)), op_dagger(op_dual(f))) == 0.0);

    const BigradedOp sum = op_add(f, op_scale(f, cx(2.0, 1.0)));
    CHECK(op_distance(sum, op_scale(f, cx(3.0, 1.0))) < 1e-13);
    CHECK(op_distance(op_dagger(sum),
                      op_add(op_dagger(f), op_scale(op_dagger(f), cx(2.0, -1.0)))) < 1e-12);
}

TEST_CASE("a fair balanced weighting induces a duality with exact zigzags") {
    const WeightedBipartiteGraph g = weighted_path(3);
    const DualityData dd = duality_from_weighting(g);

    // Coupling coefficients are square roots of the edge weights.
    const double root = std::pow(2.0, 0.25);
    const Mat coev = dd.coev_k.block("x1", "x1");
    REQUIRE(coev.rows() == 1);
    CHECK(std::abs(coev(0, 0) - cx(root, 0.0)) < 1e-14);

    const Mat ev = dd.ev_k.block("x2", "x2");
    REQUIRE(ev.cols() == 2);
    const int i1 = dd.ev_k.source.label_index("x2", "x2", "x2x1.x1x2");
    const int i3 = dd.ev_k.source.label_index("x2", "x2", "x2x3.x3x2");
    CHECK(std::abs(ev(0, i1) - cx(1.0 / root, 0.0)) < 1e-14);
    CHECK(std::abs(ev(0, i3) - cx(1.0 / root, 0.0)) < 1e-14);

    const CheckReport rep = check_duality(dd, std::sqrt(2.0), 1e-10);
    CHECK(rep.passed());
    CHECK(rep.worst() < 1e-13);
}

TEST_CASE("a single edge of weight one gives the unit pairing") {
    WeightedBipartiteGraph g;
    g.v0 = {"s"};
    g.v1 = {"t"};
    g.edges = {{"st", "s", "t"}, {"ts", "t", "s"}};
    g.weight = {{"st", 1.0}, {"ts", 1.0}};
    g.bar = {{"st", "ts"}, {"ts", "st"}};
    const DualityData dd = duality_from_weighting(g);

    CHECK(std::abs(dd.coev_k.block("s", "s")(0, 0) - cx(1.0, 0.0)) == 0.0);
    CHECK(std::abs(dd.ev_k.block("t", "t")(0, 0) - cx(1.0, 0.0)) == 0.0);
    CHECK(op_distance(dd.ev_kbar(), op_dagger(dd.coev_k)) == 0.0);
    CHECK(check_duality(dd, 1.0, 1e-14).passed());

    const auto weights = weighting_from_duality(dd);
    REQUIRE(weights.count({"s", "t"}) == 1);
    REQUIRE(weights.count({"t", "s"}) == 1);
    CHECK(std::abs(weights.at({"s", "t"})[0] - 1.0) < 1e-15);
    CHECK(std::abs(weights.at({"t", "s"})[0] - 1.0) < 1e-15);
}

TEST_CASE("the orthonormal pairing loop equals the out-degree") {
    const WeightedBipartiteGraph g = weighted_path(5, "p");
    const DualityData dd = standard_duality(generator_space(g));
    CHECK(check_duality(dd, -1.0, 1e-13).passed());

    const BigradedOp fwd = op_compose(dd.ev_kbar(), dd.coev_k);
    double total = 0.0;
    for (const auto& v : g.v0) {
        const double loop = fwd.block(v, v)(0, 0).real();
        CHECK(std::abs(loop - static_cast<double>(g.edges_from(v).size())) < 1e-13);
        total += loop;
    }
    CHECK(std::abs(total - static_cast<double>(g.edges.size()) / 2.0) < 1e-12);

    // A degree-regular graph passes the full fairness check at its degree.
    const DualityData dd22 = standard_duality(generator_space(complete_22()));
    CHECK(check_duality(dd22, 2.0, 1e-13).passed());
}

TEST_CASE("the orthonormal pairing does not depend on the orthonormal basis") {
    BigradedSpace k;
    k.basis[{"P", "Q"}] = {"x", "xy", "z"}; // '~'-suffixing reorders these
    const DualityData dd = standard_duality(k);
    CHECK(check_duality(dd, 3.0, 1e-13).passed());

    std::mt19937 r(7104u);
    const Mat u = random_unitary(r, 3);

    // Position map from generator order to conjugate-label order.
    const auto& kl = dd.k.labels("P", "Q");
    Mat perm = Mat::Zero(3, 3);
    for (int j = 0; j < 3; ++j)
        perm(dd.kbar.label_index("Q", "P", dd.conj.at(kl[j])), j) = 1.0;
    CHECK(max_abs(perm - Mat::Identity(3, 3)) > 0.5); // the reorder is real

    BigradedOp uop = BigradedOp::zero(dd.k, dd.k);
    uop.set_block("P", "Q", u);
    BigradedOp ubar = BigradedOp::zero(dd.kbar, dd.kbar);
    ubar.set_block("Q", "P", perm * u.conjugate() * perm.transpose());

    const BigradedOp moved = op_compose(tensor_ops(uop, ubar), dd.coev_k);
    CHECK(op_distance(moved, dd.coev_k) < 1e-13);

    // A non-unitary change of basis does move the coupling tensor.
    Mat squash = u;
    squash.row(0) *= 2.0;
    BigradedOp sop = uop;
    sop.set_block("P", "Q", squash);
    BigradedOp sbar = ubar;
    sbar.set_block("Q", "P", perm * squash.conjugate() * perm.transpose());
    CHECK(op_distance(op_compose(tensor_ops(sop, sbar), dd.coev_k), dd.coev_k) > 1e-2);
}

TEST_CASE("edge weights are recovered from the pairing alone") {
    for (const auto& g : {weighted_path(3), weighted_path(4, "y"), double_edge(2.0)}) {
        const DualityData dd = duality_from_weighting(g);
        const auto recovered = weighting_from_duality(dd);

        std::map<VertexPair, std::vector<double>> expected;
        for (const auto& e : g.edges) expected[{e.src, e.dst}].push_back(g.weight.at(e.id));
        REQUIRE(recovered.size() == expected.size());
        for (const auto& [pr, vals] : expected) {
            REQUIRE(recovered.count(pr) == 1);
            require_close_multisets(recovered.at(pr), vals, 1e-12);
        }
    }

    // Weight extraction from the orthonormal pairing sees every weight as 1.
    const auto flat = weighting_from_duality(standard_duality(generator_space(weighted_path(5))));
    for (const auto& [pr, vals] : flat)
        for (double v : vals) CHECK(std::abs(v - 1.0) < 1e-13);
}

TEST_CASE("the one-sided coupling maps compose to the identity and trace to the degree") {
    const WeightedBipartiteGraph g = double_edge(2.0);
    const double d = 2.0 + 0.5;
    const DualityData dd = duality_from_weighting(g);
    const auto phi = phi_maps(dd);
    const auto phi_bar = phi_maps_dual(dd);

    REQUIRE(phi.count({"a", "b"}) == 1);
    REQUIRE(phi_bar.count({"b", "a"}) == 1);
    const Mat comp = phi.at({"a", "b"}) * phi_bar.at({"b", "a"});
    CHECK(max_abs(comp - Mat::Identity(comp.rows(), comp.cols())) < 1e-13);
    const Mat comp2 = phi_bar.at({"b", "a"}) * phi.at({"a", "b"});
    CHECK(max_abs(comp2 - Mat::Identity(comp2.rows(), comp2.cols())) < 1e-13);

    double trace = 0.0;
    for (const auto& [pr, m] : phi) trace += (m.adjoint() * m).trace().real();
    CHECK(std::abs(trace - d) < 1e-12);

    double trace_bar = 0.0;
    for (const auto& [pr, m] : phi_bar) trace_bar += (m.adjoint() * m).trace().real();
    CHECK(std::abs(trace_bar - d) < 1e-12);
}

TEST_CASE("unitary gauge changes preserve zigzags and extracted weights") {
    const WeightedBipartiteGraph g = weighted_path(5, "p");
    const DualityData dd = duality_from_weighting(g);
    const double d = std::sqrt(3.0);
    const auto before = weighting_from_duality(dd);

    std::mt19937 r(7105u);
    const BigradedOp u = block_unitary(r, dd.k);
    const BigradedOp w = block_unitary(r, dd.kbar);
    const DualityData dd2 = gauged(dd, u, w);

    const CheckReport rep = check_duality(dd2, d, 1e-9);
    CHECK(rep.passed());

    const auto after = weighting_from_duality(dd2);
    REQUIRE(after.size() == before.size());
    for (const auto& [pr, vals] : before) {
        REQUIRE(after.count(pr) == 1);
        require_close_multisets(after.at(pr), vals, 1e-9);
    }

    // A non-unitary gauge breaks the zigzag identities.
    BigradedOp stretched = u;
    for (auto& [pr, m] : stretched.blocks) m *= 1.1;
    const DualityData bad = gauged(dd, stretched, w);
    CHECK_FALSE(check_duality(bad, d, 1e-9).passed());
}

TEST_CASE("malformed bigraded data is rejected") {
    BigradedSpace dotted;
    dotted.basis[{"u", "v"}] = {"a.b"};
    CHECK_THROWS_AS(dotted.validate(), InputError);

    BigradedSpace unsorted;
    unsorted.basis[{"u", "v"}] = {"b", "a"};
    CHECK_THROWS_AS(unsorted.validate(), InputError);

    BigradedSpace dup;
    dup.basis[{"u", "v"}] = {"a", "a"};
    CHECK_THROWS_AS(dup.validate(), InputError);

    BigradedSpace h;
    h.basis[{"u", "v"}] = {"a", "b"};
    BigradedOp f = BigradedOp::zero(h, h);
    CHECK_THROWS_AS(f.set_block("u", "v", Mat::Zero(1, 2)), DimensionMismatchError);
    f.set_block("u", "v", Mat::Identity(2, 2));
    f.validate();

    BigradedSpace g2;
    g2.basis[{"u", "v"}] = {"c"};
    CHECK_THROWS_AS(op_compose(BigradedOp::identity(g2), f), DimensionMismatchError);
    CHECK_THROWS_AS(op_add(BigradedOp::identity(g2), f), DimensionMismatchError);
    CHECK_THROWS_AS(op_distance(BigradedOp::identity(g2), f), DimensionMismatchError);

    // Joined labels stay distinct because '.' cannot occur inside a label.
    BigradedSpace left, right;
    left.basis[{"u", "v1"}] = {"s"};
    left.basis[{"u", "v2"}] = {"s2"};
    right.basis[{"v1", "w"}] = {"2t"};
    right.basis[{"v2", "w"}] = {"t"};
    CHECK(tensor_spaces(left, right).dim("u", "w") == 2);

    // Colliding joined labels across different middle vertices are refused.
    BigradedSpace clashl, clashr;
    clashl.basis[{"u", "v1"}] = {"s"};
    clashl.basis[{"u", "v2"}] = {"s"};
    clashr.basis[{"v1", "w"}] = {"t"};
    clashr.basis[{"v2", "w"}] = {"t"};
    CHECK_THROWS_AS(tensor_spaces(clashl, clashr), InputError);

    CHECK_THROWS_AS(alternating_power(weighted_path(3), -1), IndexError);

    WeightedBipartiteGraph bad = weighted_path(3);
    bad.edges[0].id = "x1.x2";
    CHECK_THROWS_AS(bad.validate(), InputError);
}
