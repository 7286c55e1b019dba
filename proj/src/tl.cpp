#include "subfactorlab/tl.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace sfl {

namespace {

void check_compatible(const TLElement& x, const TLElement& y, const char* op) {
    if (x.n != y.n || x.shaded_left != y.shaded_left || x.d != y.d) {
        std::ostringstream msg;
        msg << op << ": operands live in different diagram algebras"
            << " (n=" << x.n << " vs " << y.n
            << ", shaded_left=" << x.shaded_left << " vs " << y.shaded_left
            << ", d=" << x.d << " vs " << y.d << ")";
        throw DimensionMismatchError(msg.str());
    }
}

// Result of gluing one diagram on top of another along the middle boundary.
struct StackResult {
    std::vector<std::pair<int, int>> pairs;
    int loops = 0;
};

// Glues `bot`'s top edge to `top`'s bottom edge.  Nodes: 0..n-1 the product's
// bottom columns, n..2n-1 the product's top columns, 2n..3n-1 the interface
// columns.  Boundary nodes have one incident chord, interface nodes two;
// walking chord-to-chord pairs up the boundary and counts closed loops.
StackResult stack_pairings(int n,
                           const std::vector<std::pair<int, int>>& top,
                           const std::vector<std::pair<int, int>>& bot) {
    struct Edge { int u, v; };
    std::vector<Edge> edges;
    edges.reserve(2 * static_cast<size_t>(n));
    // bot's top point p (> n) sits at interface column 2n+1-p.
    auto bot_node = [n](int p) { return p <= n ? p - 1 : 2 * n + (2 * n - p); };
    // top's bottom point p sits at interface column p; its top point p (> n)
    // is the product's top column 2n+1-p.
    auto top_node = [n](int p) { return p <= n ? 2 * n + (p - 1) : n + (2 * n - p); };
    for (const auto& pr : bot) edges.push_back({bot_node(pr.first), bot_node(pr.second)});
    for (const auto& pr : top) edges.push_back({top_node(pr.first), top_node(pr.second)});

    std::vector<std::vector<int>> inc(3 * static_cast<size_t>(n));
    for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
        inc[edges[e].u].push_back(e);
        inc[edges[e].v].push_back(e);
    }
    auto point_of_node = [n](int v) { return v < n ? v + 1 : 3 * n - v; };

    StackResult res;
    std::vector<char> used(edges.size(), 0);
    for (int s = 0; s < 2 * n; ++s) {
        int eid = inc[s][0];
        if (used[eid]) continue;
        int cur = s;
        while (true) {
            used[eid] = 1;
            int nxt = edges[eid].u == cur ? edges[eid].v : edges[eid].u;
            if (nxt < 2 * n) {
                res.pairs.push_back({std::min(point_of_node(s), point_of_node(nxt)),
                                     std::max(point_of_node(s), point_of_node(nxt))});
                break;
            }
            eid = inc[nxt][0] == eid ? inc[nxt][1] : inc[nxt][0];
            cur = nxt;
        }
    }
    // Unused chords form cycles supported on interface columns only.
    for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
        if (used[e]) continue;
        ++res.loops;
        int eid = e, cur = edges[e].u;
        while (!used[eid]) {
            used[eid] = 1;
            int nxt = edges[eid].u == cur ? edges[eid].v : edges[eid].u;
            eid = inc[nxt][0] == eid ? inc[nxt][1] : inc[nxt][0];
            cur = nxt;
        }
    }
    return res;
}

std::vector<std::vector<std::pair<int, int>>> noncrossing_matchings(const std::vector<int>& pts) {
    std::vector<std::vector<std::pair<int, int>>> out;
    if (pts.empty()) {
        out.push_back({});
        return out;
    }
    for (size_t idx = 1; idx < pts.size(); idx += 2) {
        auto inner = noncrossing_matchings({pts.begin() + 1, pts.begin() + idx});
        auto outer = noncrossing_matchings({pts.begin() + idx + 1, pts.end()});
        for (const auto& l : inner) {
            for (const auto& r : outer) {
                std::vector<std::pair<int, int>> m;
                m.reserve(pts.size() / 2);
                m.push_back({pts[0], pts[idx]});
                m.insert(m.end(), l.begin(), l.end());
                m.insert(m.end(), r.begin(), r.end());
                out.push_back(std::move(m));
            }
        }
    }
    return out;
}

} // namespace

void TLDiagram::canonicalize() {
    for (auto& pr : pairs)
        if (pr.first > pr.second) std::swap(pr.first, pr.second);
    std::sort(pairs.begin(), pairs.end());
}

int TLDiagram::partner(int p) const {
    for (const auto& pr : pairs) {
        if (pr.first == p) return pr.second;
        if (pr.second == p) return pr.first;
    }
    throw IndexError("partner: point " + std::to_string(p) + " is not matched");
}

bool TLDiagram::well_formed() const {
    if (static_cast<int>(pairs.size()) != n) return false;
    std::vector<char> seen(2 * static_cast<size_t>(n) + 1, 0);
    for (const auto& pr : pairs) {
        for (int p : {pr.first, pr.second}) {
            if (p < 1 || p > 2 * n || seen[p]) return false;
            seen[p] = 1;
        }
    }
    for (size_t a = 0; a < pairs.size(); ++a) {
        for (size_t b = a + 1; b < pairs.size(); ++b) {
            int p1 = std::min(pairs[a].first, pairs[a].second);
            int q1 = std::max(pairs[a].first, pairs[a].second);
            int p2 = std::min(pairs[b].first, pairs[b].second);
            int q2 = std::max(pairs[b].first, pairs[b].second);
            bool inside = (p1 < p2 && q2 < q1) || (p2 < p1 && q1 < q2);
            bool disjoint = q1 < p2 || q2 < p1;
            if (!inside && !disjoint) return false;
        }
    }
    return true;
}

bool TLDiagram::is_through_column(int c) const {
    if (c < 1 || c > n) throw IndexError("is_through_column: column out of range");
    return partner(c) == 2 * n + 1 - c;
}

double TLElement::sup_norm() const {
    double m = 0.0;
    for (const auto& [D, c] : terms) m = std::max(m, std::abs(c));
    return m;
}

TLElement& TLElement::prune(double eps) {
    for (auto it = terms.begin(); it != terms.end();) {
        if (std::abs(it->second) < eps)
            it = terms.erase(it);
        else
            ++it;
    }
    return *this;
}

std::vector<TLDiagram> enumerate_basis(int n, bool shaded_left) {
    if (n < 0) throw IndexError("enumerate_basis: negative strand count");
    std::vector<int> pts(2 * static_cast<size_t>(n));
    for (int p = 1; p <= 2 * n; ++p) pts[p - 1] = p;
    std::vector<TLDiagram> out;
    for (auto& m : noncrossing_matchings(pts)) {
        TLDiagram D{n, shaded_left, std::move(m)};
        D.canonicalize();
        out.push_back(std::move(D));
    }
    return out;
}

TLElement tl_identity(const TLContext& ctx) {
    TLDiagram D;
    D.n = ctx.n;
    D.shaded_left = ctx.shaded_left;
    for (int c = 1; c <= ctx.n; ++c) D.pairs.push_back({c, 2 * ctx.n + 1 - c});
    D.canonicalize();
    TLElement out = TLElement::zero(ctx);
    out.terms[D] = cx(1.0, 0.0);
    return out;
}

TLElement tl_from_diagram(const TLDiagram& D, double d) {
    TLDiagram C = D;
    C.canonicalize();
    if (!C.well_formed())
        throw IndexError("tl_from_diagram: pairing is not a noncrossing perfect matching");
    TLElement out{D.n, D.shaded_left, d, {}};
    out.terms[C] = cx(1.0, 0.0);
    return out;
}

TLElement add(const TLElement& x, const TLElement& y) {
    check_compatible(x, y, "add");
    TLElement out = x;
    for (const auto& [D, c] : y.terms) out.terms[D] += c;
    out.prune();
    return out;
}

TLElement scale(const TLElement& x, cx c) {
    TLElement out = x;
    for (auto& [D, v] : out.terms) v *= c;
    out.prune();
    return out;
}

TLElement multiply(const TLElement& x, const TLElement& y) {
    check_compatible(x, y, "multiply");
    TLElement out = TLElement::zero(x.context());
    for (const auto& [Dx, cx_] : x.terms) {
        for (const auto& [Dy, cy_] : y.terms) {
            StackResult sr = stack_pairings(x.n, Dx.pairs, Dy.pairs);
            TLDiagram D{x.n, x.shaded_left, std::move(sr.pairs)};
            D.canonicalize();
            out.terms[D] += cx_ * cy_ * std::pow(x.d, sr.loops);
        }
    }
    out.prune();
    return out;
}

TLElement jones_generator(const TLContext& ctx, int i) {
    if (i < 1 || i > ctx.n - 1)
        throw IndexError("jones_generator: index " + std::to_string(i) +
                         " out of range 1.." + std::to_string(ctx.n - 1));
    TLDiagram D;
    D.n = ctx.n;
    D.shaded_left = ctx.shaded_left;
    D.pairs.push_back({i, i + 1});
    D.pairs.push_back({2 * ctx.n - i, 2 * ctx.n + 1 - i});
    for (int c = 1; c <= ctx.n; ++c)
        if (c != i && c != i + 1) D.pairs.push_back({c, 2 * ctx.n + 1 - c});
    D.canonicalize();
    TLElement out = TLElement::zero(ctx);
    out.terms[D] = cx(1.0 / ctx.d, 0.0);
    return out;
}

TLElement involution(const TLElement& x) {
    TLElement out = TLElement::zero(x.context());
    for (const auto& [D, c] : x.terms) {
        TLDiagram R = D;
        for (auto& pr : R.pairs) {
            pr.first = 2 * x.n + 1 - pr.first;
            pr.second = 2 * x.n + 1 - pr.second;
        }
        R.canonicalize();
        out.terms[R] += std::conj(c);
    }
    out.prune();
    return out;
}

cx markov_trace(const TLElement& x) {
    cx total(0.0, 0.0);
    for (const auto& [D, c] : x.terms) {
        // Close each column around the right and count cycles: the closure
        // chords plus the diagram's own chords give every point degree two,
        // so cycles coincide with connected components.
        std::vector<int> root(2 * static_cast<size_t>(x.n) + 1);
        for (int p = 1; p <= 2 * x.n; ++p) root[p] = p;
        std::function<int(int)> find = [&](int a) {
            while (root[a] != a) a = root[a] = root[root[a]];
            return a;
        };
        auto unite = [&](int a, int b) { root[find(a)] = find(b); };
        for (const auto& pr : D.pairs) unite(pr.first, pr.second);
        for (int c2 = 1; c2 <= x.n; ++c2) unite(c2, 2 * x.n + 1 - c2);
        int loops = 0;
        for (int p = 1; p <= 2 * x.n; ++p)
            if (find(p) == p) ++loops;
        total += c * std::pow(x.d, loops - x.n);
    }
    return total;
}

TLElement right_expectation(const TLElement& x) {
    if (x.n < 1) throw IndexError("right_expectation: no strand to bend");
    TLContext ctx{x.n - 1, x.d, x.shaded_left};
    TLElement out = TLElement::zero(ctx);
    const int pb = x.n, pt = x.n + 1; // bottom and top points of the last column
    for (const auto& [D, c] : x.terms) {
        int a = D.partner(pb), b = D.partner(pt);
        TLDiagram R;
        R.n = x.n - 1;
        R.shaded_left = x.shaded_left;
        int loops = 0;
        for (const auto& pr : D.pairs) {
            if (pr.first == pb || pr.second == pb || pr.first == pt || pr.second == pt) continue;
            R.pairs.push_back(pr);
        }
        if (a == pt) {
            loops = 1; // the last column was a through strand; bending closes it
        } else {
            R.pairs.push_back({a, b});
        }
        for (auto& pr : R.pairs) {
            if (pr.first > pt) pr.first -= 2;
            if (pr.second > pt) pr.second -= 2;
        }
        R.canonicalize();
        out.terms[R] += c * std::pow(x.d, loops - 1);
    }
    out.prune();
    return out;
}

TLElement left_expectation(const TLElement& x, int i) {
    if (i < 0 || i + 1 > x.n)
        throw IndexError("left_expectation: through-strand count out of range");
    const int pb = i + 1, pt = 2 * x.n - i; // bottom and top points of column i+1
    TLElement out = TLElement::zero(x.context());
    for (const auto& [D, c] : x.terms) {
        for (int col = 1; col <= i; ++col)
            if (!D.is_through_column(col))
                throw AxiomViolationError(
                    "left_expectation: column " + std::to_string(col) +
                    " is not a through strand, diagram " + to_string(D));
        int a = D.partner(pb), b = D.partner(pt);
        TLDiagram R;
        R.n = x.n;
        R.shaded_left = x.shaded_left;
        int loops = 0;
        for (const auto& pr : D.pairs) {
            if (pr.first == pb || pr.second == pb || pr.first == pt || pr.second == pt) continue;
            R.pairs.push_back(pr);
        }
        if (a == pt) {
            loops = 1; // column i+1 was already a through strand
        } else {
            R.pairs.push_back({std::min(a, b), std::max(a, b)});
        }
        // Bending removes column i+1 and the fresh strand re-fills the slot.
        R.pairs.push_back({pb, pt});
        R.canonicalize();
        out.terms[R] += c * std::pow(x.d, loops - 1);
    }
    out.prune();
    return out;
}

TLElement insert_through(const TLElement& x, int pos, int m) {
    if (m < 0) throw IndexError("insert_through: negative strand count");
    if (pos < 0 || pos > x.n) throw IndexError("insert_through: position out of range");
    const int n = x.n, nn = x.n + m;
    TLContext ctx{nn, x.d, x.shaded_left != (pos == 0 && m % 2 == 1)};
    TLElement out = TLElement::zero(ctx);
    auto remap = [&](int p) {
        if (p <= n) return p <= pos ? p : p + m;          // bottom point
        int c = 2 * n + 1 - p;                            // top point of column c
        return c <= pos ? p + 2 * m : p + m;
    };
    for (const auto& [D, c] : x.terms) {
        TLDiagram R;
        R.n = nn;
        R.shaded_left = ctx.shaded_left;
        for (const auto& pr : D.pairs)
            R.pairs.push_back({remap(pr.first), remap(pr.second)});
        for (int t = 1; t <= m; ++t)
            R.pairs.push_back({pos + t, 2 * nn + 1 - pos - t});
        R.canonicalize();
        out.terms[R] += c;
    }
    return out;
}

TLElement shift_insert(const TLElement& x, int m) { return insert_through(x, 0, m); }

TLElement extend_right(const TLElement& x, int m) {
    if (x.n > 0) return insert_through(x, x.n, m);
    // A 0-strand element is a scalar, and appending strands on the right
    // keeps the left-edge tag; insert_through's position-0 parity flip is
    // meant for insertion to the left of the whole picture.
    TLElement out = TLElement::zero(TLContext{m, x.d, x.shaded_left});
    for (const auto& [D, c] : x.terms) {
        (void)D;
        out = add(out, scale(tl_identity(out.context()), c));
    }
    return out;
}

TLElement partial_projection(const TLContext& ctx, int i, int j, int k) {
    if (i < 0 || j < 0 || k < 0)
        throw IndexError("partial_projection: negative index");
    if (i + j + 2 * k > ctx.n)
        throw IndexError("partial_projection: indices need " + std::to_string(i + j + 2 * k) +
                         " strands but the ambient algebra has " + std::to_string(ctx.n));
    TLElement out = tl_identity(ctx);
    if (k == 0) return out;
    auto word = [&](int base) {
        TLElement w = tl_identity(ctx);
        for (int t = 0; t < k; ++t)
            for (int s = k + base + t; s >= base + t + 1; --s)
                w = multiply(w, jones_generator(ctx, s));
        return scale(w, cx(std::pow(ctx.d, k * (k - 1)), 0.0));
    };
    for (int base = i; base <= i + j; ++base) out = multiply(out, word(base));
    return scale(out, cx(std::pow(ctx.d, j * k), 0.0));
}

double coef_distance(const TLElement& x, const TLElement& y) {
    check_compatible(x, y, "coef_distance");
    double m = 0.0;
    for (const auto& [D, c] : x.terms) {
        auto it = y.terms.find(D);
        m = std::max(m, std::abs(c - (it == y.terms.end() ? cx(0) : it->second)));
    }
    for (const auto& [D, c] : y.terms)
        if (!x.terms.count(D)) m = std::max(m, std::abs(c));
    return m;
}

std::string to_string(const TLDiagram& D) {
    std::ostringstream os;
    os << "[n=" << D.n << (D.shaded_left ? ",-]" : ",+]");
    for (const auto& pr : D.pairs) os << "(" << pr.first << "," << pr.second << ")";
    return os.str();
}

std::string to_string(const TLElement& x) {
    if (x.terms.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [D, c] : x.terms) {
        if (!first) os << " + ";
        first = false;
        os << "(" << c.real();
        if (c.imag() != 0.0) os << (c.imag() > 0 ? "+" : "") << c.imag() << "i";
        os << ")*" << to_string(D);
    }
    return os.str();
}

} // namespace sfl
