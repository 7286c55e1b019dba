#include "subfactorlab/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>

#include "subfactorlab/errors.hpp"
#include "subfactorlab/types.hpp"

namespace sfl {

// ---------------------------------------------------------------------------
// Structure accessors.
// ---------------------------------------------------------------------------

const GraphEdge& WeightedBipartiteGraph::edge(const std::string& id) const {
    for (const auto& e : edges)
        if (e.id == id) return e;
    throw IndexError("unknown edge id '" + id + "'");
}

bool WeightedBipartiteGraph::has_vertex(const std::string& v) const {
    return std::find(v0.begin(), v0.end(), v) != v0.end() ||
           std::find(v1.begin(), v1.end(), v) != v1.end();
}

bool WeightedBipartiteGraph::in_v0(const std::string& v) const {
    return std::find(v0.begin(), v0.end(), v) != v0.end();
}

std::vector<std::string> WeightedBipartiteGraph::edges_from(const std::string& v) const {
    std::vector<std::string> out;
    for (const auto& e : edges)
        if (e.src == v) out.push_back(e.id);
    return out;
}

std::vector<std::string> WeightedBipartiteGraph::edge_ids(const std::string& u,
                                                          const std::string& v) const {
    std::vector<std::string> out;
    for (const auto& e : edges)
        if (e.src == u && e.dst == v) out.push_back(e.id);
    return out;
}

int WeightedBipartiteGraph::multiplicity(const std::string& u, const std::string& v) const {
    int m = 0;
    for (const auto& e : edges)
        if (e.src == u && e.dst == v) ++m;
    return m;
}

int WeightedBipartiteGraph::degree(const std::string& v) const {
    int m = 0;
    for (const auto& e : edges)
        if (e.src == v) ++m;
    return m;
}

void WeightedBipartiteGraph::validate() const {
    std::set<std::string> p0(v0.begin(), v0.end());
    std::set<std::string> p1(v1.begin(), v1.end());
    if (p0.size() != v0.size() || p1.size() != v1.size())
        throw InputError("graph: repeated vertex label within a part");
    for (const auto& v : p0)
        if (p1.count(v)) throw InputError("graph: vertex '" + v + "' appears in both parts");
    std::set<std::string> ids;
    for (const auto& e : edges) {
        if (!ids.insert(e.id).second)
            throw InputError("graph: repeated edge id '" + e.id + "'");
        if (e.id.empty() || e.id.find('.') != std::string::npos)
            throw InputError("graph: edge id '" + e.id +
                             "' must be nonempty and must not contain '.', which is "
                             "reserved for joined path labels");
        bool s0 = p0.count(e.src) > 0, s1 = p1.count(e.src) > 0;
        bool t0 = p0.count(e.dst) > 0, t1 = p1.count(e.dst) > 0;
        if (!(s0 || s1) || !(t0 || t1))
            throw InputError("graph: edge '" + e.id + "' touches an unknown vertex");
        if ((s0 && t0) || (s1 && t1))
            throw InputError("graph: edge '" + e.id + "' stays inside one part");
    }
    for (const auto& e : edges) {
        auto w = weight.find(e.id);
        if (w == weight.end())
            throw InputError("graph: edge '" + e.id + "' has no weight");
        if (!(w->second > 0.0))
            throw InputError("graph: edge '" + e.id + "' has non-positive weight");
        auto b = bar.find(e.id);
        if (b == bar.end())
            throw InputError("graph: edge '" + e.id + "' has no reversal partner");
        if (b->second == e.id)
            throw InputError("graph: edge '" + e.id + "' is its own reversal");
        const GraphEdge& r = edge(b->second);
        if (r.src != e.dst || r.dst != e.src)
            throw InputError("graph: reversal of edge '" + e.id + "' does not swap endpoints");
        auto bb = bar.find(b->second);
        if (bb == bar.end() || bb->second != e.id)
            throw InputError("graph: edge reversal is not an involution at '" + e.id + "'");
    }
}

double VertexWeighting::at(const std::string& v) const {
    auto it = nu.find(v);
    if (it == nu.end()) throw IndexError("vertex weighting: no value for vertex '" + v + "'");
    if (!(it->second > 0.0))
        throw InputError("vertex weighting: non-positive value at vertex '" + v + "'");
    return it->second;
}

void SquarePartiteGraph::validate() const {
    lambda0.validate();
    lambda1.validate();
    omega0.validate();
    omega1.validate();
    auto same_set = [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
        return std::set<std::string>(a.begin(), a.end()) ==
               std::set<std::string>(b.begin(), b.end());
    };
    if (!same_set(lambda0.v0, v00) || !same_set(omega0.v0, v00))
        throw InputError("square graph: corner 00 disagrees between subgraphs");
    if (!same_set(lambda1.v0, v01) || !same_set(omega0.v1, v01))
        throw InputError("square graph: corner 01 disagrees between subgraphs");
    if (!same_set(lambda0.v1, v10) || !same_set(omega1.v0, v10))
        throw InputError("square graph: corner 10 disagrees between subgraphs");
    if (!same_set(lambda1.v1, v11) || !same_set(omega1.v1, v11))
        throw InputError("square graph: corner 11 disagrees between subgraphs");
}

// ---------------------------------------------------------------------------
// Verification.
// ---------------------------------------------------------------------------

CheckReport check_fair(const WeightedBipartiteGraph& g, double d, double tol) {
    CheckReport report;
    g.validate();
    std::vector<std::string> all = g.v0;
    all.insert(all.end(), g.v1.begin(), g.v1.end());

    if (d <= 0.0) {
        // Auto-detect the target value as the first vertex's outgoing sum.
        for (const auto& v : all) {
            double s = 0.0;
            bool any = false;
            for (const auto& id : g.edges_from(v)) {
                s += g.weight.at(id);
                any = true;
            }
            if (any) {
                d = s;
                break;
            }
        }
        if (d <= 0.0) {
            report.add_flag("fairness value detectable", false, "graph has no edges");
            return report;
        }
    }
    report.add_flag("fairness value positive", d > 0.0);

    double worst_sum = 0.0;
    std::string worst_vertex;
    for (const auto& v : all) {
        double s = 0.0;
        for (const auto& id : g.edges_from(v)) s += g.weight.at(id);
        double dev = std::abs(s - d);
        if (dev > worst_sum) {
            worst_sum = dev;
            worst_vertex = v;
        }
    }
    report.add("outgoing weight sum equals " + std::to_string(d), worst_sum, tol, worst_vertex);

    double worst_bal = 0.0;
    std::string worst_edge;
    for (const auto& e : g.edges) {
        double dev = std::abs(g.weight.at(e.id) * g.weight.at(g.bar.at(e.id)) - 1.0);
        if (dev > worst_bal) {
            worst_bal = dev;
            worst_edge = e.id;
        }
    }
    report.add("reversal weights multiply to one", worst_bal, tol, worst_edge);

    // Fairness plus balance force every vertex degree to be at most d^2: some
    // outgoing edge has weight <= d/N, so its reversal has weight >= N/d, and
    // that single weight already participates in a sum equal to d.
    double worst_deg = 0.0;
    std::string worst_deg_vertex;
    for (const auto& v : all) {
        double excess = std::max(0.0, static_cast<double>(g.degree(v)) - d * d);
        if (excess > worst_deg) {
            worst_deg = excess;
            worst_deg_vertex = v;
        }
    }
    report.add("vertex degree within d^2", worst_deg, 1e-9, worst_deg_vertex);
    return report;
}

std::map<std::string, double> edge_weights_from_vertex_weighting(const WeightedBipartiteGraph& g,
                                                                 const VertexWeighting& w,
                                                                 double tol) {
    g.validate();
    std::vector<std::string> all = g.v0;
    all.insert(all.end(), g.v1.begin(), g.v1.end());

    // The weighting must be a positive eigenvector of the adjacency matrix;
    // the eigenvalue is read off at the first vertex and enforced everywhere.
    double d = -1.0;
    for (const auto& v : all) {
        double s = 0.0;
        for (const auto& id : g.edges_from(v)) s += w.at(g.edge(id).dst);
        double ratio = s / w.at(v);
        if (d < 0.0) d = ratio;
        if (std::abs(ratio - d) > tol * std::max(1.0, std::abs(d)))
            throw AxiomViolationError(
                "vertex weighting is not an adjacency eigenvector: neighbour sum at '" + v +
                "' gives " + std::to_string(ratio) + " but earlier vertices gave " +
                std::to_string(d));
    }

    std::map<std::string, double> out;
    for (const auto& e : g.edges) {
        const std::string& rid = g.bar.at(e.id);
        if (out.count(e.id)) continue;
        double val = w.at(e.dst) / w.at(e.src);
        out[e.id] = val;
        // The reversal gets the exact reciprocal so the balance identity holds
        // to the last bit, not merely to rounding.
        out[rid] = 1.0 / val;
    }
    return out;
}

PerronData perron_data(const WeightedBipartiteGraph& g) {
    g.validate();
    std::vector<std::string> all = g.v0;
    all.insert(all.end(), g.v1.begin(), g.v1.end());
    const int n = static_cast<int>(all.size());
    if (n == 0 || g.edges.empty())
        throw AxiomViolationError("spectral data needs a graph with at least one edge");
    std::map<std::string, int> index;
    for (int k = 0; k < n; ++k) index[all[k]] = k;

    RMat A = RMat::Zero(n, n);
    for (const auto& e : g.edges) A(index[e.src], index[e.dst]) += 1.0;

    // Connectivity: breadth-first search over the undirected support.
    std::vector<char> seen(n, 0);
    std::deque<int> queue{0};
    seen[0] = 1;
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        for (int u = 0; u < n; ++u)
            if (!seen[u] && (A(v, u) > 0 || A(u, v) > 0)) {
                seen[u] = 1;
                queue.push_back(u);
            }
    }
    if (std::count(seen.begin(), seen.end(), 1) != n)
        throw AxiomViolationError("spectral data needs a connected graph");

    // Power iteration on A + I: adding the identity shifts the spectrum so the
    // top eigenvalue 1 + d strictly dominates |eigenvalue| for every other
    // one (a bipartite graph has -d in its spectrum, which would otherwise
    // stall plain iteration on A in a period-two cycle).
    RVec x = RVec::Ones(n);
    x.normalize();
    double lambda = 0.0;
    for (int it = 0; it < 200000; ++it) {
        RVec y = A * x + x;
        lambda = y.norm();
        y /= lambda;
        x = y;
        if ((A * x + x - lambda * x).lpNorm<Eigen::Infinity>() < 1e-14) break;
    }
    double d = lambda - 1.0;
    double residual = (A * x - d * x).lpNorm<Eigen::Infinity>();
    if (residual >= 1e-12)
        throw AxiomViolationError("power iteration failed to converge (residual " +
                                  std::to_string(residual) + ")");

    PerronData out;
    out.d = d;
    double scale = x[index[g.v0.front()]];
    for (int k = 0; k < n; ++k) out.nu.nu[all[k]] = x[k] / scale;
    return out;
}

namespace {

// Number of length-2 paths x -> mid-part -> y where the first leg lies in
// graph `first` and the second in graph `second`.
int two_step_count(const WeightedBipartiteGraph& first, const WeightedBipartiteGraph& second,
                   const std::string& x, const std::string& y,
                   const std::vector<std::string>& mid) {
    int total = 0;
    for (const auto& m : mid) total += first.multiplicity(x, m) * second.multiplicity(m, y);
    return total;
}

} // namespace

CheckReport check_associative(const SquarePartiteGraph& sq) {
    CheckReport report;
    sq.validate();
    for (const auto& p : sq.v00)
        for (const auto& r : sq.v11) {
            int via01 = two_step_count(sq.omega0, sq.lambda1, p, r, sq.v01);
            int via10 = two_step_count(sq.lambda0, sq.omega1, p, r, sq.v10);
            report.add("two-step path counts agree at (" + p + "," + r + ")",
                       std::abs(via01 - via10), 0.0,
                       std::to_string(via01) + " vs " + std::to_string(via10));
        }
    for (const auto& q : sq.v01)
        for (const auto& s : sq.v10) {
            int via00 = two_step_count(sq.omega0, sq.lambda0, q, s, sq.v00);
            int via11 = two_step_count(sq.lambda1, sq.omega1, q, s, sq.v11);
            report.add("two-step path counts agree at (" + q + "," + s + ")",
                       std::abs(via00 - via11), 0.0,
                       std::to_string(via00) + " vs " + std::to_string(via11));
        }
    if (report.items.empty()) report.add_flag("two-step path counts (vacuous)", true);
    return report;
}

// ---------------------------------------------------------------------------
// Constructions.
// ---------------------------------------------------------------------------

WeightedBipartiteGraph path_graph(int m, const std::string& prefix) {
    if (m < 1) throw IndexError("path graph needs at least one vertex");
    WeightedBipartiteGraph g;
    auto name = [&](int k) { return prefix + std::to_string(k); };
    for (int k = 1; k <= m; ++k) (k % 2 == 1 ? g.v0 : g.v1).push_back(name(k));
    for (int k = 1; k < m; ++k) {
        std::string up = name(k) + name(k + 1);
        std::string down = name(k + 1) + name(k);
        g.edges.push_back({up, name(k), name(k + 1)});
        g.edges.push_back({down, name(k + 1), name(k)});
        g.weight[up] = 1.0;
        g.weight[down] = 1.0;
        g.bar[up] = down;
        g.bar[down] = up;
    }
    return g;
}

VertexWeighting path_graph_sine_weighting(int m, const std::string& prefix) {
    VertexWeighting w;
    const double pi = std::acos(-1.0);
    for (int k = 1; k <= m; ++k)
        w.nu[prefix + std::to_string(k)] = std::sin(k * pi / (m + 1));
    return w;
}

namespace {

std::string pair_label(const std::string& x, const std::string& y) { return x + "|" + y; }

// Copy of `a` with every vertex and edge paired against a fixed label from the
// other factor: axis = 0 keeps a's edges on the first coordinate, axis = 1 on
// the second.
void add_product_edges(const WeightedBipartiteGraph& a, const std::string& fixed, int axis,
                       WeightedBipartiteGraph& out) {
    for (const auto& e : a.edges) {
        GraphEdge pe;
        if (axis == 0) {
            pe.id = pair_label(e.id, fixed);
            pe.src = pair_label(e.src, fixed);
            pe.dst = pair_label(e.dst, fixed);
        } else {
            pe.id = pair_label(fixed, e.id);
            pe.src = pair_label(fixed, e.src);
            pe.dst = pair_label(fixed, e.dst);
        }
        out.edges.push_back(pe);
        out.weight[pe.id] = a.weight.at(e.id);
        out.bar[pe.id] = axis == 0 ? pair_label(a.bar.at(e.id), fixed)
                                   : pair_label(fixed, a.bar.at(e.id));
    }
}

} // namespace

SquarePartiteGraph square_product(const WeightedBipartiteGraph& a,
                                  const WeightedBipartiteGraph& b) {
    a.validate();
    b.validate();
    SquarePartiteGraph sq;
    for (const auto& x : a.v0)
        for (const auto& y : b.v0) sq.v00.push_back(pair_label(x, y));
    for (const auto& x : a.v0)
        for (const auto& y : b.v1) sq.v01.push_back(pair_label(x, y));
    for (const auto& x : a.v1)
        for (const auto& y : b.v0) sq.v10.push_back(pair_label(x, y));
    for (const auto& x : a.v1)
        for (const auto& y : b.v1) sq.v11.push_back(pair_label(x, y));

    sq.lambda0.v0 = sq.v00;
    sq.lambda0.v1 = sq.v10;
    for (const auto& y : b.v0) add_product_edges(a, y, 0, sq.lambda0);
    sq.lambda1.v0 = sq.v01;
    sq.lambda1.v1 = sq.v11;
    for (const auto& y : b.v1) add_product_edges(a, y, 0, sq.lambda1);
    sq.omega0.v0 = sq.v00;
    sq.omega0.v1 = sq.v01;
    for (const auto& x : a.v0) add_product_edges(b, x, 1, sq.omega0);
    sq.omega1.v0 = sq.v10;
    sq.omega1.v1 = sq.v11;
    for (const auto& x : a.v1) add_product_edges(b, x, 1, sq.omega1);
    sq.validate();
    return sq;
}

} // namespace sfl
