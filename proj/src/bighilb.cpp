#include "subfactorlab/bighilb.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "subfactorlab/errors.hpp"

namespace sfl {

std::string join_labels(const std::string& a, const std::string& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    return a + "." + b;
}

// The sort makes the composite basis independent of parenthesisation.
std::vector<TensorEntry> tensor_entries(const BigradedSpace& h, const BigradedSpace& g,
                                        const std::string& u, const std::string& w) {
    std::vector<TensorEntry> out;
    for (const auto& [pr, hl] : h.basis) {
        if (pr.first != u) continue;
        const std::string& mid = pr.second;
        const auto& gl = g.labels(mid, w);
        for (int i = 0; i < static_cast<int>(hl.size()); ++i)
            for (int j = 0; j < static_cast<int>(gl.size()); ++j)
                out.push_back({join_labels(hl[i], gl[j]), mid, i, j});
    }
    std::sort(out.begin(), out.end(),
              [](const TensorEntry& a, const TensorEntry& b) { return a.label < b.label; });
    for (size_t t = 1; t < out.size(); ++t)
        if (out[t].label == out[t - 1].label)
            throw InputError("tensor product basis labels collide at (" + u + "," + w +
                             "): " + out[t].label);
    return out;
}

namespace {

// Vertex pairs (u,w) that can carry a nonzero block of h (x) g.
std::set<VertexPair> tensor_support(const BigradedSpace& h, const BigradedSpace& g) {
    std::set<VertexPair> support;
    for (const auto& [hp, hl] : h.basis) {
        if (hl.empty()) continue;
        for (const auto& [gp, gl] : g.basis)
            if (gp.first == hp.second && !gl.empty()) support.insert({hp.first, gp.second});
    }
    return support;
}

void require_parallel(const BigradedOp& a, const BigradedOp& b, const char* what) {
    if (a.source != b.source || a.target != b.target)
        throw DimensionMismatchError(std::string(what) +
                                     " needs operators with equal source and target spaces");
}

} // namespace

// ---------------------------------------------------------------------------
// BigradedSpace
// ---------------------------------------------------------------------------

int BigradedSpace::dim(const std::string& u, const std::string& v) const {
    auto it = basis.find({u, v});
    return it == basis.end() ? 0 : static_cast<int>(it->second.size());
}

const std::vector<std::string>& BigradedSpace::labels(const std::string& u,
                                                      const std::string& v) const {
    static const std::vector<std::string> kEmpty;
    auto it = basis.find({u, v});
    return it == basis.end() ? kEmpty : it->second;
}

int BigradedSpace::label_index(const std::string& u, const std::string& v,
                               const std::string& label) const {
    const auto& l = labels(u, v);
    auto it = std::lower_bound(l.begin(), l.end(), label);
    if (it == l.end() || *it != label)
        throw IndexError("no basis vector labeled '" + label + "' at (" + u + "," + v + ")");
    return static_cast<int>(it - l.begin());
}

int BigradedSpace::total_dim() const {
    int n = 0;
    for (const auto& [pr, l] : basis) n += static_cast<int>(l.size());
    return n;
}

void BigradedSpace::validate() const {
    for (const auto& [pr, l] : basis) {
        const std::string where = "(" + pr.first + "," + pr.second + ")";
        for (size_t i = 0; i < l.size(); ++i) {
            if (l[i].find('.') != std::string::npos)
                throw InputError("basis label '" + l[i] + "' at " + where +
                                 " contains '.', which is reserved for joined labels");
            if (i > 0 && !(l[i - 1] < l[i]))
                throw InputError("basis labels at " + where +
                                 " are not sorted and duplicate-free near '" + l[i] + "'");
        }
    }
}

BigradedSpace unit_space(const std::vector<std::string>& vertices) {
    BigradedSpace s;
    for (const auto& v : vertices) s.basis[{v, v}] = {std::string()};
    return s;
}

// ---------------------------------------------------------------------------
// BigradedOp
// ---------------------------------------------------------------------------

Mat BigradedOp::block(const std::string& u, const std::string& v) const {
    auto it = blocks.find({u, v});
    if (it != blocks.end()) return it->second;
    return Mat::Zero(target.dim(u, v), source.dim(u, v));
}

void BigradedOp::set_block(const std::string& u, const std::string& v, Mat m) {
    if (m.rows() != target.dim(u, v) || m.cols() != source.dim(u, v))
        throw DimensionMismatchError("block at (" + u + "," + v + ") must be " +
                                     std::to_string(target.dim(u, v)) + "x" +
                                     std::to_string(source.dim(u, v)));
    blocks[{u, v}] = std::move(m);
}

void BigradedOp::validate() const {
    source.validate();
    target.validate();
    for (const auto& [pr, m] : blocks)
        if (m.rows() != target.dim(pr.first, pr.second) ||
            m.cols() != source.dim(pr.first, pr.second))
            throw DimensionMismatchError("block at (" + pr.first + "," + pr.second +
                                         ") has shape " + std::to_string(m.rows()) + "x" +
                                         std::to_string(m.cols()) +
                                         ", expected " + std::to_string(target.dim(pr.first, pr.second)) +
                                         "x" + std::to_string(source.dim(pr.first, pr.second)));
}

BigradedOp BigradedOp::zero(BigradedSpace src, BigradedSpace tgt) {
    BigradedOp f;
    f.source = std::move(src);
    f.target = std::move(tgt);
    return f;
}

BigradedOp BigradedOp::identity(const BigradedSpace& h) {
    BigradedOp f = zero(h, h);
    for (const auto& [pr, l] : h.basis)
        if (!l.empty()) f.blocks[pr] = Mat::Identity(l.size(), l.size());
    return f;
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

BigradedSpace tensor_spaces(const BigradedSpace& h, const BigradedSpace& g) {
    BigradedSpace out;
    for (const auto& pr : tensor_support(h, g)) {
        auto entries = tensor_entries(h, g, pr.first, pr.second);
        if (entries.empty()) continue;
        std::vector<std::string> l;
        l.reserve(entries.size());
        for (const auto& e : entries) l.push_back(e.label);
        out.basis[pr] = std::move(l);
    }
    return out;
}

BigradedSpace dual_space(const BigradedSpace& h) {
    BigradedSpace out;
    for (const auto& [pr, l] : h.basis) out.basis[{pr.second, pr.first}] = l;
    return out;
}

BigradedOp tensor_ops(const BigradedOp& f, const BigradedOp& g) {
    BigradedOp out = BigradedOp::zero(tensor_spaces(f.source, g.source),
                                      tensor_spaces(f.target, g.target));
    std::set<VertexPair> support = tensor_support(f.source, g.source);
    for (const auto& pr : tensor_support(f.target, g.target)) support.insert(pr);
    for (const auto& [u, w] : support) {
        auto rows = tensor_entries(f.target, g.target, u, w);
        auto cols = tensor_entries(f.source, g.source, u, w);
        if (rows.empty() || cols.empty()) continue;
        Mat m = Mat::Zero(rows.size(), cols.size());
        // Block-diagonal over the middle vertex: each factor acts within its
        // own leg, so entries mixing middle vertices vanish.
        for (size_t r = 0; r < rows.size(); ++r) {
            for (size_t c = 0; c < cols.size(); ++c) {
                if (rows[r].mid != cols[c].mid) continue;
                const std::string& v = rows[r].mid;
                m(r, c) = f.block(u, v)(rows[r].i, cols[c].i) *
                          g.block(v, w)(rows[r].j, cols[c].j);
            }
        }
        if (max_abs(m) > 0.0) out.blocks[{u, w}] = std::move(m);
    }
    return out;
}

BigradedOp op_dagger(const BigradedOp& f) {
    BigradedOp out = BigradedOp::zero(f.target, f.source);
    for (const auto& [pr, m] : f.blocks) out.blocks[pr] = m.adjoint();
    return out;
}

BigradedOp op_dual(const BigradedOp& f) {
    BigradedOp out = BigradedOp::zero(dual_space(f.source), dual_space(f.target));
    for (const auto& [pr, m] : f.blocks) out.blocks[{pr.second, pr.first}] = m.conjugate();
    return out;
}

BigradedOp op_compose(const BigradedOp& g, const BigradedOp& f) {
    if (f.target != g.source)
        throw DimensionMismatchError("composition needs the first operator's target to equal "
                                     "the second operator's source");
    BigradedOp out = BigradedOp::zero(f.source, g.target);
    for (const auto& [pr, l] : out.source.basis) {
        if (l.empty() || out.target.dim(pr.first, pr.second) == 0) continue;
        if (f.target.dim(pr.first, pr.second) == 0) continue;
        Mat m = g.block(pr.first, pr.second) * f.block(pr.first, pr.second);
        if (max_abs(m) > 0.0) out.blocks[pr] = std::move(m);
    }
    return out;
}

BigradedOp op_add(const BigradedOp& a, const BigradedOp& b) {
    require_parallel(a, b, "addition");
    BigradedOp out = a;
    for (const auto& [pr, m] : b.blocks) {
        auto it = out.blocks.find(pr);
        if (it == out.blocks.end())
            out.blocks[pr] = m;
        else
            it->second += m;
    }
    return out;
}

BigradedOp op_scale(const BigradedOp& a, cx s) {
    BigradedOp out = a;
    for (auto& [pr, m] : out.blocks) m *= s;
    return out;
}

double op_distance(const BigradedOp& a, const BigradedOp& b) {
    require_parallel(a, b, "distance");
    double worst = 0.0;
    std::set<VertexPair> keys;
    for (const auto& [pr, m] : a.blocks) keys.insert(pr);
    for (const auto& [pr, m] : b.blocks) keys.insert(pr);
    for (const auto& pr : keys)
        worst = std::max(worst, max_abs(a.block(pr.first, pr.second) -
                                        b.block(pr.first, pr.second)));
    return worst;
}

double op_norm_max(const BigradedOp& a) {
    double worst = 0.0;
    for (const auto& [pr, m] : a.blocks) worst = std::max(worst, max_abs(m));
    return worst;
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

namespace {

BigradedSpace edges_as_space(const WeightedBipartiteGraph& g, bool from_part0) {
    BigradedSpace out;
    for (const auto& e : g.edges)
        if (g.in_v0(e.src) == from_part0) out.basis[{e.src, e.dst}].push_back(e.id);
    for (auto& [pr, l] : out.basis) std::sort(l.begin(), l.end());
    out.validate();
    return out;
}

} // namespace

BigradedSpace generator_space(const WeightedBipartiteGraph& g) { return edges_as_space(g, true); }

BigradedSpace generator_dual_space(const WeightedBipartiteGraph& g) {
    return edges_as_space(g, false);
}

BigradedSpace alternating_power(const WeightedBipartiteGraph& g, int n) {
    if (n < 0) throw IndexError("alternating power needs n >= 0");
    std::vector<std::string> all = g.v0;
    all.insert(all.end(), g.v1.begin(), g.v1.end());
    BigradedSpace out = unit_space(all);
    const BigradedSpace k = generator_space(g);
    const BigradedSpace kbar = generator_dual_space(g);
    for (int i = 0; i < n; ++i) out = tensor_spaces(out, i % 2 == 0 ? k : kbar);
    return out;
}

BigradedSpace row_restrict(const BigradedSpace& h, const std::string& row) {
    BigradedSpace out;
    for (const auto& [pr, l] : h.basis)
        if (pr.first == row) out.basis[pr] = l;
    return out;
}

// ---------------------------------------------------------------------------
// Duality data
// ---------------------------------------------------------------------------

BigradedOp DualityData::ev_kbar() const { return op_dagger(coev_k); }
BigradedOp DualityData::coev_kbar() const { return op_dagger(ev_k); }

namespace {

// Fill ev/coev from a coefficient rule: coev couples e (x) conj(e) with
// coev_coeff(e), ev couples f (x) conj(f) with ev_coeff(f) for f a conjugate
// label. All other coefficients vanish.
void build_pairing_ops(DualityData& dd,
                       const std::map<std::string, double>& coev_coeff,
                       const std::map<std::string, double>& ev_coeff) {
    const BigradedSpace unit = dd.unit();
    dd.coev_k = BigradedOp::zero(unit, tensor_spaces(dd.k, dd.kbar));
    dd.ev_k = BigradedOp::zero(tensor_spaces(dd.kbar, dd.k), unit);
    for (const auto& v : dd.vertices) {
        {
            auto entries = tensor_entries(dd.k, dd.kbar, v, v);
            if (!entries.empty()) {
                Mat col = Mat::Zero(entries.size(), 1);
                for (size_t r = 0; r < entries.size(); ++r) {
                    const std::string e = dd.k.labels(v, entries[r].mid)[entries[r].i];
                    const std::string eb = dd.kbar.labels(entries[r].mid, v)[entries[r].j];
                    if (dd.conj.at(e) == eb) col(r, 0) = coev_coeff.at(e);
                }
                if (max_abs(col) > 0.0) dd.coev_k.blocks[{v, v}] = std::move(col);
            }
        }
        {
            auto entries = tensor_entries(dd.kbar, dd.k, v, v);
            if (!entries.empty()) {
                Mat row = Mat::Zero(1, entries.size());
                for (size_t c = 0; c < entries.size(); ++c) {
                    const std::string f = dd.kbar.labels(v, entries[c].mid)[entries[c].i];
                    const std::string fc = dd.k.labels(entries[c].mid, v)[entries[c].j];
                    if (dd.conj.at(f) == fc) row(0, c) = ev_coeff.at(f);
                }
                if (max_abs(row) > 0.0) dd.ev_k.blocks[{v, v}] = std::move(row);
            }
        }
    }
}

} // namespace

DualityData duality_from_weighting(const WeightedBipartiteGraph& g) {
    g.validate();
    DualityData dd;
    dd.vertices = g.v0;
    dd.vertices.insert(dd.vertices.end(), g.v1.begin(), g.v1.end());
    dd.k = generator_space(g);
    dd.kbar = generator_dual_space(g);
    dd.conj = g.bar;
    std::map<std::string, double> coev_coeff, ev_coeff;
    for (const auto& e : g.edges) {
        const double root = std::sqrt(g.weight.at(e.id));
        if (g.in_v0(e.src))
            coev_coeff[e.id] = root;
        else
            ev_coeff[e.id] = root;
    }
    build_pairing_ops(dd, coev_coeff, ev_coeff);
    return dd;
}

DualityData standard_duality(const BigradedSpace& k) {
    k.validate();
    DualityData dd;
    std::set<std::string> verts;
    for (const auto& [pr, l] : k.basis) {
        verts.insert(pr.first);
        verts.insert(pr.second);
    }
    dd.vertices.assign(verts.begin(), verts.end());
    dd.k = k;
    std::map<std::string, double> coev_coeff, ev_coeff;
    for (const auto& [pr, l] : k.basis) {
        auto& dual_labels = dd.kbar.basis[{pr.second, pr.first}];
        for (const auto& lab : l) {
            const std::string clab = lab + "~";
            dual_labels.push_back(clab);
            dd.conj[lab] = clab;
            dd.conj[clab] = lab;
            coev_coeff[lab] = 1.0;
            ev_coeff[clab] = 1.0;
        }
    }
    for (auto& [pr, l] : dd.kbar.basis) std::sort(l.begin(), l.end());
    dd.kbar.validate();
    build_pairing_ops(dd, coev_coeff, ev_coeff);
    return dd;
}

CheckReport check_duality(const DualityData& dd, double d, double tol) {
    CheckReport rep;

    // The conjugate pairing must be an involutive bijection matching the two
    // generator spaces block by block at transposed pairs.
    bool pairing_ok = true;
    std::string pairing_detail;
    for (const auto& [pr, l] : dd.k.basis) {
        for (const auto& lab : l) {
            auto it = dd.conj.find(lab);
            if (it == dd.conj.end()) {
                pairing_ok = false;
                pairing_detail = "no conjugate for " + lab;
                break;
            }
            const auto& dl = dd.kbar.labels(pr.second, pr.first);
            if (std::find(dl.begin(), dl.end(), it->second) == dl.end() ||
                dd.conj.count(it->second) == 0 || dd.conj.at(it->second) != lab) {
                pairing_ok = false;
                pairing_detail = "conjugate of " + lab + " misplaced";
                break;
            }
        }
        if (!pairing_ok) break;
    }
    for (const auto& [pr, l] : dd.kbar.basis)
        if (static_cast<int>(l.size()) != dd.k.dim(pr.second, pr.first)) {
            pairing_ok = false;
            pairing_detail = "block dims differ at (" + pr.first + "," + pr.second + ")";
        }
    rep.add_flag("conjugate pairing is an involutive bijection", pairing_ok, pairing_detail);
    if (!pairing_ok) return rep;

    const BigradedOp id_k = BigradedOp::identity(dd.k);
    const BigradedOp id_kbar = BigradedOp::identity(dd.kbar);
    const BigradedOp ev_kb = dd.ev_kbar();
    const BigradedOp coev_kb = dd.coev_kbar();

    rep.add("zigzag: (id_k x ev_k) o (coev_k x id_k) = id_k",
            op_distance(op_compose(tensor_ops(id_k, dd.ev_k), tensor_ops(dd.coev_k, id_k)), id_k),
            tol);
    rep.add("zigzag: (ev_k x id_kbar) o (id_kbar x coev_k) = id_kbar",
            op_distance(op_compose(tensor_ops(dd.ev_k, id_kbar), tensor_ops(id_kbar, dd.coev_k)),
                        id_kbar),
            tol);
    rep.add("zigzag: (id_kbar x ev_kbar) o (coev_kbar x id_kbar) = id_kbar",
            op_distance(op_compose(tensor_ops(id_kbar, ev_kb), tensor_ops(coev_kb, id_kbar)),
                        id_kbar),
            tol);
    rep.add("zigzag: (ev_kbar x id_k) o (id_k x coev_kbar) = id_k",
            op_distance(op_compose(tensor_ops(ev_kb, id_k), tensor_ops(id_k, coev_kb)), id_k),
            tol);

    if (d > 0.0) {
        // Forward loops ev_kbar o coev_k land on rows of k, backward loops
        // ev_k o coev_kbar on rows of kbar; each closed loop contributes d.
        const BigradedOp fwd = op_compose(ev_kb, dd.coev_k);
        const BigradedOp bwd = op_compose(dd.ev_k, coev_kb);
        double worst_f = 0.0, worst_b = 0.0;
        std::string at_f, at_b;
        std::set<std::string> k_rows, kbar_rows;
        for (const auto& [pr, l] : dd.k.basis)
            if (!l.empty()) k_rows.insert(pr.first);
        for (const auto& [pr, l] : dd.kbar.basis)
            if (!l.empty()) kbar_rows.insert(pr.first);
        for (const auto& v : k_rows) {
            const double dev = std::abs(fwd.block(v, v)(0, 0) - cx(d, 0.0));
            if (dev > worst_f) { worst_f = dev; at_f = v; }
        }
        for (const auto& v : kbar_rows) {
            const double dev = std::abs(bwd.block(v, v)(0, 0) - cx(d, 0.0));
            if (dev > worst_b) { worst_b = dev; at_b = v; }
        }
        rep.add("loop value: ev_kbar o coev_k equals the fairness constant", worst_f, tol, at_f);
        rep.add("loop value: ev_k o coev_kbar equals the fairness constant", worst_b, tol, at_b);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Weight extraction
// ---------------------------------------------------------------------------

namespace {

// The coefficient matrix of a coupling map 1 -> A (x) B at the diagonal
// vertex `at`, with rows indexed by A labels at (u,v) and columns by B labels
// at (v,u). This is the matrix of (id (x) pairing) o (coupling (x) conj) in
// the stored bases.
Mat coupling_matrix(const BigradedOp& coupling, const BigradedSpace& a, const BigradedSpace& b,
                    const std::string& u, const std::string& v) {
    const auto& rows = a.labels(u, v);
    const auto& cols = b.labels(v, u);
    Mat phi = Mat::Zero(rows.size(), cols.size());
    const Mat blk = coupling.block(u, u);
    if (blk.cols() == 0) return phi;
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < cols.size(); ++j) {
            const int idx = coupling.target.label_index(u, u, join_labels(rows[i], cols[j]));
            phi(i, j) = blk(idx, 0);
        }
    return phi;
}

std::vector<double> ascending_squared_singular_values(const Mat& phi) {
    Eigen::JacobiSVD<Mat> svd(phi);
    std::vector<double> out;
    out.reserve(svd.singularValues().size());
    for (Eigen::Index i = svd.singularValues().size() - 1; i >= 0; --i)
        out.push_back(svd.singularValues()(i) * svd.singularValues()(i));
    return out;
}

} // namespace

std::map<VertexPair, Mat> phi_maps(const DualityData& dd) {
    std::map<VertexPair, Mat> out;
    for (const auto& [pr, l] : dd.k.basis)
        if (!l.empty()) out[pr] = coupling_matrix(dd.coev_k, dd.k, dd.kbar, pr.first, pr.second);
    return out;
}

std::map<VertexPair, Mat> phi_maps_dual(const DualityData& dd) {
    std::map<VertexPair, Mat> out;
    const BigradedOp coev_kb = dd.coev_kbar();
    for (const auto& [pr, l] : dd.kbar.basis)
        if (!l.empty()) out[pr] = coupling_matrix(coev_kb, dd.kbar, dd.k, pr.first, pr.second);
    return out;
}

std::map<VertexPair, std::vector<double>> weighting_from_duality(const DualityData& dd) {
    std::map<VertexPair, std::vector<double>> out;
    for (const auto& [pr, phi] : phi_maps(dd)) out[pr] = ascending_squared_singular_values(phi);
    for (const auto& [pr, phi] : phi_maps_dual(dd)) {
        if (out.count(pr))
            throw ExtractionError("generator and conjugate generator share the block (" +
                                  pr.first + "," + pr.second + ")");
        out[pr] = ascending_squared_singular_values(phi);
    }
    return out;
}

} // namespace sfl
