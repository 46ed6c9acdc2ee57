#include "qp/models.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace qp {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// exterior algebra

ExteriorAlgebra::ExteriorAlgebra(std::vector<ExtGen> gens) : gens_(std::move(gens)) {
    if (gens_.size() > 12) throw std::invalid_argument("ExteriorAlgebra: too many generators");
    const int n = dim();
    std::vector<std::string> labels(n);
    std::vector<int> deg(n, 0), chg(n, 0);
    for (unsigned mask = 0; mask < unsigned(n); ++mask) {
        std::string lab;
        for (size_t i = 0; i < gens_.size(); ++i)
            if (mask & (1u << i)) {
                if (!lab.empty()) lab += "^";
                lab += gens_[i].name;
                deg[mask] += gens_[i].degree;
                chg[mask] += gens_[i].charge;
            }
        labels[mask] = lab.empty() ? "1" : lab;
    }
    space_ = std::make_shared<GradedSpace>(labels, deg, chg);
}

QVec ExteriorAlgebra::basis_vec(unsigned mask) const {
    QVec v(dim(), Rat(0));
    v[mask] = 1;
    return v;
}

std::optional<std::pair<unsigned, int>> ExteriorAlgebra::mul_masks(unsigned a, unsigned b) const {
    if (a & b) return std::nullopt;
    int crossings = 0;
    for (size_t i = 0; i < gens_.size(); ++i) {
        if (!(b & (1u << i)) || gens_[i].degree % 2 == 0) continue;
        for (size_t j = i + 1; j < gens_.size(); ++j)
            if ((a & (1u << j)) && gens_[j].degree % 2 != 0) ++crossings;
    }
    return std::make_pair(a | b, (crossings & 1) ? -1 : 1);
}

QVec ExteriorAlgebra::mul(const QVec& a, const QVec& b) const {
    QVec out(dim(), Rat(0));
    for (unsigned i = 0; i < unsigned(dim()); ++i) {
        if (is_zero(a[i])) continue;
        for (unsigned j = 0; j < unsigned(dim()); ++j) {
            if (is_zero(b[j])) continue;
            auto m = mul_masks(i, j);
            if (m) out[m->first] += Rat(m->second) * a[i] * b[j];
        }
    }
    return out;
}

QMat ExteriorAlgebra::mult_operator(const QVec& x) const {
    QMat m(dim(), dim());
    for (unsigned b = 0; b < unsigned(dim()); ++b) {
        QVec col = mul(x, basis_vec(b));
        for (int r = 0; r < dim(); ++r) m.at(r, int(b)) = col[r];
    }
    return m;
}

QMat ExteriorAlgebra::contraction_operator(int i) const {
    QMat m(dim(), dim());
    for (unsigned mask = 0; mask < unsigned(dim()); ++mask) {
        if (!(mask & (1u << i))) continue;
        int crossings = 0;
        if (gens_[i].degree % 2 != 0)
            for (int j = 0; j < i; ++j)
                if ((mask & (1u << j)) && gens_[j].degree % 2 != 0) ++crossings;
        m.at(int(mask & ~(1u << i)), int(mask)) = (crossings & 1) ? -1 : 1;
    }
    return m;
}

QMat ExteriorAlgebra::derivation(const std::vector<QVec>& gen_images, int parity) const {
    if (int(gen_images.size()) != gen_count())
        throw std::invalid_argument("derivation: one image per generator required");
    QMat m(dim(), dim());
    for (unsigned mask = 0; mask < unsigned(dim()); ++mask) {
        for (size_t l = 0; l < gens_.size(); ++l) {
            if (!(mask & (1u << l)) || vec_is_zero(gen_images[l])) continue;
            unsigned prefix = mask & ((1u << l) - 1);
            unsigned suffix = mask & ~((1u << l) - 1) & ~(1u << l);
            int prefix_par = 0;
            for (size_t j = 0; j < l; ++j)
                if ((prefix & (1u << j)) && gens_[j].degree % 2 != 0) ++prefix_par;
            int sign = (parity && (prefix_par & 1)) ? -1 : 1;
            QVec term = mul(basis_vec(prefix), mul(gen_images[l], basis_vec(suffix)));
            for (int r = 0; r < dim(); ++r) m.at(r, int(mask)) += Rat(sign) * term[r];
        }
    }
    return m;
}

Bilinear ExteriorAlgebra::top_pairing() const {
    const unsigned top = unsigned(dim()) - 1;
    std::vector<std::vector<QVec>> t(dim(), std::vector<QVec>(dim(), QVec(1, Rat(0))));
    for (unsigned i = 0; i < unsigned(dim()); ++i)
        for (unsigned j = 0; j < unsigned(dim()); ++j) {
            auto m = mul_masks(i, j);
            if (m && m->first == top) t[i][j][0] = m->second;
        }
    return Bilinear(space_, space_, scalar_space(), -space_->degree(int(top)),
                    -space_->charge(int(top)), std::move(t));
}

// ---------------------------------------------------------------------------
// bundle assembly helpers

namespace {

struct OpSpec {
    unsigned cmask = 0;  // generators to contract
    unsigned mmask = 0;  // generators to multiply by
};

std::string op_label(const ExteriorAlgebra& A, const SpacePtr& hs, const OpSpec& op) {
    std::string lab;
    if (op.mmask) lab += "m(" + hs->label(int(op.mmask)) + ")";
    if (op.cmask) lab += (lab.empty() ? "" : "*") + std::string("i(") + hs->label(int(op.cmask)) + ")";
    return lab.empty() ? "id" : lab;
}

QMat op_matrix(const ExteriorAlgebra& A, const OpSpec& op) {
    QMat m = QMat::identity(A.dim());
    // contractions first, ascending index
    for (int i = 0; i < A.gen_count(); ++i)
        if (op.cmask & (1u << i)) m = mat_mul(A.contraction_operator(i), m);
    if (op.mmask) m = mat_mul(A.mult_operator(A.basis_vec(op.mmask)), m);
    return m;
}

/// g-space and contraction tensor from a list of operator monomials, with
/// optional per-operator scale factors.
std::pair<SpacePtr, Bilinear> operator_family(const ExteriorAlgebra& A,
                                              const std::vector<OpSpec>& ops,
                                              const std::vector<Rat>& scales) {
    const SpacePtr& hs = A.space();
    std::vector<std::string> labels;
    std::vector<int> deg, chg;
    for (const auto& op : ops) {
        int dshift = hs->degree(int(op.mmask)) - hs->degree(int(op.cmask));
        int cshift = hs->charge(int(op.mmask)) - hs->charge(int(op.cmask));
        labels.push_back(op_label(A, hs, op));
        deg.push_back(dshift + 1);
        chg.push_back(cshift);
    }
    SpacePtr g = std::make_shared<GradedSpace>(labels, deg, chg);
    std::vector<std::vector<QVec>> t(ops.size(),
                                     std::vector<QVec>(A.dim(), QVec(A.dim(), Rat(0))));
    for (size_t a = 0; a < ops.size(); ++a) {
        QMat m = op_matrix(A, ops[a]);
        for (int j = 0; j < A.dim(); ++j)
            for (int r = 0; r < A.dim(); ++r) t[a][j][r] = scales[a] * m.at(r, j);
    }
    Bilinear contraction(g, hs, hs, -1, 0, std::move(t));
    return {g, contraction};
}

ModelBundle finish_bundle(std::string name, DGLA dgla, XiModule xi, int default_order) {
    auto coh = std::make_shared<Cohomology>(xi);
    Filtration F = filtration_from_charges(coh->space(), false);
    Filtration W = filtration_from_charges(coh->space(), true);
    std::vector<std::pair<int, QVec>> grw;
    for (int k = 0; k < coh->dim(); ++k) {
        QVec e(coh->dim(), Rat(0));
        e[k] = 1;
        grw.emplace_back(W.level_of(e), e);
    }
    return ModelBundle{std::move(name), std::move(dgla), std::move(xi), coh,
                       std::move(F),    std::move(W),    std::move(grw), default_order};
}

} // namespace

// ---------------------------------------------------------------------------
// shipped models

ModelBundle torus_model(int n) {
    if (n != 1 && n != 2) throw std::invalid_argument("torus_model: n must be 1 or 2");
    std::vector<ExtGen> gens;
    for (int i = 1; i <= n; ++i) gens.push_back({"dz" + std::to_string(i), 1, -1});
    for (int i = 1; i <= n; ++i) gens.push_back({"dzb" + std::to_string(i), 1, 1});
    ExteriorAlgebra A(gens);
    const SpacePtr& hs = A.space();

    unsigned zmask = (1u << n) - 1;                    // dz1..dzn
    unsigned zbmask = ((1u << n) - 1) << n;            // dzb1..dzbn
    std::vector<OpSpec> ops;
    for (unsigned cm = 0; cm < (1u << n); ++cm)
        for (unsigned mm = 0; mm < (1u << n); ++mm) ops.push_back({cm, mm << n});
    std::vector<Rat> scales(ops.size(), Rat(1));
    auto [g, contraction] = operator_family(A, ops, scales);

    LinearMap dg = LinearMap::zero(g, g, 1, 1);
    Bilinear bracket = Bilinear::zero(g, g, g, 0, -1);
    HodgeData hd{LinearMap::identity(g), LinearMap::zero(g, g, -1, -1)};
    DGLA L = make_dgla(g, dg, bracket, hd);

    LinearMap d1 = LinearMap::zero(hs, hs, 1, 1);
    LinearMap d2 = LinearMap::zero(hs, hs, 1, -1);
    QVec omega0 = A.basis_vec(zmask);
    XiModule xi = make_ximodule(g, hs, d1, d2, contraction, A.top_pairing(), omega0);
    (void)zbmask;
    return finish_bundle("torus." + std::to_string(n), std::move(L), std::move(xi),
                         n == 1 ? 3 : 2);
}

ModelBundle nilpotent_model() {
    ExteriorAlgebra A({{"r", 1, -1}, {"a", 1, -1}, {"b", 1, 1}, {"c", 1, 1}});
    const SpacePtr& hs = A.space();
    const unsigned R = 1, TA = 2, TB = 4, TC = 8;

    // d1(r) = a b, a derivation of parity 1
    std::vector<QVec> images(4, QVec(A.dim(), Rat(0)));
    images[0] = A.basis_vec(TA | TB);
    QMat d1m = A.derivation(images, 1);
    LinearMap d1(hs, hs, 1, 1, d1m);
    LinearMap d2 = LinearMap::zero(hs, hs, 1, -1);

    // multiplication operators: the twelve closed-class monomials plus the
    // non-closed r and the exact a b (so the x-span is d1-stable)
    std::vector<unsigned> xs = {0,       TA,          TB,          TC,
                                TA | TC, TB | TC,     R | TA,      R | TB,
                                R | TA | TB, R | TA | TC, R | TB | TC, R | TA | TB | TC,
                                R,       TA | TB};
    std::vector<OpSpec> ops;
    for (unsigned x : xs) ops.push_back({0u, x});
    std::vector<Rat> scales(ops.size(), Rat(1));
    auto [g, contraction] = operator_family(A, ops, scales);

    // d_g lifts d1 through the multiplication operators: r -> a b
    QMat dgm(g->dim(), g->dim());
    dgm.at(13, 12) = 1;  // x = r sits at index 12, x = a b at index 13
    LinearMap dg(g, g, 1, 1, dgm);
    Bilinear bracket = Bilinear::zero(g, g, g, 0, -1);
    DGLA L = make_dgla(g, dg, bracket, make_hodge_data(g, dg));

    QVec omega0 = A.basis_vec(0);  // the unit class, charge 0
    XiModule xi = make_ximodule(g, hs, d1, d2, contraction, A.top_pairing(), omega0);
    return finish_bundle("nilpotent", std::move(L), std::move(xi), 2);
}

FixturePair d2_fixture() {
    ExteriorAlgebra A({{"r", 1, 1}, {"a", 1, -1}, {"b", 1, 1}});
    const SpacePtr& hs = A.space();
    const unsigned R = 1, TA = 2, TB = 4;

    std::vector<QVec> images(3, QVec(A.dim(), Rat(0)));
    images[0] = A.basis_vec(TA | TB);  // d2(r) = a b, charge 0 = charge(r) - 1
    QMat d2m = A.derivation(images, 1);
    LinearMap d1 = LinearMap::zero(hs, hs, 1, 1);
    LinearMap d2(hs, hs, 1, -1, d2m);

    std::vector<unsigned> xs = {0, R, TA, TB, TA | TB};
    std::vector<OpSpec> ops;
    for (unsigned x : xs) ops.push_back({0u, x});
    std::vector<Rat> scales(ops.size(), Rat(1));
    auto [g, contraction] = operator_family(A, ops, scales);

    LinearMap dg = LinearMap::zero(g, g, 1, 1);
    Bilinear bracket = Bilinear::zero(g, g, g, 0, -1);
    DGLA L = make_dgla(g, dg, bracket, make_hodge_data(g, dg));
    QVec omega0 = A.basis_vec(0);
    XiModule xi = make_ximodule(g, hs, d1, d2, contraction, A.top_pairing(), omega0);
    return FixturePair{std::move(L), std::move(xi)};
}

namespace {

struct ModelRng {
    uint64_t s;
    explicit ModelRng(uint64_t seed) : s(seed ? seed : 0x243f6a8885a308d3ULL) {}
    uint64_t next() {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        return s;
    }
    int range(int lo, int hi) { return lo + int(next() % uint64_t(hi - lo + 1)); }
    Rat nonzero() {
        int num = 0;
        while (num == 0) num = range(-3, 3);
        return frac(num, range(1, 2));
    }
};

} // namespace

ModelBundle random_abelian_model(uint64_t seed, int dims, int charge_range) {
    if (dims != 4 && dims != 8)
        throw std::invalid_argument("random_abelian_model: dims must be 4 or 8");
    if (charge_range < 1) throw std::invalid_argument("random_abelian_model: charge range >= 1");
    ModelRng rng(seed);
    int c1 = rng.range(1, charge_range);
    int zdeg = c1;
    int zbdeg = c1 + 2 * rng.range(0, 1);

    std::vector<ExtGen> gens = {{"z", zdeg, -c1}, {"zb", zbdeg, c1}};
    if (dims == 8) gens.push_back({"u", 2, 0});
    ExteriorAlgebra A(gens);
    const SpacePtr& hs = A.space();

    std::vector<OpSpec> ops;
    unsigned mm_limit = (dims == 8) ? 4u : 2u;
    for (unsigned cm = 0; cm < 2; ++cm)
        for (unsigned mmz = 0; mmz < 2; ++mmz)
            for (unsigned mmu = 0; mmu < mm_limit / 2; ++mmu)
                ops.push_back({cm, (mmz << 1) | (mmu << 2)});
    std::vector<Rat> scales;
    for (size_t i = 0; i < ops.size(); ++i) scales.push_back(rng.nonzero());
    auto [g, contraction0] = operator_family(A, ops, scales);

    // random block-diagonal change of h-basis within (degree, charge) slices
    const int nh = A.dim();
    QMat B(nh, nh);
    {
        std::vector<std::pair<int, int>> slices;
        for (int i = 0; i < nh; ++i) {
            auto sl = std::make_pair(hs->degree(i), hs->charge(i));
            if (std::find(slices.begin(), slices.end(), sl) == slices.end()) slices.push_back(sl);
        }
        for (auto sl : slices) {
            std::vector<int> idx;
            for (int i = 0; i < nh; ++i)
                if (hs->degree(i) == sl.first && hs->charge(i) == sl.second) idx.push_back(i);
            while (true) {
                QMat blk(int(idx.size()), int(idx.size()));
                for (size_t r = 0; r < idx.size(); ++r)
                    for (size_t c = 0; c < idx.size(); ++c)
                        blk.at(int(r), int(c)) = (r == c) ? rng.nonzero()
                                                          : frac(rng.range(-1, 1), 1);
                if (inverse(blk)) {
                    for (size_t r = 0; r < idx.size(); ++r)
                        for (size_t c = 0; c < idx.size(); ++c)
                            B.at(idx[r], idx[c]) = blk.at(int(r), int(c));
                    break;
                }
            }
        }
    }
    QMat Binv = *inverse(B);

    // conjugated tensors
    std::vector<std::vector<QVec>> t(g->dim(), std::vector<QVec>(nh, QVec(nh, Rat(0))));
    for (int a = 0; a < g->dim(); ++a) {
        QMat m(nh, nh);
        for (int j = 0; j < nh; ++j)
            for (int r = 0; r < nh; ++r) m.at(r, j) = contraction0.at(a, j)[r];
        QMat conj = mat_mul(Binv, mat_mul(m, B));
        for (int j = 0; j < nh; ++j)
            for (int r = 0; r < nh; ++r) t[a][j][r] = conj.at(r, j);
    }
    Bilinear contraction(g, hs, hs, -1, 0, std::move(t));

    Bilinear g0 = A.top_pairing();
    Rat gscale = rng.nonzero();
    std::vector<std::vector<QVec>> pt(nh, std::vector<QVec>(nh, QVec(1, Rat(0))));
    for (int i = 0; i < nh; ++i) {
        QVec bi(nh, Rat(0));
        for (int r = 0; r < nh; ++r) bi[r] = B.at(r, i);
        for (int j = 0; j < nh; ++j) {
            QVec bj(nh, Rat(0));
            for (int r = 0; r < nh; ++r) bj[r] = B.at(r, j);
            pt[i][j][0] = gscale * g0.apply(bi, bj)[0];
        }
    }
    Bilinear pairing(hs, hs, scalar_space(), g0.deg_shift(), g0.charge_shift(), std::move(pt));

    QVec omega0 = mat_apply(Binv, vec_scale(rng.nonzero(), A.basis_vec(1u)));  // z-line

    LinearMap dg = LinearMap::zero(g, g, 1, 1);
    Bilinear bracket = Bilinear::zero(g, g, g, 0, -1);
    HodgeData hd{LinearMap::identity(g), LinearMap::zero(g, g, -1, -1)};
    DGLA L = make_dgla(g, dg, bracket, hd);
    LinearMap d1 = LinearMap::zero(hs, hs, 1, 1);
    LinearMap d2 = LinearMap::zero(hs, hs, 1, -1);
    XiModule xi = make_ximodule(g, hs, d1, d2, contraction, pairing, omega0);

    ModelBundle b = finish_bundle("random:" + std::to_string(seed) + ":" + std::to_string(dims),
                                  std::move(L), std::move(xi), 3);
    // randomized Gr W basis: rescale and mix in lower-level classes
    for (auto& [lvl, v] : b.grw) {
        v = vec_scale(rng.nonzero(), v);
        for (int k = 0; k < b.coh->dim(); ++k) {
            QVec e(b.coh->dim(), Rat(0));
            e[k] = 1;
            if (b.coh->space()->parity(k) == ((lvl % 2) + 2) % 2 && b.W.level_of(e) < lvl &&
                rng.range(0, 1))
                vec_accum(v, frac(rng.range(-1, 1), 1), e);
        }
    }
    return b;
}

// ---------------------------------------------------------------------------
// validation

CheckReport check_bundle(const ModelBundle& b) {
    CheckReport rep;
    rep.merge(check_dgla(b.dgla));
    rep.merge(check_ximodule(b.xi, b.dgla));
    rep.merge(opposite_check(b.F, b.W));
    rep.merge(isotropy_check(b.W, b.coh->class_pairing()));

    // Gr W basis: levels declared correctly and classes descend to a basis
    {
        bool ok = true;
        std::string w;
        const int dimH = b.coh->dim();
        if (int(b.grw.size()) != dimH) {
            ok = false;
            w = "expected " + std::to_string(dimH) + " Gr W basis vectors";
        }
        QMat all(dimH, int(b.grw.size()));
        for (size_t j = 0; j < b.grw.size() && ok; ++j) {
            const auto& [lvl, v] = b.grw[j];
            if (b.W.level_of(v) != lvl) {
                ok = false;
                w = "vector " + std::to_string(j) + " not minimal at its declared level";
                break;
            }
            for (int i = 0; i < dimH; ++i) all.at(i, int(j)) = v[i];
        }
        if (ok && rank(all) != dimH) {
            ok = false;
            w = "Gr W vectors do not form a basis";
        }
        rep.add("Gr W basis valid", ok, w);
    }

    // Calabi-Yau symbol condition: [i_{class_a} omega0] spans the cohomology
    {
        Factorization fp(b.dgla.hodge ? b.dgla.hodge->P.matrix()
                                      : QMat::identity(b.dgla.g->dim()));
        std::vector<QVec> dirs;
        for (int c : fp.pivot_columns()) {
            QVec e(b.dgla.g->dim(), Rat(0));
            e[c] = 1;
            dirs.push_back(b.dgla.hodge ? b.dgla.hodge->P.apply(e) : e);
        }
        const int dimH = b.coh->dim();
        bool ok = int(dirs.size()) == dimH;
        std::string w = ok ? "" : "tangent dimension != dim H";
        if (ok) {
            QMat sym(dimH, dimH);
            for (size_t a = 0; a < dirs.size(); ++a) {
                QVec img = b.xi.contraction.apply(dirs[a], b.xi.omega0);
                QVec cls = b.coh->reduce(img);
                for (int i = 0; i < dimH; ++i) sym.at(i, int(a)) = cls[i];
            }
            int r = rank(sym);
            ok = (r == dimH);
            if (!ok) w = "symbol rank " + std::to_string(r) + " < " + std::to_string(dimH);
        }
        rep.add("symbol of the connection is an isomorphism at 0", ok, w);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

Json vec_json(const QVec& v) {
    Json a = Json::array();
    for (const auto& x : v) a.push_back(rat_str(x));
    return a;
}

QVec vec_parse(const Json& a) {
    QVec v;
    for (const auto& x : a) v.push_back(rat_parse(x.get<std::string>()));
    return v;
}

Json mat_json(const QMat& m) {
    Json rows = Json::array();
    for (int i = 0; i < m.rows; ++i) {
        Json row = Json::array();
        for (int j = 0; j < m.cols; ++j) row.push_back(rat_str(m.at(i, j)));
        rows.push_back(row);
    }
    return rows;
}

QMat mat_parse(const Json& rows, int r, int c) {
    QMat m(r, c);
    if (int(rows.size()) != r) throw std::invalid_argument("model file: bad matrix row count");
    for (int i = 0; i < r; ++i) {
        if (int(rows[i].size()) != c)
            throw std::invalid_argument("model file: bad matrix column count");
        for (int j = 0; j < c; ++j) m.at(i, j) = rat_parse(rows[i][j].get<std::string>());
    }
    return m;
}

bool is_unit_vector(const QVec& v, int& idx) {
    idx = -1;
    for (size_t i = 0; i < v.size(); ++i) {
        if (is_zero(v[i])) continue;
        if (idx >= 0 || v[i] != Rat(1)) return false;
        idx = int(i);
    }
    return idx >= 0;
}

} // namespace

std::string model_to_json(const ModelBundle& b) {
    Json j;
    j["name"] = b.name;
    j["default_order"] = b.default_order;
    Json basis = Json::array();
    for (int i = 0; i < b.dgla.g->dim(); ++i)
        basis.push_back(Json{{"label", b.dgla.g->label(i)},
                             {"degree", b.dgla.g->degree(i)},
                             {"charge", b.dgla.g->charge(i)},
                             {"component", "g"}});
    for (int i = 0; i < b.xi.h->dim(); ++i)
        basis.push_back(Json{{"label", b.xi.h->label(i)},
                             {"degree", b.xi.h->degree(i)},
                             {"charge", b.xi.h->charge(i)},
                             {"component", "h"}});
    j["basis"] = basis;

    Json tensors;
    tensors["d_g"] = mat_json(b.dgla.d.matrix());
    {
        Json br = Json::array();
        for (int a = 0; a < b.dgla.g->dim(); ++a) {
            Json row = Json::array();
            for (int c = 0; c < b.dgla.g->dim(); ++c) row.push_back(vec_json(b.dgla.bracket.at(a, c)));
            br.push_back(row);
        }
        tensors["bracket"] = br;
    }
    tensors["d1"] = mat_json(b.xi.d1.matrix());
    tensors["d2"] = mat_json(b.xi.d2.matrix());
    {
        Json it = Json::array();
        for (int a = 0; a < b.dgla.g->dim(); ++a) {
            QMat m(b.xi.h->dim(), b.xi.h->dim());
            for (int jcol = 0; jcol < b.xi.h->dim(); ++jcol)
                for (int r = 0; r < b.xi.h->dim(); ++r) m.at(r, jcol) = b.xi.contraction.at(a, jcol)[r];
            it.push_back(mat_json(m));
        }
        tensors["i"] = it;
    }
    {
        QMat gm(b.xi.h->dim(), b.xi.h->dim());
        for (int i = 0; i < b.xi.h->dim(); ++i)
            for (int jj = 0; jj < b.xi.h->dim(); ++jj) gm.at(i, jj) = b.xi.pairing.at(i, jj)[0];
        tensors["G"] = mat_json(gm);
    }
    if (b.dgla.hodge) {
        tensors["P"] = mat_json(b.dgla.hodge->P.matrix());
        tensors["K"] = mat_json(b.dgla.hodge->K.matrix());
    }
    j["tensors"] = tensors;
    j["omega0"] = vec_json(b.xi.omega0);
    j["n"] = b.xi.n;

    // W levels over h-coordinates: index sets when levels are unit classes
    Json wlevels = Json::array();
    for (const auto& [key, span] : b.W.levels) {
        Json lvl;
        lvl["halfstep"] = key;
        bool units = true;
        Json idxs = Json::array();
        for (const auto& v : span) {
            int idx;
            QVec hv = b.coh->embed(v);
            if (is_unit_vector(hv, idx))
                idxs.push_back(idx);
            else
                units = false;
        }
        if (units)
            lvl["basis"] = idxs;
        else {
            Json sp = Json::array();
            for (const auto& v : span) sp.push_back(vec_json(b.coh->embed(v)));
            lvl["span"] = sp;
        }
        wlevels.push_back(lvl);
    }
    j["W"] = wlevels;

    Json grw = Json::array();
    for (const auto& [lvl, v] : b.grw) grw.push_back(vec_json(b.coh->embed(v)));
    j["grW_basis"] = grw;

    return j.dump(1);
}

ModelBundle model_from_json(const std::string& text) {
    Json j = Json::parse(text);
    std::vector<std::string> glab, hlab;
    std::vector<int> gdeg, gchg, hdeg, hchg;
    for (const auto& e : j.at("basis")) {
        std::string comp = e.at("component").get<std::string>();
        if (comp == "g") {
            glab.push_back(e.at("label").get<std::string>());
            gdeg.push_back(e.at("degree").get<int>());
            gchg.push_back(e.at("charge").get<int>());
        } else if (comp == "h") {
            hlab.push_back(e.at("label").get<std::string>());
            hdeg.push_back(e.at("degree").get<int>());
            hchg.push_back(e.at("charge").get<int>());
        } else {
            throw std::invalid_argument("model file: component must be 'g' or 'h'");
        }
    }
    if (glab.empty() || hlab.empty())
        throw std::invalid_argument("model file: both g and h basis vectors are required");
    SpacePtr g = std::make_shared<GradedSpace>(glab, gdeg, gchg);
    SpacePtr h = std::make_shared<GradedSpace>(hlab, hdeg, hchg);
    const int ng = g->dim(), nh = h->dim();

    const Json& tensors = j.at("tensors");
    LinearMap dg(g, g, 1, 1, mat_parse(tensors.at("d_g"), ng, ng));
    std::vector<std::vector<QVec>> brt(ng, std::vector<QVec>(ng, QVec(ng, Rat(0))));
    {
        const Json& br = tensors.at("bracket");
        if (int(br.size()) != ng) throw std::invalid_argument("model file: bad bracket tensor");
        for (int a = 0; a < ng; ++a)
            for (int c = 0; c < ng; ++c) brt[a][c] = vec_parse(br[a][c]);
    }
    Bilinear bracket(g, g, g, 0, -1, std::move(brt));
    LinearMap d1(h, h, 1, 1, mat_parse(tensors.at("d1"), nh, nh));
    LinearMap d2(h, h, 1, -1, mat_parse(tensors.at("d2"), nh, nh));
    std::vector<std::vector<QVec>> it(ng, std::vector<QVec>(nh, QVec(nh, Rat(0))));
    {
        const Json& iv = tensors.at("i");
        if (int(iv.size()) != ng) throw std::invalid_argument("model file: bad contraction tensor");
        for (int a = 0; a < ng; ++a) {
            QMat m = mat_parse(iv[a], nh, nh);
            for (int jcol = 0; jcol < nh; ++jcol)
                for (int r = 0; r < nh; ++r) it[a][jcol][r] = m.at(r, jcol);
        }
    }
    Bilinear contraction(g, h, h, -1, 0, std::move(it));
    QMat gm = mat_parse(tensors.at("G"), nh, nh);
    // pairing shifts inferred from the first nonzero entry
    int dsh = 0, csh = 0;
    bool found = false;
    for (int i = 0; i < nh && !found; ++i)
        for (int jj = 0; jj < nh && !found; ++jj)
            if (!is_zero(gm.at(i, jj))) {
                dsh = -(h->degree(i) + h->degree(jj));
                csh = -(h->charge(i) + h->charge(jj));
                found = true;
            }
    if (!found) throw std::invalid_argument("model file: zero pairing");
    std::vector<std::vector<QVec>> pt(nh, std::vector<QVec>(nh, QVec(1, Rat(0))));
    for (int i = 0; i < nh; ++i)
        for (int jj = 0; jj < nh; ++jj) pt[i][jj][0] = gm.at(i, jj);
    Bilinear pairing(h, h, scalar_space(), dsh, csh, std::move(pt));

    std::optional<HodgeData> hodge;
    if (tensors.contains("P") && tensors.contains("K")) {
        hodge = HodgeData{LinearMap(g, g, 0, 0, mat_parse(tensors.at("P"), ng, ng)),
                          LinearMap(g, g, -1, -1, mat_parse(tensors.at("K"), ng, ng))};
    } else {
        hodge = make_hodge_data(g, dg);
    }
    DGLA L = make_dgla(g, dg, bracket, hodge);

    QVec omega0 = vec_parse(j.at("omega0"));
    XiModule xi = make_ximodule(g, h, d1, d2, contraction, pairing, omega0);
    if (j.contains("n") && j.at("n").get<int>() != xi.n)
        throw std::invalid_argument("model file: declared n does not equal -charge(omega0)");

    auto coh = std::make_shared<Cohomology>(xi);
    ModelBundle b{j.value("name", std::string("model")),
                  std::move(L),
                  std::move(xi),
                  coh,
                  filtration_from_charges(coh->space(), false),
                  Filtration{},
                  {},
                  j.value("default_order", 2)};
    b.W.increasing = true;
    b.W.space = b.coh->space();
    for (const auto& lvl : j.at("W")) {
        int key = lvl.at("halfstep").get<int>();
        std::vector<QVec> span;
        if (lvl.contains("basis")) {
            for (const auto& ix : lvl.at("basis")) {
                QVec e(nh, Rat(0));
                e.at(ix.get<int>()) = 1;
                span.push_back(b.coh->reduce(e));
            }
        } else {
            for (const auto& sv : lvl.at("span")) span.push_back(b.coh->reduce(vec_parse(sv)));
        }
        b.W.levels[key] = span;
    }
    for (const auto& gv : j.at("grW_basis")) {
        QVec cls = b.coh->reduce(vec_parse(gv));
        b.grw.emplace_back(b.W.level_of(cls), cls);
    }

    CheckReport rep = check_bundle(b);
    if (!rep.all_pass())
        throw std::invalid_argument("model file failed validation: " + rep.first_failure());
    return b;
}

ModelBundle load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

void save_model(const ModelBundle& b, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out << model_to_json(b) << "\n";
}

ModelBundle builtin_model(const std::string& name) {
    if (name == "torus.1") return torus_model(1);
    if (name == "torus.2") return torus_model(2);
    if (name == "nilpotent") return nilpotent_model();
    if (name.rfind("random:", 0) == 0) {
        std::string rest = name.substr(7);
        auto colon = rest.find(':');
        uint64_t seed = std::stoull(colon == std::string::npos ? rest : rest.substr(0, colon));
        int dims = colon == std::string::npos ? 4 : std::stoi(rest.substr(colon + 1));
        return random_abelian_model(seed, dims);
    }
    throw std::invalid_argument("unknown builtin model: " + name +
                                " (expected torus.1, torus.2, nilpotent, random:<seed>[:dims])");
}

} // namespace qp
