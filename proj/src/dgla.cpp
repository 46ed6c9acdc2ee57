#include "qp/dgla.hpp"

#include <algorithm>
#include <numeric>

namespace qp {

const char* const kGaugeMarker = "_eps";

static std::string vec_str(const GradedSpace& sp, const QVec& v) {
    std::string s;
    for (int k = 0; k < sp.dim(); ++k) {
        if (is_zero(v[k])) continue;
        if (!s.empty()) s += " + ";
        s += rat_str(v[k]) + "*" + sp.label(k);
    }
    return s.empty() ? "0" : s;
}

DGLA make_dgla(SpacePtr g, LinearMap d, Bilinear bracket, std::optional<HodgeData> hodge) {
    if (!same_space(d.src(), g) || !same_space(d.dst(), g) || d.deg_shift() != 1 || d.charge_shift() != 1)
        throw std::invalid_argument("make_dgla: differential must be a (+1,+1) endomorphism of g");
    if (!same_space(bracket.left(), g) || !same_space(bracket.right(), g) ||
        !same_space(bracket.out(), g) || bracket.deg_shift() != 0 || bracket.charge_shift() != -1)
        throw std::invalid_argument("make_dgla: bracket must be a (0,-1) pairing on g");
    if (hodge) {
        if (hodge->P.deg_shift() != 0 || hodge->P.charge_shift() != 0 ||
            hodge->K.deg_shift() != -1 || hodge->K.charge_shift() != -1)
            throw std::invalid_argument("make_dgla: HodgeData shifts must be P:(0,0), K:(-1,-1)");
        DGLA probe{g, d, bracket, hodge};
        CheckReport r = check_dgla(probe);
        for (const auto& it : r.items)
            if (!it.pass && it.name.rfind("hodge", 0) == 0)
                throw std::invalid_argument("make_dgla: " + it.name + ": " + it.witness);
    }
    return DGLA{std::move(g), std::move(d), std::move(bracket), std::move(hodge)};
}

HodgeData make_hodge_data(const SpacePtr& g, const LinearMap& d) {
    const int n = g->dim();
    const QMat& D = d.matrix();
    Factorization fd(D);
    std::vector<QVec> ker = fd.kernel();

    // A = span of pivot columns (a complement of ker d; d|_A is injective)
    std::vector<QVec> acomp;
    std::vector<QVec> im;
    for (int c : fd.pivot_columns()) {
        QVec e(n, Rat(0));
        e[c] = 1;
        im.push_back(d.apply(e));
        acomp.push_back(std::move(e));
    }
    // harmonic representatives: kernel vectors extending im(d) to ker(d)
    QMat ext(n, int(im.size() + ker.size()));
    for (size_t j = 0; j < im.size(); ++j)
        for (int i = 0; i < n; ++i) ext.at(i, int(j)) = im[j][i];
    for (size_t j = 0; j < ker.size(); ++j)
        for (int i = 0; i < n; ++i) ext.at(i, int(im.size() + j)) = ker[j][i];
    Factorization fe(ext);
    std::vector<QVec> harm;
    for (int c : fe.pivot_columns())
        if (c >= int(im.size())) harm.push_back(ker[c - im.size()]);

    // g = A (+) im(d) (+) harm; P projects onto harm, K inverts d on im(d)
    const int na = int(acomp.size());
    QMat basis(n, n);
    int col = 0;
    for (const auto& block : {acomp, im, harm})
        for (const auto& v : block) {
            for (int i = 0; i < n; ++i) basis.at(i, col) = v[i];
            ++col;
        }
    if (col != n) throw std::logic_error("make_hodge_data: decomposition dimension mismatch");
    auto binv = inverse(basis);
    if (!binv) throw std::logic_error("make_hodge_data: basis not invertible");

    QMat sel(n, n);
    for (int i = 2 * na; i < n; ++i) sel.at(i, i) = 1;
    QMat P = mat_mul(basis, mat_mul(sel, *binv));
    QMat kblock(n, n);  // block coordinates: send im_j to A_j
    for (int j = 0; j < na; ++j) kblock.at(j, na + j) = 1;
    QMat K = mat_mul(basis, mat_mul(kblock, *binv));
    return HodgeData{LinearMap(g, g, 0, 0, std::move(P)), LinearMap(g, g, -1, -1, std::move(K))};
}

CheckReport check_dgla(const DGLA& L) {
    CheckReport rep;
    const GradedSpace& g = *L.g;
    const int n = g.dim();

    // d^2 = 0
    {
        QMat dd = mat_mul(L.d.matrix(), L.d.matrix());
        bool ok = dd.is_zero();
        std::string w;
        if (!ok)
            for (int c = 0; c < n && w.empty(); ++c)
                for (int r = 0; r < n; ++r)
                    if (!is_zero(dd.at(r, c))) { w = "d(d(" + g.label(c) + ")) != 0"; break; }
        rep.add("differential squares to zero", ok, w);
    }
    // graded antisymmetry
    {
        bool ok = true;
        std::string w;
        for (int i = 0; i < n && ok; ++i)
            for (int j = i; j < n && ok; ++j) {
                QVec ei(n, Rat(0)), ej(n, Rat(0));
                ei[i] = 1; ej[j] = 1;
                QVec lhs = L.bracket.apply(ei, ej);
                QVec rhs = L.bracket.apply(ej, ei);
                int sign = (g.parity(i) && g.parity(j)) ? 1 : -1;  // [a,b] = -(-1)^{|a||b|}[b,a]
                vec_accum(lhs, Rat(-sign), rhs);
                if (!vec_is_zero(lhs)) {
                    ok = false;
                    w = "pair (" + g.label(i) + ", " + g.label(j) + ")";
                }
            }
        rep.add("bracket graded antisymmetry", ok, w);
    }
    // graded Jacobi, derivation form: [a,[b,c]] = [[a,b],c] + (-1)^{|a||b|}[b,[a,c]]
    {
        bool ok = true;
        std::string w;
        for (int i = 0; i < n && ok; ++i)
            for (int j = 0; j < n && ok; ++j)
                for (int k = 0; k < n && ok; ++k) {
                    QVec ei(n, Rat(0)), ej(n, Rat(0)), ek(n, Rat(0));
                    ei[i] = 1; ej[j] = 1; ek[k] = 1;
                    QVec lhs = L.bracket.apply(ei, L.bracket.apply(ej, ek));
                    QVec t1 = L.bracket.apply(L.bracket.apply(ei, ej), ek);
                    QVec t2 = L.bracket.apply(ej, L.bracket.apply(ei, ek));
                    int sign = (g.parity(i) && g.parity(j)) ? -1 : 1;
                    vec_accum(lhs, Rat(-1), t1);
                    vec_accum(lhs, Rat(-sign), t2);
                    if (!vec_is_zero(lhs)) {
                        ok = false;
                        w = "triple (" + g.label(i) + ", " + g.label(j) + ", " + g.label(k) + ")";
                    }
                }
        rep.add("bracket graded Jacobi", ok, w);
    }
    // graded Leibniz: d[a,b] = [da,b] + (-1)^{|a|}[a,db]
    {
        bool ok = true;
        std::string w;
        for (int i = 0; i < n && ok; ++i)
            for (int j = 0; j < n && ok; ++j) {
                QVec ei(n, Rat(0)), ej(n, Rat(0));
                ei[i] = 1; ej[j] = 1;
                QVec lhs = L.d.apply(L.bracket.apply(ei, ej));
                QVec t1 = L.bracket.apply(L.d.apply(ei), ej);
                QVec t2 = L.bracket.apply(ei, L.d.apply(ej));
                int sign = g.parity(i) ? -1 : 1;
                vec_accum(lhs, Rat(-1), t1);
                vec_accum(lhs, Rat(-sign), t2);
                if (!vec_is_zero(lhs)) {
                    ok = false;
                    w = "pair (" + g.label(i) + ", " + g.label(j) + ")";
                }
            }
        rep.add("bracket graded Leibniz", ok, w);
    }
    if (L.hodge) {
        const QMat& P = L.hodge->P.matrix();
        const QMat& K = L.hodge->K.matrix();
        const QMat& D = L.d.matrix();
        QMat lhs = mat_add(mat_mul(D, K), mat_mul(K, D));
        QMat rhs = mat_add(QMat::identity(n), mat_scale(Rat(-1), P));
        rep.add("hodge dK + Kd = Id - P", mat_add(lhs, mat_scale(Rat(-1), rhs)).is_zero());
        rep.add("hodge K^2 = 0", mat_mul(K, K).is_zero());
        rep.add("hodge KP = 0", mat_mul(K, P).is_zero());
        rep.add("hodge PK = 0", mat_mul(P, K).is_zero());
        rep.add("hodge P^2 = P", mat_add(mat_mul(P, P), mat_scale(Rat(-1), P)).is_zero());
        rep.add("hodge Pd = 0", mat_mul(P, D).is_zero());
        rep.add("hodge dP = 0", mat_mul(D, P).is_zero());
    }
    return rep;
}

Series mc_residual(const DGLA& L, const Series& gamma) {
    if (!same_space(gamma.space(), L.g)) throw std::invalid_argument("mc_residual: wrong value space");
    if (!gamma.is_homogeneous(1))
        throw std::invalid_argument("mc_residual: gamma must be homogeneous of total degree 1");
    Series r = apply_linear(L.d, gamma);
    Series br = apply_bilinear(L.bracket, gamma, gamma);
    return add(r, scale(Rat(1, 2), br));
}

VarSetPtr with_gauge_marker(const VarSetPtr& vars) {
    for (const auto& v : vars->all())
        if (v.name == kGaugeMarker)
            throw std::invalid_argument("gauge marker variable already present");
    std::vector<Variable> vs = vars->all();
    vs.push_back(Variable{kGaugeMarker, 0, 1, 0});
    return std::make_shared<VarSet>(std::move(vs));
}

static void require_gauge_param(const Series& alpha) {
    if (!alpha.is_homogeneous(0))
        throw std::invalid_argument("gauge parameter must be homogeneous of total degree 0");
    if (!vec_is_zero(alpha.constant_term()))
        throw std::invalid_argument("gauge parameter must have zero constant term");
}

Series gauge_act(const DGLA& L, const Series& gamma, const Series& alpha, GaugeMode mode) {
    require_gauge_param(alpha);
    if (!same_vars(gamma.vars(), alpha.vars()) || gamma.trunc() != alpha.trunc())
        throw std::invalid_argument("gauge_act: gamma and alpha over different rings");
    if (mode == GaugeMode::Infinitesimal) {
        VarSetPtr ext = with_gauge_marker(gamma.vars());
        Series ge = extend_vars(gamma, ext);
        Series ae = extend_vars(alpha, ext);
        Series dot = add(apply_linear(L.d, ae), apply_bilinear(L.bracket, ge, ae));
        int eps = ext->index_of(kGaugeMarker);
        return add(ge, scalar_mul(series_var(ext, gamma.trunc(), eps), dot));
    }
    // Exponentiated flow of gamma-dot = d alpha + [gamma, alpha]:
    //   gamma^alpha = sum_n (ad(-alpha))^n gamma / n! + (ad(-alpha))^n d(alpha) / (n+1)!
    // Finite by nilpotency of the maximal ideal; at first order in a
    // square-zero parameter this reproduces the infinitesimal mode exactly.
    Series dalpha = apply_linear(L.d, alpha);
    Series acc = series_zero(gamma.vars(), L.g, gamma.trunc());
    Series term_d = dalpha;
    Series term_g = gamma;
    Rat fact(1);
    int n = 0;
    while (true) {
        acc = add(acc, scale(Rat(1) / (fact * Rat(n + 1)), term_d));
        acc = add(acc, scale(Rat(1) / fact, term_g));
        Series nd = negate(apply_bilinear(L.bracket, alpha, term_d));
        Series ng = negate(apply_bilinear(L.bracket, alpha, term_g));
        if (nd.is_zero() && ng.is_zero()) break;
        term_d = std::move(nd);
        term_g = std::move(ng);
        ++n;
        fact *= n;
        if (n > gamma.trunc() + 2) break;
    }
    return acc;
}

MiniversalMC mc_solve_miniversal(const DGLA& L, int N, const std::string& var_prefix) {
    if (!L.hodge) throw std::invalid_argument("mc_solve_miniversal: HodgeData required");
    const GradedSpace& g = *L.g;
    const int n = g.dim();

    // harmonic classes: image basis of P via pivot columns, ordered by (degree, charge, index)
    Factorization fp(L.hodge->P.matrix());
    std::vector<QVec> classes;
    std::vector<int> deg, chg;
    std::vector<int> order;
    for (int c : fp.pivot_columns()) {
        QVec e(n, Rat(0));
        e[c] = 1;
        classes.push_back(L.hodge->P.apply(e));
        deg.push_back(g.degree(c));
        chg.push_back(g.charge(c));
    }
    order.resize(classes.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (deg[a] != deg[b]) return deg[a] < deg[b];
        return chg[a] < chg[b];
    });

    std::vector<Variable> vars;
    std::vector<QVec> cls;
    std::vector<int> cdeg, cchg;
    for (size_t k = 0; k < order.size(); ++k) {
        int i = order[k];
        vars.push_back(Variable{var_prefix + std::to_string(k), 1 - deg[i], 0, 1});
        cls.push_back(classes[i]);
        cdeg.push_back(deg[i]);
        cchg.push_back(chg[i]);
    }
    VarSetPtr vs = std::make_shared<VarSet>(std::move(vars));

    Series gamma1 = series_zero(vs, L.g, N);
    for (size_t k = 0; k < cls.size(); ++k)
        gamma1 = add(gamma1, series_var_vector(vs, L.g, N, int(k), cls[k]));

    Series gamma = gamma1;
    for (int it = 0; it <= N + 1; ++it) {
        Series sq = apply_bilinear(L.bracket, gamma, gamma);
        Series next = add(gamma1, scale(Rat(-1, 2), apply_linear(L.hodge->K, sq)));
        if (next == gamma) break;
        gamma = std::move(next);
    }

    // unobstructedness: P[gamma, gamma] must vanish identically
    Series obstruction = apply_linear(L.hodge->P, apply_bilinear(L.bracket, gamma, gamma));
    if (!obstruction.is_zero()) {
        int k = obstruction.min_order();
        std::string w;
        for (const auto& [mu, v] : obstruction.terms())
            if (mu.order(*vs) == k) { w = "class " + vec_str(g, v); break; }
        throw ObstructedError(k, w);
    }
    Series res = mc_residual(L, gamma);
    if (!res.is_zero()) throw std::logic_error("mc_solve_miniversal: unobstructed input left a residual");
    if (!apply_linear(L.hodge->K, gamma).is_zero())
        throw std::logic_error("mc_solve_miniversal: gauge slice K gamma = 0 violated");

    return MiniversalMC{std::move(gamma), vs, std::move(cls), std::move(cdeg), std::move(cchg)};
}

} // namespace qp
