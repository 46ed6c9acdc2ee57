#include "qp/ximodule.hpp"

#include <algorithm>
#include <map>

namespace qp {

XiModule make_ximodule(SpacePtr g, SpacePtr h, LinearMap d1, LinearMap d2, Bilinear contraction,
                       Bilinear pairing, QVec omega0) {
    if (d1.deg_shift() != 1 || d1.charge_shift() != 1)
        throw std::invalid_argument("make_ximodule: d1 must have shifts (+1,+1)");
    if (d2.deg_shift() != 1 || d2.charge_shift() != -1)
        throw std::invalid_argument("make_ximodule: d2 must have shifts (+1,-1)");
    if (!same_space(d1.src(), h) || !same_space(d1.dst(), h) || !same_space(d2.src(), h) ||
        !same_space(d2.dst(), h))
        throw std::invalid_argument("make_ximodule: differentials must act on h");
    if (contraction.deg_shift() != -1 || contraction.charge_shift() != 0 ||
        !same_space(contraction.left(), g) || !same_space(contraction.right(), h) ||
        !same_space(contraction.out(), h))
        throw std::invalid_argument("make_ximodule: contraction must be g x h -> h with shifts (-1,0)");
    if (!same_space(pairing.left(), h) || !same_space(pairing.right(), h) ||
        !same_space(pairing.out(), scalar_space()))
        throw std::invalid_argument("make_ximodule: pairing must be h x h -> scalars");
    for (int i = 0; i < h->dim(); ++i)
        if (((h->charge(i) - h->degree(i)) % 2 + 2) % 2 != 0)
            throw std::invalid_argument("make_ximodule: h basis vector " + h->label(i) +
                                        " violates charge = degree (mod 2)");
    for (int i = 0; i < g->dim(); ++i)
        if (((g->charge(i) - g->degree(i) - 1) % 2 + 2) % 2 != 0)
            throw std::invalid_argument("make_ximodule: g basis vector " + g->label(i) +
                                        " violates charge = degree + 1 (mod 2)");
    if (int(omega0.size()) != h->dim() || vec_is_zero(omega0))
        throw std::invalid_argument("make_ximodule: omega0 must be a nonzero h-vector");
    std::optional<int> chg;
    for (int i = 0; i < h->dim(); ++i) {
        if (is_zero(omega0[i])) continue;
        if (!chg) chg = h->charge(i);
        else if (*chg != h->charge(i))
            throw std::invalid_argument("make_ximodule: omega0 must be charge-homogeneous");
    }
    XiModule m{std::move(g), std::move(h), std::move(d1), std::move(d2), std::move(contraction),
               std::move(pairing), std::move(omega0), -*chg};
    return m;
}

CheckReport check_ximodule(const XiModule& m, const DGLA& L) {
    CheckReport rep;
    const GradedSpace& g = *m.g;
    const GradedSpace& h = *m.h;
    const int ng = g.dim(), nh = h.dim();

    rep.add("d1 squares to zero", mat_mul(m.d1.matrix(), m.d1.matrix()).is_zero());
    rep.add("d2 squares to zero", mat_mul(m.d2.matrix(), m.d2.matrix()).is_zero());
    rep.add("d1 d2 + d2 d1 = 0",
            mat_add(mat_mul(m.d1.matrix(), m.d2.matrix()), mat_mul(m.d2.matrix(), m.d1.matrix()))
                .is_zero());

    // [d1, i_a] = i_{d_g a}
    {
        bool ok = true;
        std::string w;
        for (int a = 0; a < ng && ok; ++a) {
            LinearMap ia = m.contraction.fix_left_basis(a);
            LinearMap lhs = graded_commutator(m.d1, ia);
            QVec ea(ng, Rat(0));
            ea[a] = 1;
            QVec da = L.d.apply(ea);
            QMat rhs(nh, nh);
            for (int b = 0; b < ng; ++b)
                if (!is_zero(da[b])) {
                    QMat ib = m.contraction.fix_left_basis(b).matrix();
                    for (int r = 0; r < nh; ++r)
                        for (int c = 0; c < nh; ++c) rhs.at(r, c) += da[b] * ib.at(r, c);
                }
            if (!mat_add(lhs.matrix(), mat_scale(Rat(-1), rhs)).is_zero()) {
                ok = false;
                w = "generator " + g.label(a);
            }
        }
        rep.add("[d1, i_a] = i_{d a}", ok, w);
    }
    // [i_a, i_b] = 0
    {
        bool ok = true;
        std::string w;
        for (int a = 0; a < ng && ok; ++a)
            for (int b = a; b < ng && ok; ++b) {
                LinearMap ia = m.contraction.fix_left_basis(a);
                LinearMap ib = m.contraction.fix_left_basis(b);
                if (!graded_commutator(ia, ib).is_zero()) {
                    ok = false;
                    w = "pair (" + g.label(a) + ", " + g.label(b) + ")";
                }
            }
        rep.add("[i_a, i_b] = 0", ok, w);
    }
    // [[d2, i_a], i_b] = i_{[a,b]}
    {
        bool ok = true;
        std::string w;
        for (int a = 0; a < ng && ok; ++a)
            for (int b = 0; b < ng && ok; ++b) {
                LinearMap la = graded_commutator(m.d2, m.contraction.fix_left_basis(a));
                LinearMap lhs = graded_commutator(la, m.contraction.fix_left_basis(b));
                QVec ea(ng, Rat(0)), eb(ng, Rat(0));
                ea[a] = 1;
                eb[b] = 1;
                QVec ab = L.bracket.apply(ea, eb);
                QMat rhs(nh, nh);
                for (int c = 0; c < ng; ++c)
                    if (!is_zero(ab[c])) {
                        QMat ic = m.contraction.fix_left_basis(c).matrix();
                        for (int r = 0; r < nh; ++r)
                            for (int s = 0; s < nh; ++s) rhs.at(r, s) += ab[c] * ic.at(r, s);
                    }
                if (!mat_add(lhs.matrix(), mat_scale(Rat(-1), rhs)).is_zero()) {
                    ok = false;
                    w = "pair (" + g.label(a) + ", " + g.label(b) + ")";
                }
            }
        rep.add("[[d2, i_a], i_b] = i_{[a,b]}", ok, w);
    }
    // pairing: non-degenerate and invariant
    {
        QMat gm(nh, nh);
        for (int i = 0; i < nh; ++i)
            for (int j = 0; j < nh; ++j) gm.at(i, j) = m.pairing.at(i, j)[0];
        rep.add("pairing non-degenerate", rank(gm) == nh);

        bool ok1 = true, ok2 = true;
        std::string w1, w2;
        for (int i = 0; i < nh; ++i)
            for (int j = 0; j < nh; ++j) {
                QVec ei(nh, Rat(0)), ej(nh, Rat(0));
                ei[i] = 1;
                ej[j] = 1;
                int sgn = h.parity(i) ? -1 : 1;
                Rat inv1 = m.pairing.apply(m.d1.apply(ei), ej)[0] +
                           Rat(sgn) * m.pairing.apply(ei, m.d1.apply(ej))[0];
                Rat inv2 = m.pairing.apply(m.d2.apply(ei), ej)[0] +
                           Rat(sgn) * m.pairing.apply(ei, m.d2.apply(ej))[0];
                if (!is_zero(inv1) && ok1) {
                    ok1 = false;
                    w1 = "pair (" + h.label(i) + ", " + h.label(j) + ")";
                }
                if (!is_zero(inv2) && ok2) {
                    ok2 = false;
                    w2 = "pair (" + h.label(i) + ", " + h.label(j) + ")";
                }
            }
        rep.add("pairing d1-invariant", ok1, w1);
        rep.add("pairing d2-invariant", ok2, w2);
    }
    rep.add("d1 omega0 = 0", vec_is_zero(m.d1.apply(m.omega0)));
    rep.add("d2 omega0 = 0", vec_is_zero(m.d2.apply(m.omega0)));
    return rep;
}

Series contract(const XiModule& m, const Series& gamma, const Series& s) {
    return apply_bilinear(m.contraction, gamma, s);
}

HbarElement contract(const XiModule& m, const Series& gamma, const HbarElement& s) {
    HbarElement r(s.vars(), s.space(), s.trunc());
    for (const auto& [e, c] : s.coeffs()) r.add(e, contract(m, gamma, c));
    return r;
}

HbarElement exp_contract(const XiModule& m, const Series& gamma, const HbarElement& s, int step,
                         const Window& w) {
    if (!vec_is_zero(gamma.constant_term()))
        throw std::invalid_argument("exp_contract: gamma must have zero constant term");
    HbarElement acc = s;
    HbarElement term = s;
    Rat fact(1);
    int k = 0;
    while (true) {
        term = shift_halfstep(contract(m, gamma, term), step, w);
        if (term.is_zero()) break;
        ++k;
        fact *= k;
        acc = add(acc, scale(Rat(1) / fact, term));
        if (k > s.trunc() + 1) break;
    }
    return acc;
}

Series lie_action(const XiModule& m, const Series& gamma, const Series& s) {
    if (gamma.is_zero()) return series_zero(s.vars(), m.h, s.trunc());
    auto p = gamma.homogeneous_degree();
    if (!p) throw std::invalid_argument("lie_action: gamma must be degree-homogeneous");
    int ipar = ((*p - 1) % 2 + 2) % 2;  // parity of the operator i_gamma
    Series t1 = apply_linear(m.d2, contract(m, gamma, s));
    Series t2 = contract(m, gamma, apply_linear(m.d2, s));
    return ipar ? add(t1, t2) : sub(t1, t2);
}

HbarElement lie_action(const XiModule& m, const Series& gamma, const HbarElement& s) {
    HbarElement r(s.vars(), s.space(), s.trunc());
    for (const auto& [e, c] : s.coeffs()) r.add(e, lie_action(m, gamma, c));
    return r;
}

TwistedDifferential::TwistedDifferential(const XiModule& m, const DGLA& L, Series gamma,
                                         bool with_hbar)
    : m_(m), gamma_(std::move(gamma)), with_hbar_(with_hbar) {
    Series res = mc_residual(L, gamma_);
    if (!res.is_zero())
        throw std::invalid_argument("twisted differential requires a Maurer-Cartan solution");
}

HbarElement TwistedDifferential::operator()(const HbarElement& s) const {
    HbarElement r(s.vars(), s.space(), s.trunc());
    for (const auto& [e, c] : s.coeffs()) {
        r.add(e, add(apply_linear(m_.d1, c), lie_action(m_, gamma_, c)));
        r.add(e + (with_hbar_ ? 2 : 0), apply_linear(m_.d2, c));
    }
    return r;
}

Series TwistedDifferential::operator()(const Series& s) const {
    if (with_hbar_)
        throw std::logic_error("series application of the hbar-twisted differential");
    return add(add(apply_linear(m_.d1, s), lie_action(m_, gamma_, s)), apply_linear(m_.d2, s));
}

ConjugationResult conjugation_residual(const XiModule& m, const DGLA& L, const Series& gamma,
                                       const Window& w) {
    if (!gamma.is_homogeneous(1))
        throw std::invalid_argument("conjugation_residual: gamma must have total degree 1");
    if (!vec_is_zero(gamma.constant_term()))
        throw std::invalid_argument("conjugation_residual: gamma must have zero constant term");
    const int nh = m.h->dim();
    Series res = mc_residual(L, gamma);
    ConjugationResult out;
    out.identity_holds = true;
    for (int j = 0; j < nh; ++j) {
        QVec ej(nh, Rat(0));
        ej[j] = 1;
        HbarElement e = hbar_of_series(series_vector(gamma.vars(), m.h, gamma.trunc(), ej), 0);
        // conjugate: exp(-i/hbar) (d1 + hbar d2) exp(i/hbar)
        HbarElement x = exp_contract(m, gamma, e, -2, w);
        HbarElement dx = add(apply_linear(m.d1, x), shift_halfstep(apply_linear(m.d2, x), 2, w));
        HbarElement conj = exp_contract(m, negate(gamma), dx, -2, w);
        // twisted differential d1 + [d2, i_gamma] + hbar d2 (no MC requirement here)
        HbarElement tw = add(apply_linear(m.d1, e), lie_action(m, gamma, e));
        tw = add(tw, shift_halfstep(apply_linear(m.d2, e), 2, w));
        HbarElement diff = sub(conj, tw);
        HbarElement rterm = shift_halfstep(contract(m, res, e), -2, w);
        if (!(diff == rterm)) out.identity_holds = false;
        out.difference.push_back(std::move(diff));
        out.residual_term.push_back(std::move(rterm));
    }
    return out;
}

HbarElement gauss_manin_derivative(const XiModule& m, const Series& gamma, int var,
                                   const HbarElement& s, const Window& w) {
    HbarElement ds = derivative(s, var);
    Series dgamma = derivative(gamma, var);
    HbarElement itv = shift_halfstep(contract(m, dgamma, s), -2, w);
    return add(ds, itv);
}

HbarElement gauge_transport(const XiModule& m, const DGLA& L, const Series& gamma,
                            const Series& alpha, const HbarElement& s, GaugeMode mode) {
    if (!alpha.is_homogeneous(0))
        throw std::invalid_argument("gauge_transport: alpha must have total degree 0");
    TwistedDifferential dg(m, L, gamma, true);
    if (!dg(s).is_zero()) throw std::invalid_argument("gauge_transport: s is not closed");
    if (mode == GaugeMode::Infinitesimal) {
        VarSetPtr ext = with_gauge_marker(s.vars());
        Series ae = extend_vars(alpha, ext);
        HbarElement se(ext, s.space(), s.trunc());
        for (const auto& [e, c] : s.coeffs()) se.add(e, extend_vars(c, ext));
        Series epsv = series_var(ext, s.trunc(), ext->index_of(kGaugeMarker));
        HbarElement la = lie_action(m, ae, se);
        HbarElement corr(ext, s.space(), s.trunc());
        for (const auto& [e, c] : la.coeffs()) corr.add(e, scalar_mul(epsv, c));
        return add(se, corr);
    }
    HbarElement acc = s;
    HbarElement term = s;
    Rat fact(1);
    int k = 0;
    while (true) {
        term = lie_action(m, alpha, term);
        if (term.is_zero()) break;
        ++k;
        fact *= k;
        acc = add(acc, scale(Rat(1) / fact, term));
        if (k > s.trunc() + 1) break;
    }
    return acc;
}

Cohomology::Cohomology(const XiModule& m) : h_(m.h) {
    const int nh = h_->dim();
    QMat D = mat_add(m.d1.matrix(), m.d2.matrix());
    Factorization fd(D);
    std::vector<QVec> im;
    for (int c : fd.pivot_columns()) {
        QVec e(nh, Rat(0));
        e[c] = 1;
        im.push_back(mat_apply(D, e));
    }
    const int dimH = nh - 2 * int(im.size());

    // slices in (degree, charge) ascending order
    std::vector<std::pair<int, int>> slices;
    for (int i = 0; i < nh; ++i) {
        auto s = std::make_pair(h_->degree(i), h_->charge(i));
        if (std::find(slices.begin(), slices.end(), s) == slices.end()) slices.push_back(s);
    }
    std::sort(slices.begin(), slices.end());

    // greedy accumulation: columns = im(D) then accepted representatives
    std::vector<QVec> accum = im;
    auto independent = [&](const QVec& v) {
        QMat t(nh, int(accum.size()) + 1);
        for (size_t j = 0; j < accum.size(); ++j)
            for (int i = 0; i < nh; ++i) t.at(i, int(j)) = accum[j][i];
        for (int i = 0; i < nh; ++i) t.at(i, int(accum.size())) = v[i];
        return rank(t) == int(accum.size()) + 1;
    };

    std::vector<int> cls_deg, cls_chg;
    for (auto [deg, chg] : slices) {
        std::vector<int> idx;
        for (int i = 0; i < nh; ++i)
            if (h_->degree(i) == deg && h_->charge(i) == chg) idx.push_back(i);
        // simultaneous kernel of d1 and d2 restricted to the slice
        QMat stacked(2 * nh, int(idx.size()));
        for (size_t j = 0; j < idx.size(); ++j)
            for (int i = 0; i < nh; ++i) {
                stacked.at(i, int(j)) = m.d1.matrix().at(i, idx[j]);
                stacked.at(nh + i, int(j)) = m.d2.matrix().at(i, idx[j]);
            }
        for (const auto& kv : kernel_basis(stacked)) {
            QVec v(nh, Rat(0));
            for (size_t j = 0; j < idx.size(); ++j) v[idx[j]] = kv[j];
            if (independent(v)) {
                accum.push_back(v);
                reps_.push_back(v);
                cls_deg.push_back(deg);
                cls_chg.push_back(chg);
            }
        }
    }
    if (int(reps_.size()) != dimH)
        throw DegenerationError(
            "no simultaneous d1,d2-kernel representative for some class (found " +
            std::to_string(reps_.size()) + " of " + std::to_string(dimH) + ")");

    std::vector<std::string> labels;
    for (int k = 0; k < dimH; ++k) labels.push_back("H" + std::to_string(k));
    H_ = std::make_shared<GradedSpace>(labels, cls_deg, cls_chg);

    // reduction solver over [reps | im D]
    QMat red(nh, dimH + int(im.size()));
    for (int k = 0; k < dimH; ++k)
        for (int i = 0; i < nh; ++i) red.at(i, k) = reps_[k][i];
    for (size_t j = 0; j < im.size(); ++j)
        for (int i = 0; i < nh; ++i) red.at(i, dimH + int(j)) = im[j][i];
    solver_ = std::make_unique<Factorization>(red);

    // induced pairing on classes
    std::vector<std::vector<QVec>> t(dimH, std::vector<QVec>(dimH, QVec(1, Rat(0))));
    for (int k = 0; k < dimH; ++k)
        for (int l = 0; l < dimH; ++l) t[k][l][0] = m.pairing.apply(reps_[k], reps_[l])[0];
    gh_ = std::make_unique<Bilinear>(H_, H_, scalar_space(), m.pairing.deg_shift(),
                                     m.pairing.charge_shift(), std::move(t));
}

QVec Cohomology::reduce(const QVec& v) const {
    auto x = solver_->solve(v);
    if (!x) throw std::logic_error("Cohomology::reduce: vector is not closed");
    QVec out(dim());
    for (int k = 0; k < dim(); ++k) out[k] = (*x)[k];
    return out;
}

Series Cohomology::reduce(const Series& s) const {
    Series out(s.vars(), H_, s.trunc());
    for (const auto& [mu, v] : s.terms()) out.add_term(mu, reduce(v));
    return out;
}

HbarElement Cohomology::reduce(const HbarElement& s) const {
    HbarElement out(s.vars(), H_, s.trunc());
    for (const auto& [e, c] : s.coeffs()) out.add(e, reduce(c));
    return out;
}

QVec Cohomology::embed(const QVec& classes) const {
    QVec v(h_->dim(), Rat(0));
    for (int k = 0; k < dim(); ++k)
        if (!is_zero(classes[k])) vec_accum(v, classes[k], reps_[k]);
    return v;
}

Series Cohomology::embed(const Series& s) const {
    Series out(s.vars(), h_, s.trunc());
    for (const auto& [mu, v] : s.terms()) out.add_term(mu, embed(v));
    return out;
}

HbarElement Cohomology::embed(const HbarElement& s) const {
    HbarElement out(s.vars(), h_, s.trunc());
    for (const auto& [e, c] : s.coeffs()) out.add(e, embed(c));
    return out;
}

} // namespace qp
