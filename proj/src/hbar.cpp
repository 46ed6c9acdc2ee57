#include "qp/hbar.hpp"

namespace qp {

HbarElement hbar_zero(VarSetPtr vars, SpacePtr space, int trunc) {
    return HbarElement(std::move(vars), std::move(space), trunc);
}

HbarElement hbar_of_series(const Series& s, int halfstep) {
    HbarElement h(s.vars(), s.space(), s.trunc());
    h.add(halfstep, s);
    return h;
}

HbarElement add(const HbarElement& a, const HbarElement& b) {
    HbarElement r = a;
    for (const auto& [e, s] : b.coeffs()) r.add(e, s);
    return r;
}

HbarElement sub(const HbarElement& a, const HbarElement& b) { return add(a, negate(b)); }

HbarElement scale(const Rat& c, const HbarElement& a) {
    HbarElement r(a.vars(), a.space(), a.trunc());
    for (const auto& [e, s] : a.coeffs()) r.add(e, scale(c, s));
    return r;
}

HbarElement negate(const HbarElement& a) { return scale(Rat(-1), a); }

HbarElement shift_halfstep(const HbarElement& a, int k, const Window& w) {
    HbarElement r(a.vars(), a.space(), a.trunc());
    for (const auto& [e, s] : a.coeffs()) {
        w.check(e + k);
        r.add(e + k, s);
    }
    return r;
}

HbarElement project_plus(const HbarElement& a) {
    HbarElement r(a.vars(), a.space(), a.trunc());
    for (const auto& [e, s] : a.coeffs())
        if (e >= 0) r.add(e, s);
    return r;
}

HbarElement project_minus(const HbarElement& a) {
    HbarElement r(a.vars(), a.space(), a.trunc());
    for (const auto& [e, s] : a.coeffs())
        if (e < 0) r.add(e, s);
    return r;
}

HbarElement apply_linear(const LinearMap& f, const HbarElement& a) {
    HbarElement r(a.vars(), f.dst(), a.trunc());
    for (const auto& [e, s] : a.coeffs()) r.add(e, apply_linear(f, s));
    return r;
}

HbarElement apply_bilinear_hbar(const Bilinear& B, const Series& a, const HbarElement& b) {
    HbarElement r(b.vars(), B.out(), b.trunc());
    for (const auto& [e, s] : b.coeffs()) r.add(e, apply_bilinear(B, a, s));
    return r;
}

HbarElement derivative(const HbarElement& a, int var) {
    HbarElement r(a.vars(), a.space(), a.trunc());
    for (const auto& [e, s] : a.coeffs()) r.add(e, derivative(s, var));
    return r;
}

HbarElement scalar_mul(const HbarElement& s, const HbarElement& a, const Window& w) {
    HbarElement r(a.vars(), a.space(), a.trunc());
    for (const auto& [e1, c1] : s.coeffs())
        for (const auto& [e2, c2] : a.coeffs()) {
            w.check(e1 + e2);
            r.add(e1 + e2, scalar_mul(c1, c2));
        }
    return r;
}

HbarElement scalar_series_mul(const Series& s, const HbarElement& a) {
    HbarElement r(a.vars(), a.space(), a.trunc());
    for (const auto& [e, c] : a.coeffs()) r.add(e, scalar_mul(s, c));
    return r;
}

static HbarElement apply_l_dir(const HbarElement& a, int dir, const Window& w) {
    const GradedSpace& sp = *a.space();
    HbarElement r(a.vars(), a.space(), a.trunc());
    for (const auto& [e, s] : a.coeffs())
        for (const auto& [mu, v] : s.terms())
            for (int k = 0; k < sp.dim(); ++k) {
                if (is_zero(v[k])) continue;
                int ne = e + dir * sp.charge(k);
                w.check(ne);
                QVec unit(sp.dim(), Rat(0));
                unit[k] = v[k];
                Series term = series_zero(a.vars(), a.space(), a.trunc());
                term.add_term(mu, unit);
                r.add(ne, term);
            }
    return r;
}

HbarElement apply_l(const HbarElement& a, const Window& w) { return apply_l_dir(a, 1, w); }
HbarElement apply_l_inverse(const HbarElement& a, const Window& w) { return apply_l_dir(a, -1, w); }

static int ceil_div2(int j) { return (j >= 0) ? (j + 1) / 2 : -((-j) / 2); }

HbarElement pair_twisted(const Bilinear& G, const HbarElement& a, const HbarElement& b,
                         const Window& w) {
    HbarElement r(a.vars(), G.out(), a.trunc());
    for (const auto& [i, u] : a.coeffs())
        for (const auto& [j, v] : b.coeffs()) {
            w.check(i + j);
            int eps = (ceil_div2(j) & 1) ? -1 : 1;
            Series p = apply_bilinear(G, u, v);
            if ((i + j) % 2 != 0) {
                // odd total halfstep cannot carry a scalar pairing value
                if (!p.is_zero())
                    throw std::logic_error("pair_twisted: pairing landed on an odd half-power");
                continue;
            }
            r.add(i + j, scale(Rat(eps), p));
        }
    return r;
}

} // namespace qp
