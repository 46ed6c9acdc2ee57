#include "qp/series.hpp"

#include <cassert>

namespace qp {

std::optional<int> mono_merge(const VarSet& vs, const Mono& mu, const Mono& nu, Mono& out) {
    const int n = vs.size();
    out.e.assign(n, 0);
    int inversions = 0;
    for (int l = 0; l < n; ++l) {
        if (nu.e[l] && vs.var(l).odd()) {
            // t_l from the right factor crosses every odd t_j (j > l) of the left
            for (int j = l + 1; j < n; ++j)
                if (mu.e[j] && vs.var(j).odd()) inversions += mu.e[j] * nu.e[l];
        }
        int s = mu.e[l] + nu.e[l];
        int cap = vs.var(l).cap();
        if (cap > 0 && s > cap) return std::nullopt;
        out.e[l] = s;
    }
    return (inversions & 1) ? -1 : 1;
}

void Series::add_term(const Mono& mu, const QVec& v) {
    add_term_scaled(mu, Rat(1), v);
}

void Series::add_term_scaled(const Mono& mu, const Rat& c, const QVec& v) {
    if (qp::is_zero(c) || vec_is_zero(v)) return;
    if (int(mu.e.size()) != vars_->size()) throw std::invalid_argument("Series: bad monomial width");
    if (mu.order(*vars_) > trunc_) return;
    for (int i = 0; i < vars_->size(); ++i) {
        int cap = vars_->var(i).cap();
        if (cap > 0 && mu.e[i] > cap) return;
        if (mu.e[i] < 0) throw std::invalid_argument("Series: negative exponent");
    }
    auto it = c_.find(mu);
    if (it == c_.end()) {
        QVec w(space_->dim(), Rat(0));
        for (size_t k = 0; k < v.size(); ++k) w[k] = c * v[k];
        if (!vec_is_zero(w)) c_.emplace(mu, std::move(w));
    } else {
        vec_accum(it->second, c, v);
        if (vec_is_zero(it->second)) c_.erase(it);
    }
}

int Series::top_order() const {
    int m = -1;
    for (const auto& [mu, v] : c_) m = std::max(m, mu.order(*vars_));
    return m;
}

int Series::min_order() const {
    int m = trunc_ + 1;
    for (const auto& [mu, v] : c_) m = std::min(m, mu.order(*vars_));
    return m;
}

bool Series::is_homogeneous(int d) const {
    for (const auto& [mu, v] : c_) {
        int md = mu.degree(*vars_);
        for (int k = 0; k < space_->dim(); ++k)
            if (!qp::is_zero(v[k]) && md + space_->degree(k) != d) return false;
    }
    return true;
}

std::optional<int> Series::homogeneous_degree() const {
    std::optional<int> d;
    for (const auto& [mu, v] : c_) {
        int md = mu.degree(*vars_);
        for (int k = 0; k < space_->dim(); ++k) {
            if (qp::is_zero(v[k])) continue;
            int total = md + space_->degree(k);
            if (!d) d = total;
            else if (*d != total) return std::nullopt;
        }
    }
    return d;
}

Series series_zero(VarSetPtr vars, SpacePtr space, int trunc) {
    return Series(std::move(vars), std::move(space), trunc);
}

Series series_const(VarSetPtr vars, int trunc, const Rat& c) {
    Series s(vars, scalar_space(), trunc);
    s.add_term(Mono::one(*vars), QVec{c});
    return s;
}

Series series_vector(VarSetPtr vars, SpacePtr space, int trunc, const QVec& v) {
    Series s(vars, std::move(space), trunc);
    s.add_term(Mono::one(*vars), v);
    return s;
}

Series series_var_vector(VarSetPtr vars, SpacePtr space, int trunc, int var, const QVec& v) {
    Series s(vars, std::move(space), trunc);
    s.add_term(Mono::single(*vars, var), v);
    return s;
}

Series series_var(VarSetPtr vars, int trunc, int var) {
    Series s(vars, scalar_space(), trunc);
    s.add_term(Mono::single(*vars, var), QVec{Rat(1)});
    return s;
}

static void require_compatible(const Series& a, const Series& b) {
    if (!same_vars(a.vars(), b.vars()))
        throw std::invalid_argument("series: mismatched variable lists");
    if (a.trunc() != b.trunc())
        throw std::invalid_argument("series: mismatched truncation orders");
}

Series add(const Series& a, const Series& b) {
    require_compatible(a, b);
    if (!same_space(a.space(), b.space())) throw std::invalid_argument("series add: space mismatch");
    Series out(a.vars(), a.space(), a.trunc());
    for (const auto& [mu, v] : a.terms()) out.add_term(mu, v);
    for (const auto& [mu, v] : b.terms()) out.add_term(mu, v);
    return out;
}

Series sub(const Series& a, const Series& b) { return add(a, negate(b)); }

Series scale(const Rat& c, const Series& a) {
    Series out(a.vars(), a.space(), a.trunc());
    for (const auto& [mu, v] : a.terms()) out.add_term_scaled(mu, c, v);
    return out;
}

Series negate(const Series& a) { return scale(Rat(-1), a); }

Series series_mul(const Series& a, const Series& b) {
    require_compatible(a, b);
    if (!same_space(a.space(), scalar_space()) || !same_space(b.space(), scalar_space()))
        throw std::invalid_argument("series_mul expects scalar series");
    Series out(a.vars(), scalar_space(), a.trunc());
    const VarSet& vs = *a.vars();
    Mono merged;
    for (const auto& [mu, u] : a.terms())
        for (const auto& [nu, w] : b.terms()) {
            if (mu.order(vs) + nu.order(vs) > a.trunc()) continue;
            auto sign = mono_merge(vs, mu, nu, merged);
            if (!sign) continue;
            out.add_term_scaled(merged, Rat(*sign) * u[0], w);
        }
    return out;
}

Series scalar_mul(const Series& s, const Series& a) {
    require_compatible(s, a);
    if (!same_space(s.space(), scalar_space()))
        throw std::invalid_argument("scalar_mul: left factor must be scalar");
    Series out(a.vars(), a.space(), a.trunc());
    const VarSet& vs = *a.vars();
    const GradedSpace& sp = *a.space();
    Mono merged;
    for (const auto& [mu, u] : s.terms()) {
        int pmu = mu.parity(vs);
        for (const auto& [nu, w] : a.terms()) {
            if (mu.order(vs) + nu.order(vs) > a.trunc()) continue;
            auto sign = mono_merge(vs, mu, nu, merged);
            if (!sign) continue;
            QVec v(sp.dim(), Rat(0));
            bool nz = false;
            for (int k = 0; k < sp.dim(); ++k) {
                if (is_zero(w[k])) continue;
                int s2 = (pmu && sp.parity(k)) ? -1 : 1;
                v[k] = Rat(*sign * s2) * u[0] * w[k];
                nz = true;
            }
            if (nz) out.add_term(merged, v);
        }
    }
    return out;
}

Series apply_linear(const LinearMap& f, const Series& a) {
    if (!same_space(f.src(), a.space())) throw std::invalid_argument("apply_linear: space mismatch");
    Series out(a.vars(), f.dst(), a.trunc());
    for (const auto& [mu, v] : a.terms()) out.add_term(mu, f.apply(v));
    return out;
}

Series apply_bilinear(const Bilinear& B, const Series& a, const Series& b) {
    require_compatible(a, b);
    if (!same_space(B.left(), a.space()) || !same_space(B.right(), b.space()))
        throw std::invalid_argument("apply_bilinear: space mismatch");
    Series out(a.vars(), B.out(), a.trunc());
    const VarSet& vs = *a.vars();
    const GradedSpace& rsp = *b.space();
    Mono merged;
    for (const auto& [mu, u] : a.terms()) {
        int pmu = mu.parity(vs);
        for (const auto& [nu, w] : b.terms()) {
            if (mu.order(vs) + nu.order(vs) > a.trunc()) continue;
            auto sign = mono_merge(vs, mu, nu, merged);
            if (!sign) continue;
            QVec acc(B.out()->dim(), Rat(0));
            bool nz = false;
            for (int j = 0; j < rsp.dim(); ++j) {
                if (is_zero(w[j])) continue;
                int s2 = (pmu && rsp.parity(j)) ? -*sign : *sign;
                for (int i = 0; i < int(u.size()); ++i) {
                    if (is_zero(u[i])) continue;
                    const QVec& t = B.at(i, j);
                    Rat c = Rat(s2) * u[i] * w[j];
                    for (size_t k = 0; k < t.size(); ++k)
                        if (!is_zero(t[k])) { acc[k] += c * t[k]; nz = true; }
                }
            }
            if (nz) out.add_term(merged, acc);
        }
    }
    return out;
}

Series derivative(const Series& a, int var) {
    const VarSet& vs = *a.vars();
    const GradedSpace& sp = *a.space();
    bool vodd = vs.var(var).odd();
    Series out(a.vars(), a.space(), a.trunc());
    for (const auto& [mu, v] : a.terms()) {
        if (mu.e[var] == 0) continue;
        // left derivative on the monomial: bring t_var to the front
        int cross = 0;
        if (vodd)
            for (int j = 0; j < var; ++j)
                if (mu.e[j] && vs.var(j).odd()) cross += mu.e[j];
        int msign = (cross & 1) ? -1 : 1;
        Mono dm = mu;
        dm.e[var] -= 1;
        QVec w(sp.dim(), Rat(0));
        for (int k = 0; k < sp.dim(); ++k) {
            if (qp::is_zero(v[k])) continue;
            // the derivation crosses the coefficient slot first
            int s2 = (vodd && sp.parity(k)) ? -1 : 1;
            w[k] = Rat(msign * s2 * mu.e[var]) * v[k];
        }
        out.add_term(dm, w);
    }
    return out;
}

Series substitute(const Series& a, const std::vector<Series>& assignment) {
    const VarSet& vs = *a.vars();
    if (int(assignment.size()) != vs.size())
        throw std::invalid_argument("substitute: assignment size mismatch");
    VarSetPtr tvars;
    int ttrunc = -1;
    for (const auto& s : assignment) {
        if (!same_space(s.space(), scalar_space()))
            throw std::invalid_argument("substitute: assignments must be scalar series");
        if (!tvars) { tvars = s.vars(); ttrunc = s.trunc(); }
        else if (!same_vars(tvars, s.vars()) || ttrunc != s.trunc())
            throw std::invalid_argument("substitute: assignments over mixed rings");
    }
    for (int i = 0; i < vs.size(); ++i) {
        const Series& s = assignment[i];
        for (const auto& [nu, c] : s.terms())
            if (nu.parity(*s.vars()) != vs.var(i).parity())
                throw std::invalid_argument("substitute: parity mismatch for variable " + vs.var(i).name);
    }
    Series out(tvars, a.space(), ttrunc);
    for (const auto& [mu, v] : a.terms()) {
        Series p = series_const(tvars, ttrunc, Rat(1));
        for (int i = 0; i < vs.size(); ++i)
            for (int k = 0; k < mu.e[i]; ++k) p = series_mul(p, assignment[i]);
        // the monomial sat to the right of the coefficient and stays there
        for (const auto& [nu, c] : p.terms()) out.add_term_scaled(nu, c[0], v);
    }
    return out;
}

Series extend_vars(const Series& a, const VarSetPtr& bigger) {
    const VarSet& small = *a.vars();
    std::vector<int> pos(small.size());
    for (int i = 0; i < small.size(); ++i) {
        int j = bigger->index_of(small.var(i).name);
        if (!(bigger->var(j) == small.var(i)))
            throw std::invalid_argument("extend_vars: variable attribute mismatch: " + small.var(i).name);
        pos[i] = j;
    }
    Series out(bigger, a.space(), a.trunc());
    for (const auto& [mu, v] : a.terms()) {
        Mono nm = Mono::one(*bigger);
        for (int i = 0; i < small.size(); ++i) nm.e[pos[i]] = mu.e[i];
        out.add_term(nm, v);
    }
    return out;
}

CoordinateMap compose_inverse(const CoordinateMap& f) {
    const int n = f.dst->size();
    if (f.src->size() != n)
        throw std::invalid_argument("compose_inverse: dimension mismatch");
    int N = -1;
    for (const auto& s : f.comp) {
        if (N < 0) N = s.trunc();
        if (!vec_is_zero(s.constant_term()))
            throw std::domain_error("compose_inverse: nonzero constant term");
    }
    // linear part L[j][a] = coefficient of t_a in f_j
    QMat L(n, n);
    for (int j = 0; j < n; ++j)
        for (int a = 0; a < n; ++a) {
            L.at(j, a) = f.comp[j].coeff(Mono::single(*f.src, a))[0];
            if (!is_zero(L.at(j, a)) && f.dst->var(j).parity() != f.src->var(a).parity())
                throw std::domain_error("compose_inverse: parity-mixing linear part");
        }
    auto Linv = inverse(L);
    if (!Linv) throw std::domain_error("compose_inverse: singular linear part");

    // g = Linv s - Linv f_{>=2}(g), iterated to the truncation order
    std::vector<Series> g(n, series_zero(f.dst, scalar_space(), N));
    for (int a = 0; a < n; ++a)
        for (int j = 0; j < n; ++j)
            if (!is_zero(Linv->at(a, j)))
                g[a] = add(g[a], scale(Linv->at(a, j), series_var(f.dst, N, j)));
    std::vector<Series> higher(n, series_zero(f.src, scalar_space(), N));
    for (int j = 0; j < n; ++j) {
        Series h = f.comp[j];
        for (int a = 0; a < n; ++a) {
            Mono m = Mono::single(*f.src, a);
            QVec c = h.coeff(m);
            if (!is_zero(c[0])) h.add_term_scaled(m, Rat(-1), c);
        }
        higher[j] = h;
    }
    for (int pass = 0; pass < N; ++pass) {
        std::vector<Series> ng(n, series_zero(f.dst, scalar_space(), N));
        for (int a = 0; a < n; ++a) {
            Series acc = series_zero(f.dst, scalar_space(), N);
            for (int j = 0; j < n; ++j) {
                if (is_zero(Linv->at(a, j))) continue;
                Series sj = add(series_var(f.dst, N, j), negate(substitute(higher[j], g)));
                acc = add(acc, scale(Linv->at(a, j), sj));
            }
            ng[a] = std::move(acc);
        }
        if (ng == g) break;
        g = std::move(ng);
    }
    CoordinateMap inv{f.dst, f.src, g};

    // both compositions must be the identity exactly
    for (int j = 0; j < n; ++j) {
        Series fg = substitute(f.comp[j], g);
        if (!(fg == series_var(f.dst, N, j)))
            throw std::domain_error("compose_inverse: f(g) != id");
    }
    for (int a = 0; a < n; ++a) {
        Series gf = substitute(g[a], f.comp);
        if (!(gf == series_var(f.src, N, a)))
            throw std::domain_error("compose_inverse: g(f) != id");
    }
    return inv;
}

Series apply_coordinate_map(const CoordinateMap& f, const Series& a) {
    if (!same_vars(a.vars(), f.dst))
        throw std::invalid_argument("apply_coordinate_map: ring mismatch");
    return substitute(a, f.comp);
}

} // namespace qp
