#include "qp/semihodge.hpp"

#include <algorithm>

namespace qp {

namespace {

int par(int x) { return ((x % 2) + 2) % 2; }

/// Constant part (order-0 monomial) of a frame generator: halfstep -> vector.
std::map<int, QVec> constant_part(const HbarElement& g) {
    std::map<int, QVec> out;
    Mono one = Mono::one(*g.vars());
    for (const auto& [e, s] : g.coeffs()) {
        QVec v = s.coeff(one);
        if (!vec_is_zero(v)) out[e] = v;
    }
    return out;
}

/// Diagonal structure: generator j has constant part lambda_j e_{k_j} at a
/// single halfstep, with j -> k_j a bijection.
struct DiagInfo {
    bool ok = false;
    std::vector<int> comp, step;
    std::vector<Rat> scale;
};

DiagInfo detect_diagonal(const std::vector<HbarElement>& gens, int dimH) {
    DiagInfo d;
    d.comp.resize(gens.size());
    d.step.resize(gens.size());
    d.scale.resize(gens.size());
    std::vector<bool> used(dimH, false);
    for (size_t j = 0; j < gens.size(); ++j) {
        auto cp = constant_part(gens[j]);
        if (cp.size() != 1) return d;
        int nz = -1;
        const auto& [e, v] = *cp.begin();
        for (int k = 0; k < int(v.size()); ++k) {
            if (is_zero(v[k])) continue;
            if (nz >= 0) return d;
            nz = k;
        }
        if (nz < 0 || used[nz]) return d;
        used[nz] = true;
        d.comp[j] = nz;
        d.step[j] = e;
        d.scale[j] = v[nz];
    }
    d.ok = int(gens.size()) == dimH;
    return d;
}

/// Monomials of the remainder at a given filtration order, deterministic.
std::vector<Mono> monomials_at_order(const HbarElement& r, int order) {
    std::vector<Mono> out;
    for (const auto& [e, s] : r.coeffs())
        for (const auto& [mu, v] : s.terms())
            if (mu.order(*r.vars()) == order &&
                std::find(out.begin(), out.end(), mu) == out.end())
                out.push_back(mu);
    std::sort(out.begin(), out.end());
    return out;
}

std::map<int, QVec> monomial_slice(const HbarElement& r, const Mono& mu) {
    std::map<int, QVec> out;
    for (const auto& [e, s] : r.coeffs()) {
        QVec v = s.coeff(mu);
        if (!vec_is_zero(v)) out[e] = v;
    }
    return out;
}

} // namespace

SemiInfiniteFrame subspace_from_filtration(const Filtration& F, VarSetPtr vars, int N) {
    if (F.increasing)
        throw std::invalid_argument("subspace_from_filtration expects a decreasing filtration");
    const SpacePtr& H = F.space;
    SemiInfiniteFrame frame;
    frame.provenance = SemiInfiniteFrame::Provenance::Filtration;
    // walk levels from the deepest down, extending a chosen basis
    std::vector<QVec> chosen;
    auto independent = [&](const QVec& v) {
        QMat t(H->dim(), int(chosen.size()) + 1);
        for (size_t j = 0; j < chosen.size(); ++j)
            for (int i = 0; i < H->dim(); ++i) t.at(i, int(j)) = chosen[j][i];
        for (int i = 0; i < H->dim(); ++i) t.at(i, int(chosen.size())) = v[i];
        return rank(t) == int(chosen.size()) + 1;
    };
    std::vector<int> keys;
    for (int p = 0; p < 2; ++p)
        for (int k : F.keys(p)) keys.push_back(k);
    std::sort(keys.begin(), keys.end(), std::greater<int>());
    for (int k : keys)
        for (const auto& v : F.at(k))
            if (independent(v)) {
                chosen.push_back(v);
                HbarElement g(vars, H, N);
                g.add(-k, series_vector(vars, H, N, v));
                frame.gens.push_back(std::move(g));
            }
    if (int(frame.gens.size()) != H->dim())
        throw std::invalid_argument("subspace_from_filtration: filtration does not exhaust H");
    return frame;
}

bool filtration_span_contains(const Filtration& f, const HbarElement& v) {
    for (const auto& [e, s] : v.coeffs())
        for (const auto& [mu, vec] : s.terms())
            if (!f.contains(-e, vec)) return false;
    return true;
}

SpanSolveResult span_solve(const SemiInfiniteFrame& frame, const HbarElement& target,
                           const Window& w) {
    SpanSolveResult res;
    const int m = int(frame.gens.size());
    if (m == 0) throw std::invalid_argument("span_solve: empty frame");
    const SpacePtr H = frame.gens[0].space();
    const VarSetPtr vars = frame.gens[0].vars();
    const int N = frame.gens[0].trunc();
    if (!same_space(target.space(), H) || !same_vars(target.vars(), vars))
        throw std::invalid_argument("span_solve: target incompatible with frame");

    DiagInfo diag = detect_diagonal(frame.gens, H->dim());
    std::vector<HbarElement> coeffs(m, hbar_zero(vars, scalar_space(), N));
    HbarElement R = target;

    std::optional<Factorization> fact;
    std::vector<std::pair<int, int>> colix;  // (gen j, halfstep f)
    std::vector<int> eqsteps;
    if (!diag.ok) {
        // flattened solve against the constant generator parts
        int flo = 0, fhi = 0, elo = 0, ehi = 0;
        bool first = true;
        std::vector<std::map<int, QVec>> cp(m);
        for (int j = 0; j < m; ++j) {
            cp[j] = constant_part(frame.gens[j]);
            if (cp[j].empty()) throw std::invalid_argument("span_solve: degenerate generator");
        }
        int tlo = target.is_zero() ? 0 : target.min_halfstep();
        int thi = target.is_zero() ? 0 : target.max_halfstep();
        for (int j = 0; j < m; ++j) {
            int glo = cp[j].begin()->first, ghi = cp[j].rbegin()->first;
            int l = tlo - ghi - 2 * N, h = thi - glo + 2 * N;
            if (first || l < flo) flo = l;
            if (first || h > fhi) fhi = h;
            first = false;
        }
        flo = std::max(flo, -w.max_abs);
        fhi = std::min(fhi, w.max_abs);
        for (int j = 0; j < m; ++j)
            for (int f = flo; f <= fhi; ++f)
                if (par(f) == 0) colix.emplace_back(j, f);
        elo = std::max(tlo - 2 * N, -w.max_abs);
        ehi = std::min(thi + 2 * N, w.max_abs);
        for (int j = 0; j < m; ++j) {
            elo = std::min(elo, cp[j].begin()->first + flo);
            ehi = std::max(ehi, cp[j].rbegin()->first + fhi);
        }
        elo = std::max(elo, -w.max_abs);
        ehi = std::min(ehi, w.max_abs);
        for (int e = elo; e <= ehi; ++e) eqsteps.push_back(e);
        QMat M(int(eqsteps.size()) * H->dim(), int(colix.size()));
        for (size_t c = 0; c < colix.size(); ++c) {
            auto [j, f] = colix[c];
            for (const auto& [e, v] : cp[j]) {
                int row = int(std::lower_bound(eqsteps.begin(), eqsteps.end(), e + f) -
                              eqsteps.begin());
                if (row >= int(eqsteps.size()) || eqsteps[row] != e + f) continue;
                for (int i = 0; i < H->dim(); ++i) M.at(row * H->dim() + i, int(c)) = v[i];
            }
        }
        fact.emplace(M);
    }

    for (int order = 0; order <= N; ++order) {
        for (const Mono& mu : monomials_at_order(R, order)) {
            auto slice = monomial_slice(R, mu);
            if (slice.empty()) continue;
            std::vector<std::pair<int, Series>> increments;  // per generator
            if (diag.ok) {
                std::vector<HbarElement> xs(m, hbar_zero(vars, scalar_space(), N));
                bool bad = false;
                for (const auto& [e, v] : slice) {
                    for (int k = 0; k < H->dim() && !bad; ++k) {
                        if (is_zero(v[k])) continue;
                        // find the generator owning component k
                        int j = -1;
                        for (int jj = 0; jj < m; ++jj)
                            if (diag.comp[jj] == k) { j = jj; break; }
                        int f = e - diag.step[j];
                        if (par(f) != 0) { bad = true; break; }
                        w.check(f);
                        Series inc = series_zero(vars, scalar_space(), N);
                        inc.add_term(mu, QVec{v[k] / diag.scale[j]});
                        xs[j].add(f, inc);
                    }
                }
                if (bad) {
                    res.why = "target sits on an odd relative half-power";
                    res.residual = R;
                    return res;
                }
                for (int j = 0; j < m; ++j) {
                    if (xs[j].is_zero()) continue;
                    coeffs[j] = add(coeffs[j], xs[j]);
                    R = sub(R, scalar_mul(xs[j], frame.gens[j], w));
                }
            } else {
                QVec rhs(eqsteps.size() * size_t(H->dim()), Rat(0));
                for (const auto& [e, v] : slice) {
                    auto it = std::lower_bound(eqsteps.begin(), eqsteps.end(), e);
                    if (it == eqsteps.end() || *it != e) {
                        res.why = "target outside the solvable hbar range";
                        res.residual = R;
                        return res;
                    }
                    int row = int(it - eqsteps.begin());
                    for (int i = 0; i < H->dim(); ++i) rhs[row * H->dim() + i] = v[i];
                }
                auto x = fact->solve(rhs);
                if (!x) {
                    res.why = "monomial system inconsistent";
                    res.residual = R;
                    return res;
                }
                std::vector<HbarElement> xs(m, hbar_zero(vars, scalar_space(), N));
                for (size_t c = 0; c < colix.size(); ++c) {
                    if (is_zero((*x)[c])) continue;
                    auto [j, f] = colix[c];
                    Series inc = series_zero(vars, scalar_space(), N);
                    inc.add_term(mu, QVec{(*x)[c]});
                    xs[j].add(f, inc);
                }
                for (int j = 0; j < m; ++j) {
                    if (xs[j].is_zero()) continue;
                    coeffs[j] = add(coeffs[j], xs[j]);
                    R = sub(R, scalar_mul(xs[j], frame.gens[j], w));
                }
            }
        }
    }
    res.coeffs = std::move(coeffs);
    res.residual = R;
    res.in_module = R.is_zero();
    if (!res.in_module && res.why.empty()) res.why = "nonzero residual";
    res.in_plus_span = res.in_module;
    for (const auto& c : res.coeffs)
        if (!c.is_zero() && c.min_halfstep() < 0) res.in_plus_span = false;
    return res;
}

SemiInfiniteFrame l_frame(const XiModule& m, const DGLA& L, const Cohomology& coh,
                          const Series& gamma, const Window& w) {
    Series res = mc_residual(L, gamma);
    if (!res.is_zero()) throw std::invalid_argument("l_frame: gamma is not Maurer-Cartan");
    const VarSetPtr vars = gamma.vars();
    const int N = gamma.trunc();
    const int nh = m.h->dim();
    const int jmax = N + 2;  // hbar-degree bound for the lifts

    // flattened operator for (d1 + hbar d2) u = r on polynomial hbar-columns:
    // unknowns u_{j}, equations rows at hbar^0..hbar^{jmax+1}
    QMat D((jmax + 2) * nh, (jmax + 1) * nh);
    for (int j = 0; j <= jmax; ++j)
        for (int c = 0; c < nh; ++c)
            for (int r = 0; r < nh; ++r) {
                if (!is_zero(m.d1.matrix().at(r, c))) D.at(j * nh + r, j * nh + c) = m.d1.matrix().at(r, c);
                if (!is_zero(m.d2.matrix().at(r, c)))
                    D.at((j + 1) * nh + r, j * nh + c) = m.d2.matrix().at(r, c);
            }
    Factorization dfact(D);

    SemiInfiniteFrame frame;
    frame.provenance = SemiInfiniteFrame::Provenance::Deformation;
    for (int k = 0; k < coh.dim(); ++k) {
        // s = rep + u, (d1 + hbar d2 + L_gamma) s = 0, solved order by order
        HbarElement s = hbar_of_series(series_vector(vars, m.h, N, coh.reps()[k]), 0);
        for (int order = 1; order <= N; ++order) {
            HbarElement rhs = add(apply_linear(m.d1, s), lie_action(m, gamma, s));
            rhs = add(rhs, shift_halfstep(apply_linear(m.d2, s), 2, w));
            rhs = negate(rhs);
            for (const Mono& mu : monomials_at_order(rhs, order)) {
                auto slice = monomial_slice(rhs, mu);
                QVec b((jmax + 2) * nh, Rat(0));
                for (const auto& [e, v] : slice) {
                    if (e < 0 || par(e) != 0 || e / 2 > jmax + 1)
                        throw DegenerationError("l_frame: lift right-hand side outside hbar bounds");
                    for (int i = 0; i < nh; ++i) b[(e / 2) * nh + i] = v[i];
                }
                auto x = dfact.solve(b);
                if (!x)
                    throw DegenerationError("l_frame: no lift at order " + std::to_string(order) +
                                            " (freeness fails)");
                for (int j = 0; j <= jmax; ++j) {
                    QVec u(nh, Rat(0));
                    bool nz = false;
                    for (int i = 0; i < nh; ++i) {
                        u[i] = (*x)[j * nh + i];
                        if (!is_zero(u[i])) nz = true;
                    }
                    if (!nz) continue;
                    Series term = series_zero(vars, m.h, N);
                    term.add_term(mu, u);
                    s.add(2 * j, term);
                }
            }
        }
        // certify the lift before transporting it
        {
            HbarElement check = add(apply_linear(m.d1, s), lie_action(m, gamma, s));
            check = add(check, shift_halfstep(apply_linear(m.d2, s), 2, w));
            if (!check.is_zero())
                throw DegenerationError("l_frame: lift is not twisted-closed");
        }
        HbarElement chain = apply_l(exp_contract(m, gamma, s, -2, w), w);
        frame.gens.push_back(coh.reduce(chain));
        frame.chains.push_back(std::move(chain));
        frame.lifts.push_back(std::move(s));
    }
    return frame;
}

CheckReport span_equality_check(const SemiInfiniteFrame& a, const SemiInfiniteFrame& b,
                                const Window& w) {
    CheckReport rep;
    bool fwd = true, bwd = true;
    std::string w1, w2;
    for (size_t k = 0; k < b.gens.size(); ++k) {
        SpanSolveResult r = span_solve(a, b.gens[k], w);
        if (!r.in_plus_span) {
            fwd = false;
            w1 = "generator " + std::to_string(k) + (r.why.empty() ? "" : (": " + r.why));
            break;
        }
    }
    for (size_t k = 0; k < a.gens.size(); ++k) {
        SpanSolveResult r = span_solve(b, a.gens[k], w);
        if (!r.in_plus_span) {
            bwd = false;
            w2 = "generator " + std::to_string(k) + (r.why.empty() ? "" : (": " + r.why));
            break;
        }
    }
    rep.add("second frame lies in the first span", fwd, w1);
    rep.add("first frame lies in the second span", bwd, w2);
    return rep;
}

CheckReport gauge_invariance_check(const XiModule& m, const DGLA& L, const Cohomology& coh,
                                   const Series& gamma, const Series& alpha, GaugeMode mode,
                                   const Window& w) {
    Series acted = gauge_act(L, gamma, alpha, mode);
    Series base = gamma;
    if (mode == GaugeMode::Infinitesimal) base = extend_vars(gamma, acted.vars());
    SemiInfiniteFrame fa = l_frame(m, L, coh, base, w);
    SemiInfiniteFrame fb = l_frame(m, L, coh, acted, w);
    return span_equality_check(fa, fb, w);
}

NormalizedElement normalize_against(const SemiInfiniteFrame& frame, const Filtration& W,
                                    const QVec& base_class, int base_halfstep, const Window& w) {
    const int m = int(frame.gens.size());
    const SpacePtr H = frame.gens[0].space();
    const VarSetPtr vars = frame.gens[0].vars();
    const int N = frame.gens[0].trunc();
    if (!W.increasing) throw std::invalid_argument("normalize_against: W must be increasing");

    // unknown lambda^k with hbar support [0, fmax], equations: annihilator of
    // W_{<= -e} applied to the hbar^{e/2} coefficient of (sum lambda G - base)
    std::vector<std::map<int, QVec>> cp(m);
    int glo = 0, ghi = 0;
    for (int j = 0; j < m; ++j) {
        cp[j] = constant_part(frame.gens[j]);
        if (cp[j].empty()) throw std::invalid_argument("normalize_against: degenerate generator");
        glo = (j == 0) ? cp[j].begin()->first : std::min(glo, cp[j].begin()->first);
        ghi = (j == 0) ? cp[j].rbegin()->first : std::max(ghi, cp[j].rbegin()->first);
    }
    int fmax = (H->max_charge() - H->min_charge()) + 2 * N + 2;
    int elo = std::max(std::min(base_halfstep, glo - 2 * N), -w.max_abs);
    int ehi = std::min(std::max(base_halfstep, ghi + fmax), w.max_abs);

    // annihilator functionals of W_{<= -e} per halfstep
    std::map<int, QMat> ann;
    for (int e = elo; e <= ehi; ++e) {
        auto span = W.at(-e);
        QMat sp(H->dim(), int(span.size()));
        for (size_t j = 0; j < span.size(); ++j)
            for (int i = 0; i < H->dim(); ++i) sp.at(i, int(j)) = span[j][i];
        auto ker = kernel_basis(mat_transpose(sp));
        QMat rows(int(ker.size()), H->dim());
        for (size_t r = 0; r < ker.size(); ++r)
            for (int i = 0; i < H->dim(); ++i) rows.at(int(r), i) = ker[r][i];
        ann[e] = rows;
    }

    std::vector<std::pair<int, int>> colix;
    for (int j = 0; j < m; ++j)
        for (int f = 0; f <= fmax; f += 2) colix.emplace_back(j, f);
    int total_rows = 0;
    std::map<int, int> row_offset;
    for (int e = elo; e <= ehi; ++e) {
        row_offset[e] = total_rows;
        total_rows += ann[e].rows;
    }
    QMat M(total_rows, int(colix.size()));
    for (size_t c = 0; c < colix.size(); ++c) {
        auto [j, f] = colix[c];
        for (const auto& [e, v] : cp[j]) {
            int ee = e + f;
            if (ee < elo || ee > ehi) continue;
            const QMat& q = ann[ee];
            for (int r = 0; r < q.rows; ++r) {
                Rat acc(0);
                for (int i = 0; i < H->dim(); ++i)
                    if (!is_zero(q.at(r, i)) && !is_zero(v[i])) acc += q.at(r, i) * v[i];
                if (!is_zero(acc)) M.at(row_offset[ee] + r, int(c)) = acc;
            }
        }
    }
    Factorization fact(M);
    if (!fact.kernel().empty())
        throw std::domain_error("normalize_against: intersection not unique (transversality)");

    HbarElement base(vars, H, N);
    base.add(base_halfstep, series_vector(vars, H, N, base_class));
    HbarElement R = base;
    std::vector<HbarElement> lambdas(m, hbar_zero(vars, scalar_space(), N));
    for (int order = 0; order <= N; ++order) {
        for (const Mono& mu : monomials_at_order(R, order)) {
            auto slice = monomial_slice(R, mu);
            QVec rhs(total_rows, Rat(0));
            for (const auto& [e, v] : slice) {
                if (e < elo || e > ehi)
                    throw std::domain_error("normalize_against: element escapes the hbar window");
                const QMat& q = ann[e];
                for (int r = 0; r < q.rows; ++r) {
                    Rat acc(0);
                    for (int i = 0; i < H->dim(); ++i)
                        if (!is_zero(q.at(r, i)) && !is_zero(v[i])) acc += q.at(r, i) * v[i];
                    rhs[row_offset[e] + r] = acc;
                }
            }
            if (vec_is_zero(rhs)) continue;
            auto x = fact.solve(rhs);
            if (!x) throw std::domain_error("normalize_against: empty intersection");
            std::vector<HbarElement> xs(m, hbar_zero(vars, scalar_space(), N));
            for (size_t c = 0; c < colix.size(); ++c) {
                if (is_zero((*x)[c])) continue;
                auto [j, f] = colix[c];
                Series inc = series_zero(vars, scalar_space(), N);
                inc.add_term(mu, QVec{(*x)[c]});
                xs[j].add(f, inc);
            }
            for (int j = 0; j < m; ++j) {
                if (xs[j].is_zero()) continue;
                lambdas[j] = add(lambdas[j], xs[j]);
                R = sub(R, scalar_mul(xs[j], frame.gens[j], w));
            }
        }
    }
    // R = base - psi; the normalization condition says psi - base lies in the
    // L_W membership window, which the per-monomial equations enforced
    NormalizedElement out{sub(base, R), lambdas};
    for (const auto& [e, s] : out.element.coeffs()) {
        (void)e;
        (void)s;
    }
    return out;
}

NormalizedElement psi_normalize(const SemiInfiniteFrame& frame, const Filtration& W,
                                const QVec& omega0_class, int n, const Window& w) {
    return normalize_against(frame, W, omega0_class, -n, w);
}

FlatCoordinates flat_coordinates(const HbarElement& psi, const QVec& omega0_class, int n,
                                 const Filtration& W,
                                 const std::vector<std::pair<int, QVec>>& grw, int omega_degree) {
    const SpacePtr H = psi.space();
    const VarSetPtr vars = psi.vars();
    const int N = psi.trunc();
    HbarElement diff = psi;
    Series base = series_vector(vars, H, N, omega0_class);
    diff.add(-n, negate(base));

    // per level: expansion of the coefficient against [grw-at-level | lower W]
    std::vector<Series> comps;
    std::vector<Variable> fvars;
    for (size_t j = 0; j < grw.size(); ++j) {
        const auto& [lvl, wj] = grw[j];
        std::vector<QVec> cols;
        std::vector<size_t> grw_cols;
        for (size_t j2 = 0; j2 < grw.size(); ++j2)
            if (grw[j2].first == lvl) {
                if (j2 == j) grw_cols.push_back(cols.size());
                cols.push_back(grw[j2].second);
            }
        size_t own = grw_cols.at(0);
        for (const auto& v : W.at(lvl - 2)) cols.push_back(v);
        QMat M(H->dim(), int(cols.size()));
        for (size_t c = 0; c < cols.size(); ++c)
            for (int i = 0; i < H->dim(); ++i) M.at(i, int(c)) = cols[c][i];
        Factorization fact(M);
        Series t_series = series_zero(vars, scalar_space(), N);
        Series slice = diff.coeff(-lvl);
        for (const auto& [mu, v] : slice.terms()) {
            auto x = fact.solve(v);
            if (!x)
                throw std::domain_error(
                    "flat_coordinates: coefficient escapes its filtration level");
            t_series.add_term(mu, QVec{(*x)[own]});
        }
        comps.push_back(t_series);
        fvars.push_back(Variable{"s" + std::to_string(j),
                                 omega_degree - [&] {
                                     // degree of the Gr W vector (homogeneous)
                                     for (int i = 0; i < H->dim(); ++i)
                                         if (!is_zero(wj[i])) return H->degree(i);
                                     return 0;
                                 }(),
                                 0, 1});
    }
    auto flat = std::make_shared<VarSet>(fvars);
    CoordinateMap forward{vars, flat, comps};

    QMat lin(int(grw.size()), vars->size());
    for (size_t j = 0; j < grw.size(); ++j)
        for (int a = 0; a < vars->size(); ++a)
            lin.at(int(j), a) = comps[j].coeff(Mono::single(*vars, a))[0];
    FlatCoordinates out{forward, compose_inverse(forward), lin};
    return out;
}

StructureConstants structure_constants(const HbarElement& psi_flat, const Window& w) {
    const VarSetPtr vars = psi_flat.vars();
    const SpacePtr H = psi_flat.space();
    const int N = psi_flat.trunc();
    const int m = vars->size();

    std::vector<HbarElement> V;
    for (int c = 0; c < m; ++c) V.push_back(derivative(psi_flat, c));
    std::vector<std::map<int, QVec>> vc0(m), vc0s(m);
    int elo = 0, ehi = 0;
    bool first = true;
    for (int c = 0; c < m; ++c) {
        vc0[c] = constant_part(V[c]);
        for (const auto& [e, v] : vc0[c]) {
            vc0s[c][e - 2] = v;  // hbar^{-1} column
            if (first || e - 2 < elo) elo = e - 2;
            if (first || e > ehi) ehi = e;
            first = false;
        }
    }
    elo -= 2 * N;
    ehi += 2 * N;
    elo = std::max(elo, -w.max_abs);
    ehi = std::min(ehi, w.max_abs);
    std::vector<int> eqsteps;
    for (int e = elo; e <= ehi; ++e) eqsteps.push_back(e);

    // columns: hbar^{-1} V_c (A^{(-1)} slot) then V_c (A^{(0)} slot)
    QMat M(int(eqsteps.size()) * H->dim(), 2 * m);
    for (int c = 0; c < m; ++c) {
        for (const auto& [e, v] : vc0s[c]) {
            int row = e - elo;
            if (row < 0 || e > ehi) continue;
            for (int i = 0; i < H->dim(); ++i) M.at(row * H->dim() + i, c) = v[i];
        }
        for (const auto& [e, v] : vc0[c]) {
            if (e < elo || e > ehi) continue;
            for (int i = 0; i < H->dim(); ++i) M.at((e - elo) * H->dim() + i, m + c) = v[i];
        }
    }
    Factorization fact(M);

    StructureConstants out;
    out.A.assign(m, std::vector<std::vector<Series>>(
                        m, std::vector<Series>(m, series_zero(vars, scalar_space(), N))));
    bool residual_zero = true, a0_zero = true, unique = fact.kernel().empty();
    std::string wr, w0;

    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            HbarElement D = derivative(derivative(psi_flat, b), a);
            HbarElement R = D;
            std::vector<Series> A1(m, series_zero(vars, scalar_space(), N));
            std::vector<Series> A0(m, series_zero(vars, scalar_space(), N));
            for (int order = 0; order <= N; ++order) {
                for (const Mono& mu : monomials_at_order(R, order)) {
                    auto slice = monomial_slice(R, mu);
                    QVec rhs(eqsteps.size() * size_t(H->dim()), Rat(0));
                    bool in_range = true;
                    for (const auto& [e, v] : slice) {
                        if (e < elo || e > ehi) { in_range = false; break; }
                        for (int i = 0; i < H->dim(); ++i) rhs[(e - elo) * H->dim() + i] = v[i];
                    }
                    auto x = in_range ? fact.solve(rhs) : std::nullopt;
                    if (!x) {
                        residual_zero = false;
                        if (wr.empty())
                            wr = "pair (" + vars->var(a).name + ", " + vars->var(b).name + ")";
                        goto next_pair;
                    }
                    for (int c = 0; c < m; ++c) {
                        if (!is_zero((*x)[c])) {
                            A1[c].add_term(mu, QVec{(*x)[c]});
                            Series inc = series_zero(vars, scalar_space(), N);
                            inc.add_term(mu, QVec{(*x)[c]});
                            R = sub(R, scalar_series_mul(inc, shift_halfstep(V[c], -2, w)));
                        }
                        if (!is_zero((*x)[m + c])) {
                            A0[c].add_term(mu, QVec{(*x)[m + c]});
                            Series inc = series_zero(vars, scalar_space(), N);
                            inc.add_term(mu, QVec{(*x)[m + c]});
                            R = sub(R, scalar_series_mul(inc, V[c]));
                        }
                    }
                }
            }
            if (!R.is_zero()) {
                residual_zero = false;
                if (wr.empty()) wr = "pair (" + vars->var(a).name + ", " + vars->var(b).name + ")";
            }
            for (int c = 0; c < m; ++c) {
                if (!A0[c].is_zero()) {
                    a0_zero = false;
                    if (w0.empty())
                        w0 = "A0[" + vars->var(a).name + "][" + vars->var(b).name + "][" +
                             vars->var(c).name + "]";
                }
                out.A[a][b][c] = A1[c];
            }
        next_pair:;
        }

    out.checks.add("second-derivative system has exact zero residual", residual_zero, wr);
    out.checks.add("hbar^0 structure term vanishes identically", a0_zero, w0);
    out.checks.add("structure system is determined (zero kernel)", unique);

    // graded symmetry A_ab = (-1)^{|a||b|} A_ba
    bool sym = true;
    std::string ws;
    for (int a = 0; a < m && sym; ++a)
        for (int b = 0; b < m && sym; ++b)
            for (int c = 0; c < m && sym; ++c) {
                int sgn = (vars->var(a).odd() && vars->var(b).odd()) ? -1 : 1;
                if (!(out.A[a][b][c] == scale(Rat(sgn), out.A[b][a][c]))) {
                    sym = false;
                    ws = "triple (" + std::to_string(a) + "," + std::to_string(b) + "," +
                         std::to_string(c) + ")";
                }
            }
    out.checks.add("structure constants graded-symmetric", sym, ws);
    return out;
}

CheckReport griffiths_residual(const XiModule& m, const Cohomology& coh,
                               const SemiInfiniteFrame& frame, const Series& gamma,
                               const Window& w) {
    CheckReport rep;
    if (frame.chains.size() != frame.gens.size())
        throw std::invalid_argument("griffiths_residual: frame carries no chain data");
    bool ok = true;
    std::string witness;
    for (int v = 0; v < gamma.vars()->size() && ok; ++v) {
        for (size_t k = 0; k < frame.chains.size() && ok; ++k) {
            HbarElement nab = gauss_manin_derivative(m, gamma, v, frame.chains[k], w);
            HbarElement target = coh.reduce(shift_halfstep(nab, 2, w));
            SpanSolveResult r = span_solve(frame, target, w);
            if (!r.in_plus_span) {
                ok = false;
                witness = "direction " + gamma.vars()->var(v).name + ", generator " +
                          std::to_string(k);
            }
        }
    }
    rep.add("hbar grad generators lie in the frame span", ok, witness);
    return rep;
}

CheckReport cy_condition_check(const XiModule& m, const DGLA& L, const Cohomology& coh) {
    CheckReport rep;
    if (!L.hodge) {
        rep.add("symbol of the connection is an isomorphism at 0", false, "no harmonic data");
        return rep;
    }
    Factorization fp(L.hodge->P.matrix());
    std::vector<QVec> dirs;
    for (int c : fp.pivot_columns()) {
        QVec e(L.g->dim(), Rat(0));
        e[c] = 1;
        dirs.push_back(L.hodge->P.apply(e));
    }
    const int dimH = coh.dim();
    bool ok = int(dirs.size()) == dimH;
    std::string w = ok ? "" : "tangent dimension != dim H";
    if (ok) {
        QMat sym(dimH, dimH);
        for (size_t a = 0; a < dirs.size(); ++a) {
            QVec img = m.contraction.apply(dirs[a], m.omega0);
            QVec cls = coh.reduce(img);
            for (int i = 0; i < dimH; ++i) sym.at(i, int(a)) = cls[i];
        }
        int r = rank(sym);
        ok = (r == dimH);
        if (!ok) w = "symbol rank " + std::to_string(r) + " < " + std::to_string(dimH);
    }
    rep.add("symbol of the connection is an isomorphism at 0", ok, w);
    return rep;
}

CheckReport flatness_check(const StructureConstants& sc, const VarSetPtr& flat_vars) {
    CheckReport rep;
    const int m = flat_vars->size();
    auto odd = [&](int a) { return flat_vars->var(a).odd(); };

    bool closed = true;
    std::string wc;
    for (int ap = 0; ap < m && closed; ++ap)
        for (int a = 0; a < m && closed; ++a)
            for (int b = 0; b < m && closed; ++b)
                for (int c = 0; c < m && closed; ++c) {
                    int sgn = (odd(ap) && odd(a)) ? -1 : 1;
                    Series lhs = derivative(sc.A[a][b][c], ap);
                    Series rhs = scale(Rat(sgn), derivative(sc.A[ap][b][c], a));
                    if (!(lhs == rhs)) {
                        closed = false;
                        wc = "indices (" + std::to_string(ap) + "," + std::to_string(a) + "," +
                             std::to_string(b) + "," + std::to_string(c) + ")";
                    }
                }
    rep.add("dA = 0", closed, wc);

    bool assoc = true;
    std::string wa;
    for (int a = 0; a < m && assoc; ++a)
        for (int b = 0; b < m && assoc; ++b)
            for (int c = 0; c < m && assoc; ++c)
                for (int f = 0; f < m && assoc; ++f) {
                    Series lhs = series_zero(flat_vars, scalar_space(), sc.A[0][0][0].trunc());
                    Series rhs = lhs;
                    for (int e = 0; e < m; ++e) {
                        lhs = add(lhs, series_mul(sc.A[a][b][e], sc.A[e][c][f]));
                        int sgn = (odd(a) && ((odd(b) ^ odd(c) ^ odd(e)) != 0)) ? -1 : 1;
                        rhs = add(rhs, scale(Rat(sgn), series_mul(sc.A[b][c][e], sc.A[a][e][f])));
                    }
                    if (!(lhs == rhs)) {
                        assoc = false;
                        wa = "indices (" + std::to_string(a) + "," + std::to_string(b) + "," +
                             std::to_string(c) + "," + std::to_string(f) + ")";
                    }
                }
    rep.add("[A, A] = 0 (associativity)", assoc, wa);
    return rep;
}

CheckReport charge_balance_check(const StructureConstants& sc, const VarSetPtr& flat_vars,
                                 const std::vector<int>& index_weights) {
    CheckReport rep;
    const int m = flat_vars->size();
    bool ok = true;
    std::string w;
    for (int a = 0; a < m && ok; ++a)
        for (int b = 0; b < m && ok; ++b)
            for (int c = 0; c < m && ok; ++c)
                for (const auto& [mu, v] : sc.A[a][b][c].terms()) {
                    int lhs = 0;
                    for (int j = 0; j < m; ++j) lhs += mu.e[j] * index_weights[j];
                    int rhs = index_weights[c] + 2 - index_weights[a] - index_weights[b];
                    if (lhs != rhs) {
                        ok = false;
                        w = "A[" + std::to_string(a) + "][" + std::to_string(b) + "][" +
                            std::to_string(c) + "]";
                        break;
                    }
                }
    rep.add("structure constants balance the charge weights", ok, w);
    return rep;
}

EtaResult eta_and_wdvv(const HbarElement& psi_flat, const Bilinear& class_pairing,
                       const Filtration& W, const StructureConstants& sc, const Window& w) {
    const VarSetPtr vars = psi_flat.vars();
    const int N = psi_flat.trunc();
    const int m = vars->size();

    EtaResult out;
    out.checks.merge(isotropy_check(W, class_pairing));
    if (!out.checks.all_pass())
        throw std::domain_error("eta_and_wdvv: W is not isotropic for the pairing");

    std::vector<HbarElement> V;
    for (int c = 0; c < m; ++c) V.push_back(derivative(psi_flat, c));

    out.eta = QMat(m, m);
    bool constant = true, single = true;
    std::string wc, ws;
    std::optional<int> step;
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            HbarElement p = pair_twisted(class_pairing, V[a], V[b], w);
            if (p.is_zero()) continue;
            if (p.coeffs().size() != 1) {
                single = false;
                if (ws.empty()) ws = "pair (" + std::to_string(a) + "," + std::to_string(b) + ")";
                continue;
            }
            int e = p.coeffs().begin()->first;
            if (!step) step = e;
            if (*step != e) {
                single = false;
                if (ws.empty()) ws = "pair (" + std::to_string(a) + "," + std::to_string(b) + ")";
                continue;
            }
            const Series& s = p.coeffs().begin()->second;
            for (const auto& [mu, val] : s.terms()) {
                if (mu.is_one()) {
                    out.eta.at(a, b) = val[0];
                } else {
                    constant = false;
                    if (wc.empty())
                        wc = "pair (" + std::to_string(a) + "," + std::to_string(b) + ")";
                }
            }
        }
    out.halfstep = step.value_or(0);
    out.checks.add("tangent pairing sits at a single hbar power", single, ws);
    out.checks.add("metric constant in flat coordinates", constant, wc);

    bool symmetric = true;
    std::string wsym;
    for (int a = 0; a < m && symmetric; ++a)
        for (int b = 0; b < m && symmetric; ++b)
            if (!(out.eta.at(a, b) == out.eta.at(b, a))) {
                symmetric = false;
                wsym = "pair (" + std::to_string(a) + "," + std::to_string(b) + ")";
            }
    out.checks.add("metric symmetric", symmetric, wsym);
    out.checks.add("metric non-degenerate", rank(out.eta) == m);

    // lowered constants and their total graded symmetry
    out.c.assign(m, std::vector<std::vector<Series>>(
                        m, std::vector<Series>(m, series_zero(vars, scalar_space(), N))));
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            for (int c = 0; c < m; ++c) {
                Series acc = series_zero(vars, scalar_space(), N);
                for (int e = 0; e < m; ++e)
                    if (!is_zero(out.eta.at(e, c)))
                        acc = add(acc, scale(out.eta.at(e, c), sc.A[a][b][e]));
                out.c[a][b][c] = acc;
            }
    auto odd = [&](int a) { return vars->var(a).odd(); };
    bool csym = true;
    std::string wcs;
    for (int a = 0; a < m && csym; ++a)
        for (int b = 0; b < m && csym; ++b)
            for (int c = 0; c < m && csym; ++c) {
                int s1 = (odd(a) && odd(b)) ? -1 : 1;
                int s2 = (odd(b) && odd(c)) ? -1 : 1;
                if (!(out.c[a][b][c] == scale(Rat(s1), out.c[b][a][c])) ||
                    !(out.c[a][b][c] == scale(Rat(s2), out.c[a][c][b]))) {
                    csym = false;
                    wcs = "triple (" + std::to_string(a) + "," + std::to_string(b) + "," +
                          std::to_string(c) + ")";
                }
            }
    out.checks.add("lowered constants totally graded-symmetric", csym, wcs);

    // potential: solve d_a d_b d_c Phi = c_abc for Phi in the cube of the ideal
    {
        int phiN = N + 3;
        std::vector<Mono> unknowns;
        {
            // enumerate monomials of order 3..phiN by iterating exponents
            std::vector<int> caps(m);
            for (int i = 0; i < m; ++i) {
                int cap = vars->var(i).cap();
                caps[i] = cap > 0 ? std::min(cap, phiN) : phiN;
            }
            std::vector<int> e(m, 0);
            while (true) {
                Mono mu{e};
                int ord = mu.order(*vars);
                if (ord >= 3 && ord <= phiN) unknowns.push_back(mu);
                int i = 0;
                for (; i < m; ++i) {
                    if (e[i] < caps[i]) {
                        ++e[i];
                        break;
                    }
                    e[i] = 0;
                }
                if (i == m) break;
            }
            std::sort(unknowns.begin(), unknowns.end());
        }
        auto phiVars = std::make_shared<VarSet>(vars->all());
        // rows: per (a,b,c, monomial of c_abc); columns: unknown Phi monomials
        std::vector<std::tuple<int, int, int, Mono>> rows;
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b)
                for (int c = 0; c < m; ++c) {
                    std::vector<Mono> ms;
                    for (const auto& [mu, v] : out.c[a][b][c].terms()) ms.push_back(mu);
                    // include zero rows for low-order monomials to pin Phi
                    for (int i = 0; i < m; ++i) {
                        Mono mu = Mono::one(*vars);
                        ms.push_back(mu);
                        mu.e[i] = 1;
                        if (mu.order(*vars) <= N) ms.push_back(mu);
                    }
                    std::sort(ms.begin(), ms.end());
                    ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
                    for (const auto& mu : ms) rows.emplace_back(a, b, c, mu);
                }
        QMat M(int(rows.size()), int(unknowns.size()));
        QVec rhs(rows.size(), Rat(0));
        Series phi_template(vars, scalar_space(), phiN);
        for (size_t u = 0; u < unknowns.size(); ++u) {
            Series mono = series_zero(vars, scalar_space(), phiN);
            mono.add_term(unknowns[u], QVec{Rat(1)});
            // third derivatives of the unknown monomial
            std::map<std::pair<int, std::pair<int, int>>, Series> cache;
            for (size_t r = 0; r < rows.size(); ++r) {
                auto [a, b, c, mu] = rows[r];
                auto key = std::make_pair(a, std::make_pair(b, c));
                auto it = cache.find(key);
                if (it == cache.end())
                    it = cache.emplace(key, derivative(derivative(derivative(mono, c), b), a))
                             .first;
                QVec v = it->second.coeff(mu);
                if (!is_zero(v[0])) M.at(int(r), int(u)) = v[0];
            }
        }
        for (size_t r = 0; r < rows.size(); ++r) {
            auto [a, b, c, mu] = rows[r];
            rhs[r] = out.c[a][b][c].coeff(mu)[0];
        }
        SolveResult sol = solve_linear(M, rhs);
        out.potential = series_zero(phiVars, scalar_space(), phiN);
        if (sol.consistent)
            for (size_t u = 0; u < unknowns.size(); ++u)
                out.potential.add_term_scaled(unknowns[u], sol.particular[u], QVec{Rat(1)});
        out.checks.add("potential with exact third derivatives exists", sol.consistent,
                       sol.consistent ? "" : "integrability system inconsistent");
        if (sol.consistent) {
            bool verified = true;
            std::string wv;
            for (int a = 0; a < m && verified; ++a)
                for (int b = 0; b < m && verified; ++b)
                    for (int c = 0; c < m && verified; ++c) {
                        Series d3 =
                            derivative(derivative(derivative(out.potential, c), b), a);
                        // compare through the reliable order of c
                        Series diff = series_zero(vars, scalar_space(), N);
                        for (const auto& [mu, v] : d3.terms())
                            if (mu.order(*vars) <= N) diff.add_term(mu, v);
                        if (!(diff == out.c[a][b][c])) {
                            verified = false;
                            wv = "triple (" + std::to_string(a) + "," + std::to_string(b) + "," +
                                 std::to_string(c) + ")";
                        }
                    }
            out.checks.add("potential third derivatives reproduce c exactly", verified, wv);
        }
    }
    return out;
}

NormalizedFrame normalized_frame_and_connection(const SemiInfiniteFrame& frame,
                                                const Filtration& W, const Cohomology& coh,
                                                const Window& w) {
    NormalizedFrame out;
    const SpacePtr H = coh.space();
    const VarSetPtr vars = frame.gens[0].vars();
    const int N = frame.gens[0].trunc();
    const int m = vars->size();
    const int dimH = H->dim();

    for (int k = 0; k < dimH; ++k) {
        QVec e(dimH, Rat(0));
        e[k] = 1;
        out.elements.push_back(normalize_against(frame, W, e, H->charge(k), w));
    }

    // connection: d_v phi_alpha = hbar^{-1} sum_beta Gamma[v][alpha][beta] phi_beta
    std::vector<std::map<int, QVec>> cp(dimH);
    int elo = 0, ehi = 0;
    bool first = true;
    for (int b = 0; b < dimH; ++b) {
        cp[b] = constant_part(out.elements[b].element);
        for (const auto& [e, v] : cp[b]) {
            if (first || e - 2 < elo) elo = e - 2;
            if (first || e - 2 > ehi) ehi = e - 2;
            first = false;
        }
    }
    elo -= 2 * N;
    ehi += 2 * N;
    elo = std::max(elo, -w.max_abs);
    ehi = std::min(ehi, w.max_abs);
    QMat M((ehi - elo + 1) * dimH, dimH);
    for (int b = 0; b < dimH; ++b)
        for (const auto& [e, v] : cp[b]) {
            int ee = e - 2;
            if (ee < elo || ee > ehi) continue;
            for (int i = 0; i < dimH; ++i) M.at((ee - elo) * dimH + i, b) = v[i];
        }
    Factorization fact(M);

    out.gamma.assign(m, std::vector<std::vector<Series>>(
                            dimH, std::vector<Series>(dimH, series_zero(vars, scalar_space(), N))));
    bool solved = true;
    std::string wfail;
    for (int v = 0; v < m && solved; ++v)
        for (int alpha = 0; alpha < dimH && solved; ++alpha) {
            HbarElement R = derivative(out.elements[alpha].element, v);
            for (int order = 0; order <= N && solved; ++order) {
                for (const Mono& mu : monomials_at_order(R, order)) {
                    auto slice = monomial_slice(R, mu);
                    QVec rhs((ehi - elo + 1) * size_t(dimH), Rat(0));
                    bool ok = true;
                    for (const auto& [e, vv] : slice) {
                        if (e < elo || e > ehi) { ok = false; break; }
                        for (int i = 0; i < dimH; ++i) rhs[(e - elo) * dimH + i] = vv[i];
                    }
                    auto x = ok ? fact.solve(rhs) : std::nullopt;
                    if (!x) {
                        solved = false;
                        wfail = "direction " + vars->var(v).name + ", element " +
                                std::to_string(alpha);
                        break;
                    }
                    for (int b = 0; b < dimH; ++b) {
                        if (is_zero((*x)[b])) continue;
                        out.gamma[v][alpha][b].add_term(mu, QVec{(*x)[b]});
                        Series inc = series_zero(vars, scalar_space(), N);
                        inc.add_term(mu, QVec{(*x)[b]});
                        R = sub(R, scalar_series_mul(
                                       inc, shift_halfstep(out.elements[b].element, -2, w)));
                    }
                }
            }
            if (solved && !R.is_zero()) {
                solved = false;
                wfail = "nonzero residual at direction " + vars->var(v).name;
            }
        }
    out.checks.add("first-order period system holds exactly", solved, wfail);
    return out;
}

std::vector<HbarElement> period_integrals(const HbarElement& element, const QMat& delta) {
    if (delta.rows != delta.cols || delta.rows != element.space()->dim())
        throw std::invalid_argument("period_integrals: delta must be square of dim H");
    if (rank(delta) != delta.rows)
        throw std::invalid_argument("period_integrals: delta is not a basis of the dual space");
    std::vector<HbarElement> out;
    for (int a = 0; a < delta.rows; ++a) {
        HbarElement p(element.vars(), scalar_space(), element.trunc());
        for (const auto& [e, s] : element.coeffs()) {
            Series comp = series_zero(element.vars(), scalar_space(), element.trunc());
            for (const auto& [mu, v] : s.terms()) {
                Rat acc(0);
                for (int i = 0; i < delta.cols; ++i)
                    if (!is_zero(delta.at(a, i)) && !is_zero(v[i])) acc += delta.at(a, i) * v[i];
                if (!is_zero(acc)) comp.add_term(mu, QVec{acc});
            }
            p.add(e, comp);
        }
        out.push_back(std::move(p));
    }
    return out;
}

} // namespace qp
