#pragma once

#include "qp/dgla.hpp"
#include "qp/hbar.hpp"

namespace qp {

/// Contraction-equipped module over a dgLa: two anticommuting differentials
/// d1 (charge +1) and d2 (charge -1), a contraction i with [d1, i_a] =
/// i_{d a}, [i_a, i_b] = 0, [[d2, i_a], i_b] = i_{[a,b]}, an invariant
/// pairing of fixed degree/charge weight, and a distinguished d1-, d2-closed
/// class omega0 of charge -n.
struct XiModule {
    SpacePtr g;           // the acting algebra's space
    SpacePtr h;
    LinearMap d1;         // (+1, +1)
    LinearMap d2;         // (+1, -1)
    Bilinear contraction; // g x h -> h, declared shifts (-1, 0)
    Bilinear pairing;     // h x h -> scalars, complementary degrees/charges
    QVec omega0;
    int n = 0;            // = -charge(omega0)

    int pairing_charge_weight() const { return -pairing.charge_shift(); }
};

/// Validates shapes, the half-integer bookkeeping rules charge = degree
/// (mod 2) on h and charge = degree + 1 (mod 2) on g, homogeneity of omega0
/// and n = -charge(omega0). Axiom failures are left to check_ximodule.
XiModule make_ximodule(SpacePtr g, SpacePtr h, LinearMap d1, LinearMap d2, Bilinear contraction,
                       Bilinear pairing, QVec omega0);

CheckReport check_ximodule(const XiModule& m, const DGLA& L);

/// i_gamma(s) for a g-valued series gamma.
Series contract(const XiModule& m, const Series& gamma, const Series& s);
HbarElement contract(const XiModule& m, const Series& gamma, const HbarElement& s);

/// exp(i_gamma hbar^{step/2}) applied to s; finite by nilpotency. step = -2
/// gives exp(i_gamma / hbar).
HbarElement exp_contract(const XiModule& m, const Series& gamma, const HbarElement& s, int step,
                         const Window& w);

/// L_gamma = [d2, i_gamma] as a graded commutator (gamma of homogeneous total
/// degree; the operator i_gamma has parity deg(gamma) - 1).
Series lie_action(const XiModule& m, const Series& gamma, const Series& s);
HbarElement lie_action(const XiModule& m, const Series& gamma, const HbarElement& s);

/// The twisted differential d_gamma(hbar) = d1 + [d2, i_gamma] + hbar d2
/// (without the flag: d1 + [d2, i_gamma] + d2). Requires mc_residual = 0.
class TwistedDifferential {
public:
    TwistedDifferential(const XiModule& m, const DGLA& L, Series gamma, bool with_hbar);
    HbarElement operator()(const HbarElement& s) const;
    Series operator()(const Series& s) const;  // only without hbar

private:
    const XiModule& m_;
    Series gamma_;
    bool with_hbar_;
};

struct ConjugationResult {
    /// exp(-i_g/hbar)(d1 + hbar d2)exp(i_g/hbar) - (d1 + [d2,i_g] + hbar d2),
    /// applied to each h-basis vector.
    std::vector<HbarElement> difference;
    /// (1/hbar) i_{d gamma + [gamma,gamma]/2} applied to each basis vector.
    std::vector<HbarElement> residual_term;
    bool identity_holds = false;  // difference == residual_term exactly
};

/// Certifies the sub-complex identity: for any degree-1 gamma with zero
/// constant term, the conjugated operator differs from the twisted
/// differential exactly by (1/hbar) i of the Maurer-Cartan residual.
ConjugationResult conjugation_residual(const XiModule& m, const DGLA& L, const Series& gamma,
                                       const Window& w);

/// Covariant derivative along coordinate direction v:
/// grad_v s = d s / d v + hbar^{-1} i_{d gamma / d v}(s).
HbarElement gauss_manin_derivative(const XiModule& m, const Series& gamma, int var,
                                   const HbarElement& s, const Window& w);

/// Chain-level gauge transport s -> (Id + eps [d2, i_alpha]) s, or its
/// exponential. Requires s closed for the twisted differential at gamma.
HbarElement gauge_transport(const XiModule& m, const DGLA& L, const Series& gamma,
                            const Series& alpha, const HbarElement& s, GaugeMode mode);

struct DegenerationError : std::domain_error {
    explicit DegenerationError(const std::string& what) : std::domain_error(what) {}
};

/// Cohomology of (h, d1 + d2) with representatives in ker d1 /\ ker d2,
/// chosen charge-homogeneously slice by slice (degree, charge ascending,
/// fixed pivot rule). Fails with DegenerationError when no such
/// representative exists for some class.
class Cohomology {
public:
    Cohomology(const XiModule& m);

    const SpacePtr& space() const { return H_; }       // class space
    int dim() const { return H_->dim(); }
    const std::vector<QVec>& reps() const { return reps_; }

    /// Class coordinates of a (d1+d2)-closed vector; throws if not closed.
    QVec reduce(const QVec& v) const;
    Series reduce(const Series& s) const;
    HbarElement reduce(const HbarElement& s) const;

    /// Embedding H -> h by representatives.
    QVec embed(const QVec& classes) const;
    Series embed(const Series& s) const;
    HbarElement embed(const HbarElement& s) const;

    /// Pairing induced on classes (well-defined by invariance).
    const Bilinear& class_pairing() const { return *gh_; }

private:
    SpacePtr h_;
    SpacePtr H_;
    std::vector<QVec> reps_;
    std::unique_ptr<Factorization> solver_;  // [reps | im(d1+d2)]
    std::unique_ptr<Bilinear> gh_;
};

} // namespace qp
