#pragma once

#include "qp/filtration.hpp"
#include "qp/ximodule.hpp"

namespace qp {

/// Frame of dim H generators of a semi-infinite subspace of
/// H((hbar^{1/2})) (x) R, in class coordinates. Frames produced by l_frame
/// also carry the chain-level data: the twisted-closed lifts s_k and the
/// full chains l exp(i_gamma/hbar) s_k.
struct SemiInfiniteFrame {
    enum class Provenance { Filtration, Deformation };
    Provenance provenance = Provenance::Filtration;
    std::vector<HbarElement> gens;    // H-valued
    std::vector<HbarElement> lifts;   // h-valued, hbar >= 0 (Deformation only)
    std::vector<HbarElement> chains;  // h-valued (Deformation only)
};

/// L^F = span_r F^{>= r} hbar^{-r}[[hbar]]: constant generators picked from
/// the deepest level downward with the fixed pivot rule. Membership in the
/// span is the predicate "coefficient of hbar^{e/2} lies in F^{>= -e/2}".
SemiInfiniteFrame subspace_from_filtration(const Filtration& F, VarSetPtr vars, int N);

/// Coefficient-wise membership predicate for the hbar-spread of a filtration:
/// decreasing F reads F^{>= -e}, increasing W reads W_{<= -e}.
bool filtration_span_contains(const Filtration& f, const HbarElement& v);

struct SpanSolveResult {
    bool in_module = false;     // solvable with coefficients in R((hbar))
    bool in_plus_span = false;  // and all coefficient halfsteps >= 0
    std::vector<HbarElement> coeffs;  // scalar-valued, one per generator
    HbarElement residual;
    std::string why;
};

/// Expands target over the frame with R((hbar))-series coefficients,
/// order-by-order against the constant part of the generators (which is
/// invertible for every valid frame). Deterministic and exact.
SpanSolveResult span_solve(const SemiInfiniteFrame& frame, const HbarElement& target,
                           const Window& w);

/// L(gamma): for each cohomology class solve d_gamma(hbar) s = 0 with
/// s = rep mod the maximal ideal (order-by-order linear solves, fixed pivot
/// rule), then take classes of l exp(i_gamma/hbar) s.
SemiInfiniteFrame l_frame(const XiModule& m, const DGLA& L, const Cohomology& coh,
                          const Series& gamma, const Window& w);

/// Same R[[hbar]]-module span, checked by exact mutual containment.
CheckReport span_equality_check(const SemiInfiniteFrame& a, const SemiInfiniteFrame& b,
                                const Window& w);

/// Frames of gamma and of its gauge transform span the same module.
CheckReport gauge_invariance_check(const XiModule& m, const DGLA& L, const Cohomology& coh,
                                   const Series& gamma, const Series& alpha, GaugeMode mode,
                                   const Window& w);

struct NormalizedElement {
    HbarElement element;               // H-valued, in the frame span
    std::vector<HbarElement> lambdas;  // frame coefficients, hbar >= 0
};

/// The unique element of span(frame) /\ (base + L_W): base is an H-class
/// vector placed at the given halfstep. Throws std::domain_error when the
/// intersection is empty or not unique (transversality failure).
NormalizedElement normalize_against(const SemiInfiniteFrame& frame, const Filtration& W,
                                    const QVec& base_class, int base_halfstep, const Window& w);

/// Psi^W: the normalized element over base omega0 hbar^{-n/2}.
NormalizedElement psi_normalize(const SemiInfiniteFrame& frame, const Filtration& W,
                                const QVec& omega0_class, int n, const Window& w);

struct FlatCoordinates {
    CoordinateMap forward;   // flat coordinate series over the deformation ring
    CoordinateMap inverse;
    QMat linear_part;        // rows: flat coordinates, cols: deformation vars
};

/// Flat coordinates t_W: Gr W components of Psi - base, read per Gr W basis
/// vector at hbar^{-level}; requires an invertible (local Torelli) and
/// parity-pure linear part.
FlatCoordinates flat_coordinates(const HbarElement& psi, const QVec& omega0_class, int n,
                                 const Filtration& W,
                                 const std::vector<std::pair<int, QVec>>& grw, int omega_degree);

struct StructureConstants {
    std::vector<std::vector<std::vector<Series>>> A;  // [a][b][c], hbar-free scalars
    CheckReport checks;  // residual zero, A^{(0)} = 0, graded symmetry
};

/// Solves d^2 Psi / dt_W^a dt_W^b = hbar^{-1} sum_c A_ab^c dPsi/dt_W^c
/// (allowing an hbar^0 term A^{(0)} that must come out identically zero).
StructureConstants structure_constants(const HbarElement& psi_flat, const Window& w);

/// hbar grad_v(generator) stays in the frame span, chain level, every
/// direction and generator.
CheckReport griffiths_residual(const XiModule& m, const Cohomology& coh,
                               const SemiInfiniteFrame& frame, const Series& gamma,
                               const Window& w);

/// Full rank of v -> [i_{gamma_v} omega0] (the symbol of the connection on
/// omega0), the Calabi-Yau condition at the base point.
CheckReport cy_condition_check(const XiModule& m, const DGLA& L, const Cohomology& coh);

/// dA = 0 and [A, A] = 0 (associativity), exactly, with Koszul signs.
CheckReport flatness_check(const StructureConstants& sc, const VarSetPtr& flat_vars);

/// Quasi-homogeneity: every monomial of A_ab^c balances the weights
/// 2r(level) - n of its indices and variables.
CheckReport charge_balance_check(const StructureConstants& sc, const VarSetPtr& flat_vars,
                                 const std::vector<int>& index_weights);

struct EtaResult {
    QMat eta;          // constant metric on flat directions
    int halfstep = 0;  // the single hbar power carrying the pairing
    std::vector<std::vector<std::vector<Series>>> c;  // lowered constants
    Series potential;  // d_a d_b d_c potential = c_abc
    CheckReport checks;
};

/// Pairing of dPsi-derivatives through the hbar-twisted class pairing:
/// constant, symmetric, non-degenerate metric when W is isotropic; lowers A
/// to the totally symmetric c_abc and reconstructs the potential.
EtaResult eta_and_wdvv(const HbarElement& psi_flat, const Bilinear& class_pairing,
                       const Filtration& W, const StructureConstants& sc, const Window& w);

struct NormalizedFrame {
    std::vector<NormalizedElement> elements;              // one per base class
    std::vector<std::vector<std::vector<Series>>> gamma;  // [v][alpha][beta]
    CheckReport checks;
};

/// Frame elements L(t) /\ (phi_alpha(0) hbar^{-r_alpha} + L_W) for the
/// cohomology classes, and the connection matrices of the first-order system
/// d_v phi_alpha = hbar^{-1} sum_beta Gamma_v^beta_alpha phi_beta.
NormalizedFrame normalized_frame_and_connection(const SemiInfiniteFrame& frame,
                                                const Filtration& W, const Cohomology& coh,
                                                const Window& w);

/// Component functionals of an element against a dual basis (rows of delta);
/// one scalar Laurent series per functional.
std::vector<HbarElement> period_integrals(const HbarElement& element, const QMat& delta);

} // namespace qp
