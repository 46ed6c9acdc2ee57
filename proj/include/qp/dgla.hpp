#pragma once

#include "qp/report.hpp"
#include "qp/series.hpp"

#include <optional>

namespace qp {

/// Harmonic splitting data for the differential: projector P onto chosen
/// representatives and homotopy K with dK + Kd = Id - P, K^2 = 0,
/// KP = PK = 0, P^2 = P, Pd = dP = 0. Validated by check_dgla and at
/// make_dgla time.
struct HodgeData {
    LinearMap P;  // (0, 0)
    LinearMap K;  // (-1, -1)
};

struct DGLA {
    SpacePtr g;
    LinearMap d;        // degree +1, charge +1
    Bilinear bracket;   // degree 0, charge -1
    std::optional<HodgeData> hodge;
};

/// Validates the declared shifts and, when present, the HodgeData identities.
/// Axiom failures are left to check_dgla; structural misdeclarations throw.
DGLA make_dgla(SpacePtr g, LinearMap d, Bilinear bracket, std::optional<HodgeData> hodge);

/// Derives a HodgeData splitting from the differential by exact linear
/// algebra with the fixed pivot rule.
HodgeData make_hodge_data(const SpacePtr& g, const LinearMap& d);

CheckReport check_dgla(const DGLA& L);

/// d(gamma) + 1/2 [gamma, gamma] for a degree-1 series with values in g.
Series mc_residual(const DGLA& L, const Series& gamma);

enum class GaugeMode { Infinitesimal, Exponentiated };

/// Name of the square-zero bookkeeping variable adjoined by the
/// infinitesimal mode.
extern const char* const kGaugeMarker;

/// Adjoins the gauge marker variable to a ring.
VarSetPtr with_gauge_marker(const VarSetPtr& vars);

/// Gauge action of a degree-0 parameter alpha (zero constant term) on gamma.
/// Infinitesimal: gamma + eps (d alpha + [gamma, alpha]) over the
/// marker-extended ring. Exponentiated: sum over n of
/// (ad alpha)^{n+1} d alpha / (n+1)! + (ad alpha)^n gamma / n!, a finite sum
/// by nilpotency of the maximal ideal.
Series gauge_act(const DGLA& L, const Series& gamma, const Series& alpha, GaugeMode mode);

struct ObstructedError : std::runtime_error {
    int order;
    ObstructedError(int ord, const std::string& what)
        : std::runtime_error("mc_solve: obstructed at order " + std::to_string(ord) + "; " + what),
          order(ord) {}
};

struct MiniversalMC {
    Series gamma;                    // over the new coordinate ring
    VarSetPtr vars;                  // one variable per harmonic class
    std::vector<QVec> classes;       // harmonic representative per variable
    std::vector<int> class_degree;   // g-degree per class
    std::vector<int> class_charge;
};

/// Kuranishi recursion gamma = gamma_1 - 1/2 K[gamma, gamma] on the gauge
/// slice K gamma = 0, with one coordinate of degree 1 - deg(class) per
/// harmonic class (ordered by degree, then charge, then input index).
/// Throws ObstructedError when P[gamma, gamma] != 0 at some order.
MiniversalMC mc_solve_miniversal(const DGLA& L, int N, const std::string& var_prefix = "t");

} // namespace qp
