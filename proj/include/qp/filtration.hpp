#pragma once

#include "qp/graded.hpp"
#include "qp/linalg.hpp"
#include "qp/linear_map.hpp"
#include "qp/report.hpp"

#include <map>

namespace qp {

/// Half-integer indexed filtration of a graded space, stored over class
/// coordinates. Keys are 2r (halfsteps); a key's parity matches the parity of
/// the classes it may contain. Levels hold cumulative spanning sets:
/// decreasing filtrations shrink as the key grows, increasing ones grow.
struct Filtration {
    bool increasing = false;
    SpacePtr space;
    std::map<int, std::vector<QVec>> levels;

    /// Spanning set of F^{>= key/2} (decreasing) or W_{<= key/2} (increasing),
    /// restricted to classes of parity key mod 2. Outside the declared
    /// staircase the filtration is full or empty as appropriate.
    std::vector<QVec> at(int key) const;

    int dim_at(int key) const;
    bool contains(int key, const QVec& v) const;

    /// Smallest key whose level contains v (increasing filtrations); throws
    /// if v lies in no level.
    int level_of(const QVec& v) const;

    /// All keys of the given parity between the declared extremes.
    std::vector<int> keys(int parity) const;
};

/// The filtration read off the charges: decreasing gives
/// F^{>= r} = span of classes with -charge >= 2r (the Hodge filtration rule);
/// increasing gives the complementary staircase W_{<= r} = span of classes
/// with charge > -2r.
Filtration filtration_from_charges(const SpacePtr& H, bool increasing);

/// Verifies level-by-level opposedness: for every r (both parities),
/// H^{parity} = F^{>= r} (+) W_{<= r}, which is also transversality of the
/// associated hbar-spans on leading coefficients.
CheckReport opposite_check(const Filtration& F, const Filtration& W);

/// Isotropy of W with respect to a pairing on classes: G(a, b) = 0 for
/// a in W_{<= r}, b in W_{<= -r+1}.
CheckReport isotropy_check(const Filtration& W, const Bilinear& pairing);

} // namespace qp
