#pragma once

#include "qp/filtration.hpp"
#include "qp/ximodule.hpp"

#include <memory>

namespace qp {

/// Finite graded-commutative algebra on square-zero generators (odd ones by
/// parity, even ones by fiat): basis = subsets of generators, encoded as
/// bitmasks in ascending generator order.
struct ExtGen {
    std::string name;
    int degree = 1;
    int charge = 0;
};

class ExteriorAlgebra {
public:
    explicit ExteriorAlgebra(std::vector<ExtGen> gens);

    int gen_count() const { return int(gens_.size()); }
    int dim() const { return 1 << gens_.size(); }
    const SpacePtr& space() const { return space_; }

    /// mask -> basis index (identity by construction, masks are the indices).
    QVec basis_vec(unsigned mask) const;

    /// Product of basis monomials: nullopt when a generator repeats.
    std::optional<std::pair<unsigned, int>> mul_masks(unsigned a, unsigned b) const;
    QVec mul(const QVec& a, const QVec& b) const;

    /// Matrix of left multiplication by x.
    QMat mult_operator(const QVec& x) const;
    /// Matrix of the left contraction (odd derivative) dual to generator i.
    QMat contraction_operator(int i) const;
    /// Derivation of parity p with the given generator images.
    QMat derivation(const std::vector<QVec>& gen_images, int parity) const;

    /// Top-coefficient pairing G(u, v) = coeff of the full monomial in u v.
    Bilinear top_pairing() const;

private:
    std::vector<ExtGen> gens_;
    SpacePtr space_;
};

/// Everything the pipeline needs about one model: the algebra, the module,
/// its cohomology, the charge filtration F, the opposite filtration W and the
/// declared Gr W basis (class coordinates, with levels).
struct ModelBundle {
    std::string name;
    DGLA dgla;
    XiModule xi;
    std::shared_ptr<Cohomology> coh;
    Filtration F;     // decreasing, from class charges
    Filtration W;     // increasing, opposite to F
    std::vector<std::pair<int, QVec>> grw;  // (level key 2r, class vector)
    int default_order = 2;
};

/// Load-time validation: dgla + ximodule axioms, opposedness, isotropy,
/// Gr W basis completeness and the symbol full-rank (Calabi-Yau) condition.
CheckReport check_bundle(const ModelBundle& b);

/// Harmonic model of the n-torus: polyvector-valued forms with zero
/// differentials, algebraic contraction, top-form pairing. n = 1 or 2.
ModelBundle torus_model(int n);

/// Four odd generators with d1(rho) = theta1 theta2: nonzero differential
/// and a nontrivial gauge action, yet still an unobstructed abelian model.
ModelBundle nilpotent_model();

/// Abelian test module with d2 != 0 (and zero bracket/d_g/d1): exercises the
/// chain transport [d2, i_alpha] and nontrivial twisted lifts. Not a full
/// bundle; no opposite filtration is shipped with it.
struct FixturePair {
    DGLA dgla;
    XiModule xi;
};
FixturePair d2_fixture();

/// Reproducible random abelian model: torus-type contraction core with an
/// optional square-zero even factor (dims 4 or 8), random charge assignment
/// within [1, charge_range], random rescalings of the contraction operators
/// and pairing, and a random block-diagonal change of h-basis. W is the
/// charge-complement completion (opposite and isotropic by construction).
ModelBundle random_abelian_model(uint64_t seed, int dims = 4, int charge_range = 2);

ModelBundle load_model(const std::string& path);
void save_model(const ModelBundle& b, const std::string& path);
std::string model_to_json(const ModelBundle& b);
ModelBundle model_from_json(const std::string& text);

/// Builtin lookup: "torus.1", "torus.2", "nilpotent", "random:<seed>[:dims]".
ModelBundle builtin_model(const std::string& name);

} // namespace qp
