#pragma once

#include "qp/graded.hpp"
#include "qp/linear_map.hpp"

#include <map>
#include <memory>
#include <optional>
#include <vector>

namespace qp {

/// Formal variable of a super-polynomial ring. Odd-degree variables square to
/// zero; max_exp = 1 may also be forced on even variables (used for the
/// nilpotent gauge marker). order_weight is the variable's contribution to
/// the maximal-ideal filtration order (0 for the gauge marker).
struct Variable {
    std::string name;
    int degree = 0;
    int max_exp = 0;      // 0 = unbounded (truncation order still applies)
    int order_weight = 1;

    int parity() const { return ((degree % 2) + 2) % 2; }
    bool odd() const { return parity() == 1; }
    int cap() const { return odd() ? 1 : max_exp; }

    bool operator==(const Variable& o) const {
        return name == o.name && degree == o.degree && max_exp == o.max_exp &&
               order_weight == o.order_weight;
    }
};

class VarSet {
public:
    explicit VarSet(std::vector<Variable> vars) : v_(std::move(vars)) {}
    int size() const { return int(v_.size()); }
    const Variable& var(int i) const { return v_.at(i); }
    const std::vector<Variable>& all() const { return v_; }
    bool operator==(const VarSet& o) const { return v_ == o.v_; }
    int index_of(const std::string& name) const {
        for (int i = 0; i < size(); ++i)
            if (v_[i].name == name) return i;
        throw std::invalid_argument("unknown variable: " + name);
    }

private:
    std::vector<Variable> v_;
};

using VarSetPtr = std::shared_ptr<const VarSet>;

inline bool same_vars(const VarSetPtr& a, const VarSetPtr& b) {
    return a == b || (a && b && *a == *b);
}

/// Exponent multi-index; ordering is plain lexicographic (a fixed total order
/// used for canonical maps, not a monomial order).
struct Mono {
    std::vector<int> e;

    bool operator<(const Mono& o) const { return e < o.e; }
    bool operator==(const Mono& o) const { return e == o.e; }

    int order(const VarSet& vs) const {
        int s = 0;
        for (size_t i = 0; i < e.size(); ++i) s += e[i] * vs.var(int(i)).order_weight;
        return s;
    }
    int degree(const VarSet& vs) const {
        int s = 0;
        for (size_t i = 0; i < e.size(); ++i) s += e[i] * vs.var(int(i)).degree;
        return s;
    }
    int parity(const VarSet& vs) const {
        int s = 0;
        for (size_t i = 0; i < e.size(); ++i)
            if (vs.var(int(i)).odd()) s += e[i];
        return s & 1;
    }
    bool is_one() const {
        for (int x : e)
            if (x) return false;
        return true;
    }
    static Mono one(const VarSet& vs) { return Mono{std::vector<int>(vs.size(), 0)}; }
    static Mono single(const VarSet& vs, int i) {
        Mono m = one(vs);
        m.e[i] = 1;
        return m;
    }
};

/// Koszul sign for merging t^mu * t^nu into canonical ascending order, or
/// nullopt when an odd variable repeats (the product vanishes).
std::optional<int> mono_merge(const VarSet& vs, const Mono& mu, const Mono& nu, Mono& out);

/// Element of V (x) R where R is the super-commutative polynomial ring on the
/// variable set truncated at total filtration order N. Coefficients are kept
/// to the left of monomials: s = sum_mu v_mu t^mu. Canonical form: no stored
/// zero coefficient vectors, no monomial beyond the truncation order.
class Series {
public:
    Series(VarSetPtr vars, SpacePtr space, int trunc)
        : vars_(std::move(vars)), space_(std::move(space)), trunc_(trunc) {
        if (trunc_ < 0) throw std::invalid_argument("Series: negative truncation order");
    }

    const VarSetPtr& vars() const { return vars_; }
    const SpacePtr& space() const { return space_; }
    int trunc() const { return trunc_; }
    const std::map<Mono, QVec>& terms() const { return c_; }
    bool is_zero() const { return c_.empty(); }

    /// Adds v (x) t^mu, dropping the term if beyond the truncation order or if
    /// an exponent cap is exceeded (odd variables square to zero).
    void add_term(const Mono& mu, const QVec& v);
    void add_term_scaled(const Mono& mu, const Rat& c, const QVec& v);

    QVec coeff(const Mono& mu) const {
        auto it = c_.find(mu);
        if (it != c_.end()) return it->second;
        return QVec(space_->dim(), Rat(0));
    }
    QVec constant_term() const { return coeff(Mono::one(*vars_)); }

    bool operator==(const Series& o) const {
        return same_vars(vars_, o.vars_) && same_space(space_, o.space_) && c_ == o.c_;
    }

    /// Highest total order with a nonzero term (-1 for the zero series).
    int top_order() const;
    /// Lowest total order with a nonzero term (trunc+1 for the zero series).
    int min_order() const;

    /// True if every term has total degree (monomial + coefficient slot) equal to d.
    bool is_homogeneous(int d) const;
    /// Total degree when homogeneous; nullopt for zero or inhomogeneous series.
    std::optional<int> homogeneous_degree() const;

private:
    VarSetPtr vars_;
    SpacePtr space_;
    int trunc_;
    std::map<Mono, QVec> c_;
};

Series series_zero(VarSetPtr vars, SpacePtr space, int trunc);
/// Scalar constant c * 1.
Series series_const(VarSetPtr vars, int trunc, const Rat& c);
/// v (x) 1 for a vector v of the given space.
Series series_vector(VarSetPtr vars, SpacePtr space, int trunc, const QVec& v);
/// v (x) t_i.
Series series_var_vector(VarSetPtr vars, SpacePtr space, int trunc, int var, const QVec& v);
/// Scalar variable t_i.
Series series_var(VarSetPtr vars, int trunc, int var);

Series add(const Series& a, const Series& b);
Series sub(const Series& a, const Series& b);
Series scale(const Rat& c, const Series& a);
Series negate(const Series& a);

/// Graded-commutative product of scalar series (Koszul signs per transposition
/// of odd variables; truncated at the common order).
Series series_mul(const Series& a, const Series& b);

/// Left module action of a scalar series on a vector-valued series:
/// (c t^mu) . (w t^nu) = (-1)^{|t^mu||w|} c w t^mu t^nu.
Series scalar_mul(const Series& s, const Series& a);

/// Component-wise application of a graded linear map to the coefficient slot
/// (no sign: operators act on the left tensor factor).
Series apply_linear(const LinearMap& f, const Series& a);

/// R-bilinear extension of B with the Koszul sign (-1)^{|t^mu||w|} for moving
/// the left argument's monomial past the right argument's coefficient.
Series apply_bilinear(const Bilinear& B, const Series& a, const Series& b);

/// Left partial derivative with respect to variable i.
Series derivative(const Series& a, int var);

/// Substitutes scalar series for variables; assignment[i] replaces variable i
/// of a's ring, must match its parity, and lives in the target ring. Truncated
/// at the target order.
Series substitute(const Series& a, const std::vector<Series>& assignment);

/// Re-expresses a series over a variable set that contains a's variables
/// (matched by name/degree) as a subset, in any positions.
Series extend_vars(const Series& a, const VarSetPtr& bigger);

struct CoordinateMap {
    VarSetPtr src;             // variables of the domain ring
    VarSetPtr dst;             // variables of the codomain ring
    std::vector<Series> comp;  // per dst variable: scalar series over src
};

/// Inverse of a coordinate map with zero constant term and invertible linear
/// part, to the truncation order: result g satisfies f(g) = id = g(f).
/// Throws std::domain_error when the linear part is singular or parity-mixed.
CoordinateMap compose_inverse(const CoordinateMap& f);

/// Applies a coordinate map to a series over f.dst's ring, yielding one over f.src.
Series apply_coordinate_map(const CoordinateMap& f, const Series& a);

} // namespace qp
