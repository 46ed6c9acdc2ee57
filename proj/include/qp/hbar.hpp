#pragma once

#include "qp/series.hpp"

#include <map>

namespace qp {

struct WindowExhausted : std::runtime_error {
    explicit WindowExhausted(int e, int cap)
        : std::runtime_error("hbar window exhausted: halfstep " + std::to_string(e) +
                             " exceeds +-" + std::to_string(cap)) {}
};

/// Guaranteed-exact halfstep window for Laurent elements. Operations that
/// shift exponents check against it and fail loudly instead of truncating.
struct Window {
    int max_abs = 64;
    void check(int e) const {
        if (e > max_abs || e < -max_abs) throw WindowExhausted(e, max_abs);
    }
};

/// Laurent polynomial in hbar^{1/2} with Series coefficients: the exponent
/// key e stands for hbar^{e/2}. At finite truncation order and bounded
/// charges every pipeline element has finite support.
class HbarElement {
public:
    HbarElement(VarSetPtr vars, SpacePtr space, int trunc)
        : vars_(std::move(vars)), space_(std::move(space)), trunc_(trunc) {}

    const VarSetPtr& vars() const { return vars_; }
    const SpacePtr& space() const { return space_; }
    int trunc() const { return trunc_; }
    const std::map<int, Series>& coeffs() const { return c_; }
    bool is_zero() const { return c_.empty(); }

    void add(int halfstep, const Series& s) {
        if (s.is_zero()) return;
        auto it = c_.find(halfstep);
        if (it == c_.end()) {
            c_.emplace(halfstep, s);
        } else {
            it->second = qp::add(it->second, s);
            if (it->second.is_zero()) c_.erase(it);
        }
    }

    Series coeff(int halfstep) const {
        auto it = c_.find(halfstep);
        if (it != c_.end()) return it->second;
        return series_zero(vars_, space_, trunc_);
    }

    int min_halfstep() const { return c_.empty() ? 0 : c_.begin()->first; }
    int max_halfstep() const { return c_.empty() ? 0 : c_.rbegin()->first; }

    bool operator==(const HbarElement& o) const {
        return same_vars(vars_, o.vars_) && same_space(space_, o.space_) && c_ == o.c_;
    }

    /// Every component of the hbar^{e/2} coefficient has parity e mod 2.
    bool parity_clean() const {
        for (const auto& [e, s] : c_)
            for (const auto& [mu, v] : s.terms())
                for (int k = 0; k < space_->dim(); ++k)
                    if (!qp::is_zero(v[k]) &&
                        ((mu.degree(*s.vars()) + space_->degree(k)) % 2 + 2) % 2 != ((e % 2) + 2) % 2)
                        return false;
        return true;
    }

private:
    VarSetPtr vars_;
    SpacePtr space_;
    int trunc_;
    std::map<int, Series> c_;
};

HbarElement hbar_zero(VarSetPtr vars, SpacePtr space, int trunc);
HbarElement hbar_of_series(const Series& s, int halfstep = 0);

HbarElement add(const HbarElement& a, const HbarElement& b);
HbarElement sub(const HbarElement& a, const HbarElement& b);
HbarElement scale(const Rat& c, const HbarElement& a);
HbarElement negate(const HbarElement& a);

/// Multiplication by hbar^{k/2}.
HbarElement shift_halfstep(const HbarElement& a, int k, const Window& w);

/// Projection H[[hbar^{-1},hbar]] -> H[[hbar]] along strictly negative powers;
/// idempotent, exponent-disjoint complement.
HbarElement project_plus(const HbarElement& a);
HbarElement project_minus(const HbarElement& a);

HbarElement apply_linear(const LinearMap& f, const HbarElement& a);
HbarElement apply_bilinear_hbar(const Bilinear& B, const Series& a, const HbarElement& b);
HbarElement derivative(const HbarElement& a, int var);

/// Left action of a scalar Laurent coefficient on a vector-valued one.
HbarElement scalar_mul(const HbarElement& s, const HbarElement& a, const Window& w);
HbarElement scalar_series_mul(const Series& s, const HbarElement& a);

/// Rescaling v -> hbar^{charge(v)/2} v, component-wise over the value space.
HbarElement apply_l(const HbarElement& a, const Window& w);
HbarElement apply_l_inverse(const HbarElement& a, const Window& w);

/// hbar-extended pairing: G(u hbar^{i/2}, w hbar^{j/2}) =
/// eps(j) hbar^{(i+j)/2} G(u, w) with eps(j) = (-1)^{ceil(j/2)}, so moving a
/// full power of hbar across the slots flips the sign: G(hbar a, b) =
/// -G(a, hbar b) = hbar G(a, b).
HbarElement pair_twisted(const Bilinear& G, const HbarElement& a, const HbarElement& b,
                         const Window& w);

} // namespace qp
