#pragma once

#include <gmpxx.h>
#include <stdexcept>
#include <string>
#include <vector>

namespace qp {

using Rat = mpq_class;
using QVec = std::vector<Rat>;

inline bool is_zero(const Rat& x) { return sgn(x) == 0; }

/// Canonicalized fraction. mpq_class(p, q) alone does not reduce and GMP
/// comparisons assume canonical form, so every two-argument construction
/// must go through here (or call canonicalize()).
inline Rat frac(long p, long q) {
    Rat r(p, q);
    r.canonicalize();
    return r;
}

/// Parse an exact rational from "p" or "p/q". Throws on malformed input or q == 0.
inline Rat rat_parse(const std::string& s) {
    if (s.empty()) throw std::invalid_argument("empty rational literal");
    Rat r;
    if (r.set_str(s, 10) != 0) throw std::invalid_argument("bad rational literal: " + s);
    if (sgn(r.get_den()) == 0) throw std::invalid_argument("zero denominator: " + s);
    r.canonicalize();
    return r;
}

/// Canonical form: "p" when the denominator is 1, else "p/q" with q > 0.
inline std::string rat_str(const Rat& x) { return x.get_str(); }

inline bool vec_is_zero(const QVec& v) {
    for (const auto& x : v)
        if (!is_zero(x)) return false;
    return true;
}

inline QVec vec_add(const QVec& a, const QVec& b) {
    QVec r(a.size());
    for (size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
    return r;
}

inline QVec vec_scale(const Rat& c, const QVec& v) {
    QVec r(v.size());
    for (size_t i = 0; i < v.size(); ++i) r[i] = c * v[i];
    return r;
}

inline void vec_accum(QVec& acc, const Rat& c, const QVec& v) {
    for (size_t i = 0; i < v.size(); ++i) acc[i] += c * v[i];
}

} // namespace qp
