#pragma once

#include "qp/graded.hpp"
#include "qp/linalg.hpp"

namespace qp {

/// Degree- and charge-homogeneous linear map between graded spaces. The
/// matrix is validated at construction: entries vanish unless
/// dst degree = src degree + deg_shift and dst charge = src charge + charge_shift.
class LinearMap {
public:
    LinearMap(SpacePtr src, SpacePtr dst, int deg_shift, int charge_shift, QMat m)
        : src_(std::move(src)), dst_(std::move(dst)),
          deg_shift_(deg_shift), charge_shift_(charge_shift), m_(std::move(m)) {
        if (m_.rows != dst_->dim() || m_.cols != src_->dim())
            throw std::invalid_argument("LinearMap: matrix shape mismatch");
        for (int r = 0; r < m_.rows; ++r)
            for (int c = 0; c < m_.cols; ++c)
                if (!qp::is_zero(m_.at(r, c)) &&
                    (dst_->degree(r) != src_->degree(c) + deg_shift_ ||
                     dst_->charge(r) != src_->charge(c) + charge_shift_))
                    throw std::invalid_argument(
                        "LinearMap: entry (" + std::to_string(r) + "," + std::to_string(c) +
                        ") violates the declared degree/charge shift");
    }

    static LinearMap zero(SpacePtr src, SpacePtr dst, int deg_shift, int charge_shift) {
        QMat m(dst->dim(), src->dim());
        return LinearMap(std::move(src), std::move(dst), deg_shift, charge_shift, std::move(m));
    }
    static LinearMap identity(SpacePtr s) {
        QMat m = QMat::identity(s->dim());
        return LinearMap(s, s, 0, 0, std::move(m));
    }

    const SpacePtr& src() const { return src_; }
    const SpacePtr& dst() const { return dst_; }
    int deg_shift() const { return deg_shift_; }
    int charge_shift() const { return charge_shift_; }
    int parity() const { return ((deg_shift_ % 2) + 2) % 2; }
    const QMat& matrix() const { return m_; }
    bool is_zero() const { return m_.is_zero(); }

    QVec apply(const QVec& v) const { return mat_apply(m_, v); }

private:
    SpacePtr src_, dst_;
    int deg_shift_, charge_shift_;
    QMat m_;
};

LinearMap compose(const LinearMap& a, const LinearMap& b);   // a after b
LinearMap map_add(const LinearMap& a, const LinearMap& b);
LinearMap map_scale(const Rat& c, const LinearMap& a);

/// Graded commutator [a,b] = a b - (-1)^{|a||b|} b a of endomorphisms,
/// with |.| the declared degree shift.
LinearMap graded_commutator(const LinearMap& a, const LinearMap& b);

/// Bilinear map U x V -> W, homogeneous of the declared degree/charge shift:
/// B(u,v) has degree deg u + deg v + deg_shift, same for charges. Stored as a
/// dense 3-tensor, validated at construction.
class Bilinear {
public:
    Bilinear(SpacePtr u, SpacePtr v, SpacePtr w, int deg_shift, int charge_shift,
             std::vector<std::vector<QVec>> t)
        : u_(std::move(u)), v_(std::move(v)), w_(std::move(w)),
          deg_shift_(deg_shift), charge_shift_(charge_shift), t_(std::move(t)) {
        if (int(t_.size()) != u_->dim()) throw std::invalid_argument("Bilinear: bad tensor");
        for (int i = 0; i < u_->dim(); ++i) {
            if (int(t_[i].size()) != v_->dim()) throw std::invalid_argument("Bilinear: bad tensor");
            for (int j = 0; j < v_->dim(); ++j) {
                if (int(t_[i][j].size()) != w_->dim()) throw std::invalid_argument("Bilinear: bad tensor");
                for (int k = 0; k < w_->dim(); ++k)
                    if (!is_zero(t_[i][j][k]) &&
                        (w_->degree(k) != u_->degree(i) + v_->degree(j) + deg_shift_ ||
                         w_->charge(k) != u_->charge(i) + v_->charge(j) + charge_shift_))
                        throw std::invalid_argument("Bilinear: tensor entry violates declared shifts");
            }
        }
    }

    static Bilinear zero(SpacePtr u, SpacePtr v, SpacePtr w, int deg_shift, int charge_shift) {
        std::vector<std::vector<QVec>> t(u->dim(), std::vector<QVec>(v->dim(), QVec(w->dim(), Rat(0))));
        return Bilinear(std::move(u), std::move(v), std::move(w), deg_shift, charge_shift, std::move(t));
    }

    const SpacePtr& left() const { return u_; }
    const SpacePtr& right() const { return v_; }
    const SpacePtr& out() const { return w_; }
    int deg_shift() const { return deg_shift_; }
    int charge_shift() const { return charge_shift_; }
    const QVec& at(int i, int j) const { return t_[i][j]; }

    QVec apply(const QVec& u, const QVec& v) const {
        QVec r(w_->dim(), Rat(0));
        for (int i = 0; i < u_->dim(); ++i) {
            if (is_zero(u[i])) continue;
            for (int j = 0; j < v_->dim(); ++j) {
                if (is_zero(v[j])) continue;
                Rat c = u[i] * v[j];
                vec_accum(r, c, t_[i][j]);
            }
        }
        return r;
    }

    /// Partial application in the left slot at a basis vector: v -> B(e_i, v).
    LinearMap fix_left_basis(int i) const;

private:
    SpacePtr u_, v_, w_;
    int deg_shift_, charge_shift_;
    std::vector<std::vector<QVec>> t_;
};

} // namespace qp
