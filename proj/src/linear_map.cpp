#include "qp/linear_map.hpp"

namespace qp {

LinearMap compose(const LinearMap& a, const LinearMap& b) {
    if (!same_space(a.src(), b.dst()))
        throw std::invalid_argument("compose: space mismatch");
    return LinearMap(b.src(), a.dst(), a.deg_shift() + b.deg_shift(),
                     a.charge_shift() + b.charge_shift(), mat_mul(a.matrix(), b.matrix()));
}

LinearMap map_add(const LinearMap& a, const LinearMap& b) {
    if (!same_space(a.src(), b.src()) || !same_space(a.dst(), b.dst()) ||
        a.deg_shift() != b.deg_shift() || a.charge_shift() != b.charge_shift())
        throw std::invalid_argument("map_add: incompatible maps");
    return LinearMap(a.src(), a.dst(), a.deg_shift(), a.charge_shift(),
                     mat_add(a.matrix(), b.matrix()));
}

LinearMap map_scale(const Rat& c, const LinearMap& a) {
    return LinearMap(a.src(), a.dst(), a.deg_shift(), a.charge_shift(), mat_scale(c, a.matrix()));
}

LinearMap graded_commutator(const LinearMap& a, const LinearMap& b) {
    int sign = (a.parity() && b.parity()) ? -1 : 1;
    LinearMap ab = compose(a, b);
    LinearMap ba = compose(b, a);
    return map_add(ab, map_scale(Rat(-sign), ba));
}

LinearMap Bilinear::fix_left_basis(int i) const {
    QMat m(w_->dim(), v_->dim());
    for (int j = 0; j < v_->dim(); ++j)
        for (int k = 0; k < w_->dim(); ++k) m.at(k, j) = t_[i][j][k];
    return LinearMap(v_, w_, u_->degree(i) + deg_shift_, u_->charge(i) + charge_shift_, std::move(m));
}

} // namespace qp
