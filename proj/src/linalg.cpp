#include "qp/linalg.hpp"

#include <cassert>

namespace qp {

QMat mat_mul(const QMat& A, const QMat& B) {
    assert(A.cols == B.rows);
    QMat C(A.rows, B.cols);
    for (int i = 0; i < A.rows; ++i)
        for (int k = 0; k < A.cols; ++k) {
            const Rat& aik = A.at(i, k);
            if (is_zero(aik)) continue;
            for (int j = 0; j < B.cols; ++j) {
                const Rat& bkj = B.at(k, j);
                if (!is_zero(bkj)) C.at(i, j) += aik * bkj;
            }
        }
    return C;
}

QVec mat_apply(const QMat& A, const QVec& v) {
    assert(int(v.size()) == A.cols);
    QVec r(A.rows);
    for (int i = 0; i < A.rows; ++i)
        for (int j = 0; j < A.cols; ++j) {
            const Rat& aij = A.at(i, j);
            if (!is_zero(aij) && !is_zero(v[j])) r[i] += aij * v[j];
        }
    return r;
}

QMat mat_add(const QMat& A, const QMat& B) {
    assert(A.rows == B.rows && A.cols == B.cols);
    QMat C(A.rows, A.cols);
    for (size_t i = 0; i < C.a.size(); ++i) C.a[i] = A.a[i] + B.a[i];
    return C;
}

QMat mat_scale(const Rat& c, const QMat& A) {
    QMat C(A.rows, A.cols);
    for (size_t i = 0; i < C.a.size(); ++i) C.a[i] = c * A.a[i];
    return C;
}

QMat mat_transpose(const QMat& A) {
    QMat C(A.cols, A.rows);
    for (int i = 0; i < A.rows; ++i)
        for (int j = 0; j < A.cols; ++j) C.at(j, i) = A.at(i, j);
    return C;
}

Factorization::Factorization(const QMat& M) : rows_(M.rows), cols_(M.cols), red_(M) {
    row_ops_.assign(rows_, std::vector<Rat>());
    for (int i = 0; i < rows_; ++i) {
        row_ops_[i].assign(rows_, Rat(0));
        row_ops_[i][i] = 1;
    }
    int row = 0;
    for (int col = 0; col < cols_ && row < rows_; ++col) {
        int piv = -1;
        for (int r = row; r < rows_; ++r)
            if (!is_zero(red_.at(r, col))) { piv = r; break; }
        if (piv < 0) continue;
        if (piv != row) {
            for (int c = 0; c < cols_; ++c) swap(red_.at(piv, c), red_.at(row, c));
            std::swap(row_ops_[piv], row_ops_[row]);
        }
        Rat inv = 1 / red_.at(row, col);
        for (int c = 0; c < cols_; ++c) red_.at(row, c) *= inv;
        for (auto& x : row_ops_[row]) x *= inv;
        for (int r = 0; r < rows_; ++r) {
            if (r == row) continue;
            Rat f = red_.at(r, col);
            if (is_zero(f)) continue;
            for (int c = col; c < cols_; ++c) red_.at(r, c) -= f * red_.at(row, c);
            for (int c = 0; c < rows_; ++c) row_ops_[r][c] -= f * row_ops_[row][c];
        }
        pivot_cols_.push_back(col);
        ++row;
    }
}

std::optional<QVec> Factorization::solve(const QVec& b) const {
    assert(int(b.size()) == rows_);
    // transformed rhs: E*b
    QVec tb(rows_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < rows_; ++j)
            if (!is_zero(row_ops_[i][j]) && !is_zero(b[j])) tb[i] += row_ops_[i][j] * b[j];
    int r = rank();
    for (int i = r; i < rows_; ++i)
        if (!is_zero(tb[i])) return std::nullopt;
    QVec x(cols_, Rat(0));
    for (int i = 0; i < r; ++i) x[pivot_cols_[i]] = tb[i];
    return x;
}

std::vector<QVec> Factorization::kernel() const {
    std::vector<bool> is_piv(cols_, false);
    for (int c : pivot_cols_) is_piv[c] = true;
    std::vector<QVec> basis;
    for (int c = 0; c < cols_; ++c) {
        if (is_piv[c]) continue;
        QVec v(cols_, Rat(0));
        v[c] = 1;
        for (size_t i = 0; i < pivot_cols_.size(); ++i) v[pivot_cols_[i]] = -red_.at(int(i), c);
        basis.push_back(std::move(v));
    }
    return basis;
}

SolveResult solve_linear(const QMat& M, const QVec& b) {
    Factorization f(M);
    SolveResult res;
    res.kernel = f.kernel();
    auto x = f.solve(b);
    if (x) {
        res.consistent = true;
        res.particular = *x;
        res.residual.assign(b.size(), Rat(0));
    } else {
        res.consistent = false;
        // Particular solution of the solvable sub-system (eliminate [M|b] with
        // the same pivot rule, never pivoting on the rhs column); the residual
        // b - M*x then exhibits the inconsistency.
        QMat aug(M.rows, M.cols + 1);
        for (int i = 0; i < M.rows; ++i) {
            for (int j = 0; j < M.cols; ++j) aug.at(i, j) = M.at(i, j);
            aug.at(i, M.cols) = b[i];
        }
        int row = 0;
        std::vector<int> pivcols;
        for (int col = 0; col < M.cols && row < M.rows; ++col) {
            int piv = -1;
            for (int r = row; r < M.rows; ++r)
                if (!is_zero(aug.at(r, col))) { piv = r; break; }
            if (piv < 0) continue;
            if (piv != row)
                for (int c = 0; c <= M.cols; ++c) swap(aug.at(piv, c), aug.at(row, c));
            Rat inv = 1 / aug.at(row, col);
            for (int c = 0; c <= M.cols; ++c) aug.at(row, c) *= inv;
            for (int r = 0; r < M.rows; ++r) {
                if (r == row) continue;
                Rat fr = aug.at(r, col);
                if (is_zero(fr)) continue;
                for (int c = col; c <= M.cols; ++c) aug.at(r, c) -= fr * aug.at(row, c);
            }
            pivcols.push_back(col);
            ++row;
        }
        QVec part(M.cols, Rat(0));
        for (size_t i = 0; i < pivcols.size(); ++i) part[pivcols[i]] = aug.at(int(i), M.cols);
        res.particular = part;
        QVec mx = mat_apply(M, part);
        res.residual.assign(b.size(), Rat(0));
        for (size_t i = 0; i < b.size(); ++i) res.residual[i] = b[i] - mx[i];
    }
    return res;
}

int rank(const QMat& M) { return Factorization(M).rank(); }

std::vector<QVec> kernel_basis(const QMat& M) { return Factorization(M).kernel(); }

std::optional<QMat> inverse(const QMat& M) {
    if (M.rows != M.cols) return std::nullopt;
    Factorization f(M);
    if (f.rank() != M.rows) return std::nullopt;
    QMat inv(M.rows, M.cols);
    for (int j = 0; j < M.cols; ++j) {
        QVec e(M.rows, Rat(0));
        e[j] = 1;
        auto x = f.solve(e);
        if (!x) return std::nullopt;
        for (int i = 0; i < M.rows; ++i) inv.at(i, j) = (*x)[i];
    }
    return inv;
}

} // namespace qp
