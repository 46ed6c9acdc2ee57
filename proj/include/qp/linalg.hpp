#pragma once

#include "qp/rational.hpp"

#include <optional>
#include <vector>

namespace qp {

/// Dense matrix over exact rationals, row-major.
struct QMat {
    int rows = 0, cols = 0;
    QVec a;

    QMat() = default;
    QMat(int r, int c) : rows(r), cols(c), a(size_t(r) * size_t(c)) {}

    Rat& at(int r, int c) { return a[size_t(r) * cols + c]; }
    const Rat& at(int r, int c) const { return a[size_t(r) * cols + c]; }

    static QMat identity(int n) {
        QMat m(n, n);
        for (int i = 0; i < n; ++i) m.at(i, i) = 1;
        return m;
    }
    bool is_zero() const { return vec_is_zero(a); }
};

QMat mat_mul(const QMat& A, const QMat& B);
QVec mat_apply(const QMat& A, const QVec& v);
QMat mat_add(const QMat& A, const QMat& B);
QMat mat_scale(const Rat& c, const QMat& A);
QMat mat_transpose(const QMat& A);

/// Outcome of an exact linear solve Mx = b.
struct SolveResult {
    bool consistent = false;
    QVec particular;            // free variables set to zero
    std::vector<QVec> kernel;   // basis of ker M (one vector per free column)
    QVec residual;              // b - M*particular; zero iff consistent
};

/// Gaussian elimination with the fixed pivot rule: sweep columns left to
/// right, pivot on the first row (top-down) with a nonzero entry. All results
/// are reproducible bit-for-bit.
SolveResult solve_linear(const QMat& M, const QVec& b);

int rank(const QMat& M);
std::vector<QVec> kernel_basis(const QMat& M);
std::optional<QMat> inverse(const QMat& M);

/// Reusable LU-style factorization of a fixed matrix, for repeated solves
/// against many right-hand sides with the same deterministic pivoting.
class Factorization {
public:
    explicit Factorization(const QMat& M);

    int rank() const { return int(pivot_cols_.size()); }
    bool unique() const { return rank() == cols_; }

    /// Particular solution with free variables zero, or nullopt if inconsistent.
    std::optional<QVec> solve(const QVec& b) const;

    const std::vector<int>& pivot_columns() const { return pivot_cols_; }
    std::vector<QVec> kernel() const;

private:
    int rows_, cols_;
    QMat red_;                      // row-reduced M
    std::vector<int> pivot_cols_;   // pivot column per reduced row
    std::vector<std::vector<Rat>> row_ops_;  // applied elimination, row form of E with E*M = red_
};

} // namespace qp
