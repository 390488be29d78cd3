#pragma once

#include "prnf/matrix.hpp"

namespace prnf {

// Householder QR of a square matrix, factored in place and kept around so the
// backward pass of log|det| can reuse it for solves against A^T.
//
// qr holds R in the upper triangle; column j's Householder vector v_j sits
// below the diagonal with the convention v_j[j] = 1 (the unit entry is
// implicit, betas[j] stores the reflector coefficient). betas[j] == 0 marks an
// identity reflection.
struct QrFactors {
    Matrix qr;
    std::vector<double> betas;

    int n() const { return qr.rows(); }

    // log|det A| and sign(det A). sign == 0 iff some R_ii == 0; callers treat
    // that as a singular Jacobian.
    double log_abs_det() const;
    int det_sign() const;

    // Solve A x = b (len-n vectors) via Q^T b then back substitution.
    void solve(const double* b, double* x) const;
    // Solve A^T x = b via forward substitution on R^T then applying Q.
    void solve_transposed(const double* b, double* x) const;

    // dL/dA for L = log|det A| equals (A^{-1})^T = (A^T)^{-1}. Returns it
    // scaled by `seed` (the incoming adjoint of the log-det scalar).
    Matrix inverse_transpose_scaled(double seed) const;
};

QrFactors householder_qr(const Matrix& a);

// Cholesky factor L (lower triangular, A = L L^T). Throws DegenerateDensityError
// if A is not positive definite.
Matrix cholesky(const Matrix& a);

// Solve L y = b with L lower triangular.
void forward_subst(const Matrix& l, const double* b, double* y);
// Solve L^T x = y with L lower triangular.
void backward_subst_lt(const Matrix& l, const double* y, double* x);

// log(det A) for symmetric positive definite A, via Cholesky.
double log_det_spd(const Matrix& a);

// Inverse of a symmetric positive definite matrix, via Cholesky.
Matrix spd_inverse(const Matrix& a);

} // namespace prnf
