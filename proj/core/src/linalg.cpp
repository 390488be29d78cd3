#include "prnf/linalg.hpp"

#include "prnf/error.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace prnf {

QrFactors householder_qr(const Matrix& a) {
    if (a.rows() != a.cols()) throw ShapeError("householder_qr: matrix not square");
    const int n = a.rows();
    QrFactors f;
    f.qr = a;
    f.betas.assign(n, 0.0);
    Matrix& m = f.qr;

    std::vector<double> v(n);
    for (int j = 0; j < n - 1; ++j) {
        // Build the reflector for column j from rows j..n-1.
        double below_sq = 0.0;
        for (int i = j + 1; i < n; ++i) below_sq += m(i, j) * m(i, j);
        if (below_sq == 0.0) continue; // nothing to annihilate; R_jj stays m(j,j)
        const double alpha = m(j, j);
        const double norm = std::sqrt(alpha * alpha + below_sq);

        // v = x + sign(alpha)*||x||*e1, normalized so v[j] = 1.
        const double s = (alpha >= 0.0) ? norm : -norm;
        const double v0 = alpha + s;
        v[j] = 1.0;
        for (int i = j + 1; i < n; ++i) v[i] = m(i, j) / v0;
        double vtv = 1.0;
        for (int i = j + 1; i < n; ++i) vtv += v[i] * v[i];
        const double beta = 2.0 / vtv;
        f.betas[j] = beta;

        // Apply H = I - beta v v^T to the trailing submatrix.
        for (int c = j; c < n; ++c) {
            double w = 0.0;
            for (int i = j; i < n; ++i) w += v[i] * m(i, c);
            w *= beta;
            for (int i = j; i < n; ++i) m(i, c) -= w * v[i];
        }
        // R_jj = -s exactly; store it and stash v below the diagonal.
        m(j, j) = -s;
        for (int i = j + 1; i < n; ++i) m(i, j) = v[i];
    }
    return f;
}

double QrFactors::log_abs_det() const {
    double s = 0.0;
    const int d = n();
    for (int i = 0; i < d; ++i) {
        const double r = qr(i, i);
        if (r == 0.0) return -std::numeric_limits<double>::infinity();
        s += std::log(std::fabs(r));
    }
    return s;
}

int QrFactors::det_sign() const {
    int sign = 1;
    const int d = n();
    for (int i = 0; i < d; ++i) {
        const double r = qr(i, i);
        if (r == 0.0) return 0;
        if (r < 0.0) sign = -sign;
    }
    for (int j = 0; j < d; ++j) {
        if (betas[j] != 0.0) sign = -sign; // each nontrivial reflector has det -1
    }
    return sign;
}

namespace {

// y <- Q^T y, applying reflectors in factorization order.
void apply_qt(const QrFactors& f, double* y) {
    const int n = f.n();
    for (int j = 0; j < n - 1; ++j) {
        const double beta = f.betas[j];
        if (beta == 0.0) continue;
        double w = y[j]; // v[j] == 1
        for (int i = j + 1; i < n; ++i) w += f.qr(i, j) * y[i];
        w *= beta;
        y[j] -= w;
        for (int i = j + 1; i < n; ++i) y[i] -= w * f.qr(i, j);
    }
}

// y <- Q y, applying reflectors in reverse order.
void apply_q(const QrFactors& f, double* y) {
    const int n = f.n();
    for (int j = n - 2; j >= 0; --j) {
        const double beta = f.betas[j];
        if (beta == 0.0) continue;
        double w = y[j];
        for (int i = j + 1; i < n; ++i) w += f.qr(i, j) * y[i];
        w *= beta;
        y[j] -= w;
        for (int i = j + 1; i < n; ++i) y[i] -= w * f.qr(i, j);
    }
}

} // namespace

void QrFactors::solve(const double* b, double* x) const {
    const int d = n();
    for (int i = 0; i < d; ++i) x[i] = b[i];
    apply_qt(*this, x);
    for (int i = d - 1; i >= 0; --i) {
        double s = x[i];
        for (int j = i + 1; j < d; ++j) s -= qr(i, j) * x[j];
        x[i] = s / qr(i, i);
    }
}

void QrFactors::solve_transposed(const double* b, double* x) const {
    // A^T = R^T Q^T, so solve R^T y = b (forward) then x = Q y.
    const int d = n();
    for (int i = 0; i < d; ++i) {
        double s = b[i];
        for (int j = 0; j < i; ++j) s -= qr(j, i) * x[j];
        x[i] = s / qr(i, i);
    }
    apply_q(*this, x);
}

Matrix QrFactors::inverse_transpose_scaled(double seed) const {
    const int d = n();
    Matrix g(d, d);
    std::vector<double> e(d, 0.0), col(d);
    // Column i of (A^T)^{-1} solves A^T col = e_i; that column is row-scatter
    // of (A^{-1})^T as well, so write it as column i of g.
    for (int i = 0; i < d; ++i) {
        e[i] = 1.0;
        solve_transposed(e.data(), col.data());
        e[i] = 0.0;
        for (int r = 0; r < d; ++r) g(r, i) = seed * col[r];
    }
    return g;
}

Matrix cholesky(const Matrix& a) {
    if (a.rows() != a.cols()) throw ShapeError("cholesky: matrix not square");
    const int n = a.rows();
    Matrix l(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s <= 0.0) throw DegenerateDensityError("cholesky: matrix not positive definite");
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return l;
}

void forward_subst(const Matrix& l, const double* b, double* y) {
    const int n = l.rows();
    for (int i = 0; i < n; ++i) {
        double s = b[i];
        for (int j = 0; j < i; ++j) s -= l(i, j) * y[j];
        y[i] = s / l(i, i);
    }
}

void backward_subst_lt(const Matrix& l, const double* y, double* x) {
    const int n = l.rows();
    for (int i = n - 1; i >= 0; --i) {
        double s = y[i];
        for (int j = i + 1; j < n; ++j) s -= l(j, i) * x[j];
        x[i] = s / l(i, i);
    }
}

double log_det_spd(const Matrix& a) {
    Matrix l = cholesky(a);
    double s = 0.0;
    for (int i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
    return 2.0 * s;
}

Matrix spd_inverse(const Matrix& a) {
    const int n = a.rows();
    Matrix l = cholesky(a);
    Matrix inv(n, n);
    std::vector<double> e(n, 0.0), y(n), x(n);
    for (int i = 0; i < n; ++i) {
        e[i] = 1.0;
        forward_subst(l, e.data(), y.data());
        backward_subst_lt(l, y.data(), x.data());
        e[i] = 0.0;
        for (int r = 0; r < n; ++r) inv(r, i) = x[r];
    }
    return inv;
}

} // namespace prnf
