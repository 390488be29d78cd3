#include "prnf/matrix.hpp"

#include <cmath>
#include <cstring>

namespace prnf {

Matrix::Matrix(int rows, int cols) : rows_(rows), cols_(cols) {
    if (rows < 0 || cols < 0 || (rows == 0) != (cols == 0)) {
        throw ShapeError("Matrix: invalid dimensions");
    }
    data_.assign(static_cast<std::size_t>(rows) * cols, 0.0);
}

Matrix::Matrix(int rows, int cols, double fill) : Matrix(rows, cols) {
    data_.assign(data_.size(), fill);
}

Matrix Matrix::from(std::initializer_list<std::initializer_list<double>> rows) {
    const int r = static_cast<int>(rows.size());
    const int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
    Matrix m(r, c);
    int i = 0;
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != c) throw ShapeError("Matrix::from: ragged rows");
        int j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

Matrix Matrix::row_vector(const std::vector<double>& values) {
    Matrix m(1, static_cast<int>(values.size()));
    std::memcpy(m.data(), values.data(), values.size() * sizeof(double));
    return m;
}

Matrix Matrix::col_vector(const std::vector<double>& values) {
    Matrix m(static_cast<int>(values.size()), 1);
    std::memcpy(m.data(), values.data(), values.size() * sizeof(double));
    return m;
}

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

double Matrix::scalar() const {
    if (!is_scalar()) throw ShapeError("Matrix::scalar: not a 1x1 matrix");
    return data_[0];
}

bool Matrix::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Matrix::fill(double v) { data_.assign(data_.size(), v); }

bool operator==(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) return false;
    return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

namespace {

void require(bool cond, const char* msg) {
    if (!cond) throw ShapeError(msg);
}

} // namespace

void add_matmul(Matrix& c, const Matrix& a, const Matrix& b) {
    require(a.cols() == b.rows(), "matmul: inner dimensions differ");
    require(c.rows() == a.rows() && c.cols() == b.cols(), "matmul: output shape mismatch");
    const int n = a.rows(), k = a.cols(), m = b.cols();
    for (int i = 0; i < n; ++i) {
        const double* arow = a.row_ptr(i);
        double* crow = c.row_ptr(i);
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b.row_ptr(p);
            for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.rows(), "matmul: inner dimensions differ");
    Matrix c(a.rows(), b.cols());
    add_matmul(c, a, b);
    return c;
}

void add_matmul_nt(Matrix& c, const Matrix& a, const Matrix& b) {
    require(a.cols() == b.cols(), "matmul_nt: inner dimensions differ");
    require(c.rows() == a.rows() && c.cols() == b.rows(), "matmul_nt: output shape mismatch");
    const int n = a.rows(), k = a.cols(), m = b.rows();
    for (int i = 0; i < n; ++i) {
        const double* arow = a.row_ptr(i);
        double* crow = c.row_ptr(i);
        for (int j = 0; j < m; ++j) {
            const double* brow = b.row_ptr(j);
            double s = 0.0;
            for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
            crow[j] += s;
        }
    }
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.cols(), "matmul_nt: inner dimensions differ");
    Matrix c(a.rows(), b.rows());
    add_matmul_nt(c, a, b);
    return c;
}

void add_matmul_tn(Matrix& c, const Matrix& a, const Matrix& b) {
    require(a.rows() == b.rows(), "matmul_tn: inner dimensions differ");
    require(c.rows() == a.cols() && c.cols() == b.cols(), "matmul_tn: output shape mismatch");
    const int n = a.rows(), k = a.cols(), m = b.cols();
    for (int p = 0; p < n; ++p) {
        const double* arow = a.row_ptr(p);
        const double* brow = b.row_ptr(p);
        for (int i = 0; i < k; ++i) {
            const double av = arow[i];
            if (av == 0.0) continue;
            double* crow = c.row_ptr(i);
            for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    require(a.rows() == b.rows(), "matmul_tn: inner dimensions differ");
    Matrix c(a.cols(), b.cols());
    add_matmul_tn(c, a, b);
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
    require(a.same_shape(b), "add: shape mismatch");
    Matrix c = a;
    const double* bp = b.data();
    double* cp = c.data();
    for (std::size_t i = 0; i < c.size(); ++i) cp[i] += bp[i];
    return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    require(a.same_shape(b), "sub: shape mismatch");
    Matrix c = a;
    const double* bp = b.data();
    double* cp = c.data();
    for (std::size_t i = 0; i < c.size(); ++i) cp[i] -= bp[i];
    return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require(a.same_shape(b), "hadamard: shape mismatch");
    Matrix c = a;
    const double* bp = b.data();
    double* cp = c.data();
    for (std::size_t i = 0; i < c.size(); ++i) cp[i] *= bp[i];
    return c;
}

Matrix scale(const Matrix& a, double c) {
    Matrix r = a;
    double* p = r.data();
    for (std::size_t i = 0; i < r.size(); ++i) p[i] *= c;
    return r;
}

void axpy(Matrix& y, double alpha, const Matrix& x) {
    require(y.same_shape(x), "axpy: shape mismatch");
    double* yp = y.data();
    const double* xp = x.data();
    for (std::size_t i = 0; i < y.size(); ++i) yp[i] += alpha * xp[i];
}

double frobenius_sq(const Matrix& a) {
    double s = 0.0;
    const double* p = a.data();
    for (std::size_t i = 0; i < a.size(); ++i) s += p[i] * p[i];
    return s;
}

double dot(const Matrix& a, const Matrix& b) {
    require(a.same_shape(b), "dot: shape mismatch");
    double s = 0.0;
    const double* ap = a.data();
    const double* bp = b.data();
    for (std::size_t i = 0; i < a.size(); ++i) s += ap[i] * bp[i];
    return s;
}

void column_mean_std(const Matrix& a, std::vector<double>& mean, std::vector<double>& std_dev) {
    const int n = a.rows(), c = a.cols();
    require(n > 0, "column_mean_std: empty matrix");
    mean.assign(c, 0.0);
    std_dev.assign(c, 0.0);
    for (int i = 0; i < n; ++i) {
        const double* row = a.row_ptr(i);
        for (int j = 0; j < c; ++j) mean[j] += row[j];
    }
    for (int j = 0; j < c; ++j) mean[j] /= n;
    for (int i = 0; i < n; ++i) {
        const double* row = a.row_ptr(i);
        for (int j = 0; j < c; ++j) {
            const double d = row[j] - mean[j];
            std_dev[j] += d * d;
        }
    }
    for (int j = 0; j < c; ++j) std_dev[j] = std::sqrt(std_dev[j] / n);
}

} // namespace prnf
