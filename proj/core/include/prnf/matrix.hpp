#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "prnf/error.hpp"

namespace prnf {

// Dense row-major matrix of 64-bit floats. Vectors are 1-by-n or n-by-1
// matrices; scalars on the tape are 1-by-1.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols);
    Matrix(int rows, int cols, double fill);
    static Matrix from(std::initializer_list<std::initializer_list<double>> rows);
    static Matrix row_vector(const std::vector<double>& values);
    static Matrix col_vector(const std::vector<double>& values);
    static Matrix identity(int n);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row_ptr(int r) { return data_.data() + static_cast<std::size_t>(r) * cols_; }
    const double* row_ptr(int r) const { return data_.data() + static_cast<std::size_t>(r) * cols_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    bool is_scalar() const { return rows_ == 1 && cols_ == 1; }
    double scalar() const;

    bool all_finite() const;
    void fill(double v);

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

bool operator==(const Matrix& a, const Matrix& b);

// C = A * B
Matrix matmul(const Matrix& a, const Matrix& b);
// C = A * B^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);
// C = A^T * B
Matrix matmul_tn(const Matrix& a, const Matrix& b);

// In-place accumulating kernels used by the tape's backward pass.
void add_matmul(Matrix& c, const Matrix& a, const Matrix& b);
void add_matmul_nt(Matrix& c, const Matrix& a, const Matrix& b);
void add_matmul_tn(Matrix& c, const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double c);
void axpy(Matrix& y, double alpha, const Matrix& x); // y += alpha * x

double frobenius_sq(const Matrix& a);
double dot(const Matrix& a, const Matrix& b);

// Per-column mean and standard deviation (denominator n, not n-1).
void column_mean_std(const Matrix& a, std::vector<double>& mean, std::vector<double>& std_dev);

} // namespace prnf
