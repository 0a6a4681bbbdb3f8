#pragma once

#include <cstddef>
#include <vector>

#include "fluxcast/errors.hpp"

namespace fluxcast::num {

// Dense row-major matrix of 64-bit floats. The only tensor shape in the
// project; vectors are n x 1 (column) or 1 x n (row) matrices.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);
    static Matrix row_vector(std::vector<double> v);
    static Matrix col_vector(std::vector<double> v);
    static Matrix scalar(double v) { return Matrix(1, 1, {v}); }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& at(std::size_t i) { return data_[i]; }
    double at(std::size_t i) const { return data_[i]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    bool all_finite() const;

    Matrix row(std::size_t r) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& m, double c);

Matrix sigmoid(const Matrix& x);
Matrix tanh_m(const Matrix& x);
Matrix relu(const Matrix& x);

// Adds a 1 x n row vector to every row of an m x n matrix.
Matrix add_rowvec(const Matrix& m, const Matrix& row);
// Multiplies row r of m by col(r, 0); col is rows x 1.
Matrix scale_rows(const Matrix& m, const Matrix& col);
// m x n -> m x 1 row sums.
Matrix rowsum(const Matrix& m);
// Horizontal concatenation; all parts share a row count.
Matrix hconcat(const std::vector<Matrix>& parts);

double scalar_sigmoid(double x);

} // namespace fluxcast::num
