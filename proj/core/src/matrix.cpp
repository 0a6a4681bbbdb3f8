#include "fluxcast/matrix.hpp"

#include <cmath>
#include <utility>

namespace fluxcast::num {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
        throw ShapeError("matrix data length does not match rows*cols");
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::row_vector(std::vector<double> v) {
    std::size_t n = v.size();
    return Matrix(1, n, std::move(v));
}

Matrix Matrix::col_vector(std::vector<double> v) {
    std::size_t n = v.size();
    return Matrix(n, 1, std::move(v));
}

bool Matrix::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

Matrix Matrix::row(std::size_t r) const {
    Matrix out(1, cols_);
    for (std::size_t c = 0; c < cols_; ++c) out(0, c) = (*this)(r, c);
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul: inner dimensions disagree");
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j)
                out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            out(j, i) = m(i, j);
    return out;
}

namespace {

template <class F>
Matrix zip(const Matrix& a, const Matrix& b, const char* op, F f) {
    if (!a.same_shape(b)) throw ShapeError(std::string(op) + ": shape mismatch");
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out.at(i) = f(a.at(i), b.at(i));
    return out;
}

template <class F>
Matrix map(const Matrix& m, F f) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.size(); ++i) out.at(i) = f(m.at(i));
    return out;
}

} // namespace

Matrix add(const Matrix& a, const Matrix& b) {
    return zip(a, b, "add", [](double x, double y) { return x + y; });
}

Matrix sub(const Matrix& a, const Matrix& b) {
    return zip(a, b, "sub", [](double x, double y) { return x - y; });
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    return zip(a, b, "hadamard", [](double x, double y) { return x * y; });
}

Matrix scale(const Matrix& m, double c) {
    return map(m, [c](double x) { return c * x; });
}

double scalar_sigmoid(double x) {
    // Split on sign so exp never overflows.
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

Matrix sigmoid(const Matrix& x) {
    return map(x, scalar_sigmoid);
}

Matrix tanh_m(const Matrix& x) {
    return map(x, [](double v) { return std::tanh(v); });
}

Matrix relu(const Matrix& x) {
    return map(x, [](double v) { return v > 0.0 ? v : 0.0; });
}

Matrix add_rowvec(const Matrix& m, const Matrix& row) {
    if (row.rows() != 1 || row.cols() != m.cols())
        throw ShapeError("add_rowvec: row vector shape mismatch");
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            out(i, j) = m(i, j) + row(0, j);
    return out;
}

Matrix scale_rows(const Matrix& m, const Matrix& col) {
    if (col.cols() != 1 || col.rows() != m.rows())
        throw ShapeError("scale_rows: column vector shape mismatch");
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            out(i, j) = m(i, j) * col(i, 0);
    return out;
}

Matrix rowsum(const Matrix& m) {
    Matrix out(m.rows(), 1);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) s += m(i, j);
        out(i, 0) = s;
    }
    return out;
}

Matrix hconcat(const std::vector<Matrix>& parts) {
    if (parts.empty()) throw ShapeError("hconcat: no parts");
    std::size_t rows = parts.front().rows();
    std::size_t cols = 0;
    for (const auto& p : parts) {
        if (p.rows() != rows) throw ShapeError("hconcat: row count mismatch");
        cols += p.cols();
    }
    Matrix out(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        std::size_t off = 0;
        for (const auto& p : parts) {
            for (std::size_t j = 0; j < p.cols(); ++j) out(i, off + j) = p(i, j);
            off += p.cols();
        }
    }
    return out;
}

} // namespace fluxcast::num
