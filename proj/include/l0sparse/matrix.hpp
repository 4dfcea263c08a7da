#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#ifdef L0SPARSE_USE_BLAS
#include <cblas.h>
#endif

namespace l0sparse {

// Dense row-major matrix of 64-bit floats. All model arithmetic runs in f64
// so that finite-difference gradient checks at 1e-4 tolerance are meaningful.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_)
            throw std::invalid_argument("Matrix: data length does not match rows*cols");
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<double> span() { return data_; }
    std::span<const double> span() const { return data_; }

    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool operator==(const Matrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

namespace detail {

inline void require_shape(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("shape mismatch: " + what);
}

}  // namespace detail

// C = A * B
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    detail::require_shape(a.cols() == b.rows(), "matmul A(m,k) B(k,n)");
    Matrix c(a.rows(), b.cols());
#ifdef L0SPARSE_USE_BLAS
    if (a.rows() > 0 && a.cols() > 0 && b.cols() > 0) {
        cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans,
                    static_cast<int>(a.rows()), static_cast<int>(b.cols()),
                    static_cast<int>(a.cols()), 1.0, a.data(), static_cast<int>(a.cols()),
                    b.data(), static_cast<int>(b.cols()), 0.0, c.data(),
                    static_cast<int>(c.cols()));
    }
#else
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = arow[k];
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
        }
    }
#endif
    return c;
}

// C = A * B^T
inline Matrix matmul_bt(const Matrix& a, const Matrix& b) {
    detail::require_shape(a.cols() == b.cols(), "matmul A(m,k) B^T(k,n)");
    Matrix c(a.rows(), b.rows());
#ifdef L0SPARSE_USE_BLAS
    if (a.rows() > 0 && a.cols() > 0 && b.rows() > 0) {
        cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans,
                    static_cast<int>(a.rows()), static_cast<int>(b.rows()),
                    static_cast<int>(a.cols()), 1.0, a.data(), static_cast<int>(a.cols()),
                    b.data(), static_cast<int>(b.cols()), 0.0, c.data(),
                    static_cast<int>(c.cols()));
    }
#else
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* arow = a.row(i);
        double* crow = c.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* brow = b.row(j);
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += arow[k] * brow[k];
            crow[j] = acc;
        }
    }
#endif
    return c;
}

// C = A^T * B
inline Matrix matmul_at(const Matrix& a, const Matrix& b) {
    detail::require_shape(a.rows() == b.rows(), "matmul A^T(m,k) B(k,n)");
    Matrix c(a.cols(), b.cols());
#ifdef L0SPARSE_USE_BLAS
    if (a.rows() > 0 && a.cols() > 0 && b.cols() > 0) {
        cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans,
                    static_cast<int>(a.cols()), static_cast<int>(b.cols()),
                    static_cast<int>(a.rows()), 1.0, a.data(), static_cast<int>(a.cols()),
                    b.data(), static_cast<int>(b.cols()), 0.0, c.data(),
                    static_cast<int>(c.cols()));
    }
#else
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const double* arow = a.row(k);
        const double* brow = b.row(k);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            double* crow = c.row(i);
            const double aki = arow[i];
            for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aki * brow[j];
        }
    }
#endif
    return c;
}

// [A | B] along columns.
inline Matrix hconcat(const Matrix& a, const Matrix& b) {
    detail::require_shape(a.rows() == b.rows(), "hconcat row counts");
    Matrix c(a.rows(), a.cols() + b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* dst = c.row(i);
        const double* ra = a.row(i);
        const double* rb = b.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j) dst[j] = ra[j];
        for (std::size_t j = 0; j < b.cols(); ++j) dst[a.cols() + j] = rb[j];
    }
    return c;
}

}  // namespace l0sparse
