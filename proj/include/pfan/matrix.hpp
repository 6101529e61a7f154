#ifndef PFAN_MATRIX_HPP
#define PFAN_MATRIX_HPP

#include <cstddef>
#include <vector>

#include "pfan/errors.hpp"

namespace pfan {

// Dense row-major matrix of 64-bit reals.  The single tensor type used for
// features, parameters and gradients throughout.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    double* row_ptr(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
    const double* row_ptr(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }

    std::size_t size() const { return data.size(); }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }

    bool all_finite() const;

    // Throws TrainingDivergence when any entry is NaN/Inf.
    void require_finite(const char* context) const;

    // Rows of this matrix selected by index, in order.
    Matrix gather_rows(const std::vector<int>& indices) const;
};

// out = a * b   (a: m x k, b: k x n)
Matrix matmul(const Matrix& a, const Matrix& b);
// out = a^T * b (a: k x m, b: k x n) -> m x n
Matrix matmul_at_b(const Matrix& a, const Matrix& b);
// out = a * b^T (a: m x k, b: n x k) -> m x n
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);

void add_inplace(Matrix& a, const Matrix& b);
void add_scaled_inplace(Matrix& a, const Matrix& b, double s);
void scale_inplace(Matrix& a, double s);

double dot(const double* a, const double* b, int n);

// Cosine of the angle between two vectors, clamped to [-1, 1].  Computed as
// dot / sqrt(dot_aa * dot_bb) so that identical vectors score exactly 1.0;
// when either vector is numerically zero (norm product below 1e-24) the
// direction is undefined and 0.0 is returned.
double cosine_similarity(const double* a, const double* b, int n);

}  // namespace pfan

#endif
