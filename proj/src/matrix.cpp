#include "pfan/matrix.hpp"

#include <cmath>
#include <string>

namespace pfan {

bool Matrix::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

void Matrix::require_finite(const char* context) const {
    if (!all_finite())
        throw TrainingDivergence(std::string("non-finite values in ") + context);
}

Matrix Matrix::gather_rows(const std::vector<int>& indices) const {
    Matrix out(static_cast<int>(indices.size()), cols);
    for (int i = 0; i < out.rows; ++i) {
        int r = indices[static_cast<std::size_t>(i)];
        if (r < 0 || r >= rows)
            throw DimensionError("gather_rows: row " + std::to_string(r) + " outside 0.." +
                                 std::to_string(rows - 1));
        const double* src = row_ptr(r);
        double* dst = out.row_ptr(i);
        for (int c = 0; c < cols; ++c) dst[c] = src[c];
    }
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw DimensionError("matmul: " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                             " * " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
    Matrix out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        const double* ai = a.row_ptr(i);
        double* oi = out.row_ptr(i);
        for (int k = 0; k < a.cols; ++k) {
            double v = ai[k];
            const double* bk = b.row_ptr(k);
            for (int j = 0; j < b.cols; ++j) oi[j] += v * bk[j];
        }
    }
    return out;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
    if (a.rows != b.rows)
        throw DimensionError("matmul_at_b: row counts differ (" + std::to_string(a.rows) + " vs " +
                             std::to_string(b.rows) + ")");
    Matrix out(a.cols, b.cols);
    for (int k = 0; k < a.rows; ++k) {
        const double* ak = a.row_ptr(k);
        const double* bk = b.row_ptr(k);
        for (int i = 0; i < a.cols; ++i) {
            double v = ak[i];
            double* oi = out.row_ptr(i);
            for (int j = 0; j < b.cols; ++j) oi[j] += v * bk[j];
        }
    }
    return out;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
    if (a.cols != b.cols)
        throw DimensionError("matmul_a_bt: col counts differ (" + std::to_string(a.cols) + " vs " +
                             std::to_string(b.cols) + ")");
    Matrix out(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i) {
        const double* ai = a.row_ptr(i);
        double* oi = out.row_ptr(i);
        for (int j = 0; j < b.rows; ++j) oi[j] = dot(ai, b.row_ptr(j), a.cols);
    }
    return out;
}

void add_inplace(Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw DimensionError("add_inplace: shape mismatch");
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

void add_scaled_inplace(Matrix& a, const Matrix& b, double s) {
    if (!a.same_shape(b)) throw DimensionError("add_scaled_inplace: shape mismatch");
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += s * b.data[i];
}

void scale_inplace(Matrix& a, double s) {
    for (double& v : a.data) v *= s;
}

double dot(const double* a, const double* b, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double cosine_similarity(const double* a, const double* b, int n) {
    double ab = dot(a, b, n);
    double aa = dot(a, a, n);
    double bb = dot(b, b, n);
    double denom2 = aa * bb;  // = (|a||b|)^2
    if (denom2 < 1e-24) return 0.0;
    double cs = ab / std::sqrt(denom2);
    if (cs > 1.0) return 1.0;
    if (cs < -1.0) return -1.0;
    return cs;
}

}  // namespace pfan
