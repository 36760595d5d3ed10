#pragma once

#include <algorithm>
#include <cstddef>

// Dense affine kernels. Every output element is accumulated in the same
// order (one multiply-add per term, terms in ascending index) no matter how
// rows are blocked, so results are bitwise independent of row order and
// batch composition.

namespace cdslice::ad::kernels {

namespace detail {

// Register tile: kRows rows by kCols(T) columns of accumulators.
inline constexpr std::size_t kRows = 4;
template <class T>
inline constexpr std::size_t kCols = 256 / sizeof(T);

/// acc[r, j] += sum_k a[r * a_stride + k * a_step] * b[k * b_stride + j]
/// for r < rows, j < cols, k < depth, terms added in ascending k.
template <class T, std::size_t Rows, std::size_t Cols>
inline void tile(const T* a, std::size_t a_stride, std::size_t a_step, const T* b, std::size_t b_stride,
                 std::size_t depth, T* c, std::size_t c_stride) {
    T acc[Rows][Cols];
    for (std::size_t r = 0; r < Rows; ++r)
        for (std::size_t j = 0; j < Cols; ++j) acc[r][j] = c[r * c_stride + j];
    for (std::size_t k = 0; k < depth; ++k) {
        const T* __restrict bk = b + k * b_stride;
        for (std::size_t r = 0; r < Rows; ++r) {
            const T av = a[r * a_stride + k * a_step];
            for (std::size_t j = 0; j < Cols; ++j) acc[r][j] += av * bk[j];
        }
    }
    for (std::size_t r = 0; r < Rows; ++r)
        for (std::size_t j = 0; j < Cols; ++j) c[r * c_stride + j] = acc[r][j];
}

/// Same contraction for an arbitrary (rows, cols) edge block.
template <class T>
inline void edge(const T* a, std::size_t a_stride, std::size_t a_step, const T* b, std::size_t b_stride,
                 std::size_t depth, T* c, std::size_t c_stride, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        T* __restrict cr = c + r * c_stride;
        for (std::size_t k = 0; k < depth; ++k) {
            const T av = a[r * a_stride + k * a_step];
            const T* __restrict bk = b + k * b_stride;
            for (std::size_t j = 0; j < cols; ++j) cr[j] += av * bk[j];
        }
    }
}

/// C[rows, cols] += A * B with A addressed as a[r * a_stride + k * a_step]
/// and B row-major [depth, cols] with stride b_stride.
template <class T>
void gemm_acc(const T* a, std::size_t a_stride, std::size_t a_step, const T* b, std::size_t b_stride,
              std::size_t rows, std::size_t cols, std::size_t depth, T* c, std::size_t c_stride) {
    constexpr std::size_t R = kRows, C = kCols<T>;
    const std::size_t full_cols = cols - cols % C;
    for (std::size_t r0 = 0; r0 < rows; r0 += R) {
        const std::size_t nr = std::min(R, rows - r0);
        const T* ar = a + r0 * a_stride;
        T* cr = c + r0 * c_stride;
        for (std::size_t j0 = 0; j0 < full_cols; j0 += C) {
            if (nr == R)
                tile<T, R, C>(ar, a_stride, a_step, b + j0, b_stride, depth, cr + j0, c_stride);
            else
                for (std::size_t r = 0; r < nr; ++r)
                    tile<T, 1, C>(ar + r * a_stride, a_stride, a_step, b + j0, b_stride, depth, cr + r * c_stride + j0,
                                  c_stride);
        }
        if (full_cols < cols)
            edge(ar, a_stride, a_step, b + full_cols, b_stride, depth, cr + full_cols, c_stride, nr, cols - full_cols);
    }
}

}  // namespace detail

/// y[r, :] = bias + sum_k x[r, k] * wt[k, :], with wt the [in, out] transpose.
template <class T>
void affine_forward(const T* x, std::size_t rows, std::size_t in, const T* wt, const T* bias, std::size_t out, T* y) {
    for (std::size_t r = 0; r < rows; ++r) std::copy(bias, bias + out, y + r * out);
    detail::gemm_acc(x, in, 1, wt, out, rows, out, in, y, out);
}

/// dx[r, :] += sum_o dy[r, o] * w[o, :], with w the [out, in] weight.
template <class T>
void affine_backward_input(const T* dy, std::size_t rows, std::size_t out, const T* w, std::size_t in, T* dx) {
    detail::gemm_acc(dy, out, 1, w, in, rows, in, out, dx, in);
}

/// dw[o, :] += sum_r dy[r, o] * x[r, :] and db[o] += sum_r dy[r, o].
/// Either output may be null.
template <class T>
void affine_backward_params(const T* dy, const T* x, std::size_t rows, std::size_t in, std::size_t out, T* dw, T* db) {
    if (dw) detail::gemm_acc(dy, 1, out, x, in, out, in, rows, dw, in);
    if (db) {
        for (std::size_t o = 0; o < out; ++o) {
            T s = db[o];
            for (std::size_t r = 0; r < rows; ++r) s += dy[r * out + o];
            db[o] = s;
        }
    }
}

}  // namespace cdslice::ad::kernels
