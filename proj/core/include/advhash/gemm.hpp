#pragma once

#include <cstddef>

namespace advhash::detail {

// Strided read-only matrix view: element (i, j) lives at p[i*row_stride + j*col_stride].
struct MatView {
    const double* p;
    std::ptrdiff_t row_stride;
    std::ptrdiff_t col_stride;

    double operator()(std::size_t i, std::size_t j) const {
        return p[static_cast<std::ptrdiff_t>(i) * row_stride + static_cast<std::ptrdiff_t>(j) * col_stride];
    }
};

inline MatView row_major(const double* p, std::size_t cols) {
    return {p, static_cast<std::ptrdiff_t>(cols), 1};
}
inline MatView transposed(const double* p, std::size_t cols) {
    return {p, 1, static_cast<std::ptrdiff_t>(cols)};
}

// C(m, n) += sum_k A(m, k) * B(k, n) for an M x N row-major C with leading
// dimension ldc.
//
// Every output is accumulated starting from its current C value and adding the
// K products in ascending k, one rounding per multiply and per add. The result
// is therefore bit-identical to the textbook triple loop
//     acc = C[m][n]; for k: acc += A[m][k] * B[k][n];
// provided the build disables floating-point contraction (the core target
// does), which is what makes kernel outputs reproducible and oracle-checkable.
void gemm_accumulate(std::size_t M, std::size_t N, std::size_t K, MatView A, MatView B, double* C,
                     std::size_t ldc);

}  // namespace advhash::detail
