#include "advhash/gemm.hpp"

#include <algorithm>
#include <vector>

namespace advhash::detail {

namespace {

constexpr std::size_t kMR = 8;
constexpr std::size_t kNR = 16;
constexpr std::size_t kKC = 256;

// Packs rows [m0, m0+MR) of A, columns [k0, k0+kc) into k-major order.
void pack_a(MatView A, std::size_t M, std::size_t m0, std::size_t k0, std::size_t kc, double* out) {
    const std::size_t rows = std::min(kMR, M - m0);
    for (std::size_t k = 0; k < kc; ++k) {
        double* dst = out + k * kMR;
        std::size_t r = 0;
        for (; r < rows; ++r) dst[r] = A(m0 + r, k0 + k);
        for (; r < kMR; ++r) dst[r] = 0.0;
    }
}

void pack_b(MatView B, std::size_t N, std::size_t n0, std::size_t k0, std::size_t kc, double* out) {
    const std::size_t cols = std::min(kNR, N - n0);
    for (std::size_t k = 0; k < kc; ++k) {
        double* dst = out + k * kNR;
        std::size_t c = 0;
        if (B.col_stride == 1) {
            const double* src = B.p + static_cast<std::ptrdiff_t>(k0 + k) * B.row_stride + static_cast<std::ptrdiff_t>(n0);
            for (; c < cols; ++c) dst[c] = src[c];
        } else {
            for (; c < cols; ++c) dst[c] = B(k0 + k, n0 + c);
        }
        for (; c < kNR; ++c) dst[c] = 0.0;
    }
}

// Lane c of a vector holds column n0 + c. Each lane does the scalar
// acc += a * b sequence, so the result matches the naive loop bit for bit.
using vec8 = double __attribute__((vector_size(64)));
static_assert(kNR == 16);

void micro_kernel(std::size_t kc, const double* __restrict ap, const double* __restrict bp, double* C,
                  std::size_t ldc, std::size_t rows, std::size_t cols) {
    double tile[kMR * kNR];
    const bool full = rows == kMR && cols == kNR;
    double* c = C;
    std::size_t ld = ldc;
    if (!full) {
        for (std::size_t r = 0; r < kMR; ++r)
            for (std::size_t j = 0; j < kNR; ++j) tile[r * kNR + j] = (r < rows && j < cols) ? C[r * ldc + j] : 0.0;
        c = tile;
        ld = kNR;
    }

    vec8 lo[kMR], hi[kMR];
    for (std::size_t r = 0; r < kMR; ++r) {
        __builtin_memcpy(&lo[r], c + r * ld, sizeof(vec8));
        __builtin_memcpy(&hi[r], c + r * ld + 8, sizeof(vec8));
    }
    for (std::size_t k = 0; k < kc; ++k) {
        vec8 b0, b1;
        __builtin_memcpy(&b0, bp + k * kNR, sizeof(vec8));
        __builtin_memcpy(&b1, bp + k * kNR + 8, sizeof(vec8));
        const double* a = ap + k * kMR;
        for (std::size_t r = 0; r < kMR; ++r) {
            const vec8 av = {a[r], a[r], a[r], a[r], a[r], a[r], a[r], a[r]};
            lo[r] += av * b0;
            hi[r] += av * b1;
        }
    }
    for (std::size_t r = 0; r < kMR; ++r) {
        __builtin_memcpy(c + r * ld, &lo[r], sizeof(vec8));
        __builtin_memcpy(c + r * ld + 8, &hi[r], sizeof(vec8));
    }
    if (!full)
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < cols; ++j) C[r * ldc + j] = tile[r * kNR + j];
}

}  // namespace

void gemm_accumulate(std::size_t M, std::size_t N, std::size_t K, MatView A, MatView B, double* C,
                     std::size_t ldc) {
    if (M == 0 || N == 0 || K == 0) return;

    const std::size_t m_panels = (M + kMR - 1) / kMR;
    const std::size_t n_panels = (N + kNR - 1) / kNR;
    std::vector<double> apack(m_panels * kMR * std::min(K, kKC));
    std::vector<double> bpack(n_panels * kNR * std::min(K, kKC));

    for (std::size_t k0 = 0; k0 < K; k0 += kKC) {
        const std::size_t kc = std::min(kKC, K - k0);
        for (std::size_t mp = 0; mp < m_panels; ++mp) pack_a(A, M, mp * kMR, k0, kc, apack.data() + mp * kMR * kc);
        for (std::size_t np = 0; np < n_panels; ++np) pack_b(B, N, np * kNR, k0, kc, bpack.data() + np * kNR * kc);

        for (std::size_t np = 0; np < n_panels; ++np) {
            const std::size_t n0 = np * kNR;
            const std::size_t cols = std::min(kNR, N - n0);
            for (std::size_t mp = 0; mp < m_panels; ++mp) {
                const std::size_t m0 = mp * kMR;
                micro_kernel(kc, apack.data() + mp * kMR * kc, bpack.data() + np * kNR * kc, C + m0 * ldc + n0, ldc,
                             std::min(kMR, M - m0), cols);
            }
        }
    }
}

}  // namespace advhash::detail
