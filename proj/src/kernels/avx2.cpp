// AVX2/FMA kernels. Compiled with -mavx2 -mfma; only reached after the
// runtime check in dispatch.cpp.

#include <immintrin.h>

#include "qzeno/kernels.hpp"

namespace qzeno::kernels {
namespace {

// One __m256d holds two complex doubles: [re0, im0, re1, im1].

inline __m256d cmul(__m256d x, __m256d y) {
    const __m256d y_re = _mm256_movedup_pd(y);
    const __m256d y_im = _mm256_permute_pd(y, 0xF);
    const __m256d x_swap = _mm256_permute_pd(x, 0x5);
    return _mm256_fmaddsub_pd(x, y_re, _mm256_mul_pd(x_swap, y_im));
}

inline __m256d splat(cplx c) { return _mm256_setr_pd(c.real(), c.imag(), c.real(), c.imag()); }

inline __m256d load2(const cplx* p) { return _mm256_loadu_pd(reinterpret_cast<const double*>(p)); }
inline void store2(cplx* p, __m256d v) { _mm256_storeu_pd(reinterpret_cast<double*>(p), v); }

void apply_1q_avx2(cplx* amps, std::size_t dim, unsigned target, const cplx* m) {
    if (target == 0) {
        // Partners are adjacent: one register holds [a0, a1].
        const __m256d col0 = _mm256_setr_pd(m[0].real(), m[0].imag(), m[2].real(), m[2].imag());
        const __m256d col1 = _mm256_setr_pd(m[1].real(), m[1].imag(), m[3].real(), m[3].imag());
        for (std::size_t i = 0; i < dim; i += 2) {
            const __m256d v = load2(amps + i);
            const __m256d a0 = _mm256_permute2f128_pd(v, v, 0x00);
            const __m256d a1 = _mm256_permute2f128_pd(v, v, 0x11);
            store2(amps + i, _mm256_add_pd(cmul(col0, a0), cmul(col1, a1)));
        }
        return;
    }
    const std::size_t stride = std::size_t{1} << target;
    const __m256d m00 = splat(m[0]), m01 = splat(m[1]), m10 = splat(m[2]), m11 = splat(m[3]);
    const std::size_t pairs = dim / 2;
    for (std::size_t k = 0; k < pairs; k += 2) {
        const std::size_t i0 = insert_zero_bit(k, target);
        const std::size_t i1 = i0 | stride;
        const __m256d a0 = load2(amps + i0);
        const __m256d a1 = load2(amps + i1);
        store2(amps + i0, _mm256_add_pd(cmul(m00, a0), cmul(m01, a1)));
        store2(amps + i1, _mm256_add_pd(cmul(m10, a0), cmul(m11, a1)));
    }
}

void apply_2q_avx2(cplx* amps, std::size_t dim, unsigned q0, unsigned q1, const cplx* m) {
    const unsigned lo = q0 < q1 ? q0 : q1;
    const unsigned hi = q0 < q1 ? q1 : q0;
    if (lo == 0) {
        // Bit 0 is a target: consecutive groups are not contiguous in memory.
        scalar_table().apply_2q(amps, dim, q0, q1, m);
        return;
    }
    const std::size_t b0 = std::size_t{1} << q0;
    const std::size_t b1 = std::size_t{1} << q1;
    __m256d mv[16];
    for (int i = 0; i < 16; ++i) mv[i] = splat(m[i]);
    const std::size_t groups = dim / 4;
    for (std::size_t k = 0; k < groups; k += 2) {
        const std::size_t base = insert_zero_bit(insert_zero_bit(k, lo), hi);
        const std::size_t idx[4] = {base, base | b0, base | b1, base | b0 | b1};
        const __m256d a[4] = {load2(amps + idx[0]), load2(amps + idx[1]), load2(amps + idx[2]),
                              load2(amps + idx[3])};
        __m256d out[4];
        for (int r = 0; r < 4; ++r) {
            __m256d acc = cmul(mv[4 * r], a[0]);
            acc = _mm256_add_pd(acc, cmul(mv[4 * r + 1], a[1]));
            acc = _mm256_add_pd(acc, cmul(mv[4 * r + 2], a[2]));
            out[r] = _mm256_add_pd(acc, cmul(mv[4 * r + 3], a[3]));
        }
        for (int r = 0; r < 4; ++r) store2(amps + idx[r], out[r]);
    }
}

double norm_sq_avx2(const cplx* amps, std::size_t dim) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 <= dim; i += 2) {
        const __m256d v = load2(amps + i);
        acc = _mm256_fmadd_pd(v, v, acc);
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    double total = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < dim; ++i) total += std::norm(amps[i]);
    return total;
}

}  // namespace

KernelTable avx2_table_unchecked() {
    return KernelTable{"avx2", &apply_1q_avx2, &apply_2q_avx2, &norm_sq_avx2};
}

}  // namespace qzeno::kernels
