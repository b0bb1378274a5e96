#pragma once

// Inner-loop kernels for dense amplitude arrays.
//
// Every kernel exists as a portable scalar reference and, on x86-64, an
// AVX2/FMA variant. The active table is chosen once at first use from the
// CPU feature bits; QZENO_KERNELS=scalar|avx2 overrides the choice. The
// variants are equivalence-tested against each other (tests/test_kernels.cpp).
//
// Index convention: little-endian, qubit k is bit k of the basis index.
// A 2-qubit matrix acts on the local index b(q0) + 2*b(q1).

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

namespace qzeno::kernels {

using cplx = std::complex<double>;

struct KernelTable {
    std::string_view name;
    // m2: row-major 2x2. dim is a power of two > target bit.
    void (*apply_1q)(cplx* amps, std::size_t dim, unsigned target, const cplx* m2);
    // m4: row-major 4x4, q0 != q1.
    void (*apply_2q)(cplx* amps, std::size_t dim, unsigned q0, unsigned q1, const cplx* m4);
    double (*norm_sq)(const cplx* amps, std::size_t dim);
};

const KernelTable& scalar_table();
// Empty when the build has no AVX2 unit or the CPU lacks AVX2+FMA.
std::optional<KernelTable> avx2_table();

// Table used by the library. Thread-safe, resolved once.
const KernelTable& active();

inline void apply_1q(std::span<cplx> amps, unsigned target, std::span<const cplx, 4> m) {
    active().apply_1q(amps.data(), amps.size(), target, m.data());
}

inline void apply_2q(std::span<cplx> amps, unsigned q0, unsigned q1, std::span<const cplx, 16> m) {
    active().apply_2q(amps.data(), amps.size(), q0, q1, m.data());
}

inline double norm_sq(std::span<const cplx> amps) { return active().norm_sq(amps.data(), amps.size()); }

// Inserts a zero bit at position `pos` of `i`.
constexpr std::size_t insert_zero_bit(std::size_t i, unsigned pos) {
    const std::size_t low = i & ((std::size_t{1} << pos) - 1);
    return ((i >> pos) << (pos + 1)) | low;
}

}  // namespace qzeno::kernels
