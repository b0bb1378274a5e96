#include "qzeno/kernels.hpp"

#include <utility>

namespace qzeno::kernels {
namespace {

void apply_1q_scalar(cplx* amps, std::size_t dim, unsigned target, const cplx* m) {
    const std::size_t stride = std::size_t{1} << target;
    const std::size_t pairs = dim / 2;
    for (std::size_t k = 0; k < pairs; ++k) {
        const std::size_t i0 = insert_zero_bit(k, target);
        const std::size_t i1 = i0 | stride;
        const cplx a0 = amps[i0];
        const cplx a1 = amps[i1];
        amps[i0] = m[0] * a0 + m[1] * a1;
        amps[i1] = m[2] * a0 + m[3] * a1;
    }
}

void apply_2q_scalar(cplx* amps, std::size_t dim, unsigned q0, unsigned q1, const cplx* m) {
    const unsigned lo = q0 < q1 ? q0 : q1;
    const unsigned hi = q0 < q1 ? q1 : q0;
    const std::size_t b0 = std::size_t{1} << q0;
    const std::size_t b1 = std::size_t{1} << q1;
    const std::size_t groups = dim / 4;
    for (std::size_t k = 0; k < groups; ++k) {
        const std::size_t base = insert_zero_bit(insert_zero_bit(k, lo), hi);
        const std::size_t idx[4] = {base, base | b0, base | b1, base | b0 | b1};
        const cplx a[4] = {amps[idx[0]], amps[idx[1]], amps[idx[2]], amps[idx[3]]};
        for (int r = 0; r < 4; ++r) {
            amps[idx[r]] = m[4 * r] * a[0] + m[4 * r + 1] * a[1] + m[4 * r + 2] * a[2] + m[4 * r + 3] * a[3];
        }
    }
}

double norm_sq_scalar(const cplx* amps, std::size_t dim) {
    double acc = 0.0;
    for (std::size_t i = 0; i < dim; ++i) acc += std::norm(amps[i]);
    return acc;
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{"scalar", &apply_1q_scalar, &apply_2q_scalar, &norm_sq_scalar};
    return table;
}

}  // namespace qzeno::kernels
