#include <cstdlib>
#include <string_view>

#include "qzeno/kernels.hpp"

namespace qzeno::kernels {

#if defined(QZENO_HAVE_AVX2_KERNELS)
KernelTable avx2_table_unchecked();
#endif

std::optional<KernelTable> avx2_table() {
#if defined(QZENO_HAVE_AVX2_KERNELS)
    __builtin_cpu_init();
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return avx2_table_unchecked();
#endif
    return std::nullopt;
}

namespace {

KernelTable select() {
    const char* env = std::getenv("QZENO_KERNELS");
    const std::string_view want = env ? env : "auto";
    if (want == "scalar") return scalar_table();
    if (auto simd = avx2_table()) return *simd;
    return scalar_table();
}

}  // namespace

const KernelTable& active() {
    static const KernelTable table = select();
    return table;
}

}  // namespace qzeno::kernels
