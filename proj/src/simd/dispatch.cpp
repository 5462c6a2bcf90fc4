#include <cstdlib>
#include <string_view>

#include "kernels_internal.hpp"

namespace tiermem::simd {

const KernelTable* avx2_kernels() {
#if defined(TIERMEM_HAVE_AVX2)
    static const bool supported = __builtin_cpu_supports("avx2");
    return supported ? &avx2_table() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() {
    static const KernelTable& chosen = [] () -> const KernelTable& {
        const char* forced = std::getenv("TIERMEM_SIMD");
        if (forced != nullptr && std::string_view(forced) == "scalar") return scalar_kernels();
        if (const KernelTable* t = avx2_kernels()) return *t;
        return scalar_kernels();
    }();
    return chosen;
}

}  // namespace tiermem::simd
