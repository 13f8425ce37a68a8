#include "ndtsel/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace ndtsel::kernels {

#if NDTSEL_HAVE_AVX2
const KernelSet& avx2_set();
#endif

const KernelSet* avx2() {
#if NDTSEL_HAVE_AVX2
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? &avx2_set() : nullptr;
#else
    return nullptr;
#endif
}

const KernelSet& active() {
    static const KernelSet& chosen = [] () -> const KernelSet& {
        const char* forced = std::getenv("NDT_SELECT_KERNELS");
        if (forced != nullptr && std::string_view(forced) == "scalar") return scalar();
        if (const KernelSet* vec = avx2()) return *vec;
        return scalar();
    }();
    return chosen;
}

}  // namespace ndtsel::kernels
