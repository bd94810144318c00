#include "qfal/kernels.hpp"

#include "kernels_impl.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace qfal::kernels {

namespace {

const KernelTable kScalar{Isa::Scalar, detail::dot_scalar, detail::max_abs_diff_scalar,
                          detail::max_abs_scalar, detail::relax_scalar};

#if defined(QFAL_HAVE_AVX2)
const KernelTable kAvx2{Isa::Avx2, detail::dot_avx2, detail::max_abs_diff_avx2,
                        detail::max_abs_avx2, detail::relax_avx2};

bool cpu_has_avx2() noexcept {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

const KernelTable* pick_default() noexcept {
    if (const char* env = std::getenv("QFAL_SIMD"); env && std::strcmp(env, "scalar") == 0)
        return &kScalar;
    if (const KernelTable* t = avx2_table()) return t;
    return &kScalar;
}

std::atomic<const KernelTable*>& slot() noexcept {
    static std::atomic<const KernelTable*> table{pick_default()};
    return table;
}

} // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

const KernelTable* avx2_table() noexcept {
#if defined(QFAL_HAVE_AVX2)
    static const bool ok = cpu_has_avx2();
    return ok ? &kAvx2 : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() noexcept { return *slot().load(std::memory_order_relaxed); }

Isa select(Isa isa) noexcept {
    const KernelTable* t = &kScalar;
    if (isa == Isa::Avx2 && avx2_table()) t = avx2_table();
    slot().store(t, std::memory_order_relaxed);
    return t->isa;
}

std::string_view isa_name(Isa isa) noexcept {
    switch (isa) {
    case Isa::Avx2: return "avx2";
    case Isa::Scalar: break;
    }
    return "scalar";
}

} // namespace qfal::kernels
