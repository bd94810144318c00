#pragma once

// Inner-loop arithmetic with a portable scalar reference and vectorized
// variants. The active table is chosen once at startup from CPU features;
// set QFAL_SIMD=scalar in the environment to force the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace qfal::kernels {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
    Isa isa;
    double (*dot)(const double* a, const double* b, std::size_t n);
    /// The max reductions skip NaN entries.
    double (*max_abs_diff)(const double* a, const double* b, std::size_t n);
    double (*max_abs)(const double* a, std::size_t n);
    /// q[k] += step[k] * (target[k] - q[k])
    void (*relax)(double* q, const double* target, const double* step, std::size_t n);
};

const KernelTable& scalar_table() noexcept;

/// Null when the AVX2 path was not compiled in or the CPU lacks AVX2+FMA.
const KernelTable* avx2_table() noexcept;

const KernelTable& active() noexcept;

/// Overrides the dispatch choice; falls back to scalar if `isa` is unavailable.
/// Returns the ISA actually installed. Not thread-safe against concurrent kernel calls.
Isa select(Isa isa) noexcept;

std::string_view isa_name(Isa isa) noexcept;

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
    return active().dot(a.data(), b.data(), a.size());
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) noexcept {
    return active().max_abs_diff(a.data(), b.data(), a.size());
}

inline double max_abs(std::span<const double> a) noexcept {
    return active().max_abs(a.data(), a.size());
}

inline void relax(std::span<double> q, std::span<const double> target,
                  std::span<const double> step) noexcept {
    active().relax(q.data(), target.data(), step.data(), q.size());
}

} // namespace qfal::kernels
