// Compiled with -mavx2 -mfma; only reached through the dispatch table after
// a CPU feature check.
#include "kernels_impl.hpp"

#include <immintrin.h>

#include <cmath>

namespace qfal::kernels::detail {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

inline double hmax(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_max_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_max_sd(lo, sh));
}

inline __m256d abs_pd(__m256d v) {
    const __m256d sign = _mm256_set1_pd(-0.0);
    return _mm256_andnot_pd(sign, v);
}

} // namespace

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 8 <= n; k += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k + 4), _mm256_loadu_pd(b + k + 4), acc1);
    }
    for (; k + 4 <= n; k += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; k < n; ++k) s += a[k] * b[k];
    return s;
}

double max_abs_diff_avx2(const double* a, const double* b, std::size_t n) {
    __m256d m = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k));
        m = _mm256_max_pd(abs_pd(d), m);
    }
    double r = hmax(m);
    for (; k < n; ++k) {
        const double d = std::fabs(a[k] - b[k]);
        if (d > r) r = d;
    }
    return r;
}

double max_abs_avx2(const double* a, std::size_t n) {
    __m256d m = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) m = _mm256_max_pd(abs_pd(_mm256_loadu_pd(a + k)), m);
    double r = hmax(m);
    for (; k < n; ++k) {
        const double d = std::fabs(a[k]);
        if (d > r) r = d;
    }
    return r;
}

void relax_avx2(double* q, const double* target, const double* step, std::size_t n) {
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d qv = _mm256_loadu_pd(q + k);
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(target + k), qv);
        _mm256_storeu_pd(q + k, _mm256_fmadd_pd(_mm256_loadu_pd(step + k), d, qv));
    }
    for (; k < n; ++k) q[k] += step[k] * (target[k] - q[k]);
}

} // namespace qfal::kernels::detail
