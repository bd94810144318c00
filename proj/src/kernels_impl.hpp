#pragma once

#include <cstddef>

namespace qfal::kernels::detail {

double dot_scalar(const double* a, const double* b, std::size_t n);
double max_abs_diff_scalar(const double* a, const double* b, std::size_t n);
double max_abs_scalar(const double* a, std::size_t n);
void relax_scalar(double* q, const double* target, const double* step, std::size_t n);

#if defined(QFAL_HAVE_AVX2)
double dot_avx2(const double* a, const double* b, std::size_t n);
double max_abs_diff_avx2(const double* a, const double* b, std::size_t n);
double max_abs_avx2(const double* a, std::size_t n);
void relax_avx2(double* q, const double* target, const double* step, std::size_t n);
#endif

} // namespace qfal::kernels::detail
