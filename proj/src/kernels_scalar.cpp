#include "kernels_impl.hpp"

#include <cmath>

namespace qfal::kernels::detail {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
    return s;
}

double max_abs_diff_scalar(const double* a, const double* b, std::size_t n) {
    double m = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double d = std::fabs(a[k] - b[k]);
        if (d > m) m = d;
    }
    return m;
}

double max_abs_scalar(const double* a, std::size_t n) {
    double m = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double d = std::fabs(a[k]);
        if (d > m) m = d;
    }
    return m;
}

void relax_scalar(double* q, const double* target, const double* step, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) q[k] += step[k] * (target[k] - q[k]);
}

} // namespace qfal::kernels::detail
