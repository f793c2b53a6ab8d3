// Compiled with -mavx2 only; callers check available(Backend::Avx2) first.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "thinobs/kernels.hpp"

namespace thinobs::kernels::avx2 {

namespace {

inline __m256d neighbor_average(const RowStencil& row, int j)
{
    __m256d t = _mm256_add_pd(_mm256_loadu_pd(row.nb[0] + j), _mm256_loadu_pd(row.nb[1] + j));
    if (row.neighbors == 4) {
        t = _mm256_add_pd(t, _mm256_add_pd(_mm256_loadu_pd(row.nb[2] + j), _mm256_loadu_pd(row.nb[3] + j)));
    }
    __m256d acc = _mm256_mul_pd(_mm256_loadu_pd(row.c_t + j), t);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(row.c_up + j), _mm256_loadu_pd(row.u + j + 1)));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(row.c_dn + j), _mm256_loadu_pd(row.u + j - 1)));
    return _mm256_mul_pd(acc, _mm256_loadu_pd(row.inv_diag + j));
}

}  // namespace

void relax_row(const RowStencil& row, int parity, double omega)
{
    const __m256d w = _mm256_set1_pd(omega);
    // Lane k holds layer j + k; j advances by 4, so the pattern only depends
    // on the parity of the first layer.
    const __m256d even_lanes = _mm256_castsi256_pd(_mm256_set_epi64x(0, -1, 0, -1));
    const __m256d odd_lanes = _mm256_castsi256_pd(_mm256_set_epi64x(-1, 0, -1, 0));
    int j = row.begin;
    const __m256d mask = ((j & 1) == parity) ? even_lanes : odd_lanes;
    for (; j + 4 <= row.end; j += 4) {
        const __m256d u = _mm256_loadu_pd(row.u + j);
        const __m256d gs = neighbor_average(row, j);
        const __m256d next = _mm256_add_pd(u, _mm256_mul_pd(w, _mm256_sub_pd(gs, u)));
        _mm256_storeu_pd(row.u + j, _mm256_blendv_pd(u, next, mask));
    }
    RowStencil tail = row;
    tail.begin = j;
    scalar::relax_row(tail, parity, omega);
}

double row_residual_max(const RowStencil& row)
{
    const __m256d sign = _mm256_set1_pd(-0.0);
    __m256d m = _mm256_setzero_pd();
    int j = row.begin;
    for (; j + 4 <= row.end; j += 4) {
        const __m256d u = _mm256_loadu_pd(row.u + j);
        const __m256d r = _mm256_andnot_pd(sign, _mm256_sub_pd(neighbor_average(row, j), u));
        m = _mm256_max_pd(m, r);
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, m);
    double out = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
    RowStencil tail = row;
    tail.begin = j;
    return std::max(out, scalar::row_residual_max(tail));
}

}  // namespace thinobs::kernels::avx2
