#include <arm_neon.h>

#include <algorithm>
#include <cmath>

#include "thinobs/kernels.hpp"

namespace thinobs::kernels::neon {

namespace {

inline float64x2_t neighbor_average(const RowStencil& row, int j)
{
    float64x2_t t = vaddq_f64(vld1q_f64(row.nb[0] + j), vld1q_f64(row.nb[1] + j));
    if (row.neighbors == 4) {
        t = vaddq_f64(t, vaddq_f64(vld1q_f64(row.nb[2] + j), vld1q_f64(row.nb[3] + j)));
    }
    float64x2_t acc = vmulq_f64(vld1q_f64(row.c_t + j), t);
    acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(row.c_up + j), vld1q_f64(row.u + j + 1)));
    acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(row.c_dn + j), vld1q_f64(row.u + j - 1)));
    return vmulq_f64(acc, vld1q_f64(row.inv_diag + j));
}

}  // namespace

void relax_row(const RowStencil& row, int parity, double omega)
{
    const float64x2_t w = vdupq_n_f64(omega);
    int j = row.begin;
    // Lane 0 is layer j, lane 1 is layer j + 1; j advances by 2.
    const uint64x2_t first = vcombine_u64(vcreate_u64(~0ULL), vcreate_u64(0ULL));
    const uint64x2_t second = vcombine_u64(vcreate_u64(0ULL), vcreate_u64(~0ULL));
    const uint64x2_t mask = ((j & 1) == parity) ? first : second;
    for (; j + 2 <= row.end; j += 2) {
        const float64x2_t u = vld1q_f64(row.u + j);
        const float64x2_t gs = neighbor_average(row, j);
        const float64x2_t next = vaddq_f64(u, vmulq_f64(w, vsubq_f64(gs, u)));
        vst1q_f64(row.u + j, vbslq_f64(mask, next, u));
    }
    RowStencil tail = row;
    tail.begin = j;
    scalar::relax_row(tail, parity, omega);
}

double row_residual_max(const RowStencil& row)
{
    float64x2_t m = vdupq_n_f64(0.0);
    int j = row.begin;
    for (; j + 2 <= row.end; j += 2) {
        const float64x2_t u = vld1q_f64(row.u + j);
        m = vmaxq_f64(m, vabsq_f64(vsubq_f64(neighbor_average(row, j), u)));
    }
    double out = std::max(vgetq_lane_f64(m, 0), vgetq_lane_f64(m, 1));
    RowStencil tail = row;
    tail.begin = j;
    return std::max(out, scalar::row_residual_max(tail));
}

}  // namespace thinobs::kernels::neon
