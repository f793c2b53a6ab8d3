#include <algorithm>
#include <cmath>

#include "thinobs/kernels.hpp"

namespace thinobs::kernels::scalar {

namespace {

inline double neighbor_average(const RowStencil& row, int j)
{
    double t = row.nb[0][j] + row.nb[1][j];
    if (row.neighbors == 4) {
        t = t + (row.nb[2][j] + row.nb[3][j]);
    }
    double acc = row.c_t[j] * t;
    acc = acc + row.c_up[j] * row.u[j + 1];
    acc = acc + row.c_dn[j] * row.u[j - 1];
    return acc * row.inv_diag[j];
}

}  // namespace

void relax_row(const RowStencil& row, int parity, double omega)
{
    int j = row.begin;
    if ((j & 1) != parity) {
        ++j;
    }
    for (; j < row.end; j += 2) {
        const double gs = neighbor_average(row, j);
        row.u[j] = row.u[j] + omega * (gs - row.u[j]);
    }
}

double row_residual_max(const RowStencil& row)
{
    double m = 0.0;
    for (int j = row.begin; j < row.end; ++j) {
        m = std::max(m, std::abs(neighbor_average(row, j) - row.u[j]));
    }
    return m;
}

}  // namespace thinobs::kernels::scalar
