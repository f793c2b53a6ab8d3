#pragma once

// Data-parallel inner loops of the projected Gauss-Seidel solver.
//
// Every backend evaluates the same expression tree in the same order, without
// fused multiply-add, so scalar and vector variants are bit-identical. Within
// one color of the red-black ordering no updated node reads another updated
// node, which is what lets a vector variant compute all lanes and blend.

#include <array>
#include <optional>
#include <string_view>

namespace thinobs::kernels {

enum class Backend { Scalar, Avx2, Neon };

std::string_view name(Backend b);
std::optional<Backend> parse_backend(std::string_view text);
/// True if the backend was compiled in and the running CPU supports it.
bool available(Backend b);
/// Widest available backend; THINOBS_SIMD=scalar|avx2|neon overrides.
Backend best_available();

/// One row of the half grid at a fixed tangential index. Layer j of the row
/// is u[j]; the conductance arrays are indexed by layer.
struct RowStencil {
    double* u = nullptr;
    std::array<const double*, 4> nb{};  ///< tangential neighbor rows
    int neighbors = 2;                  ///< 2 in 2D, 4 in 3D
    const double* c_t = nullptr;        ///< tangential edge conductance
    const double* c_up = nullptr;       ///< conductance to layer j+1
    const double* c_dn = nullptr;       ///< conductance to layer j-1
    const double* inv_diag = nullptr;
    int begin = 1;
    int end = 1;  ///< layers [begin, end) are updated; both neighbors must exist
};

/// Over-relaxed Gauss-Seidel update of layers j in [begin, end) with
/// (j % 2) == parity.
void relax_row(Backend b, const RowStencil& row, int parity, double omega);

/// max over [begin, end) of |gs_j - u_j|, where gs_j is the weighted
/// neighbor average. This is the diagonally scaled PDE residual.
double row_residual_max(Backend b, const RowStencil& row);

namespace scalar {
void relax_row(const RowStencil& row, int parity, double omega);
double row_residual_max(const RowStencil& row);
}  // namespace scalar

#if defined(THINOBS_HAVE_AVX2)
namespace avx2 {
void relax_row(const RowStencil& row, int parity, double omega);
double row_residual_max(const RowStencil& row);
}  // namespace avx2
#endif

#if defined(THINOBS_HAVE_NEON)
namespace neon {
void relax_row(const RowStencil& row, int parity, double omega);
double row_residual_max(const RowStencil& row);
}  // namespace neon
#endif

}  // namespace thinobs::kernels
