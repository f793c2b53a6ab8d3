#include <cstdlib>
#include <string>

#include "thinobs/error.hpp"
#include "thinobs/kernels.hpp"

namespace thinobs::kernels {

std::string_view name(Backend b)
{
    switch (b) {
    case Backend::Scalar:
        return "scalar";
    case Backend::Avx2:
        return "avx2";
    case Backend::Neon:
        return "neon";
    }
    return "unknown";
}

std::optional<Backend> parse_backend(std::string_view text)
{
    if (text == "scalar") {
        return Backend::Scalar;
    }
    if (text == "avx2") {
        return Backend::Avx2;
    }
    if (text == "neon") {
        return Backend::Neon;
    }
    return std::nullopt;
}

bool available(Backend b)
{
    switch (b) {
    case Backend::Scalar:
        return true;
    case Backend::Avx2:
#if defined(THINOBS_HAVE_AVX2)
        return __builtin_cpu_supports("avx2");
#else
        return false;
#endif
    case Backend::Neon:
#if defined(THINOBS_HAVE_NEON)
        return true;
#else
        return false;
#endif
    }
    return false;
}

Backend best_available()
{
    if (const char* env = std::getenv("THINOBS_SIMD")) {
        const auto forced = parse_backend(env);
        if (!forced || !available(*forced)) {
            throw InvalidArgument(std::string("THINOBS_SIMD=") + env + " is not an available backend");
        }
        return *forced;
    }
    if (available(Backend::Avx2)) {
        return Backend::Avx2;
    }
    if (available(Backend::Neon)) {
        return Backend::Neon;
    }
    return Backend::Scalar;
}

void relax_row(Backend b, const RowStencil& row, int parity, double omega)
{
    switch (b) {
#if defined(THINOBS_HAVE_AVX2)
    case Backend::Avx2:
        avx2::relax_row(row, parity, omega);
        return;
#endif
#if defined(THINOBS_HAVE_NEON)
    case Backend::Neon:
        neon::relax_row(row, parity, omega);
        return;
#endif
    default:
        scalar::relax_row(row, parity, omega);
        return;
    }
}

double row_residual_max(Backend b, const RowStencil& row)
{
    switch (b) {
#if defined(THINOBS_HAVE_AVX2)
    case Backend::Avx2:
        return avx2::row_residual_max(row);
#endif
#if defined(THINOBS_HAVE_NEON)
    case Backend::Neon:
        return neon::row_residual_max(row);
#endif
    default:
        return scalar::row_residual_max(row);
    }
}

}  // namespace thinobs::kernels
