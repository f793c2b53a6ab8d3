#pragma once

// Almgren frequency N(u, x0, r) = r D(r) / H(r) with
//   D(r) = int_{B_r(x0)} |x_d|^(1-2s) |grad u|^2,
//   H(r) = int_{dB_r(x0)} |x_d|^(1-2s) u^2.
// Centers lie on the thin plane. Radii below 4h are rejected.

#include <array>
#include <span>
#include <vector>

#include "thinobs/field.hpp"

namespace thinobs {

struct FrequencyProfile {
    int dim = 2;
    std::array<double, 3> center{};
    std::vector<double> radii;  ///< decreasing
    std::vector<double> N_values;
    std::vector<double> D_values;
    std::vector<double> H_values;
};

/// Smallest radius for which frequencies are reported.
inline double min_reliable_radius(const GridSpec& g) { return 4.0 * g.h; }

/// Cell sum of the weighted squared cell-centred gradient. Cells cut by the
/// sphere average the multilinear gradient over the 8^d sub-points inside the
/// ball. Tangential derivatives use the layer-averaged weight, the normal
/// derivative the harmonic edge weight of the energy.
double dirichlet_integral(const ScalarField& field, std::span<const double> center, double r);

/// Nodes on the upper half of the sphere dB_r(center) (x_d > 0, never on the
/// plane). Weights carry |x_d|^(1-2s), the surface element and a factor 2 for
/// the mirror half, so sum w f(x) integrates any even f.
struct SphereRule {
    std::vector<std::array<double, 3>> points;
    std::vector<double> weights;
};

/// Midpoint nodes with exact panel integrals of the weight; the node count
/// grows like 2 pi r / h with at least 64 around a great circle.
SphereRule sphere_rule(int dim, double s, std::span<const double> center, double r, double h);

/// Product-rule quadrature on the sphere with exact panel integrals of the
/// weight; no node lies on the thin plane. u is interpolated multilinearly.
double boundary_mass(const ScalarField& field, std::span<const double> center, double r);

/// r D / H. Throws NumericalError when H vanishes.
double frequency(const ScalarField& field, std::span<const double> center, double r);

/// N at each of the given radii (any order; stored decreasing).
FrequencyProfile frequency_profile(const ScalarField& field, std::span<const double> center,
                                   std::span<const double> radii);

struct FrequencyLimit {
    double lambda_hat = 0.0;  ///< N at the smallest radius
    double intercept = 0.0;   ///< linear fit of N against r over the three smallest radii, at r = 0
    FrequencyProfile profile;
};

/// Geometric ladder of k >= 4 radii from r_hi down to r_lo.
std::vector<double> geometric_ladder(double r_lo, double r_hi, int k);

FrequencyLimit frequency_limit(const ScalarField& field, std::span<const double> center, double r_lo, double r_hi,
                               int k);

struct MonotonicityViolation {
    double r_small = 0.0;
    double r_large = 0.0;
    double N_small = 0.0;
    double N_large = 0.0;
};

/// Consecutive pairs, by increasing radius, with N(r_large) < N(r_small) - tau.
std::vector<MonotonicityViolation> monotonicity_audit(const FrequencyProfile& profile, double tau);

/// max |u(x0 + rho y) - rho^lambda u(x0 + y)| over quadrature nodes y of the
/// sphere of radius R, relative to max |u(x0 + y)| there.
double homogeneity_defect(const ScalarField& field, std::span<const double> center, double lambda, double rho,
                          double R);

/// |N(rescale(u, x0, r), y0, rho) - N(u, x0 + r y0, rho r)|.
double scaling_check(const ScalarField& field, std::span<const double> center, double r,
                     std::span<const double> y0, double rho);

}  // namespace thinobs
