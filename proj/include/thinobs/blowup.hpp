#pragma once

// Normalized rescalings u_{x0,r}(x) = u(x0 + r x) / ||u(x0 + r .)||, the norm
// being the weighted L2 norm on the unit sphere, and diagnostics built on them.

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "thinobs/field.hpp"
#include "thinobs/profiles.hpp"

namespace thinobs {

/// Resamples u(x0 + r x) onto a grid over [-1,1]^d with n_out cells per axis
/// (0 keeps the input n) and divides by the weighted boundary norm on the unit
/// sphere, computed with the same quadrature as boundary_mass. The cube
/// x0 + r[-1,1]^d must lie in the box.
ScalarField rescale(const ScalarField& field, std::span<const double> center, double r, int n_out = 0);

/// Weighted inner product on the unit sphere of two even functions.
double sphere_inner(const PointFunction& a, const PointFunction& b, int dim, double s, double h);
/// Weighted L2 distance on the unit sphere between fields on grids that cover it.
double sphere_distance(const ScalarField& a, const ScalarField& b);
double sphere_inner(const ScalarField& a, const PointFunction& b);

/// f / ||f|| in the weighted norm on the unit sphere.
PointFunction normalized(const PointFunction& f, int dim, double s);

struct BlowupDiagnostics {
    int dim = 2;
    std::array<double, 3> center{};
    std::vector<double> radii;  ///< r0, r0/2, ..., r0/2^k
    std::vector<ScalarField> fields;
    std::vector<double> pairwise_dist;  ///< between consecutive rescalings
    double cauchy_defect = 0.0;         ///< max of the last ceil(k/2) distances
};

/// Requires r0 >= 4h 2^k so that every radius is resolved.
BlowupDiagnostics blowup_sequence(const ScalarField& field, std::span<const double> center, double r0, int k,
                                  int n_out = 0);

/// Weighted unit-sphere inner product of rescale(field, x0, r) with `ref` at
/// each radius; `ref` should have unit norm.
std::vector<double> scalar_product_tracker(const ScalarField& field, std::span<const double> center,
                                           std::span<const double> radii, const PointFunction& ref);

/// First index i with (curve[i] - level) and (curve[i+1] - level) of opposite sign.
std::optional<std::size_t> first_crossing(std::span<const double> curve, double level);

struct Alignment {
    std::array<double, 3> e{1.0, 0.0, 0.0};
    double angle_deg = 0.0;  ///< of e in the thin plane, in [0, 360)
    double match_error = 0.0;
    double lambda = 0.0;
    ProfileClass cls = ProfileClass::Even;
    int m = 0;
};

/// Best fit of field_on_B1 by c b(x'.e, x_d) over admissible profiles b with
/// |lambda - lambda_hat| <= 0.1 and directions e in the thin plane (0.5 degree
/// scan, then golden-section refinement). Error is the relative L2 misfit over
/// the grid nodes in the unit ball. In 2D e = +1 and both mirror images of
/// each profile are tried.
Alignment align_2d(const ScalarField& field_on_B1, double s, double lambda_hat);

/// ||d_t u|| / ||u|| in L2 over the grid nodes of B_{1-4h}, with d_t the
/// central difference of the interpolant at step h along the unit vector t
/// in the thin plane.
double invariance_check(const ScalarField& field_on_B1, std::span<const double> direction);

}  // namespace thinobs
