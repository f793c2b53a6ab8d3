#pragma once

// Discrete weighted variational inequality on the half grid.
//
// The discrete energy is a sum over the edges of the full (reflected) grid,
//   E(u) = sum_e c_e (u_a - u_b)^2,
// with c_e = h^(d-2) times a weight attached to the edge: the arithmetic mean
// of the adjacent cell-layer weights for edges parallel to the thin plane,
// and the harmonic mean of |x_d|^(1-2s) along the edge for x_d-edges. Edges
// lying in a box face carry the fraction of their dual face inside the box.
// The minimizer over fields with u >= 0 on {x_d = 0} and fixed box values is
// computed by projected successive over-relaxation in red-black order.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "thinobs/field.hpp"
#include "thinobs/kernels.hpp"

namespace thinobs {

/// Conductances of the discrete quadratic form, indexed by x_d layer.
struct EnergyForm {
    GridSpec spec;
    std::vector<double> tangential;  ///< node layers 0..J, full-space value
    std::vector<double> normal;      ///< cell layers 0..J-1

    /// Full-space energy of a half-grid field (both halves counted).
    [[nodiscard]] double energy(const ScalarField& u) const;
    [[nodiscard]] double energy(std::span<const double> u) const;
    /// Largest over smallest conductance.
    [[nodiscard]] double contrast() const;
};

EnergyForm assemble_energy(const GridSpec& spec);

struct SolverConfig {
    double omega = 1.8;
    double tol = 1e-10;  ///< on max(pde, complementarity, violation) / data scale
    int max_sweeps = 200000;
    /// Dirichlet data, evaluated at the box-boundary nodes. Must be even in x_d.
    PointFunction boundary_data;
    /// Optional starting field on the same grid; box values are overwritten
    /// and thin-plane values projected to >= 0.
    std::optional<ScalarField> initial;
    /// Solve on the grid with n/2 first (recursively, down to n = 16) and
    /// start from the interpolated coarse solution.
    bool nested = false;
    std::optional<kernels::Backend> backend;
    int check_every = 10;
    bool record_energy = true;
};

struct SolveReport {
    int sweeps_used = 0;
    int coarse_sweeps = 0;
    bool converged = false;
    double final_residual = 0.0;
    double final_pde = 0.0;
    double final_complementarity = 0.0;
    double final_violation = 0.0;
    double data_scale = 1.0;
    double omega = 0.0;
    /// Conductance contrast; grows like (h/2)^(1-2s)-ratios as s -> 0 or 1.
    double conductance_contrast = 1.0;
    kernels::Backend backend = kernels::Backend::Scalar;
    std::vector<double> energy_history;
};

/// KKT defects of the discrete complementarity system, all in units of u
/// relative to `scale`:
///  - pde: max |avg_j - u_j| over interior nodes off the plane
///  - complementarity: max |min(u, -r)| on the plane, where r = avg - u is the
///    scaled net flux into the node (the x_d contribution doubled by symmetry)
///  - violation: max(0, -u) on the plane
struct Residuals {
    double pde = 0.0;
    double complementarity = 0.0;
    double violation = 0.0;
    [[nodiscard]] double max() const;
};

/// Residuals relative to `scale`; by default the largest |u| on the box boundary.
Residuals residuals(const ScalarField& field, std::optional<double> scale = std::nullopt);

/// Nodewise defects in the units of `residuals`: `pde` on the half grid
/// (interior nodes off the plane), `complementarity` per plane node
/// (violation included as max(0, -u)); zero elsewhere.
struct ResidualMap {
    std::vector<double> pde;
    std::vector<double> complementarity;
    double scale = 1.0;
};

ResidualMap residual_map(const ScalarField& field, std::optional<double> scale = std::nullopt);

/// Discrete weighted normal flux into every thin-plane node per unit dual
/// area, both halves counted (so twice the one-sided weighted derivative
/// |x_d|^(1-2s) du/dx_d from above). Box nodes get 0. Indexed by plane node.
std::vector<double> plane_flux(const ScalarField& field);

/// 2 / (1 + sin(pi/n)), the SOR-optimal factor of the unweighted stencil.
double optimal_omega(const GridSpec& spec);

/// Projected SOR. Returns the field and a report; non-convergence within
/// max_sweeps is reported, not thrown. NaN raises NumericalError.
std::pair<ScalarField, SolveReport> solve(const GridSpec& spec, const SolverConfig& config);

}  // namespace thinobs
