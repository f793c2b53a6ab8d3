#pragma once

// Coincidence set, free boundary and frequency-based classification of
// free-boundary points.

#include <array>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "thinobs/field.hpp"
#include "thinobs/profiles.hpp"

namespace thinobs {

/// One flag per thin-plane node (plane index t of GridSpec::index), true where
/// u(x', 0) <= tol_u.
std::vector<char> coincidence_set(const ScalarField& field, double tol_u);

/// 10 tol max |u| over the box-boundary nodes: the default contact threshold.
double default_contact_tolerance(const ScalarField& field, double solver_tol = 1e-10);

/// Contact nodes with a non-contact neighbour in the thin plane, at least
/// `margin` (default 4h) from the box faces. Positions in lexicographic order.
std::vector<std::array<double, 3>> free_boundary(const GridSpec& spec, std::span<const char> mask,
                                                 std::optional<double> margin = std::nullopt);

enum class LabelStatus { Snapped, Unresolved, Skipped };

struct StratumLabel {
    std::array<double, 3> x{};
    LabelStatus status = LabelStatus::Unresolved;
    double lambda_hat = 0.0;
    double intercept = 0.0;
    std::optional<AdmissibleEntry> snapped;
    double residual = std::numeric_limits<double>::infinity();  ///< |lambda_hat - snapped lambda|
    std::optional<std::array<double, 3>> tangent;
    double anisotropy = 0.0;
};

struct ClassifyOptions {
    double delta_snap = 0.1;
    double r_lo = 0.0;  ///< 0: 8h
    double r_hi = 0.0;  ///< 0: 4 r_lo; always capped by the distance to the box
    int radii = 4;
};

/// Nearest admissible value to lambda_hat, ties to the smaller one; nullopt
/// if farther than delta_snap.
std::optional<AdmissibleEntry> snap_frequency(double s, double lambda_hat, double delta_snap);

/// lambda_hat from a frequency ladder at each point, snapped to the admissible
/// set. Points whose ladder does not fit in the box are Skipped.
std::vector<StratumLabel> classify(const ScalarField& field, std::span<const std::array<double, 3>> points,
                                   const ClassifyOptions& options = {});

struct TangentEstimate {
    std::optional<std::array<double, 3>> direction;  ///< unit vector in the thin plane, or none if isotropic
    double anisotropy = 0.0;                         ///< largest over smallest second moment
    int points = 0;
};

/// Principal direction of the second moments about x0 of the labelled points
/// within rho of x0 that share the stratum of the label nearest x0. Needs
/// dim 3 and at least 8 such points; anisotropy below 4 gives no direction.
TangentEstimate tangent_plane(std::span<const StratumLabel> labels, std::span<const double> x0, double rho);

/// Same analysis for bare thin-plane points.
TangentEstimate principal_direction(std::span<const std::array<double, 3>> points, std::span<const double> x0,
                                    double rho);

struct SplittingGap {
    double r = 0.0;
    double max_gap = 0.0;  ///< +infinity when the rescaled stratum is empty
    int stratum_points = 0;
};

/// For each radius, the rescaled field's free boundary is classified and the
/// distance from each of 8 points y0 = t e on the tangent line (t equispaced
/// in [-3/4, 3/4]) to the nearest point of the stratum lambda is taken; the
/// maximum over y0 is reported. Unless set, the ladder starts at
/// max(8h', 4h / r) so that it is resolved on the original grid too.
std::vector<SplittingGap> sp_diagnostic(const ScalarField& field, std::span<const double> x0,
                                        std::span<const double> tangent, std::span<const double> radii,
                                        double lambda, const ClassifyOptions& options = {});

}  // namespace thinobs
