#pragma once

// Canonical instances shared by the tests, the acceptance run and the CLI.

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "thinobs/field.hpp"
#include "thinobs/profiles.hpp"
#include "thinobs/solver.hpp"

namespace thinobs {

/// Weight of the 7/2 profile in the regular instance.
inline constexpr double kRegularMix = 0.5;

/// b_{3/2} + kRegularMix b_{7/2} at s = 1/2: contact exactly on {x1 <= 0},
/// one free-boundary point at the origin with frequency limit 3/2, and a
/// frequency that strictly increases with r.
PointFunction regular_instance_data();

/// The s = 1/2 regular profile rho^(3/2) cos(3 theta / 2).
PointFunction regular_profile_data();

/// Solver settings used for every canonical instance: optimal omega, nested
/// start, tolerance 1e-10, no energy history.
SolverConfig canonical_config(const GridSpec& spec, PointFunction data);

/// Solves on [-1,1]^2 with n cells per axis and the given boundary data.
std::pair<ScalarField, SolveReport> solve_instance_2d(int n, const PointFunction& data);

/// The 2D regular instance solved at n, extended constantly in x2 to
/// [-1,1]^3 with n cells per axis, then re-solved in 3D from that start.
std::pair<ScalarField, SolveReport> extended_instance_3d(int n);

/// Two mirror-image regular profiles b1 (contact on x1 < 0) and b2, each of
/// unit weighted norm on the unit sphere.
std::pair<PointFunction, PointFunction> regular_pair(double s = 0.5);

/// chi b1 + (1 - chi) b2 with chi = (1 + cos(pi log2(|x| / r0))) / 2, so the
/// dominant profile alternates between consecutive dyadic radii below r0.
PointFunction band_mixed(double r0, double s = 0.5);

/// count points x0 + t e + sigma (g1, g2) in the thin plane of R^3, t uniform
/// in [-half_length, half_length], g Gaussian; deterministic in seed.
std::vector<std::array<double, 3>> jittered_line(std::array<double, 3> x0, double angle, double half_length,
                                                 int count, double sigma, std::uint64_t seed);

/// count points uniform in the disk of radius rho about x0 in the thin plane.
std::vector<std::array<double, 3>> isotropic_cloud(std::array<double, 3> x0, double rho, int count,
                                                   std::uint64_t seed);

}  // namespace thinobs
