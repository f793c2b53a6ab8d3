#include "thinobs/fixtures.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "thinobs/blowup.hpp"
#include "thinobs/error.hpp"

namespace thinobs {

namespace {

// cos(k theta / 2) as a polynomial in c = cos(theta / 2) = sqrt((rho + x1) / (2 rho)),
// which vanishes exactly on the contact half-line.
double half_angle_cos(double c, int k)
{
    switch (k) {
    case 3: return c * (4 * c * c - 3);
    case 7: {
        const double c2 = c * c;
        return c * (((64 * c2 - 112) * c2 + 56) * c2 - 7);
    }
    default: throw InvalidArgument("unsupported half-angle multiple");
    }
}

double half_cos(std::span<const double> x, double rho)
{
    return rho > 0.0 ? std::sqrt(std::max(0.0, (rho + x[0]) / (2 * rho))) : 1.0;
}

}  // namespace

PointFunction regular_instance_data()
{
    return [](std::span<const double> x) {
        const double rho = std::hypot(x[0], x[1]);
        const double c = half_cos(x, rho);
        return std::pow(rho, 1.5) * half_angle_cos(c, 3) + kRegularMix * std::pow(rho, 3.5) * half_angle_cos(c, 7);
    };
}

PointFunction regular_profile_data()
{
    return [](std::span<const double> x) {
        const double rho = std::hypot(x[0], x[1]);
        return std::pow(rho, 1.5) * half_angle_cos(half_cos(x, rho), 3);
    };
}

SolverConfig canonical_config(const GridSpec& spec, PointFunction data)
{
    SolverConfig c;
    c.boundary_data = std::move(data);
    c.omega = optimal_omega(spec);
    c.tol = 1e-10;
    c.nested = true;
    c.record_energy = false;
    return c;
}

std::pair<ScalarField, SolveReport> solve_instance_2d(int n, const PointFunction& data)
{
    const GridSpec g = make_grid(2, n, 2.0, 0.5);
    return solve(g, canonical_config(g, data));
}

std::pair<ScalarField, SolveReport> extended_instance_3d(int n)
{
    auto [u2, rep2] = solve_instance_2d(n, regular_instance_data());
    if (!rep2.converged) {
        throw NumericalError("2D regular instance did not converge");
    }
    auto plane = std::make_shared<const ScalarField>(std::move(u2));
    PointFunction extension = [plane](std::span<const double> x) {
        const double y[2] = {x[0], x[2]};
        return interpolate(*plane, y);
    };
    const GridSpec g3 = make_grid(3, n, 2.0, 0.5);
    SolverConfig c = canonical_config(g3, extension);
    c.nested = false;
    c.initial = ScalarField::sample(g3, extension);
    return solve(g3, c);
}

std::pair<PointFunction, PointFunction> regular_pair(double s)
{
    const AngularProfile b = profile_for(s, ProfileClass::Regular, 1);
    const PointFunction b1 = normalized(b.lifted(), 2, s);
    const PointFunction b2 = normalized(b.mirrored().lifted(), 2, s);
    return {b1, b2};
}

PointFunction band_mixed(double r0, double s)
{
    auto [b1, b2] = regular_pair(s);
    return [b1, b2, r0](std::span<const double> x) {
        const double rho = std::hypot(x[0], x[1]);
        if (rho == 0.0) {
            return 0.0;
        }
        const double chi = 0.5 * (1.0 + std::cos(std::numbers::pi * std::log2(rho / r0)));
        return chi * b1(x) + (1.0 - chi) * b2(x);
    };
}

std::vector<std::array<double, 3>> jittered_line(std::array<double, 3> x0, double angle, double half_length,
                                                 int count, double sigma, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> along(-half_length, half_length);
    std::normal_distribution<double> jitter(0.0, sigma);
    std::vector<std::array<double, 3>> out;
    for (int i = 0; i < count; ++i) {
        const double t = along(rng);
        const double j1 = jitter(rng);
        const double j2 = jitter(rng);
        out.push_back({x0[0] + t * std::cos(angle) + j1, x0[1] + t * std::sin(angle) + j2, 0.0});
    }
    return out;
}

std::vector<std::array<double, 3>> isotropic_cloud(std::array<double, 3> x0, double rho, int count,
                                                   std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::array<double, 3>> out;
    for (int i = 0; i < count; ++i) {
        const double r = rho * std::sqrt(unit(rng));
        const double a = 2.0 * std::numbers::pi * unit(rng);
        out.push_back({x0[0] + r * std::cos(a), x0[1] + r * std::sin(a), 0.0});
    }
    return out;
}

}  // namespace thinobs
