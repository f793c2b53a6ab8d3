#include <bit>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "thinobs/error.hpp"
#include "thinobs/solver.hpp"

using namespace thinobs;

namespace {

double x1_only(std::span<const double> x) { return x[0]; }

// Contact solution -|x_d|^(2s): zero on the plane, weighted flux -2s per side.
PointFunction contact_profile(double s)
{
    return [s](std::span<const double> x) { return -std::pow(std::abs(x[x.size() - 1]), 2.0 * s); };
}

// rho^(3/2) cos(3 theta / 2), the s = 1/2 regular profile; theta from +x1.
double regular_half(std::span<const double> x)
{
    const double rho = std::hypot(x[0], x[1]);
    const double theta = std::atan2(std::abs(x[1]), x[0]);
    return std::pow(rho, 1.5) * std::cos(1.5 * theta);
}

double max_error(const ScalarField& u, const PointFunction& f)
{
    const ScalarField exact = ScalarField::sample(u.spec(), f);
    double e = 0.0;
    for (std::size_t k = 0; k < exact.values().size(); ++k) {
        e = std::max(e, std::abs(exact.values()[k] - u.values()[k]));
    }
    return e;
}

SolverConfig config_for(const GridSpec& g, PointFunction data)
{
    SolverConfig c;
    c.boundary_data = std::move(data);
    c.omega = optimal_omega(g);
    c.tol = 1e-11;
    return c;
}

}  // namespace

TEST_CASE("energy of x1 on [-1,1]^2")
{
    // Exact value 4 / (2 - 2s) = integral of |x_d|^(1-2s) over the square.
    for (double s : {0.5, 0.25, 0.75}) {
        for (int n : {8, 32}) {
            const GridSpec g = make_grid(2, n, 2.0, s);
            const double e = assemble_energy(g).energy(ScalarField::sample(g, x1_only));
            CHECK(e == doctest::Approx(4.0 / (2.0 - 2.0 * s)).epsilon(1e-12));
        }
    }
    const GridSpec g3 = make_grid(3, 8, 2.0, 0.5);
    CHECK(assemble_energy(g3).energy(ScalarField::sample(g3, x1_only)) == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("energy of constants vanishes")
{
    const GridSpec g = make_grid(3, 8, 2.0, 0.3);
    const ScalarField c = ScalarField::sample(g, [](std::span<const double>) { return 2.5; });
    CHECK(assemble_energy(g).energy(c) == 0.0);
}

TEST_CASE("conductances at s = 1/2 are uniform")
{
    const EnergyForm f = assemble_energy(make_grid(2, 16, 2.0, 0.5));
    for (int j = 0; j < 8; ++j) {
        CHECK(f.tangential[j] == doctest::Approx(1.0));
        CHECK(f.normal[j] == doctest::Approx(1.0));
    }
    CHECK(f.tangential[8] == doctest::Approx(0.5));
}

TEST_CASE("constant data gives the constant solution with empty contact")
{
    for (int dim : {2, 3}) {
        const GridSpec g = make_grid(dim, 16, 2.0, 0.4);
        auto [u, rep] = solve(g, config_for(g, [](std::span<const double>) { return 1.0; }));
        CHECK(rep.converged);
        CHECK(max_error(u, [](std::span<const double>) { return 1.0; }) < 1e-9);
        for (std::size_t t = 0; t < g.plane_size(); ++t) {
            CHECK(u.values()[t * g.layers()] > 0.5);
        }
    }
}

TEST_CASE("contact profile -|x_d|^(2s) is reproduced")
{
    for (double s : {0.25, 0.5, 0.75}) {
        INFO("s = " << s);
        for (int n : {16, 32}) {
            const GridSpec g = make_grid(2, n, 2.0, s);
            auto [u, rep] = solve(g, config_for(g, contact_profile(s)));
            CHECK(rep.converged);
            CHECK(max_error(u, contact_profile(s)) < 1e-8);
            const Residuals r = residuals(u);
            CHECK(r.max() < 1e-9);
        }
    }
}

TEST_CASE("residuals of exact discrete states")
{
    const GridSpec g = make_grid(2, 32, 2.0, 0.3);
    const Residuals r = residuals(ScalarField::sample(g, contact_profile(0.3)));
    CHECK(r.pde < 1e-12);
    CHECK(r.complementarity < 1e-12);
    CHECK(r.violation == 0.0);

    // x1 violates the obstacle on half the plane.
    const Residuals bad = residuals(ScalarField::sample(g, x1_only));
    CHECK(bad.violation == doctest::Approx(1.0 - g.h));
    CHECK(bad.pde < 1e-12);
}

TEST_CASE("plane flux of the contact profile is -2s per side")
{
    for (double s : {0.2, 0.5, 0.8}) {
        const GridSpec g = make_grid(2, 32, 2.0, s);
        const auto flux = plane_flux(ScalarField::sample(g, contact_profile(s)));
        for (int i = 1; i < g.n; ++i) {
            CHECK(flux[i] == doctest::Approx(-4.0 * s).epsilon(1e-12));
        }
        CHECK(flux[0] == 0.0);
    }
}

TEST_CASE("energy is monotone and the plane stays admissible")
{
    for (double s : {0.25, 0.75}) {
        for (int dim : {2, 3}) {
            const GridSpec g = make_grid(dim, 16, 2.0, s);
            SolverConfig c = config_for(g, [](std::span<const double> x) {
                return x[0] + 0.3 * std::cos(3.0 * x[0]) - 0.5 * std::abs(x[x.size() - 1]);
            });
            auto [u, rep] = solve(g, c);
            CHECK(rep.converged);
            const auto& e = rep.energy_history;
            REQUIRE(e.size() >= 2);
            for (std::size_t k = 1; k < e.size(); ++k) {
                CHECK(e[k] <= e[k - 1] + 10.0 * 2.220446049250313e-16 * std::abs(e[0]));
            }
            // the obstacle binds at interior plane nodes; box nodes carry the data
            const int hi2 = dim == 3 ? g.n - 1 : 0;
            for (int i1 = 1; i1 < g.n; ++i1) {
                for (int i2 = dim == 3 ? 1 : 0; i2 <= hi2; ++i2) {
                    CHECK(u.at(i1, i2, 0) >= 0.0);
                }
            }
        }
    }
}

TEST_CASE("solutions are deterministic and backend independent")
{
    const GridSpec g = make_grid(3, 16, 2.0, 0.35);
    SolverConfig c = config_for(g, [](std::span<const double> x) { return x[0] - x[1] * x[1] + 0.2; });
    c.backend = kernels::Backend::Scalar;
    auto [a, ra] = solve(g, c);
    auto [b, rb] = solve(g, c);
    CHECK(ra.sweeps_used == rb.sweeps_used);
    CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
    for (kernels::Backend vb : {kernels::Backend::Avx2, kernels::Backend::Neon}) {
        if (!kernels::available(vb)) {
            continue;
        }
        c.backend = vb;
        auto [v, rv] = solve(g, c);
        CHECK(rv.sweeps_used == ra.sweeps_used);
        bool same = true;
        for (std::size_t k = 0; k < v.values().size(); ++k) {
            same = same && std::bit_cast<std::uint64_t>(v.values()[k]) ==
                               std::bit_cast<std::uint64_t>(a.values()[k]);
        }
        CHECK(same);
    }
}

TEST_CASE("regular profile at s = 1/2 converges under refinement")
{
    double prev = 0.0;
    for (int n : {16, 32, 64}) {
        const GridSpec g = make_grid(2, n, 2.0, 0.5);
        SolverConfig c = config_for(g, regular_half);
        c.nested = true;
        auto [u, rep] = solve(g, c);
        CHECK(rep.converged);
        const double err = max_error(u, regular_half);
        if (prev > 0.0) {
            CHECK(std::log2(prev / err) > 1.0);
        }
        prev = err;
    }
    CHECK(prev < 2e-2);
}

TEST_CASE("sweep budget exhaustion is reported, not thrown")
{
    const GridSpec g = make_grid(2, 32, 2.0, 0.5);
    SolverConfig c = config_for(g, regular_half);
    c.max_sweeps = 3;
    auto [u, rep] = solve(g, c);
    CHECK_FALSE(rep.converged);
    CHECK(rep.sweeps_used == 3);
    CHECK(rep.final_residual > c.tol);
}

TEST_CASE("invalid configuration and overflow")
{
    const GridSpec g = make_grid(2, 16, 2.0, 0.5);
    SolverConfig c = config_for(g, x1_only);
    c.omega = 2.0;
    CHECK_THROWS_AS(solve(g, c), InvalidArgument);
    c.omega = 1.5;
    c.boundary_data = [](std::span<const double>) { return std::nan(""); };
    CHECK_THROWS_AS(solve(g, c), InvalidArgument);
    c.boundary_data = [](std::span<const double> x) { return 1e300 * (1.0 + x[0]); };
    CHECK_THROWS_AS(solve(g, c), NumericalError);
}
