#include <cmath>
#include <numbers>

#include "doctest.h"
#include "thinobs/error.hpp"
#include "thinobs/profiles.hpp"
#include "thinobs/solver.hpp"

using namespace thinobs;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> lambdas_of(const std::vector<AngularRoot>& roots)
{
    std::vector<double> out;
    for (const auto& r : roots) {
        out.push_back(r.lambda);
    }
    return out;
}

std::vector<double> all_admissible_roots(double s, double lo, double hi)
{
    std::vector<double> out;
    for (BoundaryPattern b : {BoundaryPattern::FullContact, BoundaryPattern::ContactAtPi, BoundaryPattern::NoContact}) {
        for (double l : lambdas_of(find_admissible(s, lo, hi, b))) {
            out.push_back(l);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// (w phi')' + mu w phi with fourth-order differences of the sampled profile.
double ode_residual(const AngularProfile& prof, double theta)
{
    const double p = 1.0 - 2.0 * prof.s();
    const double mu = prof.lambda() * (prof.lambda() + p);
    const double d = std::min(2e-3, 0.005 * std::min(theta, kPi - theta));
    auto f = [&](double t) { return prof.phi(t); };
    const double d1 = (f(theta - 2 * d) - 8 * f(theta - d) + 8 * f(theta + d) - f(theta + 2 * d)) / (12 * d);
    const double d2 =
        (-f(theta - 2 * d) + 16 * f(theta - d) - 30 * f(theta) + 16 * f(theta + d) - f(theta + 2 * d)) / (12 * d * d);
    const double w = std::pow(std::sin(theta), p);
    const double dw = p * std::cos(theta) * std::pow(std::sin(theta), p - 1.0);
    return w * d2 + dw * d1 + mu * w * f(theta);
}

}  // namespace

TEST_CASE("admissible set values")
{
    const auto set = admissible_frequencies(0.5, 2);
    const std::vector<double> expect = {1.5, 2, 3, 3.5, 4, 5};
    REQUIRE(set.values.size() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) {
        CHECK(set.values[i].lambda == doctest::Approx(expect[i]));
    }
    CHECK(set.values[0].cls == ProfileClass::Regular);
    CHECK(set.values[2].cls == ProfileClass::FullContact);

    const auto q = admissible_frequencies(0.25, 1);
    REQUIRE(q.values.size() == 3);
    CHECK(q.values[0].lambda == doctest::Approx(1.25));
    CHECK(q.values[1].lambda == doctest::Approx(2.0));
    CHECK(q.values[2].lambda == doctest::Approx(2.5));

    for (double s = 0.01; s < 1.0; s += 0.0731) {
        const auto v = admissible_frequencies(s, 4).values;
        for (std::size_t i = 1; i < v.size(); ++i) {
            CHECK(v[i].lambda > v[i - 1].lambda);
        }
    }
    CHECK_THROWS_AS(admissible_frequencies(1.0, 2), InvalidArgument);
}

TEST_CASE("shooting at the full-contact eigenvalue reproduces -sin 3 theta")
{
    const ShootResult r = sphere_ode_shoot(0.5, 3.0, BoundaryPattern::FullContact);
    CHECK(std::abs(r.mismatch) < 1e-8);
    for (int k = 0; k <= 200; ++k) {
        const double t = k * kPi / 200;
        CHECK(r.profile.phi(t) == doctest::Approx(-std::sin(3 * t)).epsilon(0).scale(1).epsilon(1e-8));
    }
    const ShootResult off = sphere_ode_shoot(0.5, 2.5, BoundaryPattern::FullContact);
    CHECK(std::abs(off.mismatch) > 0.1);
}

TEST_CASE("(sin theta)^(2s) solves the full-contact problem at lambda = 2s")
{
    const double s = 0.3;
    const ShootResult r = sphere_ode_shoot(s, 2 * s, BoundaryPattern::FullContact);
    CHECK(std::abs(r.mismatch) < 1e-8);
    for (int k = 1; k < 100; ++k) {
        const double t = k * kPi / 100;
        CHECK(std::abs(r.profile.phi(t) + std::pow(std::sin(t), 2 * s)) < 1e-8);
    }
    for (double t : {0.2, 0.7, 1.3, 2.0, 2.9}) {
        CHECK(std::abs(ode_residual(r.profile, t)) < 1e-8);
    }
}

TEST_CASE("shooting roots reproduce the admissible set")
{
    // 5.5 = 2m - 1 + s with m = 3 also lies below 5.6
    const auto half = all_admissible_roots(0.5, 1.0, 5.6);
    const std::vector<double> expect = {1.5, 2, 3, 3.5, 4, 5, 5.5};
    REQUIRE(half.size() == expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) {
        CHECK(std::abs(half[i] - expect[i]) < 1e-6);
    }
    const auto quarter = all_admissible_roots(0.25, 1.0, 3.0);
    const std::vector<double> expect_q = {1.25, 2, 2.5};
    REQUIRE(quarter.size() == expect_q.size());
    for (std::size_t i = 0; i < expect_q.size(); ++i) {
        CHECK(std::abs(quarter[i] - expect_q[i]) < 1e-6);
    }
    CHECK(find_admissible(0.5, 3.0, 3.0, BoundaryPattern::FullContact).empty());
}

TEST_CASE("sign screening separates the linear spectrum")
{
    // At s = 1/2 the full-contact linear spectrum is every integer + 1; only
    // odd lambda have both contact coefficients negative.
    const auto all = find_roots(0.5, 1.5, 5.5, BoundaryPattern::FullContact);
    REQUIRE(all.size() == 4);
    CHECK(all[0].lambda == doctest::Approx(2.0));
    CHECK_FALSE(all[0].sign_admissible);
    CHECK(all[1].sign_admissible);
    CHECK(all[1].profile.m() == 1);
    CHECK(all[3].sign_admissible);
    CHECK(all[3].profile.m() == 2);
}

TEST_CASE("mirror pattern has the same roots")
{
    const auto a = lambdas_of(find_admissible(0.35, 1.0, 4.0, BoundaryPattern::ContactAtPi));
    const auto b = lambdas_of(find_admissible(0.35, 1.0, 4.0, BoundaryPattern::ContactAtZero));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-10));
    }
}

TEST_CASE("exactly one even root near each 2m at s = 1/2")
{
    for (int m = 1; m <= 3; ++m) {
        const auto roots = find_admissible(0.5, 2 * m - 0.5, 2 * m + 0.5, BoundaryPattern::NoContact);
        REQUIRE(roots.size() == 1);
        CHECK(roots[0].lambda == doctest::Approx(2.0 * m).epsilon(1e-9));
        CHECK(roots[0].profile.m() == m);
    }
}

TEST_CASE("closed forms at s = 1/2")
{
    const AngularProfile fc = profile_closed_form_s_half(1, ProfileClass::FullContact);
    CHECK(fc.lambda() == 3.0);
    CHECK(fc.phi(0.0) == 0.0);
    CHECK(std::abs(fc.phi(kPi)) < 1e-15);
    CHECK(fc.phi(0.4) == doctest::Approx(-std::sin(1.2)));
    CHECK(fc.sign_admissible());

    const AngularProfile reg = profile_closed_form_s_half(1, ProfileClass::Regular);
    CHECK(reg.lambda() == 1.5);
    CHECK(reg.phi(0.0) == 1.0);
    CHECK(std::abs(reg.phi(kPi)) < 1e-15);
    CHECK(reg.sign_admissible());
    CHECK(reg.mirrored().sign_admissible());
    CHECK(reg.mirrored().phi(kPi) == 1.0);

    const AngularProfile ev = profile_closed_form_s_half(1, ProfileClass::Even);
    CHECK(ev.lambda() == 2.0);
    CHECK(ev.sign_admissible());
    CHECK(ev.interior_zeros() == 2);
    CHECK_THROWS_AS(profile_closed_form_s_half(0, ProfileClass::Even), InvalidArgument);
}

TEST_CASE("general-s profiles satisfy the angular equation")
{
    for (double s : {0.25, 0.75}) {
        for (ProfileClass c : {ProfileClass::Even, ProfileClass::Regular, ProfileClass::FullContact}) {
            const AngularProfile prof = profile_for(s, c, 1);
            INFO("s = " << s << " class " << class_name(c));
            CHECK(prof.sign_admissible());
            CHECK(prof.m() == 1);
            for (double t : {0.15, 0.6, 1.2, 1.9, 2.5, 3.0}) {
                CHECK(std::abs(ode_residual(prof, t)) < 1e-8);
            }
        }
    }
}

TEST_CASE("weighted normal derivative examples")
{
    const AngularProfile fc = profile_closed_form_s_half(1, ProfileClass::FullContact);
    const double one[] = {1.0};
    const auto est = weighted_normal_derivative(fc.lifted(), one, 0.5, 1e-2);
    CHECK(est.converged);
    CHECK(est.value == doctest::Approx(-3.0).epsilon(0).scale(1).epsilon(1e-3));
    CHECK(std::abs(est.value + 3.0) < 1e-3);

    for (double s : {0.25, 0.5, 0.75}) {
        auto f = [s](std::span<const double> x) { return std::pow(std::abs(x[x.size() - 1]), 2 * s); };
        const double pt[] = {0.3};
        CHECK(weighted_normal_derivative(f, pt, s, 1e-2).value == doctest::Approx(2 * s).epsilon(1e-9));
    }
    auto sq = [](std::span<const double> x) { return x[0] * x[0]; };
    const double pt[] = {0.7};
    CHECK(std::abs(weighted_normal_derivative(sq, pt, 0.5, 1e-2).value) < 1e-12);
}

TEST_CASE("full-contact profiles push down on the thin line")
{
    for (double s : {0.25, 0.5, 0.75}) {
        const AngularProfile fc = profile_for(s, ProfileClass::FullContact, 1);
        for (double a : {-0.9, -0.4, 0.2, 0.5, 1.0}) {
            const double pt[] = {a};
            const auto coarse = weighted_normal_derivative(fc.lifted(), pt, s, 1e-2);
            const auto fine = weighted_normal_derivative(fc.lifted(), pt, s, 5e-3);
            CHECK(coarse.value < 0.0);
            CHECK(std::abs(coarse.value - fine.value) < 1e-3);
            // exact: |a|^(lambda - 2s) times the endpoint weighted slope
            const double theta = a > 0 ? 0.0 : kPi;
            const double sign = a > 0 ? 1.0 : -1.0;
            const double exact = std::pow(std::abs(a), fc.lambda() - 2 * s) * sign * fc.weighted_dphi(theta);
            CHECK(fine.value == doctest::Approx(exact).epsilon(1e-4));
        }
    }
}

TEST_CASE("lifted profiles are discrete solutions away from the vertex")
{
    // The sampled profile is smooth except at the origin, where the discrete
    // defect is O(h^lambda). Elsewhere the defect is the O(h^2) truncation of
    // the weighted stencil next to the plane.
    for (double s : {0.25, 0.5, 0.75}) {
        const AngularProfile prof = profile_for(s, ProfileClass::Regular, 1);
        double prev_global = 0.0;
        double prev_away = 0.0;
        for (int n : {256, 512, 1024}) {
            const GridSpec g = make_grid(2, n, 2.0, s);
            const ResidualMap map = residual_map(prof.sample(g));
            double away = 0.0;
            double global = 0.0;
            for (int i = 1; i < n; ++i) {
                for (int j = 0; j < g.half(); ++j) {
                    const double r = std::hypot(g.node(0, i), j * g.h);
                    const double v = j == 0 ? map.complementarity[i] : map.pde[g.index(i, 0, j)];
                    global = std::max(global, v);
                    if (r >= 0.25) {
                        away = std::max(away, v);
                    }
                }
            }
            INFO("s = " << s << " n = " << n << " away " << away << " global " << global);
            if (n == 512 && s == 0.5) {
                CHECK(away < 1e-6);
            }
            if (n == 1024) {
                CHECK(away < 1e-6);
            }
            if (n > 256) {
                CHECK(std::log2(prev_away / away) > 1.8);
                CHECK(std::log2(prev_global / global) > 0.8 * prof.lambda() - 0.3);
            }
            prev_global = global;
            prev_away = away;
        }
    }
}
