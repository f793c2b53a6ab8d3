#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "thinobs/error.hpp"
#include "thinobs/field.hpp"

using namespace thinobs;

namespace {

std::filesystem::path temp_path(const std::string& name)
{
    return std::filesystem::temp_directory_path() / ("thinobs_test_field_" + name);
}

double xs(std::span<const double> x) { return x[0]; }

}  // namespace

TEST_CASE("make_grid spacing and validation")
{
    const GridSpec g = make_grid(2, 256, 2.0, 0.5);
    CHECK(g.h == 2.0 / 256);
    CHECK(g.origin[0] == -1.0);
    CHECK(g.origin[1] == -1.0);
    CHECK(g.size() == 257u * 129u);

    const GridSpec g3 = make_grid(3, 64, 2.0, 0.25);
    CHECK(g3.h == 1.0 / 32);
    CHECK(g3.size() == 65u * 65u * 33u);

    CHECK_THROWS_AS(make_grid(2, 100, 2.0, 0.5), InvalidArgument);
    CHECK_THROWS_AS(make_grid(2, 4, 2.0, 0.5), InvalidArgument);
    CHECK_THROWS_AS(make_grid(2, 64, 2.0, 0.0), InvalidArgument);
    CHECK_THROWS_AS(make_grid(2, 64, 2.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(make_grid(4, 64, 2.0, 0.5), InvalidArgument);
    const double bad_origin[] = {0.0, 0.0};
    CHECK_THROWS_AS(make_grid(2, 64, 2.0, 0.5, bad_origin), InvalidArgument);
}

TEST_CASE("thin plane is a node layer")
{
    const GridSpec g = make_grid(3, 16, 2.0, 0.5);
    CHECK(g.half() * g.h == doctest::Approx(1.0));
    CHECK(g.origin[2] + g.half() * g.h == 0.0);
}

TEST_CASE("weight_at values")
{
    CHECK(weight_at(make_grid(2, 8, 2.0, 0.5), 0.3) == 1.0);
    CHECK(weight_at(make_grid(2, 8, 2.0, 0.25), 0.25) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(weight_at(make_grid(2, 8, 2.0, 0.75), 0.5) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(weight_at(make_grid(2, 8, 2.0, 0.75), -0.5) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK_THROWS_AS(weight_at(make_grid(2, 8, 2.0, 0.75), 0.0), InvalidArgument);
}

TEST_CASE("weight is positive and finite at every cell center")
{
    for (double s : {0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99}) {
        const GridSpec g = make_grid(2, 64, 2.0, s);
        for (int l = 0; l < g.half(); ++l) {
            const double w = weight_at(g, (l + 0.5) * g.h);
            CHECK(std::isfinite(w));
            CHECK(w > 0.0);
            CHECK(std::isfinite(cell_weight(g, l)));
            CHECK(cell_weight(g, l) > 0.0);
            CHECK(normal_edge_weight(g, l) > 0.0);
        }
    }
}

TEST_CASE("layer weights match independent quadrature")
{
    boost::math::quadrature::tanh_sinh<double> integrator;
    for (double s : {0.25, 0.5, 0.75}) {
        const GridSpec g = make_grid(2, 32, 2.0, s);
        const double p = g.exponent();
        for (int l : {0, 1, 5, 15}) {
            const double a = l * g.h;
            const double b = (l + 1) * g.h;
            const double avg = integrator.integrate([p](double t) { return std::pow(t, p); }, a, b) / g.h;
            const double inv = integrator.integrate([p](double t) { return std::pow(t, -p); }, a, b) / g.h;
            CHECK(cell_weight(g, l) == doctest::Approx(avg).epsilon(1e-12));
            CHECK(normal_edge_weight(g, l) == doctest::Approx(1.0 / inv).epsilon(1e-12));
        }
    }
}

TEST_CASE("interpolate reproduces coordinates and reflects")
{
    const GridSpec g = make_grid(2, 64, 2.0, 0.5);
    const ScalarField f = ScalarField::sample(g, xs);
    const double p[] = {0.3, 0.1};
    CHECK(interpolate(f, p) == doctest::Approx(0.3).epsilon(1e-14));

    const ScalarField q = ScalarField::sample(g, [](std::span<const double> x) { return x[0] * x[0] + x[1]; });
    const double up[] = {0.123, 0.377};
    const double down[] = {0.123, -0.377};
    CHECK(interpolate(q, up) == interpolate(q, down));

    const double outside[] = {1.5, 0.0};
    CHECK_THROWS_AS(interpolate(f, outside), GeometryError);
}

TEST_CASE("bilinear interpolation is exact on x1 * x_d")
{
    const GridSpec g = make_grid(2, 16, 2.0, 0.5);
    const ScalarField f =
        ScalarField::sample(g, [](std::span<const double> x) { return x[0] * x[1]; });
    for (auto [a, b] : {std::pair{0.0371, 0.2119}, std::pair{-0.61, 0.93}, std::pair{0.999, 0.001}}) {
        const double p[] = {a, b};
        CHECK(interpolate(f, p) == doctest::Approx(a * b).epsilon(1e-14));
    }
}

TEST_CASE("interpolate reproduces affine fields at random interior points")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    for (int dim : {2, 3}) {
        const GridSpec g = make_grid(dim, 16, 2.0, 0.3);
        // even in x_d: affine in x' plus |x_d| is affine on each half
        const ScalarField f = ScalarField::sample(g, [dim](std::span<const double> x) {
            double v = 0.25 + 1.5 * x[0] - 0.75 * std::abs(x[dim - 1]);
            if (dim == 3) {
                v += 2.0 * x[1];
            }
            return v;
        });
        for (int trial = 0; trial < 200; ++trial) {
            std::array<double, 3> p{coord(rng), coord(rng), coord(rng)};
            double expect = 0.25 + 1.5 * p[0] - 0.75 * std::abs(p[dim - 1]);
            if (dim == 3) {
                expect += 2.0 * p[1];
            }
            CHECK(interpolate(f, std::span<const double>(p.data(), dim)) ==
                  doctest::Approx(expect).epsilon(1e-13));
        }
    }
}

TEST_CASE("FBX1 round trip is bit exact")
{
    for (int dim : {2, 3}) {
        const GridSpec g = make_grid(dim, 8, 1.5, 0.37);
        std::mt19937_64 rng(11);
        std::normal_distribution<double> nd;
        std::vector<double> v(g.size());
        for (double& x : v) {
            x = nd(rng);
        }
        const ScalarField f(g, v);
        const auto path = temp_path("rt" + std::to_string(dim) + ".fbx1");
        const std::vector<std::string> comments = {"tool thinobs", "config_hash 0"};
        save_field(f, path, comments);
        const ScalarField back = load_field(path);
        CHECK(back.spec() == g);
        REQUIRE(back.values().size() == v.size());
        CHECK(std::equal(v.begin(), v.end(), back.values().begin()));
        CHECK(load_field_comments(path) == comments);
    }
}

TEST_CASE("FBX1 load errors")
{
    const auto path = temp_path("bad.fbx1");
    {
        std::ofstream out(path, std::ios::binary);
        out << "FBX1\ndim 2\nn 8\nside_length 2\ns 1.5\norigin -1 -1\n";
    }
    CHECK_THROWS_AS(load_field(path), IoError);

    {
        std::ofstream out(path, std::ios::binary);
        out << "FBX1\ndim 2\nn 8\nside_length 2\ns 0.5\norigin -1 -1 0\n";
    }
    CHECK_THROWS_WITH_AS(load_field(path), doctest::Contains("dimension mismatch"), IoError);

    {
        std::ofstream out(path, std::ios::binary);
        out << "FBX2\n";
    }
    CHECK_THROWS_AS(load_field(path), IoError);

    const GridSpec g = make_grid(2, 8, 2.0, 0.5);
    save_field(ScalarField::sample(g, xs), path);
    const auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size - 12);
    const std::string expected = "expected " + std::to_string(g.size() * 8) + " bytes, got " +
                                 std::to_string(g.size() * 8 - 12);
    CHECK_THROWS_WITH_AS(load_field(path), doctest::Contains(expected.c_str()), IoError);

    save_field(ScalarField::sample(g, xs), path);
    {
        std::fstream io(path, std::ios::binary | std::ios::in | std::ios::out);
        io.seekp(-8, std::ios::end);
        const double nan = std::nan("");
        io.write(reinterpret_cast<const char*>(&nan), 8);
    }
    CHECK_THROWS_WITH_AS(load_field(path), doctest::Contains("non-finite"), IoError);
}

TEST_CASE("field rejects non-finite values")
{
    const GridSpec g = make_grid(2, 8, 2.0, 0.5);
    std::vector<double> v(g.size(), 0.0);
    v[3] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(ScalarField(g, v), NumericalError);
    CHECK_THROWS_AS(ScalarField(g, std::vector<double>(5)), InvalidArgument);
}
