#include "thinobs/blowup.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "thinobs/error.hpp"
#include "thinobs/frequency.hpp"

namespace thinobs {

namespace {

constexpr double kRad = std::numbers::pi / 180.0;
constexpr std::array<double, 3> kOrigin{};

std::span<const double> head(const std::array<double, 3>& x, int dim) { return {x.data(), static_cast<std::size_t>(dim)}; }

double sphere_sum(const SphereRule& rule, const auto& integrand)
{
    double sum = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
        sum += rule.weights[q] * integrand(rule.points[q]);
    }
    return sum;
}

struct Sample {
    double a1, a2, t;  ///< tangential coordinates relative to the origin, normal coordinate
    double value;
};

std::vector<Sample> ball_samples(const ScalarField& u, std::size_t target)
{
    const GridSpec& g = u.spec();
    const int n = g.n;
    std::size_t count = 0;
    for (int i = 0; i <= n; ++i) {
        for (int k = 0; k <= (g.dim == 3 ? n : 0); ++k) {
            for (int j = 0; j <= g.half(); ++j) {
                const auto x = u.position(i, k, j);
                count += x[0] * x[0] + x[1] * x[1] + x[2] * x[2] <= 1.0 ? 1 : 0;
            }
        }
    }
    int stride = 1;
    while (count / static_cast<std::size_t>(std::pow(stride, g.dim)) > target) {
        ++stride;
    }
    std::vector<Sample> out;
    for (int i = 0; i <= n; i += stride) {
        for (int k = 0; k <= (g.dim == 3 ? n : 0); k += stride) {
            for (int j = 0; j <= g.half(); j += stride) {
                const auto x = u.position(i, k, j);
                if (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] > 1.0) {
                    continue;
                }
                if (g.dim == 2) {
                    out.push_back({x[0], 0.0, x[1], u.at(i, k, j)});
                } else {
                    out.push_back({x[0], x[1], x[2], u.at(i, k, j)});
                }
            }
        }
    }
    return out;
}

/// Relative L2 misfit of the best multiple of b(x'.e, x_d).
double misfit(const std::vector<Sample>& samples, double ff, const AngularProfile& b, double angle)
{
    const double c = std::cos(angle);
    const double sn = std::sin(angle);
    double fg = 0.0;
    double gg = 0.0;
    for (const auto& q : samples) {
        const double g = b.field(q.a1 * c + q.a2 * sn, q.t);
        fg += q.value * g;
        gg += g * g;
    }
    if (!(gg > 0.0)) {
        return 1.0;
    }
    return std::sqrt(std::max(0.0, 1.0 - fg * fg / (gg * ff)));
}

}  // namespace

ScalarField rescale(const ScalarField& field, std::span<const double> center, double r, int n_out)
{
    const GridSpec& g = field.spec();
    if (static_cast<int>(center.size()) != g.dim) {
        throw InvalidArgument("center dimension does not match the field");
    }
    if (!(r > 0.0) || !std::isfinite(r)) {
        throw InvalidArgument("rescaling radius must be positive");
    }
    const double slack = 1e-12 * g.side_length;
    for (int a = 0; a < g.dim; ++a) {
        if (center[a] - r < g.lower(a) - slack || center[a] + r > g.upper(a) + slack) {
            throw GeometryError("rescaling cube of half-width " + std::to_string(r) + " leaves the box");
        }
    }
    const GridSpec out = make_grid(g.dim, n_out > 0 ? n_out : g.n, 2.0, g.s);
    const int d = g.dim;
    ScalarField raw = ScalarField::sample(out, [&](std::span<const double> y) {
        std::array<double, 3> x{};
        for (int a = 0; a < d; ++a) {
            x[a] = (a == d - 1 ? 0.0 : center[a]) + r * y[a];
            if (a < d - 1) {
                x[a] = std::clamp(x[a], g.lower(a), g.upper(a));
            }
        }
        x[d - 1] = std::clamp(x[d - 1], -g.upper(d - 1), g.upper(d - 1));
        return interpolate(field, head(x, d));
    });
    const SphereRule rule = sphere_rule(d, g.s, head(kOrigin, d), 1.0, out.h);
    const double H = sphere_sum(rule, [&](const std::array<double, 3>& x) {
        const double v = interpolate(raw, head(x, d));
        return v * v;
    });
    if (!(H > 0.0) || !std::isfinite(H)) {
        throw NumericalError("zero boundary mass at rescaling radius " + std::to_string(r));
    }
    return raw.scaled(1.0 / std::sqrt(H));
}

double sphere_inner(const PointFunction& a, const PointFunction& b, int dim, double s, double h)
{
    const SphereRule rule = sphere_rule(dim, s, head(kOrigin, dim), 1.0, h);
    return sphere_sum(rule, [&](const std::array<double, 3>& x) { return a(head(x, dim)) * b(head(x, dim)); });
}

double sphere_distance(const ScalarField& a, const ScalarField& b)
{
    const GridSpec& ga = a.spec();
    if (ga.dim != b.spec().dim || ga.s != b.spec().s) {
        throw InvalidArgument("sphere_distance needs fields of equal dimension and s");
    }
    const int d = ga.dim;
    const SphereRule rule = sphere_rule(d, ga.s, head(kOrigin, d), 1.0, std::min(ga.h, b.spec().h));
    const double sq = sphere_sum(rule, [&](const std::array<double, 3>& x) {
        const double diff = interpolate(a, head(x, d)) - interpolate(b, head(x, d));
        return diff * diff;
    });
    return std::sqrt(std::max(0.0, sq));
}

double sphere_inner(const ScalarField& a, const PointFunction& b)
{
    const GridSpec& g = a.spec();
    const SphereRule rule = sphere_rule(g.dim, g.s, head(kOrigin, g.dim), 1.0, g.h);
    return sphere_sum(rule, [&](const std::array<double, 3>& x) {
        return interpolate(a, head(x, g.dim)) * b(head(x, g.dim));
    });
}

PointFunction normalized(const PointFunction& f, int dim, double s)
{
    const double norm2 = sphere_inner(f, f, dim, s, dim == 2 ? 1.0 / 1024 : 1.0 / 128);
    if (!(norm2 > 0.0)) {
        throw NumericalError("cannot normalize a function vanishing on the unit sphere");
    }
    const double inv = 1.0 / std::sqrt(norm2);
    return [f, inv](std::span<const double> x) { return inv * f(x); };
}

BlowupDiagnostics blowup_sequence(const ScalarField& field, std::span<const double> center, double r0, int k,
                                  int n_out)
{
    const GridSpec& g = field.spec();
    if (k < 1) {
        throw InvalidArgument("blow-up sequence needs at least one halving");
    }
    const double r_min = min_reliable_radius(g) * std::ldexp(1.0, k);
    if (r0 < r_min * (1.0 - 1e-12)) {
        throw InvalidArgument("r0 = " + std::to_string(r0) + " below 4h 2^k = " + std::to_string(r_min));
    }
    BlowupDiagnostics out;
    out.dim = g.dim;
    std::copy(center.begin(), center.end(), out.center.begin());
    for (int i = 0; i <= k; ++i) {
        out.radii.push_back(std::ldexp(r0, -i));
        out.fields.push_back(rescale(field, center, out.radii.back(), n_out));
    }
    for (int i = 0; i < k; ++i) {
        out.pairwise_dist.push_back(sphere_distance(out.fields[i], out.fields[i + 1]));
    }
    const int tail = (k + 1) / 2;
    out.cauchy_defect = *std::max_element(out.pairwise_dist.end() - tail, out.pairwise_dist.end());
    return out;
}

std::vector<double> scalar_product_tracker(const ScalarField& field, std::span<const double> center,
                                           std::span<const double> radii, const PointFunction& ref)
{
    std::vector<double> curve;
    curve.reserve(radii.size());
    for (double r : radii) {
        curve.push_back(sphere_inner(rescale(field, center, r), ref));
    }
    return curve;
}

std::optional<std::size_t> first_crossing(std::span<const double> curve, double level)
{
    for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
        if ((curve[i] - level) * (curve[i + 1] - level) < 0.0) {
            return i;
        }
    }
    return std::nullopt;
}

Alignment align_2d(const ScalarField& field_on_B1, double s, double lambda_hat)
{
    const GridSpec& g = field_on_B1.spec();
    const auto entries = admissible_in_range(s, lambda_hat - 0.1, lambda_hat + 0.1);
    if (entries.empty()) {
        throw InvalidArgument("no admissible profile within 0.1 of lambda = " + std::to_string(lambda_hat));
    }
    const auto samples = ball_samples(field_on_B1, g.dim == 2 ? 20000 : 6000);
    double ff = 0.0;
    for (const auto& q : samples) {
        ff += q.value * q.value;
    }
    if (!(ff > 0.0)) {
        throw NumericalError("field vanishes on the unit ball");
    }

    Alignment best;
    best.match_error = std::numeric_limits<double>::infinity();
    for (const auto& entry : entries) {
        const AngularProfile base = profile_for(s, entry.cls, entry.m);
        auto consider = [&](const AngularProfile& b, double angle_deg) {
            const double err = misfit(samples, ff, b, angle_deg * kRad);
            if (err < best.match_error) {
                best.match_error = err;
                best.angle_deg = angle_deg;
                best.lambda = entry.lambda;
                best.cls = entry.cls;
                best.m = entry.m;
            }
        };
        if (g.dim == 2) {
            consider(base, 0.0);
            consider(base.mirrored(), 0.0);
            continue;
        }
        double local_err = std::numeric_limits<double>::infinity();
        double local_angle = 0.0;
        for (int k = 0; k < 720; ++k) {
            const double err = misfit(samples, ff, base, 0.5 * k * kRad);
            if (err < local_err) {
                local_err = err;
                local_angle = 0.5 * k;
            }
        }
        // golden-section refinement on one scan step either side
        const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
        double lo = local_angle - 0.5;
        double hi = local_angle + 0.5;
        double x1 = hi - phi * (hi - lo);
        double x2 = lo + phi * (hi - lo);
        double f1 = misfit(samples, ff, base, x1 * kRad);
        double f2 = misfit(samples, ff, base, x2 * kRad);
        while (hi - lo > 1e-4) {
            if (f1 <= f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = misfit(samples, ff, base, x1 * kRad);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = misfit(samples, ff, base, x2 * kRad);
            }
        }
        const double refined = 0.5 * (lo + hi);
        consider(base, misfit(samples, ff, base, refined * kRad) <= local_err ? refined : local_angle);
    }
    if (g.dim == 2) {
        best.e = {1.0, 0.0, 0.0};
        best.angle_deg = 0.0;
    } else {
        best.angle_deg = std::fmod(best.angle_deg + 360.0, 360.0);
        best.e = {std::cos(best.angle_deg * kRad), std::sin(best.angle_deg * kRad), 0.0};
    }
    return best;
}

double invariance_check(const ScalarField& field_on_B1, std::span<const double> direction)
{
    const GridSpec& g = field_on_B1.spec();
    const int d = g.dim;
    if (static_cast<int>(direction.size()) != d) {
        throw InvalidArgument("direction dimension does not match the field");
    }
    double norm = 0.0;
    for (double c : direction) {
        norm += c * c;
    }
    if (std::abs(std::sqrt(norm) - 1.0) > 1e-9 || std::abs(direction[d - 1]) > 1e-12) {
        throw InvalidArgument("invariance direction must be a unit vector in the thin plane");
    }
    const double inner = 1.0 - 4.0 * g.h;
    const double step = g.h;
    double dd = 0.0;
    double uu = 0.0;
    for (int i = 0; i <= g.n; ++i) {
        for (int k = 0; k <= (d == 3 ? g.n : 0); ++k) {
            for (int j = 0; j <= g.half(); ++j) {
                const auto x = field_on_B1.position(i, k, j);
                double r2 = 0.0;
                for (int a = 0; a < d; ++a) {
                    r2 += x[a] * x[a];
                }
                if (r2 > inner * inner) {
                    continue;
                }
                std::array<double, 3> plus = x;
                std::array<double, 3> minus = x;
                for (int a = 0; a < d; ++a) {
                    plus[a] += step * direction[a];
                    minus[a] -= step * direction[a];
                }
                const double v = field_on_B1.at(i, k, j);
                const double dv =
                    (interpolate(field_on_B1, head(plus, d)) - interpolate(field_on_B1, head(minus, d))) / (2.0 * step);
                dd += dv * dv;
                uu += v * v;
            }
        }
    }
    return uu > 0.0 ? std::sqrt(dd / uu) : 0.0;
}

}  // namespace thinobs
