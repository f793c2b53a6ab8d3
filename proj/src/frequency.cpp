#include "thinobs/frequency.hpp"

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <numbers>

#include "thinobs/blowup.hpp"
#include "thinobs/error.hpp"

namespace thinobs {

namespace {

constexpr double kPi = std::numbers::pi;

void check_ball(const GridSpec& g, std::span<const double> c, double r)
{
    if (static_cast<int>(c.size()) != g.dim) {
        throw InvalidArgument("center has " + std::to_string(c.size()) + " coordinates, grid has dimension " +
                              std::to_string(g.dim));
    }
    if (std::abs(c[g.dim - 1]) > 1e-12 * g.side_length) {
        throw InvalidArgument("frequency centers must lie on the thin plane");
    }
    if (!(r >= min_reliable_radius(g) * (1.0 - 1e-12))) {
        throw InvalidArgument("radius below reliable minimum 4h = " + std::to_string(min_reliable_radius(g)));
    }
    if (!g.contains_ball(c, r)) {
        throw GeometryError("ball of radius " + std::to_string(r) + " is not contained in the box");
    }
}

/// Cell index range [lo, hi] along a tangential axis meeting [a - r, a + r].
std::pair<int, int> cell_range(const GridSpec& g, int axis, double a, double r)
{
    const int lo = std::max(0, static_cast<int>(std::floor((a - r - g.lower(axis)) / g.h)));
    const int hi = std::min(g.n - 1, static_cast<int>(std::floor((a + r - g.lower(axis)) / g.h)));
    return {lo, hi};
}

/// Distance from c to the interval [a, b].
double gap(double c, double a, double b) { return std::max({0.0, a - c, c - b}); }
double reach(double c, double a, double b) { return std::max(std::abs(c - a), std::abs(c - b)); }

/// Sub-columns per tangential axis in a cell cut by the sphere.
constexpr int kCutSamples2 = 16;
constexpr int kCutSamples3 = 8;

/// Cells of the full grid meeting the ball. Whole cells use the centred
/// gradient; cut cells average the gradient of the multilinear interpolant
/// over the subsamples that fall inside. Tangential derivatives carry the
/// layer average of the weight, the x_d derivative the harmonic edge weight.
double dirichlet_sum(const ScalarField& u, std::span<const double> c, double r)
{
    const GridSpec& g = u.spec();
    const int d = g.dim;
    const double h = g.h;
    const double r2 = r * r;
    const auto [ilo, ihi] = cell_range(g, 0, c[0], r);
    const auto [klo, khi] = d == 3 ? cell_range(g, 1, c[1], r) : std::pair<int, int>{0, 0};
    const double c1 = d == 3 ? c[1] : 0.0;
    const int lmax = std::min(g.half(), static_cast<int>(std::ceil(r / h)));
    const int kCutSamples = d == 3 ? kCutSamples3 : kCutSamples2;
    const int ks = d == 3 ? kCutSamples : 1;
    const double inv_samples = 1.0 / std::pow(kCutSamples, d - 1);
    double total = 0.0;
    for (int i = ilo; i <= ihi; ++i) {
        const double xa = g.node(0, i);
        const double gx = gap(c[0], xa, xa + h);
        const double fx = reach(c[0], xa, xa + h);
        for (int k = klo; k <= khi; ++k) {
            const double ya = d == 3 ? g.node(1, k) : 0.0;
            const double gy = d == 3 ? gap(c1, ya, ya + h) : 0.0;
            const double fy = d == 3 ? reach(c1, ya, ya + h) : 0.0;
            if (gx * gx + gy * gy >= r2) {
                continue;
            }
            for (int l = -lmax; l < lmax; ++l) {
                const double ta = l * h;
                const double gt = gap(0.0, ta, ta + h);
                if (gx * gx + gy * gy + gt * gt >= r2) {
                    continue;
                }
                const double ft = reach(0.0, ta, ta + h);
                const double wt = cell_weight(g, l);
                const double wn = normal_edge_weight(g, l);
                // corner values v[a][b][e], a along x1, b along x2 (3D), e along x_d
                double v[2][2][2];
                for (int a = 0; a < 2; ++a) {
                    for (int b = 0; b < 2; ++b) {
                        for (int e = 0; e < 2; ++e) {
                            v[a][b][e] = d == 3 ? u.at(i + a, k + b, l + e) : u.at(i + a, 0, l + e);
                        }
                    }
                }
                // multilinear gradient at local coordinates (p, q, w) in [0,1]
                auto grad2 = [&](double p, double q, double w) {
                    if (d == 2) {
                        const double dx = ((1 - w) * (v[1][0][0] - v[0][0][0]) + w * (v[1][0][1] - v[0][0][1])) / h;
                        const double dt = ((1 - p) * (v[0][0][1] - v[0][0][0]) + p * (v[1][0][1] - v[1][0][0])) / h;
                        return wt * dx * dx + wn * dt * dt;
                    }
                    const double wp[2] = {1 - p, p};
                    const double wq[2] = {1 - q, q};
                    const double ww[2] = {1 - w, w};
                    double dx = 0.0, dy = 0.0, dt = 0.0;
                    for (int a = 0; a < 2; ++a) {
                        for (int b = 0; b < 2; ++b) {
                            dx += wq[a] * ww[b] * (v[1][a][b] - v[0][a][b]);
                            dy += wp[a] * ww[b] * (v[a][1][b] - v[a][0][b]);
                            dt += wp[a] * wq[b] * (v[a][b][1] - v[a][b][0]);
                        }
                    }
                    dx /= h;
                    dy /= h;
                    dt /= h;
                    return wt * (dx * dx + dy * dy) + wn * dt * dt;
                };
                if (fx * fx + fy * fy + ft * ft <= r2) {
                    total += grad2(0.5, 0.5, 0.5);
                    continue;
                }
                // columns at midpoints in the tangential directions; along
                // x_d the chord is exact and the quadratic integrand is
                // integrated by two-point Gauss
                double part = 0.0;
                for (int sx = 0; sx < kCutSamples; ++sx) {
                    const double p = (sx + 0.5) / kCutSamples;
                    const double dx = xa + p * h - c[0];
                    for (int sy = 0; sy < ks; ++sy) {
                        const double q = d == 3 ? (sy + 0.5) / kCutSamples : 0.5;
                        const double dy = d == 3 ? ya + q * h - c1 : 0.0;
                        const double rem = r2 - dx * dx - dy * dy;
                        if (rem <= 0.0) {
                            continue;
                        }
                        const double chord = std::sqrt(rem);
                        const double w0 = std::max(0.0, (-chord - ta) / h);
                        const double w1 = std::min(1.0, (chord - ta) / h);
                        if (w1 <= w0) {
                            continue;
                        }
                        const double mid = 0.5 * (w0 + w1);
                        const double half_width = 0.5 * (w1 - w0);
                        const double off = half_width / std::sqrt(3.0);
                        part += half_width * (grad2(p, q, mid - off) + grad2(p, q, mid + off));
                    }
                }
                total += part * inv_samples;
            }
        }
    }
    return total * std::pow(h, d);
}

/// int_0^b sin^p for b in [0, pi].
double sine_power_integral(double p, double b)
{
    const double a = 0.5 * (p + 1.0);
    auto half = [&](double x) {
        const double sn = std::sin(x);
        return 0.5 * boost::math::beta(a, 0.5, sn * sn);
    };
    if (b <= 0.5 * kPi) {
        return half(b);
    }
    const double total = boost::math::beta(a, 0.5);
    return b >= kPi ? total : total - half(kPi - b);
}

int round_up(int v, int multiple) { return (v + multiple - 1) / multiple * multiple; }

}  // namespace

double dirichlet_integral(const ScalarField& field, std::span<const double> center, double r)
{
    check_ball(field.spec(), center, r);
    return dirichlet_sum(field, center, r);
}

SphereRule sphere_rule(int dim, double s, std::span<const double> center, double r, double h)
{
    if (dim != 2 && dim != 3) {
        throw InvalidArgument("sphere rule needs dimension 2 or 3");
    }
    SphereRule rule;
    const double p = 1.0 - 2.0 * s;
    const int m_full = round_up(std::max(64, static_cast<int>(std::ceil(2.0 * kPi * r / h))), 4);
    if (dim == 2) {
        // upper half circle, alpha from +x1; the lower half is its mirror image
        const int panels = m_full / 2;
        const double da = kPi / panels;
        const double scale = 2.0 * std::pow(r, 1.0 + p);
        double prev = 0.0;
        for (int k = 0; k < panels; ++k) {
            const double next = sine_power_integral(p, k + 1 == panels ? kPi : (k + 1) * da);
            const double alpha = (k + 0.5) * da;
            rule.points.push_back({center[0] + r * std::cos(alpha), r * std::sin(alpha), 0.0});
            rule.weights.push_back(scale * (next - prev));
            prev = next;
        }
        return rule;
    }
    // upper hemisphere, polar angle theta from +x_d
    const int m_theta = std::max(32, round_up(static_cast<int>(std::ceil(kPi * r / h)), 2));
    const int panels = m_theta / 2;
    const int m_phi = m_full;
    const double dth = 0.5 * kPi / panels;
    const double dphi = 2.0 * kPi / m_phi;
    const double scale = 2.0 * std::pow(r, 2.0 + p) * dphi;
    for (int k = 0; k < panels; ++k) {
        const double ca = std::cos(k * dth);
        const double cb = k + 1 == panels ? 0.0 : std::cos((k + 1) * dth);
        const double wk = scale * (std::pow(ca, p + 1.0) - std::pow(cb, p + 1.0)) / (p + 1.0);
        const double th = (k + 0.5) * dth;
        const double st = std::sin(th);
        const double ct = std::cos(th);
        for (int j = 0; j < m_phi; ++j) {
            const double ph = (j + 0.5) * dphi;
            rule.points.push_back({center[0] + r * st * std::cos(ph), center[1] + r * st * std::sin(ph), r * ct});
            rule.weights.push_back(wk);
        }
    }
    return rule;
}

double boundary_mass(const ScalarField& field, std::span<const double> center, double r)
{
    const GridSpec& g = field.spec();
    check_ball(g, center, r);
    const SphereRule rule = sphere_rule(g.dim, g.s, center, r, g.h);
    double sum = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const double v = interpolate(field, std::span<const double>(rule.points[q].data(), g.dim));
        sum += rule.weights[q] * v * v;
    }
    return sum;
}

double frequency(const ScalarField& field, std::span<const double> center, double r)
{
    const double H = boundary_mass(field, center, r);
    if (!(H > 0.0)) {
        throw NumericalError("undefined frequency: zero boundary mass at r = " + std::to_string(r));
    }
    return r * dirichlet_integral(field, center, r) / H;
}

FrequencyProfile frequency_profile(const ScalarField& field, std::span<const double> center,
                                   std::span<const double> radii)
{
    FrequencyProfile prof;
    prof.dim = field.spec().dim;
    std::copy(center.begin(), center.end(), prof.center.begin());
    prof.radii.assign(radii.begin(), radii.end());
    std::sort(prof.radii.begin(), prof.radii.end(), std::greater<>());
    for (double r : prof.radii) {
        const double H = boundary_mass(field, center, r);
        if (!(H > 0.0)) {
            throw NumericalError("undefined frequency: zero boundary mass at r = " + std::to_string(r));
        }
        const double D = dirichlet_integral(field, center, r);
        prof.D_values.push_back(D);
        prof.H_values.push_back(H);
        prof.N_values.push_back(r * D / H);
    }
    return prof;
}

std::vector<double> geometric_ladder(double r_lo, double r_hi, int k)
{
    if (k < 4) {
        throw InvalidArgument("a frequency ladder needs at least 4 radii");
    }
    if (!(r_lo > 0.0 && r_hi > r_lo)) {
        throw InvalidArgument("ladder requires 0 < r_lo < r_hi");
    }
    std::vector<double> radii(k);
    for (int i = 0; i < k; ++i) {
        radii[i] = r_hi * std::pow(r_lo / r_hi, static_cast<double>(i) / (k - 1));
    }
    radii[k - 1] = r_lo;
    return radii;
}

FrequencyLimit frequency_limit(const ScalarField& field, std::span<const double> center, double r_lo, double r_hi,
                               int k)
{
    const auto radii = geometric_ladder(r_lo, r_hi, k);
    FrequencyLimit out;
    out.profile = frequency_profile(field, center, radii);
    const auto& rs = out.profile.radii;
    const auto& ns = out.profile.N_values;
    out.lambda_hat = ns.back();
    // least squares line through the three smallest radii
    double sr = 0.0, sn = 0.0, srr = 0.0, srn = 0.0;
    for (int i = k - 3; i < k; ++i) {
        sr += rs[i];
        sn += ns[i];
        srr += rs[i] * rs[i];
        srn += rs[i] * ns[i];
    }
    const double slope = (3.0 * srn - sr * sn) / (3.0 * srr - sr * sr);
    out.intercept = (sn - slope * sr) / 3.0;
    return out;
}

std::vector<MonotonicityViolation> monotonicity_audit(const FrequencyProfile& profile, double tau)
{
    std::vector<std::size_t> order(profile.radii.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return profile.radii[a] < profile.radii[b]; });
    std::vector<MonotonicityViolation> out;
    for (std::size_t q = 0; q + 1 < order.size(); ++q) {
        const std::size_t a = order[q];
        const std::size_t b = order[q + 1];
        if (profile.N_values[b] < profile.N_values[a] - tau) {
            out.push_back({profile.radii[a], profile.radii[b], profile.N_values[a], profile.N_values[b]});
        }
    }
    return out;
}

double homogeneity_defect(const ScalarField& field, std::span<const double> center, double lambda, double rho,
                          double R)
{
    const GridSpec& g = field.spec();
    check_ball(g, center, R);
    check_ball(g, center, rho * R);
    const int d = g.dim;
    const std::array<double, 3> origin{};
    const SphereRule rule = sphere_rule(d, g.s, std::span<const double>(origin.data(), d), R, g.h);
    const double factor = std::pow(rho, lambda);
    double defect = 0.0;
    double size = 0.0;
    for (const auto& y : rule.points) {
        std::array<double, 3> far{};
        std::array<double, 3> near{};
        for (int a = 0; a < d; ++a) {
            far[a] = center[a] + y[a];
            near[a] = center[a] + rho * y[a];
        }
        const double uf = interpolate(field, std::span<const double>(far.data(), d));
        const double un = interpolate(field, std::span<const double>(near.data(), d));
        defect = std::max(defect, std::abs(un - factor * uf));
        size = std::max(size, std::abs(uf));
    }
    if (!(size > 0.0)) {
        throw NumericalError("field vanishes on the sphere");
    }
    return defect / size;
}

double scaling_check(const ScalarField& field, std::span<const double> center, double r, std::span<const double> y0,
                     double rho)
{
    const GridSpec& g = field.spec();
    if (static_cast<int>(y0.size()) != g.dim) {
        throw InvalidArgument("y0 dimension does not match the field");
    }
    const ScalarField blown = rescale(field, center, r);
    const double lhs = frequency(blown, y0, rho);
    std::array<double, 3> moved{};
    for (int a = 0; a < g.dim; ++a) {
        moved[a] = center[a] + r * y0[a];
    }
    const double rhs = frequency(field, std::span<const double>(moved.data(), g.dim), rho * r);
    return std::abs(lhs - rhs);
}

}  // namespace thinobs
