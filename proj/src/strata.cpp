#include "thinobs/strata.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "thinobs/blowup.hpp"
#include "thinobs/error.hpp"
#include "thinobs/frequency.hpp"

namespace thinobs {

namespace {

std::array<double, 3> plane_position(const GridSpec& g, int i1, int i2)
{
    if (g.dim == 2) {
        return {g.node(0, i1), 0.0, 0.0};
    }
    return {g.node(0, i1), g.node(1, i2), 0.0};
}

/// Distance from a thin-plane point to the nearest box face.
double room(const GridSpec& g, const std::array<double, 3>& x)
{
    double out = 0.5 * g.side_length;
    for (int a = 0; a + 1 < g.dim; ++a) {
        out = std::min({out, x[a] - g.lower(a), g.upper(a) - x[a]});
    }
    return out;
}

StratumLabel classify_point(const ScalarField& field, const std::array<double, 3>& x, const ClassifyOptions& o)
{
    const GridSpec& g = field.spec();
    StratumLabel label;
    label.x = x;
    const double r_lo = o.r_lo > 0.0 ? o.r_lo : 8.0 * g.h;
    const double r_hi = std::min(o.r_hi > 0.0 ? o.r_hi : 4.0 * r_lo, room(g, x));
    if (r_hi < 1.5 * r_lo) {
        label.status = LabelStatus::Skipped;
        return label;
    }
    try {
        const auto lim = frequency_limit(field, std::span<const double>(x.data(), g.dim), r_lo, r_hi, o.radii);
        label.lambda_hat = lim.lambda_hat;
        label.intercept = lim.intercept;
    } catch (const GeometryError&) {
        label.status = LabelStatus::Skipped;
        return label;
    } catch (const NumericalError&) {
        label.status = LabelStatus::Unresolved;
        return label;
    }
    label.snapped = snap_frequency(g.s, label.lambda_hat, o.delta_snap);
    if (label.snapped) {
        label.status = LabelStatus::Snapped;
        label.residual = std::abs(label.lambda_hat - label.snapped->lambda);
    } else {
        label.status = LabelStatus::Unresolved;
        const auto near = snap_frequency(g.s, label.lambda_hat, 2.0);
        label.residual = near ? std::abs(label.lambda_hat - near->lambda) : label.residual;
    }
    return label;
}

}  // namespace

std::vector<char> coincidence_set(const ScalarField& field, double tol_u)
{
    const GridSpec& g = field.spec();
    std::vector<char> mask(g.plane_size());
    const auto values = field.values();
    for (std::size_t t = 0; t < mask.size(); ++t) {
        mask[t] = values[t * g.layers()] <= tol_u ? 1 : 0;
    }
    return mask;
}

double default_contact_tolerance(const ScalarField& field, double solver_tol)
{
    const GridSpec& g = field.spec();
    double scale = 0.0;
    const int n = g.n;
    for (int i = 0; i <= n; ++i) {
        for (int k = 0; k <= (g.dim == 3 ? n : 0); ++k) {
            for (int j = 0; j <= g.half(); ++j) {
                const bool face = i == 0 || i == n || j == g.half() || (g.dim == 3 && (k == 0 || k == n));
                if (face) {
                    scale = std::max(scale, std::abs(field.at(i, k, j)));
                }
            }
        }
    }
    return 10.0 * solver_tol * (scale > 0.0 ? scale : 1.0);
}

std::vector<std::array<double, 3>> free_boundary(const GridSpec& g, std::span<const char> mask,
                                                 std::optional<double> margin)
{
    if (mask.size() != g.plane_size()) {
        throw InvalidArgument("mask size does not match the thin plane");
    }
    const double m = margin.value_or(4.0 * g.h);
    const int n = g.n;
    const int n2 = g.dim == 3 ? n : 0;
    auto flag = [&](int i1, int i2) { return mask[static_cast<std::size_t>(i1) * (g.dim == 3 ? n + 1 : 1) + i2] != 0; };
    std::vector<std::array<double, 3>> out;
    for (int i1 = 0; i1 <= n; ++i1) {
        for (int i2 = 0; i2 <= n2; ++i2) {
            if (!flag(i1, i2)) {
                continue;
            }
            bool open_neighbour = false;
            const int steps[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
            for (int q = 0; q < (g.dim == 3 ? 4 : 2); ++q) {
                const int j1 = i1 + steps[q][0];
                const int j2 = i2 + steps[q][1];
                if (j1 < 0 || j1 > n || j2 < 0 || j2 > n2) {
                    continue;
                }
                open_neighbour = open_neighbour || !flag(j1, j2);
            }
            if (!open_neighbour) {
                continue;
            }
            const auto x = plane_position(g, i1, i2);
            if (room(g, x) >= m - 1e-12 * g.side_length) {
                out.push_back(x);
            }
        }
    }
    return out;
}

std::optional<AdmissibleEntry> snap_frequency(double s, double lambda_hat, double delta_snap)
{
    if (!std::isfinite(lambda_hat)) {
        return std::nullopt;
    }
    std::optional<AdmissibleEntry> best;
    double best_dist = 0.0;
    for (const auto& e : admissible_in_range(s, lambda_hat - delta_snap, lambda_hat + delta_snap)) {
        const double dist = std::abs(e.lambda - lambda_hat);
        if (dist <= delta_snap && (!best || dist < best_dist)) {
            best = e;
            best_dist = dist;
        }
    }
    return best;
}

std::vector<StratumLabel> classify(const ScalarField& field, std::span<const std::array<double, 3>> points,
                                   const ClassifyOptions& options)
{
    if (options.radii < 4) {
        throw InvalidArgument("classification ladders need at least 4 radii");
    }
    std::vector<StratumLabel> labels;
    labels.reserve(points.size());
    for (const auto& x : points) {
        labels.push_back(classify_point(field, x, options));
    }
    return labels;
}

TangentEstimate principal_direction(std::span<const std::array<double, 3>> points, std::span<const double> x0,
                                    double rho)
{
    if (x0.size() != 3) {
        throw InvalidArgument("tangent estimation needs dimension 3");
    }
    double mxx = 0.0, mxy = 0.0, myy = 0.0;
    TangentEstimate est;
    for (const auto& p : points) {
        const double dx = p[0] - x0[0];
        const double dy = p[1] - x0[1];
        if (dx * dx + dy * dy > rho * rho) {
            continue;
        }
        mxx += dx * dx;
        mxy += dx * dy;
        myy += dy * dy;
        ++est.points;
    }
    if (est.points < 8) {
        throw InvalidArgument("insufficient points for a tangent estimate: " + std::to_string(est.points) + " < 8");
    }
    const double tr = 0.5 * (mxx + myy);
    const double disc = std::sqrt(0.25 * (mxx - myy) * (mxx - myy) + mxy * mxy);
    const double big = tr + disc;
    const double small = tr - disc;
    est.anisotropy = small > 0.0 ? big / small : std::numeric_limits<double>::infinity();
    if (est.anisotropy < 4.0) {
        return est;
    }
    // eigenvector of the larger eigenvalue
    double vx = mxy;
    double vy = big - mxx;
    if (std::hypot(vx, vy) < 1e-300) {
        vx = big - myy;
        vy = mxy;
    }
    if (std::hypot(vx, vy) < 1e-300) {
        vx = mxx >= myy ? 1.0 : 0.0;
        vy = mxx >= myy ? 0.0 : 1.0;
    }
    const double len = std::hypot(vx, vy);
    vx /= len;
    vy /= len;
    if ((std::abs(vx) >= std::abs(vy) ? vx : vy) < 0.0) {
        vx = -vx;
        vy = -vy;
    }
    est.direction = std::array<double, 3>{vx, vy, 0.0};
    return est;
}

TangentEstimate tangent_plane(std::span<const StratumLabel> labels, std::span<const double> x0, double rho)
{
    if (x0.size() != 3) {
        throw InvalidArgument("tangent estimation needs dimension 3");
    }
    const StratumLabel* ref = nullptr;
    double ref_dist = std::numeric_limits<double>::infinity();
    for (const auto& l : labels) {
        if (l.status != LabelStatus::Snapped) {
            continue;
        }
        const double dist = std::hypot(l.x[0] - x0[0], l.x[1] - x0[1]);
        if (dist < ref_dist) {
            ref_dist = dist;
            ref = &l;
        }
    }
    if (ref == nullptr) {
        throw InvalidArgument("insufficient points for a tangent estimate: no classified point");
    }
    std::vector<std::array<double, 3>> same;
    for (const auto& l : labels) {
        if (l.status == LabelStatus::Snapped && std::abs(l.snapped->lambda - ref->snapped->lambda) < 1e-12) {
            same.push_back(l.x);
        }
    }
    return principal_direction(same, x0, rho);
}

std::vector<SplittingGap> sp_diagnostic(const ScalarField& field, std::span<const double> x0,
                                        std::span<const double> tangent, std::span<const double> radii,
                                        double lambda, const ClassifyOptions& options)
{
    const GridSpec& g = field.spec();
    if (g.dim != 3 || tangent.size() != 3) {
        throw InvalidArgument("the splitting diagnostic needs dimension 3");
    }
    std::vector<std::array<double, 3>> probes;
    for (int q = 0; q < 8; ++q) {
        const double t = -0.75 + q * (1.5 / 7.0);
        probes.push_back({t * tangent[0], t * tangent[1], 0.0});
    }
    std::vector<SplittingGap> out;
    for (double r : radii) {
        const ScalarField blown = rescale(field, x0, r);
        ClassifyOptions local = options;
        if (local.r_lo <= 0.0) {
            // resolved in the rescaled grid and on the original one
            local.r_lo = std::max(8.0 * blown.spec().h, 4.0 * g.h / r);
        }
        const auto mask = coincidence_set(blown, default_contact_tolerance(blown));
        const auto fb = free_boundary(blown.spec(), mask);
        // points are classified lazily, nearest first, until one lies in the stratum
        std::map<std::size_t, bool> in_stratum;
        auto member = [&](std::size_t i) {
            auto it = in_stratum.find(i);
            if (it != in_stratum.end()) {
                return it->second;
            }
            const StratumLabel l = classify_point(blown, fb[i], local);
            const bool yes = l.status == LabelStatus::Snapped && std::abs(l.snapped->lambda - lambda) < 1e-9;
            in_stratum.emplace(i, yes);
            return yes;
        };
        SplittingGap gap;
        gap.r = r;
        for (const auto& y : probes) {
            std::vector<std::pair<double, std::size_t>> order;
            for (std::size_t i = 0; i < fb.size(); ++i) {
                order.emplace_back(std::hypot(fb[i][0] - y[0], fb[i][1] - y[1]), i);
            }
            std::sort(order.begin(), order.end());
            double nearest = std::numeric_limits<double>::infinity();
            for (const auto& [dist, i] : order) {
                if (member(i)) {
                    nearest = dist;
                    break;
                }
            }
            gap.max_gap = std::max(gap.max_gap, nearest);
        }
        for (const auto& [i, yes] : in_stratum) {
            gap.stratum_points += yes ? 1 : 0;
        }
        out.push_back(gap);
    }
    return out;
}

}  // namespace thinobs
