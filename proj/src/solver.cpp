#include "thinobs/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "thinobs/error.hpp"

namespace thinobs {

namespace {

bool on_box_boundary(const GridSpec& g, int i1, int i2, int j)
{
    if (j == g.half() || i1 == 0 || i1 == g.n) {
        return true;
    }
    return g.dim == 3 && (i2 == 0 || i2 == g.n);
}

/// Per-layer stencil arrays shared by the sweep and residual kernels.
struct Stencil {
    std::vector<double> c_t;
    std::vector<double> c_up;
    std::vector<double> c_dn;
    std::vector<double> inv_diag;
    double plane_ct = 0.0;
    double plane_cn2 = 0.0;
    double plane_inv_diag = 0.0;
    int neighbors = 2;
};

Stencil make_stencil(const EnergyForm& form)
{
    const GridSpec& g = form.spec;
    const int J = g.half();
    Stencil st;
    st.neighbors = 2 * (g.dim - 1);
    st.c_t.assign(J + 1, 0.0);
    st.c_up.assign(J + 1, 0.0);
    st.c_dn.assign(J + 1, 0.0);
    st.inv_diag.assign(J + 1, 0.0);
    for (int j = 1; j < J; ++j) {
        st.c_t[j] = form.tangential[j];
        st.c_up[j] = form.normal[j];
        st.c_dn[j] = form.normal[j - 1];
        st.inv_diag[j] = 1.0 / (st.neighbors * st.c_t[j] + st.c_up[j] + st.c_dn[j]);
    }
    st.plane_ct = form.tangential[0];
    st.plane_cn2 = 2.0 * form.normal[0];
    st.plane_inv_diag = 1.0 / (st.neighbors * st.plane_ct + st.plane_cn2);
    return st;
}

/// Row views into a half-grid array for the interior tangential index (i1, i2).
class RowAccess {
public:
    RowAccess(const GridSpec& g, const Stencil& st, double* u) : g_(g), st_(st), u_(u) {}

    kernels::RowStencil row(int i1, int i2) const
    {
        kernels::RowStencil r;
        r.u = u_ + g_.index(i1, i2, 0);
        r.nb[0] = u_ + g_.index(i1 - 1, i2, 0);
        r.nb[1] = u_ + g_.index(i1 + 1, i2, 0);
        if (g_.dim == 3) {
            r.nb[2] = u_ + g_.index(i1, i2 - 1, 0);
            r.nb[3] = u_ + g_.index(i1, i2 + 1, 0);
        }
        r.neighbors = st_.neighbors;
        r.c_t = st_.c_t.data();
        r.c_up = st_.c_up.data();
        r.c_dn = st_.c_dn.data();
        r.inv_diag = st_.inv_diag.data();
        r.begin = 1;
        r.end = g_.half();
        return r;
    }

    /// Weighted neighbor average at the plane node of a row.
    double plane_average(const kernels::RowStencil& r) const
    {
        double t = r.nb[0][0] + r.nb[1][0];
        if (r.neighbors == 4) {
            t = t + (r.nb[2][0] + r.nb[3][0]);
        }
        double acc = st_.plane_ct * t;
        acc = acc + st_.plane_cn2 * r.u[1];
        return acc * st_.plane_inv_diag;
    }

private:
    const GridSpec& g_;
    const Stencil& st_;
    double* u_;
};

template <class F>
void for_interior_rows(const GridSpec& g, F&& f)
{
    const int lo2 = g.dim == 3 ? 1 : 0;
    const int hi2 = g.dim == 3 ? g.n - 1 : 0;
    for (int i1 = 1; i1 < g.n; ++i1) {
        for (int i2 = lo2; i2 <= hi2; ++i2) {
            f(i1, i2);
        }
    }
}

Residuals compute_residuals(const GridSpec& g, const Stencil& st, std::span<const double> values,
                            kernels::Backend backend, double scale)
{
    // The kernels take a mutable row pointer but do not write in residual mode.
    RowAccess access(g, st, const_cast<double*>(values.data()));
    Residuals r;
    bool finite = true;
    for_interior_rows(g, [&](int i1, int i2) {
        const kernels::RowStencil row = access.row(i1, i2);
        r.pde = std::max(r.pde, kernels::row_residual_max(backend, row));
        const double u0 = row.u[0];
        const double flux = access.plane_average(row) - u0;
        r.complementarity = std::max(r.complementarity, std::abs(std::min(u0, -flux)));
        r.violation = std::max(r.violation, std::max(0.0, -u0));
        finite = finite && std::isfinite(flux);
    });
    for (double v : values) {
        finite = finite && std::isfinite(v);
    }
    if (!finite) {
        throw NumericalError("NaN or infinity detected in solver state");
    }
    r.pde /= scale;
    r.complementarity /= scale;
    r.violation /= scale;
    return r;
}

double boundary_scale(const GridSpec& g, std::span<const double> values)
{
    double scale = 0.0;
    const int hi2 = g.dim == 3 ? g.n : 0;
    for (int i1 = 0; i1 <= g.n; ++i1) {
        for (int i2 = 0; i2 <= hi2; ++i2) {
            for (int j = 0; j <= g.half(); ++j) {
                if (on_box_boundary(g, i1, i2, j)) {
                    scale = std::max(scale, std::abs(values[g.index(i1, i2, j)]));
                }
            }
        }
    }
    return scale > 0.0 ? scale : 1.0;
}

}  // namespace

EnergyForm assemble_energy(const GridSpec& spec)
{
    EnergyForm form;
    form.spec = spec;
    const int J = spec.half();
    const double hd = std::pow(spec.h, spec.dim - 2);
    form.tangential.assign(J + 1, 0.0);
    form.normal.assign(J, 0.0);
    for (int l = 0; l < J; ++l) {
        form.normal[l] = hd * normal_edge_weight(spec, l);
    }
    // Layer 0 sits between cell layers -1 and 0, which carry equal weights.
    form.tangential[0] = hd * cell_weight(spec, 0);
    for (int j = 1; j < J; ++j) {
        form.tangential[j] = hd * 0.5 * (cell_weight(spec, j - 1) + cell_weight(spec, j));
    }
    form.tangential[J] = hd * 0.5 * cell_weight(spec, J - 1);
    return form;
}

double EnergyForm::contrast() const
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (double c : tangential) {
        lo = std::min(lo, c);
        hi = std::max(hi, c);
    }
    for (double c : normal) {
        lo = std::min(lo, c);
        hi = std::max(hi, c);
    }
    return hi / lo;
}

double EnergyForm::energy(const ScalarField& u) const
{
    if (!(u.spec() == spec)) {
        throw InvalidArgument("field grid does not match the energy form");
    }
    return energy(u.values());
}

double EnergyForm::energy(std::span<const double> u) const
{
    const GridSpec& g = spec;
    const int J = g.half();
    const int n = g.n;
    const int hi2 = g.dim == 3 ? n : 0;
    auto face = [n](int i) { return (i == 0 || i == n) ? 0.5 : 1.0; };
    // Extended accumulation keeps sweep-to-sweep round-off far below the descent test.
    long double total = 0.0L;
    for (int i1 = 0; i1 <= n; ++i1) {
        for (int i2 = 0; i2 <= hi2; ++i2) {
            const double* row = u.data() + g.index(i1, i2, 0);
            // x_d edges, counted in both halves
            const double fn = g.dim == 3 ? face(i1) * face(i2) : face(i1);
            for (int l = 0; l < J; ++l) {
                const long double d = static_cast<long double>(row[l + 1]) - row[l];
                total += 2.0L * fn * normal[l] * d * d;
            }
            // edges parallel to the plane, toward +x1 and +x2
            if (i1 < n) {
                const double* nb = u.data() + g.index(i1 + 1, i2, 0);
                const double f = g.dim == 3 ? face(i2) : 1.0;
                for (int j = 0; j <= J; ++j) {
                    const long double d = static_cast<long double>(nb[j]) - row[j];
                    total += (j == 0 ? 1.0L : 2.0L) * f * tangential[j] * d * d;
                }
            }
            if (g.dim == 3 && i2 < n) {
                const double* nb = u.data() + g.index(i1, i2 + 1, 0);
                const double f = face(i1);
                for (int j = 0; j <= J; ++j) {
                    const long double d = static_cast<long double>(nb[j]) - row[j];
                    total += (j == 0 ? 1.0L : 2.0L) * f * tangential[j] * d * d;
                }
            }
        }
    }
    return static_cast<double>(total);
}

double Residuals::max() const { return std::max({pde, complementarity, violation}); }

Residuals residuals(const ScalarField& field, std::optional<double> scale)
{
    const GridSpec& g = field.spec();
    const Stencil st = make_stencil(assemble_energy(g));
    const double sc = scale ? *scale : boundary_scale(g, field.values());
    return compute_residuals(g, st, field.values(), kernels::best_available(), sc);
}

std::vector<double> plane_flux(const ScalarField& field)
{
    const GridSpec& g = field.spec();
    const Stencil st = make_stencil(assemble_energy(g));
    RowAccess access(g, st, const_cast<double*>(field.values().data()));
    std::vector<double> flux(g.plane_size(), 0.0);
    const double dual_area = std::pow(g.h, g.dim - 1);
    for_interior_rows(g, [&](int i1, int i2) {
        const kernels::RowStencil row = access.row(i1, i2);
        const double scaled = access.plane_average(row) - row.u[0];
        flux[g.index(i1, i2, 0) / g.layers()] = scaled / st.plane_inv_diag / dual_area;
    });
    return flux;
}

ResidualMap residual_map(const ScalarField& field, std::optional<double> scale)
{
    const GridSpec& g = field.spec();
    const Stencil st = make_stencil(assemble_energy(g));
    RowAccess access(g, st, const_cast<double*>(field.values().data()));
    ResidualMap map;
    map.scale = scale ? *scale : boundary_scale(g, field.values());
    map.pde.assign(g.size(), 0.0);
    map.complementarity.assign(g.plane_size(), 0.0);
    for_interior_rows(g, [&](int i1, int i2) {
        const kernels::RowStencil row = access.row(i1, i2);
        const std::size_t base = g.index(i1, i2, 0);
        for (int j = row.begin; j < row.end; ++j) {
            double t = row.nb[0][j] + row.nb[1][j];
            if (row.neighbors == 4) {
                t = t + (row.nb[2][j] + row.nb[3][j]);
            }
            double acc = row.c_t[j] * t;
            acc = acc + row.c_up[j] * row.u[j + 1];
            acc = acc + row.c_dn[j] * row.u[j - 1];
            map.pde[base + j] = std::abs(acc * row.inv_diag[j] - row.u[j]) / map.scale;
        }
        const double u0 = row.u[0];
        const double flux = access.plane_average(row) - u0;
        const double c = std::max(std::abs(std::min(u0, -flux)), std::max(0.0, -u0));
        map.complementarity[base / g.layers()] = c / map.scale;
    });
    return map;
}

double optimal_omega(const GridSpec& spec)
{
    return 2.0 / (1.0 + std::sin(std::numbers::pi / spec.n));
}

std::pair<ScalarField, SolveReport> solve(const GridSpec& spec, const SolverConfig& config)
{
    if (!(config.omega > 0.0 && config.omega < 2.0)) {
        throw InvalidArgument("omega must lie in (0,2)");
    }
    if (!(config.tol > 0.0)) {
        throw InvalidArgument("tolerance must be positive");
    }
    if (!config.boundary_data) {
        throw InvalidArgument("boundary data is required");
    }
    if (config.max_sweeps < 1 || config.check_every < 1) {
        throw InvalidArgument("max_sweeps and check_every must be positive");
    }
    const kernels::Backend backend = config.backend ? *config.backend : kernels::best_available();
    if (!kernels::available(backend)) {
        throw InvalidArgument(std::string("SIMD backend ") + std::string(kernels::name(backend)) +
                              " is not available on this machine");
    }

    SolveReport report;
    report.omega = config.omega;
    report.backend = backend;

    std::vector<double> u(spec.size(), 0.0);
    if (config.initial) {
        if (!(config.initial->spec() == spec)) {
            throw InvalidArgument("initial field grid does not match the solve grid");
        }
        const auto v = config.initial->values();
        std::copy(v.begin(), v.end(), u.begin());
    } else if (config.nested && spec.n >= 32) {
        GridSpec coarse = make_grid(spec.dim, spec.n / 2, spec.side_length, spec.s,
                                    std::span<const double>(spec.origin.data(), spec.dim));
        auto [coarse_u, coarse_report] = solve(coarse, config);
        report.coarse_sweeps = coarse_report.sweeps_used + coarse_report.coarse_sweeps;
        const ScalarField prolonged =
            ScalarField::sample(spec, [&](std::span<const double> x) { return interpolate(coarse_u, x); });
        const auto v = prolonged.values();
        std::copy(v.begin(), v.end(), u.begin());
    }

    // Box values from the data, plane values projected.
    const int hi2 = spec.dim == 3 ? spec.n : 0;
    for (int i1 = 0; i1 <= spec.n; ++i1) {
        for (int i2 = 0; i2 <= hi2; ++i2) {
            for (int j = 0; j <= spec.half(); ++j) {
                const std::size_t k = spec.index(i1, i2, j);
                if (on_box_boundary(spec, i1, i2, j)) {
                    std::array<double, 3> x{};
                    x[0] = spec.node(0, i1);
                    if (spec.dim == 3) {
                        x[1] = spec.node(1, i2);
                    }
                    x[spec.dim - 1] = j * spec.h;
                    const double g = config.boundary_data(std::span<const double>(x.data(), spec.dim));
                    if (!std::isfinite(g)) {
                        throw InvalidArgument("boundary data must be finite");
                    }
                    u[k] = g;
                } else if (j == 0) {
                    u[k] = std::max(u[k], 0.0);
                }
            }
        }
    }

    const EnergyForm form = assemble_energy(spec);
    const Stencil st = make_stencil(form);
    report.conductance_contrast = form.contrast();
    report.data_scale = boundary_scale(spec, u);
    RowAccess access(spec, st, u.data());
    const double omega = config.omega;

    if (config.record_energy) {
        report.energy_history.push_back(form.energy(u));
    }
    Residuals res = compute_residuals(spec, st, u, backend, report.data_scale);
    int sweep = 0;
    while (res.max() >= config.tol && sweep < config.max_sweeps) {
        ++sweep;
        for (int color = 0; color < 2; ++color) {
            for_interior_rows(spec, [&](int i1, int i2) {
                const kernels::RowStencil row = access.row(i1, i2);
                const int q = (i1 + i2) & 1;
                if (q == color) {
                    const double gs = access.plane_average(row);
                    const double next = row.u[0] + omega * (gs - row.u[0]);
                    row.u[0] = std::max(next, 0.0);
                }
                kernels::relax_row(backend, row, color ^ q, omega);
            });
        }
        if (config.record_energy) {
            const double e = form.energy(u);
            if (!std::isfinite(e)) {
                throw NumericalError("NaN detected in solver state at sweep " + std::to_string(sweep));
            }
            report.energy_history.push_back(e);
        }
        if (sweep % config.check_every == 0 || sweep == config.max_sweeps) {
            res = compute_residuals(spec, st, u, backend, report.data_scale);
        }
    }
    report.sweeps_used = sweep;
    report.final_pde = res.pde;
    report.final_complementarity = res.complementarity;
    report.final_violation = res.violation;
    report.final_residual = res.max();
    report.converged = res.max() < config.tol;
    return {ScalarField(spec, std::move(u)), std::move(report)};
}

}  // namespace thinobs
