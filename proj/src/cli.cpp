#include "thinobs/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "thinobs/blowup.hpp"
#include "thinobs/checks.hpp"
#include "thinobs/error.hpp"
#include "thinobs/fixtures.hpp"
#include "thinobs/frequency.hpp"
#include "thinobs/profiles.hpp"
#include "thinobs/solver.hpp"
#include "thinobs/strata.hpp"

namespace thinobs {

namespace {

using json = nlohmann::ordered_json;
constexpr double kPi = 3.141592653589793238462643383279502884;

class Stopwatch {
public:
    [[nodiscard]] double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// FNV-1a over the compact JSON of the command and its parameters
std::string config_hash(const json& config)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : config.dump()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string num(double v)
{
    if (!std::isfinite(v)) {
        return "";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Run {
    std::string command;
    json params = json::object();
    std::ostream& out;
    std::ostream& err;
    Stopwatch clock;

    [[nodiscard]] std::string hash() const { return config_hash(json{{"command", command}, {"params", params}}); }

    [[nodiscard]] std::vector<std::string> header() const
    {
        return {"thinobs " + std::string(THINOBS_VERSION), "command " + command, "config " + hash()};
    }

    [[nodiscard]] std::string csv_header() const
    {
        std::string s;
        for (const auto& line : header()) {
            s += "# " + line + "\n";
        }
        return s;
    }

    void write_report(const std::string& path, json results, json timing = json::object()) const
    {
        if (path.empty()) {
            return;
        }
        json r;
        r["config"] = {{"command", command}, {"version", THINOBS_VERSION}, {"hash", hash()}, {"params", params}};
        r["results"] = std::move(results);
        timing["seconds"] = clock.seconds();
        r["timing"] = std::move(timing);
        write_file_atomic(path, r.dump(2) + "\n");
    }

    // CSV to a file if a path is given, else to stdout
    void emit_csv(const std::string& path, const std::string& body) const
    {
        if (path.empty()) {
            out << csv_header() << body;
        } else {
            write_file_atomic(path, csv_header() + body);
        }
    }
};

void require_input(const std::string& path)
{
    if (!std::filesystem::is_regular_file(path)) {
        throw IoError("cannot read " + path);
    }
}

void require_output(const std::string& path)
{
    if (path.empty()) {
        return;
    }
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty() && !std::filesystem::is_directory(parent)) {
        throw IoError("output directory does not exist: " + parent.string());
    }
}

std::vector<std::string> split(const std::string& text, char sep)
{
    std::vector<std::string> parts;
    std::string part;
    std::istringstream is(text);
    while (std::getline(is, part, sep)) {
        parts.push_back(part);
    }
    return parts;
}

double parse_number(const std::string& text, const std::string& what)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size()) {
            return v;
        }
    } catch (const std::exception&) {
    }
    throw InvalidArgument("not a number for " + what + ": '" + text + "'");
}

std::array<double, 3> point_of(const std::vector<double>& c, int dim, const std::string& what)
{
    if (static_cast<int>(c.size()) != dim) {
        throw InvalidArgument(what + " needs " + std::to_string(dim) + " coordinates, got " + std::to_string(c.size()));
    }
    std::array<double, 3> p{};
    std::copy(c.begin(), c.end(), p.begin());
    return p;
}

// --- profiles named on the command line ----------------------------------

struct ProfileSpec {
    ProfileClass cls = ProfileClass::Regular;
    int m = 1;
    double angle_deg = 0.0;
    bool mirror = false;
};

// "<class>[:m=<m>][:angle=<deg>][:mirror]"
ProfileSpec parse_profile_spec(const std::vector<std::string>& parts, std::size_t first)
{
    if (parts.size() <= first) {
        throw InvalidArgument("profile needs a class: regular, even or fullcontact");
    }
    ProfileSpec p;
    const auto cls = parse_class(parts[first]);
    if (!cls) {
        throw InvalidArgument("unknown profile class: " + parts[first]);
    }
    p.cls = *cls;
    for (std::size_t i = first + 1; i < parts.size(); ++i) {
        const auto& t = parts[i];
        if (t == "mirror") {
            p.mirror = true;
        } else if (t.rfind("m=", 0) == 0) {
            p.m = static_cast<int>(parse_number(t.substr(2), "m"));
        } else if (t.rfind("angle=", 0) == 0) {
            p.angle_deg = parse_number(t.substr(6), "angle");
        } else {
            throw InvalidArgument("unknown profile setting: " + t);
        }
    }
    if (p.m < 1) {
        throw InvalidArgument("profile index m must be at least 1");
    }
    return p;
}

AngularProfile make_profile(double s, const ProfileSpec& p)
{
    AngularProfile b = s == 0.5 ? profile_closed_form_s_half(p.m, p.cls) : profile_for(s, p.cls, p.m);
    return p.mirror ? b.mirrored() : b;
}

PointFunction lifted_profile(const GridSpec& g, const ProfileSpec& p)
{
    if (g.dim == 2 && p.angle_deg != 0.0) {
        throw InvalidArgument("a profile angle needs dimension 3");
    }
    return make_profile(g.s, p).lifted(p.angle_deg * kPi / 180);
}

// constant[:c=<v>] | coordinate[:axis=<k>] | profile:<class>... | instance:regular |
// instance:band-mixed[:r0=<r>] | file:<path>
PointFunction boundary_data(const std::string& text, const GridSpec& g)
{
    const auto parts = split(text, ':');
    if (parts.empty()) {
        throw InvalidArgument("empty boundary data");
    }
    const std::string& kind = parts[0];
    if (kind == "constant") {
        double c = 1.0;
        if (parts.size() == 2 && parts[1].rfind("c=", 0) == 0) {
            c = parse_number(parts[1].substr(2), "constant");
        } else if (parts.size() > 1) {
            throw InvalidArgument("constant takes only c=<value>");
        }
        return [c](std::span<const double>) { return c; };
    }
    if (kind == "coordinate") {
        int axis = 1;
        if (parts.size() == 2 && parts[1].rfind("axis=", 0) == 0) {
            axis = static_cast<int>(parse_number(parts[1].substr(5), "axis"));
        } else if (parts.size() > 1) {
            throw InvalidArgument("coordinate takes only axis=<k>");
        }
        if (axis < 1 || axis >= g.dim) {
            throw InvalidArgument("coordinate axis must be tangential, 1.." + std::to_string(g.dim - 1));
        }
        return [axis](std::span<const double> x) { return x[axis - 1]; };
    }
    if (kind == "profile") {
        return lifted_profile(g, parse_profile_spec(parts, 1));
    }
    if (kind == "instance" && parts.size() >= 2) {
        if (parts[1] == "regular" && parts.size() == 2) {
            if (g.s != 0.5 || g.dim != 2) {
                throw InvalidArgument("the regular instance is defined for dim 2, s = 0.5");
            }
            return regular_instance_data();
        }
        if (parts[1] == "band-mixed") {
            double r0 = 0.4;
            if (parts.size() == 3 && parts[2].rfind("r0=", 0) == 0) {
                r0 = parse_number(parts[2].substr(3), "r0");
            } else if (parts.size() > 2) {
                throw InvalidArgument("band-mixed takes only r0=<radius>");
            }
            if (g.dim != 2) {
                throw InvalidArgument("the band-mixed instance is two-dimensional");
            }
            return band_mixed(r0, g.s);
        }
    }
    if (kind == "file" && parts.size() >= 2) {
        const std::string path = text.substr(5);
        require_input(path);
        auto source = std::make_shared<const ScalarField>(load_field(path));
        if (source->spec().dim != g.dim) {
            throw InvalidArgument("boundary file has dimension " + std::to_string(source->spec().dim));
        }
        return [source](std::span<const double> x) { return interpolate(*source, x); };
    }
    throw InvalidArgument("unknown boundary data: " + text);
}

json label_json(const StratumLabel& l)
{
    static const char* names[] = {"snapped", "unresolved", "skipped"};
    json j = {{"x", l.x}, {"status", names[static_cast<int>(l.status)]}};
    if (l.status == LabelStatus::Skipped) {
        return j;
    }
    j["lambda_hat"] = l.lambda_hat;
    j["intercept"] = l.intercept;
    if (l.snapped) {
        j["lambda"] = l.snapped->lambda;
        j["class"] = class_name(l.snapped->cls);
        j["m"] = l.snapped->m;
    }
    j["residual"] = l.residual;
    if (l.tangent) {
        j["tangent"] = *l.tangent;
        j["anisotropy"] = l.anisotropy;
    }
    return j;
}

// --- subcommands ----------------------------------------------------------

struct SolveOptions {
    int dim = 2;
    int n = 64;
    double side = 2.0;
    double s = 0.5;
    std::string bc;
    double omega = 0.0;
    double tol = 1e-10;
    int max_sweeps = 200000;
    bool nested = true;
    std::string backend = "auto";
    std::string out;
    std::string csv;
    std::string report;
};

int do_solve(Run& run, const SolveOptions& o)
{
    run.params = {{"dim", o.dim},         {"n", o.n},         {"side", o.side},       {"s", o.s},
                  {"bc", o.bc},           {"omega", o.omega}, {"tol", o.tol},         {"max_sweeps", o.max_sweeps},
                  {"nested", o.nested},   {"backend", o.backend}, {"out", o.out},     {"csv", o.csv}};
    require_output(o.out);
    require_output(o.csv);
    require_output(o.report);
    const GridSpec g = make_grid(o.dim, o.n, o.side, o.s);
    if (!o.csv.empty() && g.dim != 2) {
        throw InvalidArgument("CSV export is for 2D fields");
    }
    SolverConfig c;
    c.boundary_data = boundary_data(o.bc, g);
    c.omega = o.omega > 0.0 ? o.omega : optimal_omega(g);
    c.tol = o.tol;
    c.max_sweeps = o.max_sweeps;
    c.nested = o.nested;
    c.record_energy = false;
    if (o.backend != "auto") {
        const auto b = kernels::parse_backend(o.backend);
        if (!b) {
            throw InvalidArgument("unknown backend: " + o.backend);
        }
        c.backend = *b;
    }
    auto [u, rep] = solve(g, c);
    double low = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < g.plane_size(); ++t) {
        low = std::min(low, u.values()[t * g.layers()]);
    }
    const json result = {{"converged", rep.converged},
                         {"sweeps", rep.sweeps_used},
                         {"coarse_sweeps", rep.coarse_sweeps},
                         {"residual", rep.final_residual},
                         {"pde", rep.final_pde},
                         {"complementarity", rep.final_complementarity},
                         {"violation", rep.final_violation},
                         {"omega", rep.omega},
                         {"backend", std::string(kernels::name(rep.backend))},
                         {"conductance_contrast", rep.conductance_contrast},
                         {"min_plane_value", low}};
    run.out << "converged " << (rep.converged ? "yes" : "no") << "  sweeps " << rep.sweeps_used << "  residual "
            << rep.final_residual << "  backend " << kernels::name(rep.backend) << '\n';
    if (!rep.converged) {
        run.write_report(o.report, json::array({result}));
        run.err << "error: solver did not converge within " << o.max_sweeps << " sweeps (residual "
                << rep.final_residual << ")\n";
        return kExitNumerical;
    }
    save_field(u, o.out, run.header());
    if (!o.csv.empty()) {
        save_field_csv(u, o.csv, run.header());
    }
    run.write_report(o.report, json::array({result}));
    return kExitOk;
}

struct FrequencyOptions {
    std::string in;
    std::vector<double> center;
    std::vector<double> r;
    double r_lo = 0.0;
    double r_hi = 0.0;
    int count = 8;
    double tau = -1.0;
    std::string out;
    std::string report;
};

int do_frequency(Run& run, const FrequencyOptions& o)
{
    run.params = {{"in", o.in},     {"center", o.center}, {"r", o.r},     {"r_lo", o.r_lo},
                  {"r_hi", o.r_hi}, {"count", o.count},   {"tau", o.tau}, {"out", o.out}};
    require_input(o.in);
    require_output(o.out);
    require_output(o.report);
    const ScalarField u = load_field(o.in);
    const auto x0 = point_of(o.center, u.spec().dim, "--center");
    const std::span<const double> c(x0.data(), u.spec().dim);
    std::vector<double> radii = o.r;
    const bool ladder = radii.empty();
    if (ladder) {
        if (!(o.r_lo > 0.0 && o.r_hi > 0.0)) {
            throw InvalidArgument("give --r, or both --r-lo and --r-hi");
        }
        radii = geometric_ladder(o.r_lo, o.r_hi, o.count);
    }
    const auto p = frequency_profile(u, c, radii);
    for (double v : p.N_values) {
        if (!std::isfinite(v)) {
            throw NumericalError("non-finite frequency");
        }
    }
    const double lambda_hat = p.N_values.back();
    const double tau = o.tau >= 0.0 ? o.tau : 1e-3 * (1.0 + lambda_hat);
    std::string body = "r,D,H,N,monotonicity_flag\n";
    json rows = json::array();
    int violations = 0;
    for (std::size_t i = 0; i < p.radii.size(); ++i) {
        // radii decrease: flag a radius whose N drops below the next smaller one
        const bool flag = i + 1 < p.radii.size() && p.N_values[i] < p.N_values[i + 1] - tau;
        violations += flag ? 1 : 0;
        body += num(p.radii[i]) + "," + num(p.D_values[i]) + "," + num(p.H_values[i]) + "," + num(p.N_values[i]) + "," +
                (flag ? "1" : "0") + "\n";
        rows.push_back({{"r", p.radii[i]}, {"D", p.D_values[i]}, {"H", p.H_values[i]}, {"N", p.N_values[i]},
                        {"monotonicity_flag", flag}});
    }
    run.emit_csv(o.out, body);
    json result = {{"lambda_hat", lambda_hat}, {"tau", tau}, {"violations", violations}, {"rows", rows}};
    if (ladder) {
        result["intercept"] = frequency_limit(u, c, o.r_lo, o.r_hi, o.count).intercept;
    }
    run.write_report(o.report, json::array({result}));
    return kExitOk;
}

struct BlowupOptions {
    std::string in;
    std::vector<double> center;
    double r0 = 0.0;
    int levels = 4;
    int n_out = 0;
    std::string ref;
    double lambda_hat = 0.0;
    std::string csv;
    std::string report;
};

int do_blowup(Run& run, const BlowupOptions& o)
{
    run.params = {{"in", o.in},       {"center", o.center}, {"r0", o.r0},     {"levels", o.levels},
                  {"n_out", o.n_out}, {"ref_profile", o.ref}, {"lambda_hat", o.lambda_hat}, {"csv", o.csv}};
    require_input(o.in);
    require_output(o.csv);
    require_output(o.report);
    const ScalarField u = load_field(o.in);
    const GridSpec& g = u.spec();
    const auto x0 = point_of(o.center, g.dim, "--center");
    const std::span<const double> c(x0.data(), g.dim);
    PointFunction ref;
    if (!o.ref.empty()) {
        ref = normalized(lifted_profile(g, parse_profile_spec(split(o.ref, ':'), 0)), g.dim, g.s);
    }
    const auto diag = blowup_sequence(u, c, o.r0, o.levels, o.n_out);
    std::vector<double> products;
    if (ref) {
        for (const auto& f : diag.fields) {
            products.push_back(sphere_inner(f, ref));
        }
    }
    std::string body = "level,r,distance_to_previous,ref_product\n";
    for (std::size_t i = 0; i < diag.radii.size(); ++i) {
        body += std::to_string(i) + "," + num(diag.radii[i]) + "," + (i > 0 ? num(diag.pairwise_dist[i - 1]) : "") +
                "," + (ref ? num(products[i]) : "") + "\n";
    }
    if (!o.csv.empty()) {
        run.emit_csv(o.csv, body);
    }
    json result = {{"radii", diag.radii}, {"pairwise_dist", diag.pairwise_dist}, {"cauchy_defect", diag.cauchy_defect}};
    if (ref) {
        result["ref_products"] = products;
    }
    run.out << "cauchy_defect " << num(diag.cauchy_defect) << '\n';
    for (std::size_t i = 0; i < diag.pairwise_dist.size(); ++i) {
        run.out << "distance r=" << num(diag.radii[i + 1]) << " " << num(diag.pairwise_dist[i]) << '\n';
    }
    if (o.lambda_hat > 0.0) {
        const Alignment a = align_2d(diag.fields.back(), g.s, o.lambda_hat);
        result["alignment"] = {{"e", a.e},           {"angle_deg", a.angle_deg}, {"match_error", a.match_error},
                               {"lambda", a.lambda}, {"class", class_name(a.cls)}, {"m", a.m}};
        run.out << "alignment angle " << num(a.angle_deg) << " error " << num(a.match_error) << " lambda "
                << num(a.lambda) << '\n';
    }
    run.write_report(o.report, json::array({result}));
    return kExitOk;
}

struct ProfilesOptions {
    double s = 0.5;
    double lo = 1.0;
    double hi = 0.0;
    int samples = 181;
    std::string table;
    std::string phi;
    std::string field;
    std::string cls = "regular";
    int m = 1;
    int dim = 2;
    int n = 128;
    double side = 2.0;
    double angle = 0.0;
    std::string report;
};

int do_profiles(Run& run, const ProfilesOptions& o)
{
    const double hi = o.hi > 0.0 ? o.hi : 6.0 + 2.0 * o.s + 0.4;
    run.params = {{"s", o.s},         {"lo", o.lo},   {"hi", hi},    {"samples", o.samples}, {"table", o.table},
                  {"phi", o.phi},     {"field", o.field}, {"class", o.cls}, {"m", o.m},    {"dim", o.dim},
                  {"n", o.n},         {"side", o.side}, {"angle", o.angle}};
    require_output(o.table);
    require_output(o.phi);
    require_output(o.field);
    require_output(o.report);
    if (o.samples < 2) {
        throw InvalidArgument("--samples must be at least 2");
    }
    if (!o.field.empty()) {
        const GridSpec g = make_grid(o.dim, o.n, o.side, o.s);
        ProfileSpec p = parse_profile_spec({o.cls}, 0);
        p.m = o.m;
        p.angle_deg = o.angle;
        if (p.m < 1) {
            throw InvalidArgument("profile index m must be at least 1");
        }
        save_field(ScalarField::sample(g, lifted_profile(g, p)), o.field, run.header());
    }
    std::vector<AngularRoot> roots;
    for (BoundaryPattern b : {BoundaryPattern::FullContact, BoundaryPattern::ContactAtPi, BoundaryPattern::NoContact}) {
        for (auto& r : find_admissible(o.s, o.lo, hi, b)) {
            roots.push_back(std::move(r));
        }
    }
    std::sort(roots.begin(), roots.end(), [](const AngularRoot& a, const AngularRoot& b) { return a.lambda < b.lambda; });
    const auto set = admissible_in_range(o.s, o.lo - 2.0, hi + 2.0);
    std::string body = "lambda,class,m,pattern,mismatch,formula_lambda,formula_error\n";
    json rows = json::array();
    for (const auto& r : roots) {
        const AdmissibleEntry* best = nullptr;
        for (const auto& e : set) {
            if (!best || std::abs(e.lambda - r.lambda) < std::abs(best->lambda - r.lambda)) {
                best = &e;
            }
        }
        const double formula = best ? best->lambda : std::numeric_limits<double>::quiet_NaN();
        const auto& prof = r.profile;
        body += num(r.lambda) + "," + class_name(prof.profile_class()) + "," + std::to_string(prof.m()) + "," +
                pattern_name(prof.pattern()) + "," + num(r.mismatch) + "," + num(formula) + "," +
                num(std::abs(formula - r.lambda)) + "\n";
        rows.push_back({{"lambda", r.lambda},
                        {"class", class_name(prof.profile_class())},
                        {"m", prof.m()},
                        {"pattern", pattern_name(prof.pattern())},
                        {"mismatch", r.mismatch},
                        {"formula_lambda", formula},
                        {"formula_error", std::abs(formula - r.lambda)}});
    }
    run.emit_csv(o.table, body);
    if (!o.phi.empty()) {
        std::string csv = "theta";
        std::vector<std::vector<double>> columns;
        for (const auto& r : roots) {
            csv += ",phi_" + pattern_name(r.profile.pattern()) + "_" + num(r.lambda);
            columns.push_back(r.profile.samples(o.samples));
        }
        csv += "\n";
        for (int k = 0; k < o.samples; ++k) {
            csv += num(k * kPi / (o.samples - 1));
            for (const auto& col : columns) {
                csv += "," + num(col[k]);
            }
            csv += "\n";
        }
        run.emit_csv(o.phi, csv);
    }
    run.write_report(o.report, rows);
    return kExitOk;
}

struct ClassifyCliOptions {
    std::string in;
    std::string points;
    double tol_u = 0.0;
    double delta_snap = 0.1;
    double r_lo = 0.0;
    double r_hi = 0.0;
    int radii = 4;
    double tangent_rho = 0.0;
    std::string out;
    std::string report;
};

std::vector<std::array<double, 3>> read_points(const std::string& path, int dim)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read " + path);
    }
    std::vector<std::array<double, 3>> pts;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#' || std::isalpha(static_cast<unsigned char>(line[0]))) {
            continue;
        }
        const auto cells = split(line, ',');
        if (static_cast<int>(cells.size()) < dim - 1) {
            throw IoError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(dim - 1) + " coordinates");
        }
        std::array<double, 3> p{};
        for (int a = 0; a + 1 < dim; ++a) {
            try {
                p[a] = std::stod(cells[a]);
            } catch (const std::exception&) {
                throw IoError(path + ":" + std::to_string(lineno) + ": not a number");
            }
        }
        pts.push_back(p);
    }
    return pts;
}

int do_classify(Run& run, const ClassifyCliOptions& o)
{
    run.params = {{"in", o.in},     {"points", o.points}, {"tol_u", o.tol_u}, {"delta_snap", o.delta_snap},
                  {"r_lo", o.r_lo}, {"r_hi", o.r_hi},     {"radii", o.radii}, {"tangent_rho", o.tangent_rho},
                  {"out", o.out}};
    require_input(o.in);
    if (!o.points.empty()) {
        require_input(o.points);
    }
    require_output(o.out);
    require_output(o.report);
    const ScalarField u = load_field(o.in);
    const GridSpec& g = u.spec();
    std::vector<std::array<double, 3>> pts;
    if (o.points.empty()) {
        const double tol = o.tol_u > 0.0 ? o.tol_u : default_contact_tolerance(u);
        pts = free_boundary(g, coincidence_set(u, tol));
    } else {
        pts = read_points(o.points, g.dim);
    }
    ClassifyOptions opt;
    opt.delta_snap = o.delta_snap;
    opt.r_lo = o.r_lo;
    opt.r_hi = o.r_hi;
    opt.radii = o.radii;
    auto labels = classify(u, pts, opt);
    if (g.dim == 3) {
        const double rho = o.tangent_rho > 0.0 ? o.tangent_rho : 16.0 * g.h;
        for (auto& l : labels) {
            if (l.status != LabelStatus::Snapped) {
                continue;
            }
            try {
                const auto est = tangent_plane(labels, l.x, rho);
                l.tangent = est.direction;
                l.anisotropy = est.anisotropy;
            } catch (const InvalidArgument&) {
                // too few neighbours in the stratum: no tangent
            }
        }
    }
    static const char* status[] = {"snapped", "unresolved", "skipped"};
    std::string body = "x1,x2,status,lambda_hat,intercept,lambda,class,m,residual,t1,t2,anisotropy\n";
    json rows = json::array();
    int counts[3] = {0, 0, 0};
    for (const auto& l : labels) {
        ++counts[static_cast<int>(l.status)];
        const bool done = l.status != LabelStatus::Skipped;
        body += num(l.x[0]) + "," + num(l.x[1]) + "," + status[static_cast<int>(l.status)] + "," +
                (done ? num(l.lambda_hat) : "") + "," + (done ? num(l.intercept) : "") + "," +
                (l.snapped ? num(l.snapped->lambda) + "," + class_name(l.snapped->cls) + "," + std::to_string(l.snapped->m)
                           : std::string(",,")) +
                "," + num(l.residual) + "," + (l.tangent ? num((*l.tangent)[0]) + "," + num((*l.tangent)[1]) : ",") +
                "," + (l.tangent || l.anisotropy > 0.0 ? num(l.anisotropy) : "") + "\n";
        rows.push_back(label_json(l));
    }
    run.emit_csv(o.out, body);
    if (!o.out.empty()) {
        run.out << "points " << labels.size() << "  snapped " << counts[0] << "  unresolved " << counts[1]
                << "  skipped " << counts[2] << '\n';
    }
    run.write_report(o.report, rows);
    return kExitOk;
}

struct CheckOptions {
    std::string suite;
    std::string report;
};

int do_check(Run& run, const CheckOptions& o)
{
    run.params = {{"suite", o.suite}};
    if (!is_suite(o.suite)) {
        throw InvalidArgument("unknown suite '" + o.suite + "'; expected frequency, profiles, blowup, strata or all");
    }
    require_output(o.report);
    json results = json::array();
    json timing = json::object();
    bool all = true;
    for (const auto& r : run_suite(o.suite, [&](const CriterionResult& r) { run.out << summary_line(r) << std::endl; })) {
        all = all && r.pass();
        json checks = json::array();
        for (const auto& c : r.checks) {
            json j = {{"name", c.name}, {"value", c.value}, {"relation", c.relation}, {"tolerance", c.bound}};
            if (c.relation == "|v-t|<=") {
                j["target"] = c.target;
            }
            j["pass"] = c.pass;
            checks.push_back(j);
        }
        results.push_back({{"criterion", r.id}, {"suite", r.suite}, {"title", r.title}, {"pass", r.pass()},
                           {"checks", checks}});
        timing["criterion_" + std::to_string(r.id)] = r.seconds;
    }
    run.write_report(o.report, results, timing);
    return all ? kExitOk : kExitChecksFailed;
}

struct ReportOptions {
    std::string fixture;
    std::string in;
    std::string out;
    int n = 0;
    double r0 = 0.4;
    double angle = 90.0;
    int count = 200;
    double sigma = 1.0 / 64;
    double half_length = 0.5;
    double rho = 0.5;
    std::vector<double> center = {0.0, 0.0};
    std::uint64_t seed = 1;
    std::string report;
};

int do_report(Run& run, const ReportOptions& o)
{
    run.params = {{"make_fixture", o.fixture}, {"in", o.in},       {"out", o.out},     {"n", o.n},
                  {"r0", o.r0},                {"angle", o.angle}, {"count", o.count}, {"sigma", o.sigma},
                  {"half_length", o.half_length}, {"rho", o.rho},  {"center", o.center}, {"seed", o.seed}};
    require_output(o.out);
    require_output(o.report);
    if (!o.fixture.empty()) {
        if (o.out.empty()) {
            throw InvalidArgument("--make-fixture needs --out");
        }
        if (o.center.size() != 2) {
            throw InvalidArgument("--center takes two thin-plane coordinates");
        }
        const std::array<double, 3> c{o.center[0], o.center[1], 0.0};
        auto points_csv = [&](const std::vector<std::array<double, 3>>& pts) {
            std::string body = "x1,x2\n";
            for (const auto& p : pts) {
                body += num(p[0]) + "," + num(p[1]) + "\n";
            }
            run.emit_csv(o.out, body);
        };
        json result = {{"fixture", o.fixture}, {"out", o.out}};
        if (o.fixture == "regular-2d" || o.fixture == "extended-3d") {
            const bool flat = o.fixture == "regular-2d";
            const int n = o.n > 0 ? o.n : (flat ? 512 : 128);
            auto [u, rep] = flat ? solve_instance_2d(n, regular_instance_data()) : extended_instance_3d(n);
            if (!rep.converged) {
                throw NumericalError(o.fixture + " did not converge");
            }
            save_field(u, o.out, run.header());
            result["sweeps"] = rep.sweeps_used;
            result["residual"] = rep.final_residual;
        } else if (o.fixture == "band-mixed") {
            const int n = o.n > 0 ? o.n : 512;
            save_field(ScalarField::sample(make_grid(2, n, 2.0, 0.5), band_mixed(o.r0)), o.out, run.header());
        } else if (o.fixture == "jittered-line") {
            points_csv(jittered_line(c, o.angle * kPi / 180, o.half_length, o.count, o.sigma, o.seed));
        } else if (o.fixture == "isotropic-cloud") {
            points_csv(isotropic_cloud(c, o.rho, o.count, o.seed));
        } else {
            throw InvalidArgument("unknown fixture '" + o.fixture +
                                  "'; expected regular-2d, extended-3d, band-mixed, jittered-line or isotropic-cloud");
        }
        run.write_report(o.report, json::array({result}));
        return kExitOk;
    }
    if (o.in.empty()) {
        throw InvalidArgument("report needs --make-fixture or --in");
    }
    require_input(o.in);
    const ScalarField u = load_field(o.in);
    const GridSpec& g = u.spec();
    const Residuals res = residuals(u);
    const auto mask = coincidence_set(u, default_contact_tolerance(u));
    const auto fb = free_boundary(g, mask);
    std::size_t contact = 0;
    double low = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < mask.size(); ++t) {
        contact += mask[t] ? 1 : 0;
        low = std::min(low, u.values()[t * g.layers()]);
    }
    const json result = {{"dim", g.dim},
                         {"n", g.n},
                         {"side_length", g.side_length},
                         {"s", g.s},
                         {"h", g.h},
                         {"pde_residual", res.pde},
                         {"complementarity_residual", res.complementarity},
                         {"violation", res.violation},
                         {"energy", assemble_energy(g).energy(u)},
                         {"min_plane_value", low},
                         {"contact_nodes", contact},
                         {"plane_nodes", mask.size()},
                         {"free_boundary_points", fb.size()}};
    for (const auto& [key, value] : result.items()) {
        run.out << key << ' ' << value.dump() << '\n';
    }
    run.write_report(o.report, json::array({result}));
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Thin obstacle problem: solve, frequency, blow-up and stratum diagnostics", "thinobs"};
    app.set_version_flag("--version", std::string(THINOBS_VERSION));
    app.set_config("--config", "", "TOML or INI file of option defaults, one [section] per subcommand; flags win");
    app.require_subcommand(1, 1);

    SolveOptions so;
    auto* solve_cmd = app.add_subcommand("solve", "Solve the discrete thin obstacle problem on a box");
    solve_cmd->add_option("--dim", so.dim, "2 or 3")->check(CLI::IsMember({2, 3}))->capture_default_str();
    solve_cmd->add_option("--n", so.n, "cells per axis, a power of two >= 8")->capture_default_str();
    solve_cmd->add_option("--side", so.side, "box side length")->capture_default_str();
    solve_cmd->add_option("--s", so.s, "fractional parameter in (0,1)")->capture_default_str();
    solve_cmd
        ->add_option("--bc", so.bc,
                     "boundary data: constant[:c=v], coordinate[:axis=k], profile:<class>[:m=k][:angle=deg][:mirror], "
                     "instance:regular, instance:band-mixed[:r0=r], file:<path.fbx1>")
        ->required();
    solve_cmd->add_option("--omega", so.omega, "relaxation factor; 0 picks 2/(1+sin(pi/n))")->capture_default_str();
    solve_cmd->add_option("--tol", so.tol, "relative residual tolerance")->capture_default_str();
    solve_cmd->add_option("--max-sweeps", so.max_sweeps)->capture_default_str();
    solve_cmd->add_flag("--nested,!--no-nested", so.nested, "start from coarser solves")->capture_default_str();
    solve_cmd->add_option("--backend", so.backend, "auto, scalar, avx2 or neon")->capture_default_str();
    solve_cmd->add_option("--out", so.out, "FBX1 output")->required();
    solve_cmd->add_option("--csv", so.csv, "also write x1,x_d,value (2D)");
    solve_cmd->add_option("--report", so.report, "JSON report");

    FrequencyOptions fo;
    auto* freq_cmd = app.add_subcommand("frequency", "Frequency profile at a thin-plane point (CSV r,D,H,N,monotonicity_flag)");
    freq_cmd->add_option("--in", fo.in, "FBX1 field")->required();
    freq_cmd->add_option("--center", fo.center, "comma-separated point on the thin plane")->delimiter(',')->required();
    freq_cmd->add_option("--r", fo.r, "explicit radii, comma-separated")->delimiter(',');
    freq_cmd->add_option("--r-lo", fo.r_lo, "smallest radius of a geometric ladder");
    freq_cmd->add_option("--r-hi", fo.r_hi, "largest radius of a geometric ladder");
    freq_cmd->add_option("--count", fo.count, "ladder length, >= 4")->capture_default_str();
    freq_cmd->add_option("--tau", fo.tau, "monotonicity tolerance; default 1e-3 (1 + lambda_hat)");
    freq_cmd->add_option("--out", fo.out, "CSV output (default stdout)");
    freq_cmd->add_option("--report", fo.report, "JSON report");

    BlowupOptions bo;
    auto* blow_cmd = app.add_subcommand("blowup", "Normalized rescalings at r0, r0/2, ..., r0/2^levels");
    blow_cmd->add_option("--in", bo.in, "FBX1 field")->required();
    blow_cmd->add_option("--center", bo.center, "comma-separated point on the thin plane")->delimiter(',')->required();
    blow_cmd->add_option("--r0", bo.r0, "largest radius")->required();
    blow_cmd->add_option("--levels", bo.levels, "number of halvings")->capture_default_str();
    blow_cmd->add_option("--n-out", bo.n_out, "cells per axis of the rescaled grids (0: as input)");
    blow_cmd->add_option("--ref-profile", bo.ref, "<class>[:m=k][:angle=deg][:mirror]; tracks the scalar product");
    blow_cmd->add_option("--lambda-hat", bo.lambda_hat, "fit an aligned profile to the last rescaling");
    blow_cmd->add_option("--csv", bo.csv, "CSV level,r,distance_to_previous,ref_product");
    blow_cmd->add_option("--report", bo.report, "JSON report");

    ProfilesOptions po;
    auto* prof_cmd = app.add_subcommand("profiles", "Sign-admissible homogeneous profiles by shooting");
    prof_cmd->add_option("--s", po.s)->capture_default_str();
    prof_cmd->add_option("--lo", po.lo, "lower end of the search window")->capture_default_str();
    prof_cmd->add_option("--hi", po.hi, "upper end (default 6 + 2s + 0.4)");
    prof_cmd->add_option("--samples", po.samples, "theta samples for --phi")->capture_default_str();
    prof_cmd->add_option("--table", po.table, "CSV of roots (default stdout)");
    prof_cmd->add_option("--phi", po.phi, "CSV of sampled profiles");
    prof_cmd->add_option("--field", po.field, "write one profile as an FBX1 field");
    prof_cmd->add_option("--class", po.cls, "regular, even or fullcontact (for --field)")->capture_default_str();
    prof_cmd->add_option("--m", po.m)->capture_default_str();
    prof_cmd->add_option("--dim", po.dim)->check(CLI::IsMember({2, 3}))->capture_default_str();
    prof_cmd->add_option("--n", po.n)->capture_default_str();
    prof_cmd->add_option("--side", po.side)->capture_default_str();
    prof_cmd->add_option("--angle", po.angle, "direction e in degrees (3D)")->capture_default_str();
    prof_cmd->add_option("--report", po.report, "JSON report");

    ClassifyCliOptions co;
    auto* class_cmd = app.add_subcommand("classify", "Frequency labels of free-boundary points");
    class_cmd->add_option("--in", co.in, "FBX1 field")->required();
    class_cmd->add_option("--points", co.points, "CSV of thin-plane points (default: the computed free boundary)");
    class_cmd->add_option("--tol-u", co.tol_u, "contact threshold (default 1e-9 times the data scale)");
    class_cmd->add_option("--delta-snap", co.delta_snap)->capture_default_str();
    class_cmd->add_option("--r-lo", co.r_lo, "ladder start (default 8h)");
    class_cmd->add_option("--r-hi", co.r_hi, "ladder end (default 4 r_lo)");
    class_cmd->add_option("--radii", co.radii)->capture_default_str();
    class_cmd->add_option("--tangent-rho", co.tangent_rho, "tangent window in 3D (default 16h)");
    class_cmd->add_option("--out", co.out, "CSV output (default stdout)");
    class_cmd->add_option("--report", co.report, "JSON report");

    CheckOptions ko;
    auto* check_cmd = app.add_subcommand("check", "Run an acceptance suite; exit 4 if any check fails");
    check_cmd->add_option("--suite", ko.suite, "frequency, profiles, blowup, strata or all")->required();
    check_cmd->add_option("--report", ko.report, "JSON report");

    ReportOptions ro;
    auto* report_cmd = app.add_subcommand("report", "Field summary, or write a synthetic fixture");
    report_cmd->add_option("--make-fixture", ro.fixture,
                           "regular-2d, extended-3d, band-mixed, jittered-line or isotropic-cloud");
    report_cmd->add_option("--in", ro.in, "FBX1 field to summarize");
    report_cmd->add_option("--out", ro.out, "fixture output");
    report_cmd->add_option("--n", ro.n, "grid size (default 512 in 2D, 128 in 3D)");
    report_cmd->add_option("--r0", ro.r0)->capture_default_str();
    report_cmd->add_option("--angle", ro.angle, "line direction in degrees")->capture_default_str();
    report_cmd->add_option("--count", ro.count)->capture_default_str();
    report_cmd->add_option("--sigma", ro.sigma, "jitter")->capture_default_str();
    report_cmd->add_option("--half-length", ro.half_length)->capture_default_str();
    report_cmd->add_option("--rho", ro.rho, "cloud radius")->capture_default_str();
    report_cmd->add_option("--center", ro.center, "thin-plane point x1,x2")->delimiter(',');
    report_cmd->add_option("--seed", ro.seed)->capture_default_str();
    report_cmd->add_option("--report", ro.report, "JSON report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInvalid;
    }

    auto* chosen = app.get_subcommands().front();
    Run run{chosen->get_name(), json::object(), out, err, Stopwatch{}};
    try {
        if (chosen == solve_cmd) {
            return do_solve(run, so);
        }
        if (chosen == freq_cmd) {
            return do_frequency(run, fo);
        }
        if (chosen == blow_cmd) {
            return do_blowup(run, bo);
        }
        if (chosen == prof_cmd) {
            return do_profiles(run, po);
        }
        if (chosen == class_cmd) {
            return do_classify(run, co);
        }
        if (chosen == check_cmd) {
            return do_check(run, ko);
        }
        return do_report(run, ro);
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const GeometryError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::bad_alloc&) {
        err << "numerical failure: out of memory\n";
        return kExitNumerical;
    }
}

}  // namespace thinobs
