#include "thinobs/profiles.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "thinobs/error.hpp"

namespace thinobs {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTheta0 = 1e-2;   // series start-off
constexpr double kMaxStep = 1e-4;  // RK4 step in theta
constexpr int kSeriesTerms = 7;

/// Weight samples on the fixed RK4 grid, shared by every lambda at one s.
struct WeightGrid {
    double p = 0.0;
    double step = 0.0;
    int steps = 0;
    std::vector<double> w_node;
    std::vector<double> w_mid;
    std::array<double, 5> w_series{};  ///< (sin t / t)^p in powers of t^2
};

std::shared_ptr<const WeightGrid> weight_grid(double s)
{
    static std::mutex mu;
    static std::map<double, std::shared_ptr<const WeightGrid>> cache;
    std::lock_guard<std::mutex> lock(mu);
    if (auto it = cache.find(s); it != cache.end()) {
        return it->second;
    }
    auto g = std::make_shared<WeightGrid>();
    g->p = 1.0 - 2.0 * s;
    g->steps = static_cast<int>(std::ceil((kPi / 2 - kTheta0) / kMaxStep));
    g->step = (kPi / 2 - kTheta0) / g->steps;
    g->w_node.resize(g->steps + 1);
    g->w_mid.resize(g->steps);
    for (int k = 0; k <= g->steps; ++k) {
        const double t = kTheta0 + k * g->step;
        g->w_node[k] = std::pow(std::sin(t), g->p);
        if (k < g->steps) {
            g->w_mid[k] = std::pow(std::sin(t + 0.5 * g->step), g->p);
        }
    }
    // log(sin t / t) = sum l_k t^(2k); exponentiate p times that series.
    const std::array<double, 5> l = {0.0, -1.0 / 6, -1.0 / 180, -1.0 / 2835, -1.0 / 37800};
    g->w_series[0] = 1.0;
    for (int k = 1; k < 5; ++k) {
        double acc = 0.0;
        for (int j = 1; j <= k; ++j) {
            acc += j * g->p * l[j] * g->w_series[k - j];
        }
        g->w_series[k] = acc / k;
    }
    cache.emplace(s, g);
    return g;
}

/// Frobenius solution theta^sigma sum a_k theta^(2k), a_0 = 1.
struct Series {
    double sigma = 0.0;
    std::array<double, kSeriesTerms> a{};
};

Series frobenius(const WeightGrid& g, double mu, bool contact)
{
    Series ser;
    const double p = g.p;
    ser.sigma = contact ? 1.0 - p : 0.0;
    const double sigma = ser.sigma;
    auto w = [&](int i) { return i < 5 ? g.w_series[i] : 0.0; };
    ser.a[0] = 1.0;
    for (int k = 1; k < kSeriesTerms; ++k) {
        const double dk = p + sigma - 1.0 + 2.0 * k;
        double c_prev = 0.0;
        for (int i = 0; i <= k - 1; ++i) {
            c_prev += w(i) * ser.a[k - 1 - i];
        }
        double cross = 0.0;
        for (int i = 1; i <= k; ++i) {
            cross += w(i) * (sigma + 2.0 * (k - i)) * ser.a[k - i];
        }
        ser.a[k] = -(mu * c_prev + dk * cross) / (dk * (sigma + 2.0 * k));
    }
    return ser;
}

/// (phi, sin^p phi') of a series solution at t > 0 (t = 0 allowed).
std::pair<double, double> series_eval(const WeightGrid& g, const Series& ser, double t)
{
    const double y = t * t;
    double sum = 0.0;
    double dsum = 0.0;
    for (int k = kSeriesTerms - 1; k >= 0; --k) {
        sum = sum * y + ser.a[k];
        dsum = dsum * y + (ser.sigma + 2.0 * k) * ser.a[k];
    }
    double ws = 0.0;
    for (int k = 4; k >= 0; --k) {
        ws = ws * y + g.w_series[k];
    }
    // sin^p(t) phi' = (sin t / t)^p t^(p + sigma - 1) dsum; the power is 0
    // for the contact series.
    const double phi = (ser.sigma == 0.0 ? 1.0 : std::pow(t, ser.sigma)) * sum;
    double psi = 0.0;
    if (ser.sigma != 0.0) {
        psi = ws * dsum;
    } else if (t > 0.0) {
        double tail = 0.0;
        for (int k = kSeriesTerms - 1; k >= 1; --k) {
            tail = tail * y + 2.0 * k * ser.a[k];
        }
        psi = ws * std::pow(t, g.p + 1.0) * tail;
    }
    return {phi, psi};
}

struct Trajectory {
    Series series;
    std::vector<double> phi;
    std::vector<double> psi;
    double end_phi = 0.0;
    double end_psi = 0.0;
};

/// Classical RK4 from kTheta0 to pi/2 for u = (phi, psi), psi = sin^p phi'.
Trajectory integrate(const WeightGrid& g, double mu, bool contact, bool store)
{
    Trajectory tr;
    tr.series = frobenius(g, mu, contact);
    auto [phi, psi] = series_eval(g, tr.series, kTheta0);
    if (!std::isfinite(phi) || !std::isfinite(psi)) {
        throw NumericalError("series start-off failed");
    }
    if (store) {
        tr.phi.reserve(g.steps + 1);
        tr.psi.reserve(g.steps + 1);
        tr.phi.push_back(phi);
        tr.psi.push_back(psi);
    }
    const double h = g.step;
    for (int k = 0; k < g.steps; ++k) {
        const double w0 = g.w_node[k];
        const double wm = g.w_mid[k];
        const double w1 = g.w_node[k + 1];
        const double k1a = psi / w0;
        const double k1b = -mu * w0 * phi;
        const double k2a = (psi + 0.5 * h * k1b) / wm;
        const double k2b = -mu * wm * (phi + 0.5 * h * k1a);
        const double k3a = (psi + 0.5 * h * k2b) / wm;
        const double k3b = -mu * wm * (phi + 0.5 * h * k2a);
        const double k4a = (psi + h * k3b) / w1;
        const double k4b = -mu * w1 * (phi + h * k3a);
        phi += h / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
        psi += h / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
        if (store) {
            tr.phi.push_back(phi);
            tr.psi.push_back(psi);
        }
    }
    tr.end_phi = phi;
    tr.end_psi = psi;
    return tr;
}

std::pair<bool, bool> endpoint_types(BoundaryPattern b)
{
    switch (b) {
    case BoundaryPattern::FullContact:
        return {true, true};
    case BoundaryPattern::ContactAtPi:
        return {false, true};
    case BoundaryPattern::ContactAtZero:
        return {true, false};
    case BoundaryPattern::NoContact:
        break;
    }
    return {false, false};
}

ProfileClass class_of(BoundaryPattern b)
{
    switch (b) {
    case BoundaryPattern::FullContact:
        return ProfileClass::FullContact;
    case BoundaryPattern::NoContact:
        return ProfileClass::Even;
    default:
        return ProfileClass::Regular;
    }
}

double wronskian(double phi_l, double psi_l, double phi_r, double psi_r)
{
    // The solution from pi, read at pi/2, has psi negated.
    const double w = -(phi_l * psi_r + psi_l * phi_r);
    return w / std::sqrt((phi_l * phi_l + psi_l * psi_l) * (phi_r * phi_r + psi_r * psi_r));
}

double mu_of(double s, double lambda) { return lambda * (lambda + 1.0 - 2.0 * s); }

void check_shoot_args(double s, double lambda)
{
    if (!(s > 0.0 && s < 1.0)) {
        throw InvalidArgument("s must lie in (0,1)");
    }
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw InvalidArgument("lambda must be positive and finite");
    }
}

double cheap_mismatch(const WeightGrid& g, double s, double lambda, BoundaryPattern pattern)
{
    const double mu = mu_of(s, lambda);
    const auto [left_contact, right_contact] = endpoint_types(pattern);
    const Trajectory l = integrate(g, mu, left_contact, false);
    if (left_contact == right_contact) {
        return wronskian(l.end_phi, l.end_psi, l.end_phi, l.end_psi);
    }
    const Trajectory r = integrate(g, mu, right_contact, false);
    return wronskian(l.end_phi, l.end_psi, r.end_phi, r.end_psi);
}

}  // namespace

namespace detail {

struct ShotSide {
    Series series;
    std::vector<double> phi;
    std::vector<double> psi;
    double amp = 1.0;
};

struct ShotTable {
    std::shared_ptr<const WeightGrid> grid;
    double mu = 0.0;
    ShotSide left;   ///< phi(theta) = amp * y(theta) on [0, pi/2]
    ShotSide right;  ///< phi(theta) = amp * y(pi - theta) on [pi/2, pi]

    /// (phi, sin^p phi') of one side at distance t from its endpoint, unscaled
    /// by amp, psi oriented away from the endpoint.
    std::pair<double, double> eval(const ShotSide& side, double t) const
    {
        const WeightGrid& g = *grid;
        if (t <= kTheta0) {
            return series_eval(g, side.series, t);
        }
        const double x = (t - kTheta0) / g.step;
        int k = static_cast<int>(std::floor(x));
        k = std::clamp(k, 0, g.steps - 1);
        const double u = std::clamp(x - k, 0.0, 1.0);
        const double h = g.step;
        const double w0 = g.w_node[k];
        const double w1 = g.w_node[k + 1];
        const double f0 = side.phi[k], f1 = side.phi[k + 1];
        const double q0 = side.psi[k], q1 = side.psi[k + 1];
        const double df0 = q0 / w0, df1 = q1 / w1;
        const double dq0 = -mu * w0 * f0, dq1 = -mu * w1 * f1;
        const double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
        const double h10 = u * (1 - u) * (1 - u);
        const double h01 = u * u * (3 - 2 * u);
        const double h11 = u * u * (u - 1);
        const double phi = h00 * f0 + h10 * h * df0 + h01 * f1 + h11 * h * df1;
        const double psi = h00 * q0 + h10 * h * dq0 + h01 * q1 + h11 * h * dq1;
        return {phi, psi};
    }
};

struct ProfileBuilder {
    static AngularProfile closed(ProfileClass cls, int m)
    {
        AngularProfile p;
        p.s_ = 0.5;
        p.m_ = m;
        p.cls_ = cls;
        switch (cls) {
        case ProfileClass::FullContact:
            p.closed_ = AngularProfile::ClosedKind::FullContact;
            p.lambda_ = 2.0 * m + 1.0;
            p.pattern_ = BoundaryPattern::FullContact;
            break;
        case ProfileClass::Regular:
            p.closed_ = AngularProfile::ClosedKind::Regular;
            p.lambda_ = 2.0 * m - 0.5;
            p.pattern_ = BoundaryPattern::ContactAtPi;
            break;
        case ProfileClass::Even:
            p.closed_ = AngularProfile::ClosedKind::Even;
            p.lambda_ = 2.0 * m;
            p.pattern_ = BoundaryPattern::NoContact;
            break;
        }
        return p;
    }

    static ShootResult shoot(double s, double lambda, BoundaryPattern pattern)
    {
        check_shoot_args(s, lambda);
        auto table = std::make_shared<ShotTable>();
        table->grid = weight_grid(s);
        table->mu = mu_of(s, lambda);
        const auto [left_contact, right_contact] = endpoint_types(pattern);
        Trajectory l = integrate(*table->grid, table->mu, left_contact, true);
        Trajectory r = integrate(*table->grid, table->mu, right_contact, true);
        ShootResult out;
        out.mismatch = wronskian(l.end_phi, l.end_psi, r.end_phi, r.end_psi);

        // Glue at pi/2 on whichever of value or flux is better conditioned.
        double beta = 1.0;
        if (std::abs(r.end_phi) >= std::abs(r.end_psi)) {
            beta = l.end_phi / r.end_phi;
        } else {
            beta = -l.end_psi / r.end_psi;
        }
        table->left = {l.series, std::move(l.phi), std::move(l.psi), 1.0};
        table->right = {r.series, std::move(r.phi), std::move(r.psi), beta};

        double peak = 0.0;
        for (double v : table->left.phi) {
            peak = std::max(peak, std::abs(v));
        }
        for (double v : table->right.phi) {
            peak = std::max(peak, std::abs(beta * v));
        }

        AngularProfile p;
        p.s_ = s;
        p.lambda_ = lambda;
        p.pattern_ = pattern;
        p.cls_ = class_of(pattern);
        p.table_ = std::move(table);
        p.scale_ = 1.0 / peak;

        // Sign convention: positive trace on a non-contact end at theta = 0,
        // else negative contact coefficient there; ContactAtZero keys on pi.
        const double near0 = p.phi(1e-7);
        const double nearpi = p.phi(kPi - 1e-7);
        bool flip = false;
        switch (pattern) {
        case BoundaryPattern::FullContact:
            flip = near0 > 0.0;
            break;
        case BoundaryPattern::ContactAtPi:
        case BoundaryPattern::NoContact:
            flip = near0 < 0.0;
            break;
        case BoundaryPattern::ContactAtZero:
            flip = nearpi < 0.0;
            break;
        }
        if (flip) {
            p.scale_ = -p.scale_;
        }
        const int zeros = p.interior_zeros();
        p.m_ = p.cls_ == ProfileClass::Regular ? (zeros + 1) / 2 : zeros / 2;
        out.profile = p;
        return out;
    }

    static void set_m(AngularProfile& p, int m) { p.m_ = m; }
};

}  // namespace detail

std::string class_name(ProfileClass c)
{
    switch (c) {
    case ProfileClass::Even:
        return "EVEN_2M";
    case ProfileClass::Regular:
        return "REGULAR_2M_MINUS_1_PLUS_S";
    case ProfileClass::FullContact:
        return "FULLCONTACT_2M_PLUS_2S";
    }
    return "?";
}

std::string pattern_name(BoundaryPattern b)
{
    switch (b) {
    case BoundaryPattern::FullContact:
        return "full_contact";
    case BoundaryPattern::ContactAtPi:
        return "contact_at_pi";
    case BoundaryPattern::ContactAtZero:
        return "contact_at_zero";
    case BoundaryPattern::NoContact:
        return "no_contact";
    }
    return "?";
}

std::optional<BoundaryPattern> parse_pattern(std::string_view text)
{
    for (BoundaryPattern b : {BoundaryPattern::FullContact, BoundaryPattern::ContactAtPi,
                              BoundaryPattern::ContactAtZero, BoundaryPattern::NoContact}) {
        if (text == pattern_name(b)) {
            return b;
        }
    }
    if (text == "half_contact") {
        return BoundaryPattern::ContactAtPi;
    }
    return std::nullopt;
}

std::optional<ProfileClass> parse_class(std::string_view text)
{
    if (text == "even" || text == class_name(ProfileClass::Even)) {
        return ProfileClass::Even;
    }
    if (text == "regular" || text == class_name(ProfileClass::Regular)) {
        return ProfileClass::Regular;
    }
    if (text == "fullcontact" || text == "full_contact" || text == class_name(ProfileClass::FullContact)) {
        return ProfileClass::FullContact;
    }
    return std::nullopt;
}

AdmissibleSet admissible_frequencies(double s, int m_max)
{
    if (!(s > 0.0 && s < 1.0)) {
        throw InvalidArgument("s must lie in (0,1)");
    }
    if (m_max < 1) {
        throw InvalidArgument("m_max must be at least 1");
    }
    AdmissibleSet set;
    set.s = s;
    set.m_max = m_max;
    for (int m = 1; m <= m_max; ++m) {
        set.values.push_back({2.0 * m, ProfileClass::Even, m});
        set.values.push_back({2.0 * m - 1.0 + s, ProfileClass::Regular, m});
        set.values.push_back({2.0 * m + 2.0 * s, ProfileClass::FullContact, m});
    }
    std::sort(set.values.begin(), set.values.end(),
              [](const AdmissibleEntry& a, const AdmissibleEntry& b) { return a.lambda < b.lambda; });
    return set;
}

std::vector<AdmissibleEntry> admissible_in_range(double s, double lo, double hi)
{
    const int m_max = std::max(1, static_cast<int>(std::ceil((hi + 1.0) / 2.0)) + 1);
    std::vector<AdmissibleEntry> out;
    for (const auto& e : admissible_frequencies(s, m_max).values) {
        if (e.lambda >= lo && e.lambda <= hi) {
            out.push_back(e);
        }
    }
    return out;
}

double AngularProfile::phi(double theta) const
{
    theta = std::clamp(theta, 0.0, kPi);
    if (mirror_) {
        theta = kPi - theta;
    }
    // sin(k pi) and cos((k - 1/2) pi) are not zero in floating point
    switch (closed_) {
    case ClosedKind::FullContact:
        return theta == kPi ? 0.0 : -scale_ * std::sin((2 * m_ + 1) * theta);
    case ClosedKind::Regular:
        return theta == kPi ? 0.0 : scale_ * std::cos((2 * m_ - 0.5) * theta);
    case ClosedKind::Even:
        return scale_ * std::cos(2 * m_ * theta);
    case ClosedKind::None:
        break;
    }
    if (theta <= kPi / 2) {
        return scale_ * table_->left.amp * table_->eval(table_->left, theta).first;
    }
    return scale_ * table_->right.amp * table_->eval(table_->right, kPi - theta).first;
}

double AngularProfile::weighted_dphi(double theta) const
{
    theta = std::clamp(theta, 0.0, kPi);
    double sign = 1.0;
    if (mirror_) {
        theta = kPi - theta;
        sign = -1.0;
    }
    switch (closed_) {
    case ClosedKind::FullContact:
        return -sign * scale_ * (2 * m_ + 1) * std::cos((2 * m_ + 1) * theta);
    case ClosedKind::Regular:
        return -sign * scale_ * (2 * m_ - 0.5) * std::sin((2 * m_ - 0.5) * theta);
    case ClosedKind::Even:
        return -sign * scale_ * 2 * m_ * std::sin(2 * m_ * theta);
    case ClosedKind::None:
        break;
    }
    if (theta <= kPi / 2) {
        return sign * scale_ * table_->left.amp * table_->eval(table_->left, theta).second;
    }
    return -sign * scale_ * table_->right.amp * table_->eval(table_->right, kPi - theta).second;
}

std::vector<double> AngularProfile::samples(int count) const
{
    if (count < 2) {
        throw InvalidArgument("need at least two samples");
    }
    std::vector<double> out(count);
    for (int k = 0; k < count; ++k) {
        out[k] = phi(k * kPi / (count - 1));
    }
    return out;
}

double AngularProfile::field(double a, double t) const
{
    const double r = std::hypot(a, t);
    if (r == 0.0) {
        return 0.0;
    }
    return std::pow(r, lambda_) * phi(std::atan2(std::abs(t), a));
}

PointFunction AngularProfile::lifted(double angle, std::array<double, 3> center) const
{
    const double c = std::cos(angle);
    const double sn = std::sin(angle);
    return [self = *this, c, sn, center](std::span<const double> x) {
        const std::size_t d = x.size();
        double a = x[0] - center[0];
        if (d == 3) {
            a = c * a + sn * (x[1] - center[1]);
        }
        return self.field(a, x[d - 1]);
    };
}

ScalarField AngularProfile::sample(const GridSpec& spec, double angle, std::array<double, 3> center) const
{
    return ScalarField::sample(spec, lifted(angle, center));
}

AngularProfile AngularProfile::mirrored() const
{
    AngularProfile p = *this;
    p.mirror_ = !p.mirror_;
    if (pattern_ == BoundaryPattern::ContactAtPi) {
        p.pattern_ = BoundaryPattern::ContactAtZero;
    } else if (pattern_ == BoundaryPattern::ContactAtZero) {
        p.pattern_ = BoundaryPattern::ContactAtPi;
    }
    return p;
}

AngularProfile AngularProfile::scaled(double c) const
{
    AngularProfile p = *this;
    p.scale_ *= c;
    return p;
}

int AngularProfile::interior_zeros() const
{
    constexpr int count = 4096;
    int zeros = 0;
    double prev = 0.0;
    for (int k = 1; k < count; ++k) {
        const double v = phi(k * kPi / count);
        if (v != 0.0) {
            if (prev != 0.0 && (v > 0.0) != (prev > 0.0)) {
                ++zeros;
            }
            prev = v;
        }
    }
    return zeros;
}

bool AngularProfile::sign_admissible() const
{
    const double near0 = phi(1e-7);
    const double nearpi = phi(kPi - 1e-7);
    switch (pattern_) {
    case BoundaryPattern::FullContact:
        return near0 < 0.0 && nearpi < 0.0;
    case BoundaryPattern::ContactAtPi:
        return near0 > 0.0 && nearpi < 0.0;
    case BoundaryPattern::ContactAtZero:
        return near0 < 0.0 && nearpi > 0.0;
    case BoundaryPattern::NoContact:
        return near0 > 0.0 && nearpi > 0.0;
    }
    return false;
}

ShootResult sphere_ode_shoot(double s, double lambda, BoundaryPattern pattern)
{
    return detail::ProfileBuilder::shoot(s, lambda, pattern);
}

std::vector<AngularRoot> find_roots(double s, double lo, double hi, BoundaryPattern pattern)
{
    std::vector<AngularRoot> roots;
    if (!(hi > lo)) {
        return roots;
    }
    if (!(s > 0.0 && s < 1.0)) {
        throw InvalidArgument("s must lie in (0,1)");
    }
    lo = std::max(lo, 1e-6);
    const auto grid = weight_grid(s);
    // Scan points sit half a step off lo so that roots at round values are
    // interior to a bracket.
    std::vector<double> lambdas = {lo};
    for (double x = lo + 0.005; x < hi; x += 0.01) {
        lambdas.push_back(x);
    }
    lambdas.push_back(hi);
    std::vector<double> values(lambdas.size());
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        values[i] = cheap_mismatch(*grid, s, lambdas[i], pattern);
    }
    auto f = [&](double x) { return cheap_mismatch(*grid, s, x, pattern); };
    for (std::size_t i = 0; i + 1 < lambdas.size(); ++i) {
        double root = 0.0;
        if (values[i] == 0.0) {
            root = lambdas[i];
        } else if (values[i] * values[i + 1] < 0.0) {
            boost::uintmax_t iters = 100;
            const auto [a, b] = boost::math::tools::toms748_solve(
                f, lambdas[i], lambdas[i + 1], values[i], values[i + 1],
                boost::math::tools::eps_tolerance<double>(48), iters);
            root = 0.5 * (a + b);
        } else {
            continue;
        }
        if (root - lo < 1e-9 || hi - root < 1e-9) {
            continue;
        }
        ShootResult shot = sphere_ode_shoot(s, root, pattern);
        roots.push_back({root, shot.mismatch, shot.profile, shot.profile.sign_admissible()});
    }
    return roots;
}

std::vector<AngularRoot> find_admissible(double s, double lo, double hi, BoundaryPattern pattern)
{
    std::vector<AngularRoot> out;
    for (auto& r : find_roots(s, lo, hi, pattern)) {
        if (r.sign_admissible) {
            out.push_back(std::move(r));
        }
    }
    return out;
}

AngularProfile profile_closed_form_s_half(int m, ProfileClass cls)
{
    if (m < 1) {
        throw InvalidArgument("m must be at least 1");
    }
    AngularProfile p = detail::ProfileBuilder::closed(cls, m);
    if (cls != ProfileClass::FullContact) {
        const ShootResult shot = sphere_ode_shoot(0.5, p.lambda(), p.pattern());
        const auto a = p.samples(1025);
        const auto b = shot.profile.samples(1025);
        double err = std::abs(shot.mismatch);
        for (std::size_t k = 0; k < a.size(); ++k) {
            err = std::max(err, std::abs(a[k] - b[k]));
        }
        if (err > 1e-6) {
            throw NumericalError("closed-form profile not confirmed by the shooting oracle");
        }
    }
    return p;
}

AngularProfile profile_for(double s, ProfileClass cls, int m)
{
    if (m < 1) {
        throw InvalidArgument("m must be at least 1");
    }
    if (s == 0.5) {
        return profile_closed_form_s_half(m, cls);
    }
    double guess = 0.0;
    BoundaryPattern pattern = BoundaryPattern::NoContact;
    switch (cls) {
    case ProfileClass::Even:
        guess = 2.0 * m;
        break;
    case ProfileClass::Regular:
        guess = 2.0 * m - 1.0 + s;
        pattern = BoundaryPattern::ContactAtPi;
        break;
    case ProfileClass::FullContact:
        guess = 2.0 * m + 2.0 * s;
        pattern = BoundaryPattern::FullContact;
        break;
    }
    for (const auto& r : find_admissible(s, std::max(0.05, guess - 0.3), guess + 0.3, pattern)) {
        if (r.profile.m() == m) {
            AngularProfile p = r.profile;
            detail::ProfileBuilder::set_m(p, m);
            return p;
        }
    }
    throw NumericalError("no sign-admissible profile near lambda = " + std::to_string(guess));
}

NormalDerivativeEstimate weighted_normal_derivative(const PointFunction& u, std::span<const double> xprime,
                                                    double s, double h)
{
    if (xprime.empty() || xprime.size() > 2) {
        throw InvalidArgument("x' must have 1 or 2 components");
    }
    if (!(h > 0.0)) {
        throw InvalidArgument("ladder step must be positive");
    }
    const double p = 1.0 - 2.0 * s;
    const std::size_t d = xprime.size() + 1;
    std::array<double, 3> x{};
    std::copy(xprime.begin(), xprime.end(), x.begin());
    auto at = [&](double t) {
        x[d - 1] = t;
        return u(std::span<const double>(x.data(), d));
    };
    NormalDerivativeEstimate est;
    std::array<double, 3> ts{};
    for (int k = 0; k < 3; ++k) {
        const double t = h / (1 << k);
        const double dl = t / 64.0;
        // sixth-order central difference
        const double du = (-at(t - 3 * dl) + 9.0 * at(t - 2 * dl) - 45.0 * at(t - dl) + 45.0 * at(t + dl) -
                           9.0 * at(t + 2 * dl) + at(t + 3 * dl)) /
                          (60.0 * dl);
        ts[k] = t;
        est.ladder[k] = std::pow(t, p) * du;
    }
    // g(t) = g0 + a t^q + b t^2 with q = 2 - 2s; solve the 3x3 system.
    const double q = 2.0 - 2.0 * s;
    double A[3][3];
    for (int k = 0; k < 3; ++k) {
        A[k][0] = 1.0;
        A[k][1] = std::pow(ts[k], q);
        A[k][2] = ts[k] * ts[k];
    }
    auto det3 = [](const double M[3][3]) {
        return M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1]) -
               M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0]) +
               M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0]);
    };
    const double det = det3(A);
    double B[3][3];
    std::copy(&A[0][0], &A[0][0] + 9, &B[0][0]);
    for (int k = 0; k < 3; ++k) {
        B[k][0] = est.ladder[k];
    }
    est.value = det != 0.0 ? det3(B) / det : est.ladder[2];
    const double spread = std::abs(est.value - est.ladder[2]);
    est.converged = std::isfinite(est.value) && spread <= 0.1 * (1.0 + std::abs(est.value));
    return est;
}

}  // namespace thinobs
