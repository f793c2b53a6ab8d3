#pragma once

// Homogeneous two-dimensional solutions u = r^lambda phi(theta).
//
// theta is measured from the +x1 axis in the upper half plane, so the thin
// line is theta = 0 (x1 > 0) and theta = pi (x1 < 0). The angular function
// solves
//   (sin^p(theta) phi')' + lambda (lambda + p) sin^p(theta) phi = 0,  p = 1 - 2s,
// with, at each endpoint, either a non-contact condition (phi regular, zero
// weighted flux) or a contact condition (phi ~ c dist^(2s), c <= 0).

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "thinobs/field.hpp"

namespace thinobs {

enum class ProfileClass { Even, Regular, FullContact };

/// Endpoint pattern of the angular problem.
enum class BoundaryPattern {
    FullContact,    ///< contact at both ends
    ContactAtPi,    ///< no contact at theta = 0, contact at theta = pi
    ContactAtZero,  ///< the mirror image of ContactAtPi
    NoContact,
};

std::string class_name(ProfileClass c);
std::string pattern_name(BoundaryPattern b);
std::optional<BoundaryPattern> parse_pattern(std::string_view text);
std::optional<ProfileClass> parse_class(std::string_view text);

struct AdmissibleEntry {
    double lambda = 0.0;
    ProfileClass cls = ProfileClass::Even;
    int m = 1;
};

struct AdmissibleSet {
    double s = 0.5;
    int m_max = 1;
    std::vector<AdmissibleEntry> values;  ///< strictly increasing in lambda
};

/// The set {2m, 2m-1+s, 2m+2s : 1 <= m <= m_max}, sorted.
AdmissibleSet admissible_frequencies(double s, int m_max);

/// Entries with lambda in [lo, hi], taking m as large as needed.
std::vector<AdmissibleEntry> admissible_in_range(double s, double lo, double hi);

namespace detail {
struct ShotTable;
struct ProfileBuilder;
}

class AngularProfile {
public:
    AngularProfile() = default;

    [[nodiscard]] double lambda() const { return lambda_; }
    [[nodiscard]] double s() const { return s_; }
    [[nodiscard]] ProfileClass profile_class() const { return cls_; }
    [[nodiscard]] int m() const { return m_; }
    [[nodiscard]] BoundaryPattern pattern() const { return pattern_; }
    [[nodiscard]] bool closed_form() const { return !table_; }

    /// phi on [0, pi]; arguments are clamped to the interval.
    [[nodiscard]] double phi(double theta) const;
    /// sin^p(theta) phi'(theta); finite up to both endpoints.
    [[nodiscard]] double weighted_dphi(double theta) const;
    /// Equispaced samples theta_k = k pi / (count - 1).
    [[nodiscard]] std::vector<double> samples(int count) const;

    /// r^lambda phi(theta) at tangential coordinate a and normal coordinate t
    /// (reflected evenly in t).
    [[nodiscard]] double field(double a, double t) const;
    /// The profile composed with x -> (x' . e, x_d) where e = (cos angle, sin angle)
    /// in 3D, relative to `center` on the thin plane.
    [[nodiscard]] PointFunction lifted(double angle = 0.0, std::array<double, 3> center = {}) const;
    [[nodiscard]] ScalarField sample(const GridSpec& spec, double angle = 0.0,
                                     std::array<double, 3> center = {}) const;

    /// theta -> pi - theta, i.e. x1 -> -x1.
    [[nodiscard]] AngularProfile mirrored() const;
    [[nodiscard]] AngularProfile scaled(double c) const;

    /// Number of sign changes of phi in (0, pi).
    [[nodiscard]] int interior_zeros() const;

    /// True if the endpoint sign conditions of its pattern hold.
    [[nodiscard]] bool sign_admissible() const;

private:
    friend struct detail::ProfileBuilder;

    enum class ClosedKind { None, FullContact, Regular, Even };

    double lambda_ = 0.0;
    double s_ = 0.5;
    ProfileClass cls_ = ProfileClass::Even;
    int m_ = 0;
    BoundaryPattern pattern_ = BoundaryPattern::NoContact;
    double scale_ = 1.0;
    bool mirror_ = false;
    ClosedKind closed_ = ClosedKind::None;
    std::shared_ptr<const detail::ShotTable> table_;
};

struct ShootResult {
    /// Normalized Wronskian of the two one-sided solutions at pi/2; zero at
    /// eigenvalues and continuous in lambda.
    double mismatch = 0.0;
    AngularProfile profile;  ///< glued at pi/2, max|phi| = 1
};

/// Integrates the angular equation from both endpoints with a Frobenius
/// start-off and matches at pi/2.
ShootResult sphere_ode_shoot(double s, double lambda, BoundaryPattern pattern);

struct AngularRoot {
    double lambda = 0.0;
    double mismatch = 0.0;
    AngularProfile profile;
    bool sign_admissible = false;
};

/// Every eigenvalue of the linear angular problem with the given pattern in
/// the open interval (lo, hi): scan step 0.01, then bracketed refinement.
std::vector<AngularRoot> find_roots(double s, double lo, double hi, BoundaryPattern pattern);

/// Roots whose profile satisfies the obstacle sign conditions.
std::vector<AngularRoot> find_admissible(double s, double lo, double hi, BoundaryPattern pattern);

/// Closed forms at s = 1/2: FullContact -sin((2m+1) theta), Regular
/// cos((2m - 1/2) theta) with contact at theta = pi, Even cos(2m theta). The
/// Regular and Even forms are confirmed against the shooting solution and a
/// NumericalError is thrown if they disagree.
AngularProfile profile_closed_form_s_half(int m, ProfileClass cls);

/// Shooting profile of the given class and index for any s. Regular uses
/// contact at theta = pi; call mirrored() for the other one.
AngularProfile profile_for(double s, ProfileClass cls, int m);

struct NormalDerivativeEstimate {
    double value = 0.0;
    std::array<double, 3> ladder{};  ///< t^(1-2s) d_t u at t = h, h/2, h/4
    bool converged = true;
};

/// lim_{t->0+} t^(1-2s) d_t u(x', t) by Richardson extrapolation over
/// t = h, h/2, h/4, eliminating the t^(2-2s) and t^2 terms.
NormalDerivativeEstimate weighted_normal_derivative(const PointFunction& u, std::span<const double> xprime,
                                                    double s, double h);

}  // namespace thinobs
