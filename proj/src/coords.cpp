#include "mandet/coords.hpp"

#include "mandet/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

namespace mandet {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMaxEccentricity = 1.0 - 1e-9;
constexpr double kSingularInclination = 1e-10;
constexpr double kCircular = 1e-11;

void require_elliptic(double e) {
    if (!(e >= 0.0) || e >= kMaxEccentricity)
        throw DomainError("eccentricity " + std::to_string(e) + " outside the elliptic domain",
                          "e");
}

// Rotation from the perifocal frame to the inertial frame.
Mat3 perifocal_to_inertial(double raan, double i, double argp) {
    return (Eigen::AngleAxisd(raan, Vec3::UnitZ()) * Eigen::AngleAxisd(i, Vec3::UnitX()) *
            Eigen::AngleAxisd(argp, Vec3::UnitZ()))
        .toRotationMatrix();
}

}  // namespace

double wrap_to_two_pi(double angle) {
    double out = std::fmod(angle, kTwoPi);
    if (out < 0.0) out += kTwoPi;
    if (out >= kTwoPi) out -= kTwoPi;
    return out;
}

double wrap_to_pi(double angle) {
    double out = wrap_to_two_pi(angle);
    if (out > std::numbers::pi) out -= kTwoPi;
    return out;
}

Vec6 ClassicalElements::vector() const {
    Vec6 x;
    x << a, e, i, raan, argp, true_anomaly;
    return x;
}

ClassicalElements ClassicalElements::from_vector(const Vec6& x) {
    return {x[0], x[1], x[2], x[3], x[4], x[5]};
}

Vec6 EquinoctialElements::vector() const {
    Vec6 x;
    x << p, f, g, h, k, L;
    return x;
}

EquinoctialElements EquinoctialElements::from_vector(const Vec6& x) {
    return {x[0], x[1], x[2], x[3], x[4], x[5]};
}

std::string_view to_string(CoordSet set) {
    switch (set) {
        case CoordSet::CC: return "CC";
        case CoordSet::COE: return "COE";
        case CoordSet::MEE: return "MEE";
    }
    return "?";
}

CoordSet parse_coord_set(std::string_view name) {
    std::string upper(name);
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (upper == "CC") return CoordSet::CC;
    if (upper == "COE") return CoordSet::COE;
    if (upper == "MEE") return CoordSet::MEE;
    throw InputError("unknown coordinate set '" + std::string(name) + "' (expected CC, COE or MEE)");
}

ClassicalElements cart_to_coe(const CartesianState& s, double mu) {
    const Vec3& r = s.position;
    const Vec3& v = s.velocity;
    const double rn = r.norm();
    const Vec3 hvec = r.cross(v);
    const double hn = hvec.norm();
    if (rn <= 0.0 || hn <= 1e-12 * rn * v.norm())
        throw DomainError("rectilinear or degenerate state", "h");

    const Vec3 evec = ((v.squaredNorm() - mu / rn) * r - r.dot(v) * v) / mu;
    ClassicalElements el;
    el.e = evec.norm();
    require_elliptic(el.e);
    el.a = 1.0 / (2.0 / rn - v.squaredNorm() / mu);

    const Vec3 hhat = hvec / hn;
    el.i = std::atan2(std::hypot(hhat.x(), hhat.y()), hhat.z());
    if (el.i < kSingularInclination || std::numbers::pi - el.i < kSingularInclination)
        throw DomainError("inclination is singular for classical elements", "i");

    const Vec3 node = Vec3::UnitZ().cross(hvec).normalized();
    el.raan = wrap_to_two_pi(std::atan2(node.y(), node.x()));
    const Vec3 node_perp = hhat.cross(node);
    if (el.e < kCircular) {
        el.argp = 0.0;
        el.true_anomaly = wrap_to_two_pi(std::atan2(r.dot(node_perp), r.dot(node)));
    } else {
        el.argp = wrap_to_two_pi(std::atan2(evec.dot(node_perp), evec.dot(node)));
        const Vec3 ehat = evec / el.e;
        el.true_anomaly = wrap_to_two_pi(std::atan2(hhat.dot(ehat.cross(r)), ehat.dot(r)));
    }
    return el;
}

CartesianState coe_to_cart(const ClassicalElements& el, double mu) {
    require_elliptic(el.e);
    if (!(el.a > 0.0)) throw DomainError("semi-major axis must be positive", "a");
    const double p = el.a * (1.0 - el.e * el.e);
    const double c = std::cos(el.true_anomaly);
    const double s = std::sin(el.true_anomaly);
    const double rn = p / (1.0 + el.e * c);
    const double vf = std::sqrt(mu / p);
    const Mat3 rot = perifocal_to_inertial(el.raan, el.i, el.argp);
    return {rot * Vec3{rn * c, rn * s, 0.0}, rot * Vec3{-vf * s, vf * (el.e + c), 0.0}};
}

EquinoctialElements coe_to_mee(const ClassicalElements& el) {
    require_elliptic(el.e);
    if (std::numbers::pi - el.i < kSingularInclination)
        throw DomainError("retrograde equatorial orbit is singular for equinoctial elements", "i");
    const double lon_peri = el.argp + el.raan;
    const double ti = std::tan(0.5 * el.i);
    return {el.a * (1.0 - el.e * el.e),
            el.e * std::cos(lon_peri),
            el.e * std::sin(lon_peri),
            ti * std::cos(el.raan),
            ti * std::sin(el.raan),
            wrap_to_two_pi(el.raan + el.argp + el.true_anomaly)};
}

ClassicalElements mee_to_coe(const EquinoctialElements& eq) {
    const double e = std::hypot(eq.f, eq.g);
    require_elliptic(e);
    if (!(eq.p > 0.0)) throw DomainError("semi-latus rectum must be positive", "p");
    ClassicalElements el;
    el.e = e;
    el.a = eq.p / (1.0 - e * e);
    el.i = 2.0 * std::atan(std::hypot(eq.h, eq.k));
    el.raan = wrap_to_two_pi(std::atan2(eq.k, eq.h));
    const double lon_peri = std::atan2(eq.g, eq.f);
    el.argp = wrap_to_two_pi(lon_peri - el.raan);
    el.true_anomaly = wrap_to_two_pi(eq.L - lon_peri);
    return el;
}

EquinoctialElements cart_to_mee(const CartesianState& s, double mu) {
    const Vec3& r = s.position;
    const Vec3& v = s.velocity;
    const double rn = r.norm();
    const Vec3 hvec = r.cross(v);
    const double hn = hvec.norm();
    if (rn <= 0.0 || hn <= 1e-12 * rn * v.norm())
        throw DomainError("rectilinear or degenerate state", "h");
    const Vec3 hhat = hvec / hn;
    if (1.0 + hhat.z() < 1e-14)
        throw DomainError("retrograde equatorial orbit is singular for equinoctial elements", "i");

    EquinoctialElements eq;
    eq.p = hn * hn / mu;
    eq.h = -hhat.y() / (1.0 + hhat.z());
    eq.k = hhat.x() / (1.0 + hhat.z());

    const double s2 = 1.0 + eq.h * eq.h + eq.k * eq.k;
    const Vec3 fhat = Vec3{1.0 - eq.k * eq.k + eq.h * eq.h, 2.0 * eq.h * eq.k, -2.0 * eq.k} / s2;
    const Vec3 ghat = Vec3{2.0 * eq.h * eq.k, 1.0 + eq.k * eq.k - eq.h * eq.h, 2.0 * eq.h} / s2;
    const Vec3 evec = ((v.squaredNorm() - mu / rn) * r - r.dot(v) * v) / mu;
    eq.f = evec.dot(fhat);
    eq.g = evec.dot(ghat);
    require_elliptic(std::hypot(eq.f, eq.g));
    eq.L = wrap_to_two_pi(std::atan2(r.dot(ghat), r.dot(fhat)));
    return eq;
}

CartesianState mee_to_cart(const EquinoctialElements& eq, double mu) {
    if (!(eq.p > 0.0)) throw DomainError("semi-latus rectum must be positive", "p");
    require_elliptic(std::hypot(eq.f, eq.g));
    const double cl = std::cos(eq.L);
    const double sl = std::sin(eq.L);
    const double w = 1.0 + eq.f * cl + eq.g * sl;
    if (!(w > 0.0)) throw DomainError("1 + f cos L + g sin L must be positive", "L");
    const double rn = eq.p / w;
    const double alpha2 = eq.h * eq.h - eq.k * eq.k;
    const double s2 = 1.0 + eq.h * eq.h + eq.k * eq.k;
    const double hk = eq.h * eq.k;
    const double sq = std::sqrt(mu / eq.p);

    const Vec3 r = (rn / s2) * Vec3{cl + alpha2 * cl + 2.0 * hk * sl,
                                    sl - alpha2 * sl + 2.0 * hk * cl,
                                    2.0 * (eq.h * sl - eq.k * cl)};
    const Vec3 v = (-sq / s2) *
                   Vec3{sl + alpha2 * sl - 2.0 * hk * cl + eq.g - 2.0 * eq.f * hk + alpha2 * eq.g,
                        -cl + alpha2 * cl + 2.0 * hk * sl - eq.f + 2.0 * eq.g * hk + alpha2 * eq.f,
                        -2.0 * (eq.h * cl + eq.k * sl + eq.f * eq.h + eq.g * eq.k)};
    return {r, v};
}

Vec6 to_coords(CoordSet set, const CartesianState& s, double mu) {
    switch (set) {
        case CoordSet::CC: return s.vector();
        case CoordSet::COE: return cart_to_coe(s, mu).vector();
        case CoordSet::MEE: return cart_to_mee(s, mu).vector();
    }
    return s.vector();
}

CartesianState from_coords(CoordSet set, const Vec6& x, double mu) {
    switch (set) {
        case CoordSet::CC: return CartesianState::from_vector(x);
        case CoordSet::COE: return coe_to_cart(ClassicalElements::from_vector(x), mu);
        case CoordSet::MEE: return mee_to_cart(EquinoctialElements::from_vector(x), mu);
    }
    return CartesianState::from_vector(x);
}

Vec6 convert(CoordSet from, CoordSet to, const Vec6& x, double mu) {
    if (from == to) return x;
    if (from == CoordSet::COE && to == CoordSet::MEE)
        return coe_to_mee(ClassicalElements::from_vector(x)).vector();
    if (from == CoordSet::MEE && to == CoordSet::COE)
        return mee_to_coe(EquinoctialElements::from_vector(x)).vector();
    return to_coords(to, from_coords(from, x, mu), mu);
}

std::array<bool, 6> angular_components(CoordSet set) {
    switch (set) {
        case CoordSet::CC: return {false, false, false, false, false, false};
        case CoordSet::COE: return {false, false, true, true, true, true};
        case CoordSet::MEE: return {false, false, false, false, false, true};
    }
    return {};
}

Vec6 coord_difference(CoordSet set, const Vec6& a, const Vec6& b) {
    Vec6 d = a - b;
    const auto ang = angular_components(set);
    for (int j = 0; j < 6; ++j)
        if (ang[j]) d[j] = wrap_to_pi(d[j]);
    return d;
}

Vec6 normalize_angles(CoordSet set, const Vec6& x) {
    Vec6 out = x;
    const auto ang = angular_components(set);
    for (int j = 0; j < 6; ++j)
        if (ang[j]) out[j] = wrap_to_two_pi(out[j]);
    return out;
}

Vec6 unit_scales(CoordSet set, double length_unit, double velocity_unit) {
    Vec6 s = Vec6::Ones();
    switch (set) {
        case CoordSet::CC:
            s << length_unit, length_unit, length_unit, velocity_unit, velocity_unit, velocity_unit;
            break;
        case CoordSet::COE:
        case CoordSet::MEE:
            s[0] = length_unit;
            break;
    }
    return s;
}

Mat6 jacobian(CoordSet from, CoordSet to, const Vec6& x, double mu) {
    if (from == to) return Mat6::Identity();
    Mat6 jac;
    for (int j = 0; j < 6; ++j) {
        const double step = std::max(std::abs(x[j]), 1.0) * 1e-7;
        Vec6 xp = x;
        Vec6 xm = x;
        xp[j] += step;
        xm[j] -= step;
        jac.col(j) = coord_difference(to, convert(from, to, xp, mu), convert(from, to, xm, mu)) /
                     (2.0 * step);
    }
    return jac;
}

Mat6 transform_covariance(CoordSet from, CoordSet to, const Vec6& x, const Mat6& cov, double mu) {
    const Mat6 jac = jacobian(from, to, x, mu);
    const Mat6 out = jac * cov * jac.transpose();
    return 0.5 * (out + out.transpose());
}

Mat3 rtn_frame(const CartesianState& s) {
    const Vec3 hvec = s.position.cross(s.velocity);
    const double rn = s.position.norm();
    if (rn <= 0.0 || hvec.norm() <= 1e-12 * rn * s.velocity.norm())
        throw DomainError("RTN frame undefined for a rectilinear state", "h");
    const Vec3 radial = s.position / rn;
    const Vec3 normal = hvec.normalized();
    const Vec3 transverse = normal.cross(radial);
    Mat3 frame;
    frame.row(0) = radial.transpose();
    frame.row(1) = transverse.transpose();
    frame.row(2) = normal.transpose();
    return frame;
}

}  // namespace mandet
