#pragma once

#include "mandet/dynamics.hpp"

#include <string_view>

namespace mandet {

/// Classical orbital elements. Lengths in km, angles in rad within [0, 2pi).
struct ClassicalElements {
    double a = 0.0;
    double e = 0.0;
    double i = 0.0;
    double raan = 0.0;
    double argp = 0.0;
    double true_anomaly = 0.0;

    Vec6 vector() const;
    static ClassicalElements from_vector(const Vec6& x);
};

/// Modified equinoctial elements (prograde form); L is the true longitude.
struct EquinoctialElements {
    double p = 0.0;  // semi-latus rectum, km
    double f = 0.0;
    double g = 0.0;
    double h = 0.0;
    double k = 0.0;
    double L = 0.0;

    Vec6 vector() const;
    static EquinoctialElements from_vector(const Vec6& x);
};

enum class CoordSet { CC, COE, MEE };

std::string_view to_string(CoordSet set);
/// Accepts "CC", "COE", "MEE" (case-insensitive). Throws InputError otherwise.
CoordSet parse_coord_set(std::string_view name);

ClassicalElements cart_to_coe(const CartesianState& s, double mu);
CartesianState coe_to_cart(const ClassicalElements& el, double mu);
EquinoctialElements coe_to_mee(const ClassicalElements& el);
ClassicalElements mee_to_coe(const EquinoctialElements& eq);
EquinoctialElements cart_to_mee(const CartesianState& s, double mu);
CartesianState mee_to_cart(const EquinoctialElements& eq, double mu);

/// Cartesian state expressed as a 6-vector of `set` (physical units).
Vec6 to_coords(CoordSet set, const CartesianState& s, double mu);
CartesianState from_coords(CoordSet set, const Vec6& x, double mu);
Vec6 convert(CoordSet from, CoordSet to, const Vec6& x, double mu);

/// a - b with angular components wrapped to (-pi, pi].
Vec6 coord_difference(CoordSet set, const Vec6& a, const Vec6& b);
/// Wraps the angular components of `x` into [0, 2pi).
Vec6 normalize_angles(CoordSet set, const Vec6& x);
/// True for components measured in radians.
std::array<bool, 6> angular_components(CoordSet set);

/// Per-component unit of `set` given a length and velocity unit; angles and
/// dimensionless elements map to 1.
Vec6 unit_scales(CoordSet set, double length_unit, double velocity_unit);

/// Central finite-difference Jacobian d(to)/d(from) at `x` (expressed in `from`).
Mat6 jacobian(CoordSet from, CoordSet to, const Vec6& x, double mu);

/// J * cov * J^T, symmetrised.
Mat6 transform_covariance(CoordSet from, CoordSet to, const Vec6& x, const Mat6& cov, double mu);

/// Rows are the radial, transverse and normal unit vectors.
Mat3 rtn_frame(const CartesianState& s);

double wrap_to_pi(double angle);
double wrap_to_two_pi(double angle);

}  // namespace mandet
