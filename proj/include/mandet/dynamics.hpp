#pragma once

#include <Eigen/Dense>

#include <compare>
#include <span>
#include <vector>

namespace mandet {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat63 = Eigen::Matrix<double, 6, 3>;

/// Seconds past the scenario reference instant.
struct Epoch {
    double t = 0.0;

    constexpr Epoch() = default;
    constexpr explicit Epoch(double seconds) : t(seconds) {}

    constexpr auto operator<=>(const Epoch&) const = default;
    constexpr Epoch operator+(double dt) const { return Epoch{t + dt}; }
    constexpr Epoch operator-(double dt) const { return Epoch{t - dt}; }
    constexpr double operator-(Epoch other) const { return t - other.t; }
};

/// Inertial position [km] and velocity [km/s].
struct CartesianState {
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();

    CartesianState() = default;
    CartesianState(const Vec3& r, const Vec3& v) : position(r), velocity(v) {}

    static CartesianState from_vector(const Vec6& x) {
        return {x.head<3>(), x.tail<3>()};
    }
    Vec6 vector() const {
        Vec6 x;
        x << position, velocity;
        return x;
    }
    bool finite() const { return position.allFinite() && velocity.allFinite(); }
};

enum class AccelerationKind { TwoBody, TwoBodyJ2 };

inline constexpr double kEarthMu = 398600.4418;      // km^3/s^2
inline constexpr double kEarthJ2 = 1.08263e-3;
inline constexpr double kEarthRadius = 6378.137;     // km

/// Natural-motion force model. New kinds extend the enum and `acceleration`.
struct AccelerationModel {
    AccelerationKind kind = AccelerationKind::TwoBody;
    double mu = kEarthMu;
    double j2 = 0.0;
    double body_radius = kEarthRadius;

    static AccelerationModel two_body(double mu = kEarthMu) {
        return {AccelerationKind::TwoBody, mu, 0.0, kEarthRadius};
    }
    static AccelerationModel two_body_j2(double mu = kEarthMu, double j2 = kEarthJ2,
                                         double body_radius = kEarthRadius) {
        return {AccelerationKind::TwoBodyJ2, mu, j2, body_radius};
    }

    /// Throws InputError when the parameters violate mu > 0 / radius > 0.
    void validate() const;
};

struct PropagatorSettings {
    double rel_tol = 1e-13;
    double abs_tol = 1e-13;
    double max_step = 3600.0;  // s

    void validate() const;
};

/// Accepted step boundaries of one adaptive propagation, including both ends.
struct StepSchedule {
    std::vector<double> times;
};

Vec3 acceleration(const AccelerationModel& model, const CartesianState& s, Epoch t);

/// Specific mechanical energy, including the J2 potential term when modelled.
double specific_energy(const AccelerationModel& model, const CartesianState& s);

/// Adaptive RKF7(8) propagation from t0 to tf (either direction). When
/// `schedule` is given, the accepted step boundaries are written into it.
CartesianState propagate(const AccelerationModel& model, const CartesianState& s0, Epoch t0,
                         Epoch tf, const PropagatorSettings& settings,
                         StepSchedule* schedule = nullptr);

/// Replays a recorded step schedule with fixed RKF8 steps. Perturbed copies
/// of one nominal propagation share the same discretisation this way, which
/// keeps finite differences free of step-selection noise.
CartesianState propagate_fixed(const AccelerationModel& model, const CartesianState& s0,
                               const StepSchedule& schedule);

/// States at every grid epoch by sequential `propagate` calls.
std::vector<CartesianState> propagate_grid(const AccelerationModel& model,
                                           const CartesianState& s0, std::span<const Epoch> grid,
                                           const PropagatorSettings& settings);

}  // namespace mandet
