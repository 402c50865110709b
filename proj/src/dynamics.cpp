#include "mandet/dynamics.hpp"

#include "mandet/errors.hpp"

#include <boost/numeric/odeint/stepper/controlled_runge_kutta.hpp>
#include <boost/numeric/odeint/stepper/generation.hpp>
#include <boost/numeric/odeint/stepper/runge_kutta_fehlberg78.hpp>

#include <array>
#include <cmath>
#include <string>

namespace mandet {

namespace odeint = boost::numeric::odeint;

namespace {

using OdeState = std::array<double, 6>;
using ErrorStepper = odeint::runge_kutta_fehlberg78<OdeState>;

OdeState to_ode(const CartesianState& s) {
    return {s.position.x(), s.position.y(), s.position.z(),
            s.velocity.x(), s.velocity.y(), s.velocity.z()};
}

CartesianState from_ode(const OdeState& x) {
    return {Vec3{x[0], x[1], x[2]}, Vec3{x[3], x[4], x[5]}};
}

struct EquationsOfMotion {
    const AccelerationModel& model;

    void operator()(const OdeState& x, OdeState& dxdt, double t) const {
        const CartesianState s = from_ode(x);
        const Vec3 a = acceleration(model, s, Epoch{t});
        dxdt = {x[3], x[4], x[5], a.x(), a.y(), a.z()};
    }
};

void check_state(const CartesianState& s) {
    if (!s.finite()) throw InputError("non-finite Cartesian state");
    if (s.position.norm() <= 0.0) throw InputError("position vector has zero norm");
}

constexpr int kMaxRejectedSteps = 500;

}  // namespace

void AccelerationModel::validate() const {
    if (!(mu > 0.0) || !std::isfinite(mu)) throw InputError("gravitational parameter mu must be > 0");
    if (kind == AccelerationKind::TwoBodyJ2) {
        if (!(body_radius > 0.0) || !std::isfinite(body_radius))
            throw InputError("body radius must be > 0 for the J2 model");
        if (!std::isfinite(j2)) throw InputError("J2 coefficient must be finite");
    }
}

void PropagatorSettings::validate() const {
    auto in_range = [](double tol) { return tol > 0.0 && tol <= 1e-3; };
    if (!in_range(rel_tol)) throw InputError("rel_tol must lie in (0, 1e-3]");
    if (!in_range(abs_tol)) throw InputError("abs_tol must lie in (0, 1e-3]");
    if (!(max_step > 0.0)) throw InputError("max_step must be > 0");
}

Vec3 acceleration(const AccelerationModel& model, const CartesianState& s, Epoch /*t*/) {
    if (!s.finite()) throw InputError("non-finite state passed to acceleration");
    const Vec3& r = s.position;
    const double r2 = r.squaredNorm();
    if (r2 <= 0.0) throw InputError("acceleration evaluated at the origin");
    const double rn = std::sqrt(r2);
    Vec3 a = -model.mu / (r2 * rn) * r;

    switch (model.kind) {
        case AccelerationKind::TwoBody:
            break;
        case AccelerationKind::TwoBodyJ2: {
            const double re2 = model.body_radius * model.body_radius;
            const double factor = -1.5 * model.j2 * model.mu * re2 / (r2 * r2 * rn);
            const double zz = 5.0 * r.z() * r.z() / r2;
            a += factor * Vec3{r.x() * (1.0 - zz), r.y() * (1.0 - zz), r.z() * (3.0 - zz)};
            break;
        }
    }
    return a;
}

double specific_energy(const AccelerationModel& model, const CartesianState& s) {
    const double rn = s.position.norm();
    double potential = -model.mu / rn;
    if (model.kind == AccelerationKind::TwoBodyJ2) {
        const double re2 = model.body_radius * model.body_radius;
        const double sin2 = s.position.z() * s.position.z() / (rn * rn);
        potential += model.mu * model.j2 * re2 / (2.0 * rn * rn * rn) * (3.0 * sin2 - 1.0);
    }
    return 0.5 * s.velocity.squaredNorm() + potential;
}

CartesianState propagate(const AccelerationModel& model, const CartesianState& s0, Epoch t0,
                         Epoch tf, const PropagatorSettings& settings, StepSchedule* schedule) {
    check_state(s0);
    if (schedule) schedule->times.assign(1, t0.t);
    if (tf == t0) return s0;

    auto stepper = odeint::make_controlled(settings.abs_tol, settings.rel_tol, ErrorStepper{});
    const EquationsOfMotion eom{model};
    OdeState x = to_ode(s0);
    double t = t0.t;
    const double span = tf.t - t0.t;
    const double dir = span > 0.0 ? 1.0 : -1.0;
    double dt = dir * std::min(std::abs(span), std::min(settings.max_step, 60.0));
    const double min_step = 1e-12 * std::max(1.0, std::abs(span));
    int rejected = 0;

    while (dir * (tf.t - t) > 0.0) {
        if (std::abs(dt) > settings.max_step) dt = dir * settings.max_step;
        bool last = false;
        if (dir * (t + dt - tf.t) >= 0.0) {
            dt = tf.t - t;
            last = true;
        }
        const double t_before = t;
        const OdeState x_before = x;
        const auto result = stepper.try_step(eom, x, t, dt);
        if (result == odeint::success) {
            rejected = 0;
            if (last) t = tf.t;  // land exactly on the requested epoch
            if (schedule) schedule->times.push_back(t);
            continue;
        }
        x = x_before;
        t = t_before;
        if (++rejected > kMaxRejectedSteps || std::abs(dt) < min_step) {
            throw PropagationError("step size underflow at t = " + std::to_string(t), t, x);
        }
    }
    const CartesianState out = from_ode(x);
    if (!out.finite())
        throw PropagationError("propagation produced a non-finite state", t, x);
    return out;
}

CartesianState propagate_fixed(const AccelerationModel& model, const CartesianState& s0,
                               const StepSchedule& schedule) {
    check_state(s0);
    ErrorStepper stepper;
    const EquationsOfMotion eom{model};
    OdeState x = to_ode(s0);
    for (std::size_t k = 1; k < schedule.times.size(); ++k) {
        const double t = schedule.times[k - 1];
        stepper.do_step(eom, x, t, schedule.times[k] - t);
    }
    return from_ode(x);
}

std::vector<CartesianState> propagate_grid(const AccelerationModel& model,
                                           const CartesianState& s0, std::span<const Epoch> grid,
                                           const PropagatorSettings& settings) {
    std::vector<CartesianState> out;
    if (grid.empty()) return out;
    for (std::size_t k = 1; k < grid.size(); ++k) {
        const bool increasing = grid[1] > grid[0];
        if (increasing ? !(grid[k] > grid[k - 1]) : !(grid[k] < grid[k - 1]))
            throw InputError("propagation grid must be strictly monotone");
    }
    out.reserve(grid.size());
    out.push_back(s0);
    for (std::size_t k = 1; k < grid.size(); ++k) {
        out.push_back(propagate(model, out.back(), grid[k - 1], grid[k], settings));
    }
    return out;
}

}  // namespace mandet
