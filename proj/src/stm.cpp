#include "mandet/stm.hpp"

#include "mandet/errors.hpp"
#include "parallel.hpp"

#include <cmath>
#include <string>

namespace mandet {

namespace {

constexpr double kStateStep = 1e-6;    // relative, floor 1
constexpr double kImpulseStep = 1e-6;  // km/s

}  // namespace

NodeGrid NodeGrid::uniform(Epoch t0, Epoch tf, int segments) {
    if (segments < 1) throw InputError("node grid needs at least one segment");
    if (!(tf > t0)) throw InputError("node grid needs t0 < tf");
    std::vector<Epoch> e(static_cast<std::size_t>(segments) + 1);
    const double dt = (tf - t0) / segments;
    for (int k = 0; k <= segments; ++k) e[k] = Epoch{t0.t + k * dt};
    e.back() = tf;
    return from_epochs(std::move(e));
}

NodeGrid NodeGrid::from_epochs(std::vector<Epoch> epochs) {
    NodeGrid g;
    g.impulse_allowed.assign(epochs.size(), true);
    if (!g.impulse_allowed.empty()) g.impulse_allowed.back() = false;
    g.epochs = std::move(epochs);
    g.validate();
    return g;
}

void NodeGrid::validate() const {
    if (epochs.size() < 2) throw InputError("node grid needs at least two nodes");
    if (impulse_allowed.size() != epochs.size()) throw InputError("impulse mask length differs from node count");
    for (std::size_t k = 0; k < epochs.size(); ++k) {
        if (!std::isfinite(epochs[k].t)) throw InputError("non-finite node epoch");
        if (k > 0 && !(epochs[k] > epochs[k - 1])) throw InputError("node epochs must increase strictly");
    }
    if (impulse_allowed.back()) throw InputError("the last node cannot carry an impulse");
}

Vec6 segment_map(const AccelerationModel& model, CoordSet coords, const Vec6& x, const Vec3& dv,
                 const StepSchedule& schedule) {
    CartesianState s = from_coords(coords, x, model.mu);
    s.velocity += dv;
    return to_coords(coords, propagate_fixed(model, s, schedule), model.mu);
}

ReferenceTrajectory build_reference(const AccelerationModel& model, const CartesianState& x0,
                                    const NodeGrid& grid, CoordSet coords,
                                    const std::vector<Vec3>& impulses,
                                    const PropagatorSettings& settings) {
    grid.validate();
    model.validate();
    settings.validate();
    const int n = grid.nodes();
    if (!impulses.empty() && static_cast<int>(impulses.size()) != n)
        throw InputError("impulse profile length differs from node count");
    for (const auto& dv : impulses)
        if (!dv.allFinite()) throw InputError("non-finite impulse");

    ReferenceTrajectory ref;
    ref.grid = grid;
    ref.coords = coords;
    ref.mu = model.mu;
    ref.impulses = impulses.empty() ? std::vector<Vec3>(n, Vec3::Zero()) : impulses;
    ref.cart_nodes.resize(n);
    ref.nodes.resize(n);
    ref.schedules.resize(n - 1);
    ref.cart_nodes[0] = x0;
    for (int i = 0; i < n - 1; ++i) {
        CartesianState s = ref.cart_nodes[i];
        s.velocity += ref.impulses[i];
        try {
            ref.cart_nodes[i + 1] =
                propagate(model, s, grid.epochs[i], grid.epochs[i + 1], settings, &ref.schedules[i]);
        } catch (const PropagationError& e) {
            throw PropagationError(e.what(), e.last_time(), e.last_state(), i);
        }
    }
    for (int i = 0; i < n; ++i) ref.nodes[i] = to_coords(coords, ref.cart_nodes[i], model.mu);
    return ref;
}

SegmentStms compute_stms(const AccelerationModel& model, const ReferenceTrajectory& ref,
                         const PropagatorSettings& settings, int threads) {
    settings.validate();
    const int segs = ref.grid.segments();
    if (static_cast<int>(ref.nodes.size()) != segs + 1 || static_cast<int>(ref.schedules.size()) != segs)
        throw InputError("reference trajectory is inconsistent with its grid");
    SegmentStms out;
    out.R.resize(segs);
    out.M.resize(segs);
    const CoordSet cs = ref.coords;

    detail::parallel_for(segs, threads, [&](int i) {
        const Vec6& x = ref.nodes[i];
        const Vec3& dv = ref.impulses[i];
        const StepSchedule& sched = ref.schedules[i];
        Mat6 R;
        for (int j = 0; j < 6; ++j) {
            const double h = std::max(std::abs(x[j]), 1.0) * kStateStep;
            Vec6 xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            R.col(j) = coord_difference(cs, segment_map(model, cs, xp, dv, sched),
                                        segment_map(model, cs, xm, dv, sched)) /
                       (2.0 * h);
        }
        Mat63 M;
        for (int j = 0; j < 3; ++j) {
            Vec3 dp = dv, dm = dv;
            dp[j] += kImpulseStep;
            dm[j] -= kImpulseStep;
            M.col(j) = coord_difference(cs, segment_map(model, cs, x, dp, sched),
                                        segment_map(model, cs, x, dm, sched)) /
                       (2.0 * kImpulseStep);
        }
        if (!R.allFinite() || !M.allFinite())
            throw DomainError("non-finite transition matrix on segment " + std::to_string(i), "stm");
        out.R[i] = R;
        out.M[i] = M;
    });
    return out;
}

}  // namespace mandet
