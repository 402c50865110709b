#pragma once

#include "mandet/coords.hpp"
#include "mandet/dynamics.hpp"

#include <optional>
#include <vector>

namespace mandet {

/// N+1 strictly increasing epochs. `impulse_allowed[i]` marks nodes whose
/// outgoing segment may carry an impulse; the last node never does.
struct NodeGrid {
    std::vector<Epoch> epochs;
    std::vector<bool> impulse_allowed;

    static NodeGrid uniform(Epoch t0, Epoch tf, int segments);
    /// Nodes at the given epochs; impulses everywhere except the last node.
    static NodeGrid from_epochs(std::vector<Epoch> epochs);

    int segments() const { return static_cast<int>(epochs.size()) - 1; }
    int nodes() const { return static_cast<int>(epochs.size()); }
    /// Throws InputError unless the invariants hold.
    void validate() const;
};

struct ReferenceTrajectory {
    NodeGrid grid;
    CoordSet coords = CoordSet::CC;
    double mu = kEarthMu;
    std::vector<Vec6> nodes;               // in `coords`
    std::vector<CartesianState> cart_nodes;
    std::vector<Vec3> impulses;            // km/s, applied at each node
    std::vector<StepSchedule> schedules;   // one per segment
};

struct SegmentStms {
    std::vector<Mat6> R;   // d x_{i+1} / d x_i
    std::vector<Mat63> M;  // d x_{i+1} / d dv_i
};

/// Nonlinear propagation node by node, adding `impulses[i]` to the velocity
/// at node i before segment i. Empty `impulses` means ballistic.
ReferenceTrajectory build_reference(const AccelerationModel& model, const CartesianState& x0,
                                    const NodeGrid& grid, CoordSet coords,
                                    const std::vector<Vec3>& impulses,
                                    const PropagatorSettings& settings);

/// Central-difference transition matrices around `ref`. Segments are
/// distributed over `threads` workers (0 = hardware concurrency).
SegmentStms compute_stms(const AccelerationModel& model, const ReferenceTrajectory& ref,
                         const PropagatorSettings& settings, int threads = 1);

/// Single segment map used by compute_stms: propagate node state `x`
/// (in `coords`) with impulse `dv` along `schedule`.
Vec6 segment_map(const AccelerationModel& model, CoordSet coords, const Vec6& x, const Vec3& dv,
                 const StepSchedule& schedule);

}  // namespace mandet
