#pragma once

#include "mandet/problem.hpp"

#include <cstdint>
#include <vector>

namespace mandet {

/// Instantaneous velocity change, RTN components of the state it is applied to.
struct ImpulseEvent {
    Epoch epoch;
    Vec3 dv_rtn = Vec3::Zero();  // km/s
};

/// Propagates x0 from t0 to tf, applying each event inside [t0, tf).
/// Events are applied in epoch order.
CartesianState propagate_with_impulses(const AccelerationModel& model, const CartesianState& x0,
                                       Epoch t0, Epoch tf, std::vector<ImpulseEvent> events,
                                       const PropagatorSettings& settings);

/// Events firing at every node i in [first, first + count) of a uniform grid,
/// each with the same RTN components. Low-thrust arcs are built this way.
std::vector<ImpulseEvent> node_burns(const NodeGrid& grid, int first, int count, const Vec3& dv_rtn);

/// Diagonal covariance with the given position and velocity standard deviations.
Mat6 diagonal_covariance(double sigma_km, double sigma_kmps);

struct TruthPair {
    CartesianState truth0;
    CartesianState truthF;
    GaussianState boundary0;
    GaussianState boundaryF;
};

/// Truth arc with `events`; the boundary means are the true states plus one
/// draw from N(0, cov) each when `noisy`, otherwise the true states.
TruthPair make_truth_pair(const AccelerationModel& model, const CartesianState& x0, Epoch t0, Epoch tf,
                          const std::vector<ImpulseEvent>& events, const Mat6& cov0, const Mat6& covF,
                          bool noisy, std::uint64_t seed, const PropagatorSettings& settings = {});

}  // namespace mandet
