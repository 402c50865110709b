#include "mandet/synthetic.hpp"

#include "mandet/errors.hpp"

#include <algorithm>
#include <random>

namespace mandet {

CartesianState propagate_with_impulses(const AccelerationModel& model, const CartesianState& x0,
                                       Epoch t0, Epoch tf, std::vector<ImpulseEvent> events,
                                       const PropagatorSettings& settings) {
    if (!(tf > t0)) throw InputError("truth arc needs t0 < tf");
    std::stable_sort(events.begin(), events.end(),
                     [](const ImpulseEvent& a, const ImpulseEvent& b) { return a.epoch < b.epoch; });
    CartesianState s = x0;
    Epoch t = t0;
    for (const auto& ev : events) {
        if (ev.epoch < t0 || !(ev.epoch < tf)) throw InputError("impulse epoch outside [t0, tf)");
        if (ev.epoch > t) s = propagate(model, s, t, ev.epoch, settings);
        t = ev.epoch;
        s.velocity += rtn_frame(s).transpose() * ev.dv_rtn;
    }
    return propagate(model, s, t, tf, settings);
}

std::vector<ImpulseEvent> node_burns(const NodeGrid& grid, int first, int count, const Vec3& dv_rtn) {
    if (first < 0 || count < 0 || first + count > grid.segments())
        throw InputError("burn nodes outside the grid");
    std::vector<ImpulseEvent> out;
    for (int i = first; i < first + count; ++i) out.push_back({grid.epochs[i], dv_rtn});
    return out;
}

Mat6 diagonal_covariance(double sigma_km, double sigma_kmps) {
    Vec6 d;
    d << Vec3::Constant(sigma_km * sigma_km), Vec3::Constant(sigma_kmps * sigma_kmps);
    return d.asDiagonal();
}

TruthPair make_truth_pair(const AccelerationModel& model, const CartesianState& x0, Epoch t0, Epoch tf,
                          const std::vector<ImpulseEvent>& events, const Mat6& cov0, const Mat6& covF,
                          bool noisy, std::uint64_t seed, const PropagatorSettings& settings) {
    TruthPair p;
    p.truth0 = x0;
    p.truthF = propagate_with_impulses(model, x0, t0, tf, events, settings);
    p.boundary0 = {t0, p.truth0, cov0};
    p.boundaryF = {tf, p.truthF, covF};
    if (noisy) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> n01;
        for (GaussianState* g : {&p.boundary0, &p.boundaryF}) {
            Vec6 xi;
            for (int k = 0; k < 6; ++k) xi[k] = n01(rng);
            g->mean = CartesianState::from_vector(g->mean.vector() + psd_factor(g->cov) * xi);
        }
    }
    p.boundary0.validate("boundary0");
    p.boundaryF.validate("boundaryF");
    return p;
}

}  // namespace mandet
