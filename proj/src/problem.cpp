#include "mandet/problem.hpp"

#include "mandet/errors.hpp"
#include "mandet/uncertainty.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

namespace mandet {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
    return std::chrono::duration<double>(Clock::now() - t).count();
}

constexpr double kTrustFloor = 1e-6;   // nondimensional
constexpr double kTrustFactor = 10.0;
constexpr int kMaxTrustWidenings = 3;

Mat6 coords_cov(CoordSet coords, const GaussianState& g, double mu) {
    return transform_covariance(CoordSet::CC, coords, g.mean.vector(), g.cov, mu);
}

Vec6 node_state(CoordSet coords, const Vec6& ref, const Vec6& dx) {
    return normalize_angles(coords, ref + dx);
}

struct Iterate {
    std::vector<Vec6> nodes;
    std::vector<Vec3> dv;
};

double iterate_change(CoordSet coords, const ProblemScaling& sc, const Iterate& a, const Iterate& b) {
    double change = 0.0;
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
        const Vec6 d = coord_difference(coords, a.nodes[i], b.nodes[i]).cwiseQuotient(sc.coord_unit);
        change = std::max(change, d.lpNorm<Eigen::Infinity>());
        change = std::max(change, (a.dv[i] - b.dv[i]).lpNorm<Eigen::Infinity>() / sc.velocity);
    }
    return change;
}

Linearization linearize(const ManeuverProblemSpec& spec, const CartesianState& x0, const NodeGrid& grid,
                        const std::vector<Vec3>& impulses) {
    Linearization lin;
    lin.ref = build_reference(spec.model, x0, grid, spec.coords, impulses, spec.propagator);
    lin.stms = compute_stms(spec.model, lin.ref, spec.propagator, spec.threads);
    return lin;
}

double mahalanobis(const Mat6& cov, const Vec6& d) {
    Eigen::LLT<Mat6> llt(cov);
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::quiet_NaN();
    return llt.matrixL().solve(d).norm();
}

}  // namespace

void GaussianState::validate(std::string_view name) const {
    const std::string n(name);
    if (!std::isfinite(epoch.t)) throw InputError(n + ".epoch is not finite");
    if (!mean.finite()) throw InputError(n + ".mean is not finite");
    if (!(mean.position.norm() > 0.0)) throw InputError(n + ".mean has zero position");
    if (!cov.allFinite()) throw InputError(n + ".cov is not finite");
    const double scale = std::max(cov.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw InputError(n + ".cov is not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat6> eig(cov);
    if (eig.eigenvalues().minCoeff() < -1e-12 * scale)
        throw InputError(n + ".cov is not positive semidefinite");
}

bool GaussianState::positive_definite() const {
    Eigen::LLT<Mat6> llt(cov);
    return llt.info() == Eigen::Success && llt.matrixL().toDenseMatrix().diagonal().minCoeff() > 0.0;
}

std::string_view to_string(BoundaryMode::Kind kind) {
    switch (kind) {
        case BoundaryMode::Kind::Perfect: return "perfect";
        case BoundaryMode::Kind::MahalanobisBound: return "mahalanobis";
        case BoundaryMode::Kind::FixedDeviation: return "fixed_deviation";
    }
    return "?";
}

std::string_view to_string(ScpStatus status) {
    switch (status) {
        case ScpStatus::Converged: return "converged";
        case ScpStatus::NotConverged: return "not_converged";
        case ScpStatus::SolverFailed: return "solver_failed";
    }
    return "?";
}

void ManeuverProblemSpec::validate() const {
    boundary0.validate("boundary0");
    boundaryF.validate("boundaryF");
    model.validate();
    propagator.validate();
    if (!(boundaryF.epoch > boundary0.epoch)) throw InputError("boundaryF.epoch must follow boundary0.epoch");
    if (n_segments < 1) throw InputError("n_segments must be at least 1");
    if (!(dv_max > 0.0)) throw InputError("dv_max must be positive");
    if (mode.kind == BoundaryMode::Kind::MahalanobisBound) {
        if (!(mode.confidence > 0.0 && mode.confidence < 1.0))
            throw InputError("confidence must lie strictly inside (0, 1)");
        if (!boundary0.positive_definite()) throw InputError("boundary0.cov must be positive definite");
        if (!boundaryF.positive_definite()) throw InputError("boundaryF.cov must be positive definite");
    }
    if (mode.kind == BoundaryMode::Kind::FixedDeviation && !mode.deviation.allFinite())
        throw InputError("fixed deviation is not finite");
    if (state_trust && !(state_trust->minCoeff() > 0.0 && state_trust->allFinite()))
        throw InputError("state_trust half-widths must be positive");
    if (!(scp_eps > 0.0)) throw InputError("scp_eps must be positive");
    if (scp_max_iter < 1) throw InputError("scp_max_iter must be at least 1");
    if (window && !(window->half_width > 0.0)) throw InputError("window.half_width must be positive");
    if (threads < 0) throw InputError("threads must be non-negative");
}

Mat6 psd_factor(const Mat6& cov) {
    Eigen::LLT<Mat6> llt(cov);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    Eigen::SelfAdjointEigenSolver<Mat6> eig(cov);
    const Vec6 root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal();
}

ProblemScaling make_scaling(const ManeuverProblemSpec& spec, const ReferenceTrajectory& ballistic) {
    ProblemScaling sc;
    const double mu = spec.model.mu;
    const auto& s0 = spec.boundary0.mean;
    const double energy = 0.5 * s0.velocity.squaredNorm() - mu / s0.position.norm();
    sc.length = energy < 0.0 ? -mu / (2.0 * energy) : s0.position.norm();
    sc.time = std::sqrt(sc.length * sc.length * sc.length / mu);
    sc.velocity = sc.length / sc.time;
    sc.coord_unit = unit_scales(spec.coords, sc.length, sc.velocity);

    const Vec6 mf = to_coords(spec.coords, spec.boundaryF.mean, mu);
    double nd = coord_difference(spec.coords, mf, ballistic.nodes.back())
                    .cwiseQuotient(sc.coord_unit)
                    .lpNorm<Eigen::Infinity>();
    if (spec.mode.kind == BoundaryMode::Kind::MahalanobisBound) {
        const double root_q = std::sqrt(chi2_quantile(spec.mode.confidence, 6));
        for (const auto* g : {&spec.boundary0, &spec.boundaryF}) {
            const Vec6 sd = coords_cov(spec.coords, *g, mu).diagonal().cwiseMax(0.0).cwiseSqrt();
            nd = std::max(nd, root_q * sd.cwiseQuotient(sc.coord_unit).lpNorm<Eigen::Infinity>());
        }
    } else if (spec.mode.kind == BoundaryMode::Kind::FixedDeviation) {
        nd = std::max(nd, spec.mode.deviation.head<6>().cwiseQuotient(sc.coord_unit).lpNorm<Eigen::Infinity>());
        nd = std::max(nd, spec.mode.deviation.tail<6>().cwiseQuotient(sc.coord_unit).lpNorm<Eigen::Infinity>());
    }
    sc.deviation = sc.length * std::max(nd, kTrustFloor);
    sc.state_scale = sc.coord_unit * (sc.deviation / sc.length);
    sc.dv_scale = sc.velocity * (sc.deviation / sc.length);
    return sc;
}

Vec6 trust_half_widths(const ManeuverProblemSpec& spec, const ProblemScaling& sc,
                       const ReferenceTrajectory& ballistic) {
    if (spec.state_trust) return *spec.state_trust;
    const double mu = spec.model.mu;
    const Vec6 mf = to_coords(spec.coords, spec.boundaryF.mean, mu);
    double offset = coord_difference(spec.coords, mf, ballistic.nodes.back())
                        .cwiseQuotient(sc.coord_unit)
                        .lpNorm<Eigen::Infinity>();
    if (spec.mode.kind == BoundaryMode::Kind::FixedDeviation)
        for (int k = 0; k < 12; ++k)
            offset = std::max(offset, std::abs(spec.mode.deviation[k]) / sc.coord_unit[k % 6]);
    Vec6 sd = Vec6::Zero();
    for (const auto* g : {&spec.boundary0, &spec.boundaryF})
        sd = sd.cwiseMax(coords_cov(spec.coords, *g, mu).diagonal().cwiseMax(0.0).cwiseSqrt());
    Vec6 w;
    for (int k = 0; k < 6; ++k)
        w[k] = std::max({kTrustFactor * sd[k], kTrustFactor * offset * sc.coord_unit[k],
                         kTrustFloor * sc.coord_unit[k]});
    return w;
}

BuiltProgram build_program(const ManeuverProblemSpec& spec, const Linearization& lin,
                           const ProblemScaling& sc, const Vec6& trust) {
    const auto& ref = lin.ref;
    const auto& grid = ref.grid;
    const int nodes = grid.nodes();
    const int last = nodes - 1;
    if (static_cast<int>(lin.stms.R.size()) != grid.segments())
        throw InputError("transition matrices do not match the reference grid");
    const double mu = spec.model.mu;
    const CoordSet cs = spec.coords;
    const Vec6& S = sc.state_scale;
    const double sv = sc.dv_scale;

    conic::ProgramBuilder pb;
    BuiltProgram out;
    auto& lay = out.layout;
    lay.nodes = nodes;
    lay.state.resize(nodes);
    lay.impulse.resize(nodes);
    for (int i = 0; i < nodes; ++i) lay.state[i] = pb.add_block(conic::ConeKind::Free, 6);
    for (int i = 0; i < nodes; ++i) {
        lay.impulse[i] = pb.add_block(conic::ConeKind::SecondOrder, 4);
        pb.set_cost(lay.impulse[i], 1.0);
        ++lay.cone_count;
    }

    // Continuity around the current reference.
    for (int i = 0; i < grid.segments(); ++i) {
        const Mat6& R = lin.stms.R[i];
        const Mat63& M = lin.stms.M[i];
        const Vec3 vref = ref.impulses[i] / sv;
        const bool active = grid.impulse_allowed[i];
        for (int r = 0; r < 6; ++r) {
            std::vector<std::pair<int, double>> terms;
            terms.reserve(10);
            terms.emplace_back(lay.state[i + 1] + r, 1.0);
            for (int j = 0; j < 6; ++j) terms.emplace_back(lay.state[i] + j, -R(r, j) * S[j] / S[r]);
            double rhs = 0.0;
            if (active) {
                for (int l = 0; l < 3; ++l) {
                    const double m = M(r, l) * sv / S[r];
                    terms.emplace_back(lay.impulse[i] + 1 + l, -m);
                    rhs -= m * vref[l];
                }
            }
            pb.add_row(terms, rhs);
        }
    }
    for (int i = 0; i < nodes; ++i) {
        if (grid.impulse_allowed[i]) continue;
        for (int l = 0; l < 3; ++l) pb.add_row({{lay.impulse[i] + 1 + l, 1.0}}, 0.0);
    }

    // Boundaries: offsets of the means from the reference ends.
    const Vec6 m0 = to_coords(cs, spec.boundary0.mean, mu);
    const Vec6 mf = to_coords(cs, spec.boundaryF.mean, mu);
    const Vec6 off0 = coord_difference(cs, m0, ref.nodes.front()).cwiseQuotient(S);
    const Vec6 offN = coord_difference(cs, mf, ref.nodes.back()).cwiseQuotient(S);
    auto pin = [&](int col, const Vec6& value) {
        for (int r = 0; r < 6; ++r) pb.add_row({{col + r, 1.0}}, value[r]);
    };
    switch (spec.mode.kind) {
        case BoundaryMode::Kind::Perfect:
            pin(lay.state[0], off0);
            pin(lay.state[last], offN);
            break;
        case BoundaryMode::Kind::FixedDeviation:
            pin(lay.state[0], off0 + spec.mode.deviation.head<6>().cwiseQuotient(S));
            pin(lay.state[last], offN + spec.mode.deviation.tail<6>().cwiseQuotient(S));
            break;
        case BoundaryMode::Kind::MahalanobisBound: {
            const double root_q = std::sqrt(chi2_quantile(spec.mode.confidence, 6));
            const Eigen::DiagonalMatrix<double, 6> Sinv(S.cwiseInverse());
            const std::pair<const GaussianState*, int> ends[2] = {{&spec.boundary0, 0}, {&spec.boundaryF, last}};
            for (const auto& [g, node] : ends) {
                const Vec6& off = node == 0 ? off0 : offN;
                const Mat6 cov = Sinv * coords_cov(cs, *g, mu) * Sinv;
                Eigen::LLT<Mat6> llt(0.5 * (cov + cov.transpose()));
                if (llt.info() != Eigen::Success)
                    throw InputError("boundary covariance is not positive definite in optimisation coordinates");
                const Mat6 Linv = llt.matrixL().solve(Mat6::Identity());
                const int e = pb.add_block(conic::ConeKind::SecondOrder, 7);
                lay.boundary_cone.push_back(e);
                ++lay.cone_count;
                pb.add_row({{e, 1.0}}, root_q);
                const Vec6 rhs = -Linv * off;
                for (int r = 0; r < 6; ++r) {
                    std::vector<std::pair<int, double>> terms{{e + 1 + r, 1.0}};
                    for (int j = 0; j <= r; ++j) terms.emplace_back(lay.state[node] + j, -Linv(r, j));
                    pb.add_row(terms, rhs[r]);
                }
            }
            break;
        }
    }

    // Per-node impulse bounds.
    if (std::isfinite(spec.dv_max)) {
        const double cap = spec.dv_max / sv;
        for (int i = 0; i < nodes; ++i) {
            if (!grid.impulse_allowed[i]) continue;
            const int s = pb.add_block(conic::ConeKind::NonNeg, 7);
            for (int l = 0; l < 3; ++l) {
                pb.add_row({{lay.impulse[i] + 1 + l, 1.0}, {s + 2 * l, 1.0}}, cap);
                pb.add_row({{lay.impulse[i] + 1 + l, -1.0}, {s + 2 * l + 1, 1.0}}, cap);
            }
            pb.add_row({{lay.impulse[i], 1.0}, {s + 6, 1.0}}, cap);
        }
    }

    // State trust box on the deviations.
    const Vec6 box = trust.cwiseQuotient(S);
    for (int i = 0; i < nodes; ++i) {
        const int s = pb.add_block(conic::ConeKind::NonNeg, 12);
        for (int r = 0; r < 6; ++r) {
            pb.add_row({{lay.state[i] + r, 1.0}, {s + 2 * r, 1.0}}, box[r]);
            pb.add_row({{lay.state[i] + r, -1.0}, {s + 2 * r + 1, 1.0}}, box[r]);
        }
    }

    out.program = pb.build();
    return out;
}

NodeGrid problem_grid(const ManeuverProblemSpec& spec) {
    if (spec.window) return restrict_window(spec).grid;
    return NodeGrid::uniform(spec.boundary0.epoch, spec.boundaryF.epoch, spec.n_segments);
}

Linearization linearize_ballistic(const ManeuverProblemSpec& spec, const NodeGrid& grid) {
    return linearize(spec, spec.boundary0.mean, grid, {});
}

ManeuverSolution run_scp(const ManeuverProblemSpec& spec, const Linearization* initial) {
    const auto t_start = Clock::now();
    spec.validate();
    ManeuverSolution sol;
    sol.coords = spec.coords;

    Linearization owned;
    const Linearization* cur = initial;
    if (!cur) {
        const auto t = Clock::now();
        owned = linearize_ballistic(spec, problem_grid(spec));
        sol.timings.linearize_s += seconds_since(t);
        cur = &owned;
    }
    const NodeGrid grid = cur->ref.grid;
    if (cur->ref.coords != spec.coords) throw InputError("shared linearisation uses other coordinates");
    const int nodes = grid.nodes();
    const int last = nodes - 1;
    sol.grid = grid;

    const ProblemScaling sc = make_scaling(spec, cur->ref);
    Vec6 trust = trust_half_widths(spec, sc, cur->ref);
    const double mu = spec.model.mu;
    const Vec6 m0 = to_coords(spec.coords, spec.boundary0.mean, mu);
    const Vec6 mf = to_coords(spec.coords, spec.boundaryF.mean, mu);

    std::optional<Iterate> prev;
    Linearization next;
    sol.status = ScpStatus::NotConverged;
    for (int k = 1; k <= spec.scp_max_iter; ++k) {
        const auto built = build_program(spec, *cur, sc, trust);
        auto t = Clock::now();
        const auto cs = conic::solve(built.program, spec.solver);
        sol.timings.solve_s += seconds_since(t);
        ++sol.solves;
        sol.solver_status = cs.status;
        if (cs.status == conic::SolveStatus::PrimalInfeasible && !spec.state_trust &&
            sol.trust_widenings < kMaxTrustWidenings) {
            trust *= 10.0;
            ++sol.trust_widenings;
            --k;
            continue;
        }
        if (cs.status != conic::SolveStatus::Optimal) {
            sol.status = ScpStatus::SolverFailed;
            sol.failed_iteration = k;
            break;
        }

        const auto& lay = built.layout;
        Iterate it;
        it.nodes.resize(nodes);
        it.dv.assign(nodes, Vec3::Zero());
        std::vector<double> u(nodes, 0.0);
        for (int i = 0; i < nodes; ++i) {
            const Vec6 dx = cs.x.segment<6>(lay.state[i]).cwiseProduct(sc.state_scale);
            it.nodes[i] = node_state(spec.coords, cur->ref.nodes[i], dx);
            if (grid.impulse_allowed[i]) {
                it.dv[i] = cs.x.segment<3>(lay.impulse[i] + 1) * sc.dv_scale;
                u[i] = cs.x[lay.impulse[i]] * sc.dv_scale;
            }
        }

        sol.nodes = it.nodes;
        sol.dv_eci = it.dv;
        sol.dv_rtn.assign(nodes, Vec3::Zero());
        sol.dv_mags.assign(nodes, 0.0);
        sol.total_dv = 0.0;
        sol.max_relaxation_gap = 0.0;
        for (int i = 0; i < nodes; ++i) {
            sol.dv_mags[i] = it.dv[i].norm();
            sol.total_dv += sol.dv_mags[i];
            if (sol.dv_mags[i] > 0.0)
                sol.dv_rtn[i] = rtn_frame(from_coords(spec.coords, it.nodes[i], mu)) * it.dv[i];
            if (u[i] > 1e-9) sol.max_relaxation_gap = std::max(sol.max_relaxation_gap, u[i] - sol.dv_mags[i]);
        }
        sol.dx0 = coord_difference(spec.coords, it.nodes[0], m0);
        sol.dxN = coord_difference(spec.coords, it.nodes[last], mf);

        t = Clock::now();
        next = linearize(spec, from_coords(spec.coords, it.nodes[0], mu), grid, it.dv);
        sol.timings.linearize_s += seconds_since(t);
        sol.iteration_miss.push_back(coord_difference(spec.coords, next.ref.nodes[last], it.nodes[last])
                                         .cwiseQuotient(sc.coord_unit)
                                         .lpNorm<Eigen::Infinity>());

        if (prev) {
            const double change = iterate_change(spec.coords, sc, it, *prev);
            sol.iteration_change.push_back(change);
            if (change < spec.scp_eps) {
                sol.status = ScpStatus::Converged;
                sol.scp_iterations = k - 1;
                break;
            }
        }
        sol.scp_iterations = k;
        prev = std::move(it);
        owned = std::move(next);
        cur = &owned;
    }

    if (!sol.nodes.empty()) {
        const auto v = validate(spec, sol);
        sol.validation_miss = v.terminal_miss_mahalanobis;
        sol.validation_miss_km = v.terminal_miss_km;
    }
    sol.timings.total_s = seconds_since(t_start);
    return sol;
}

std::vector<int> active_nodes(const ManeuverSolution& sol, double dv_max) {
    double largest = 0.0;
    for (double m : sol.dv_mags) largest = std::max(largest, m);
    const double ref = std::isfinite(dv_max) ? dv_max : largest;
    const double threshold = std::max(1e-9, 1e-3 * ref);
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(sol.dv_mags.size()); ++i)
        if (sol.dv_mags[i] > threshold) out.push_back(i);
    return out;
}

ValidationResult validate(const ManeuverProblemSpec& spec, const ManeuverSolution& sol) {
    const auto& grid = sol.grid;
    const int nodes = grid.nodes();
    if (static_cast<int>(sol.nodes.size()) != nodes || static_cast<int>(sol.dv_eci.size()) != nodes)
        throw InputError("solution does not match its grid");
    const double mu = spec.model.mu;
    CartesianState s = from_coords(sol.coords, sol.nodes.front(), mu);
    for (int i = 0; i + 1 < nodes; ++i) {
        s.velocity += sol.dv_eci[i];
        try {
            s = propagate(spec.model, s, grid.epochs[i], grid.epochs[i + 1], spec.propagator);
        } catch (const PropagationError& e) {
            throw PropagationError(e.what(), e.last_time(), e.last_state(), i);
        }
    }
    ValidationResult v;
    v.final_state = s;
    const CartesianState planned = from_coords(sol.coords, sol.nodes.back(), mu);
    const Vec6 miss = s.vector() - planned.vector();
    const Vec6 target = planned.vector() - spec.boundaryF.mean.vector();
    v.terminal_miss_km = miss.head<3>().norm();
    v.terminal_miss_mahalanobis = mahalanobis(spec.boundaryF.cov, miss);
    v.target_distance_km = target.head<3>().norm();
    v.target_distance_mahalanobis = mahalanobis(spec.boundaryF.cov, target);
    return v;
}

WindowResult restrict_window(const ManeuverProblemSpec& spec, int scan_intervals) {
    const Epoch t0 = spec.boundary0.epoch;
    const Epoch tf = spec.boundaryF.epoch;
    const double span = tf - t0;
    if (!(span > 0.0)) throw InputError("window needs t0 < tf");
    if (scan_intervals < 2) throw InputError("window scan needs at least two intervals");
    const WindowOptions opt = spec.window.value_or(WindowOptions{true, 0.5 * span});
    if (!(opt.half_width > 0.0)) throw InputError("window.half_width must be positive");

    WindowResult w;
    w.scan_epochs.resize(scan_intervals + 1);
    for (int k = 0; k <= scan_intervals; ++k) w.scan_epochs[k] = Epoch{t0.t + span * k / scan_intervals};
    w.scan_epochs.back() = tf;
    const auto fwd = propagate_grid(spec.model, spec.boundary0.mean, w.scan_epochs, spec.propagator);
    std::vector<Epoch> rev(w.scan_epochs.rbegin(), w.scan_epochs.rend());
    auto bwd = propagate_grid(spec.model, spec.boundaryF.mean, rev, spec.propagator);
    std::reverse(bwd.begin(), bwd.end());
    w.scan_distance_km.resize(fwd.size());
    for (std::size_t k = 0; k < fwd.size(); ++k)
        w.scan_distance_km[k] = (fwd[k].position - bwd[k].position).norm();
    const auto [lo, hi] = std::minmax_element(w.scan_distance_km.begin(), w.scan_distance_km.end());
    const double length = spec.boundary0.mean.position.norm();
    w.flat = (*hi - *lo) <= 1e-8 * length;

    Epoch centre = Epoch{t0.t + 0.5 * span};
    if (opt.center_search && !w.flat) centre = w.scan_epochs[lo - w.scan_distance_km.begin()];
    w.t_star = centre;

    if (w.flat || opt.half_width >= 0.5 * span) {
        w.grid = NodeGrid::uniform(t0, tf, spec.n_segments);
        return w;
    }
    double ws = centre.t - opt.half_width;
    double we = centre.t + opt.half_width;
    if (ws < t0.t) {
        we += t0.t - ws;
        ws = t0.t;
    }
    if (we > tf.t) {
        ws -= we - tf.t;
        we = tf.t;
    }
    const auto inner = NodeGrid::uniform(Epoch{ws}, Epoch{we}, spec.n_segments);
    std::vector<Epoch> epochs;
    std::vector<bool> allowed;
    if (ws > t0.t) {
        epochs.push_back(t0);
        allowed.push_back(false);
    }
    for (int k = 0; k < inner.nodes(); ++k) {
        epochs.push_back(inner.epochs[k]);
        allowed.push_back(k < inner.segments());
    }
    // The last inner node owns the post-leg, which stays ballistic.
    if (we < tf.t) {
        epochs.push_back(tf);
        allowed.push_back(false);
    }
    w.grid.epochs = std::move(epochs);
    w.grid.impulse_allowed = std::move(allowed);
    w.grid.validate();
    return w;
}

}  // namespace mandet
