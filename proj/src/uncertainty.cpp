#include "mandet/uncertainty.hpp"

#include "mandet/errors.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

namespace mandet {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
    return std::chrono::duration<double>(Clock::now() - t).count();
}

void check_dof(int dof) {
    if (dof < 2 || dof % 2 != 0) throw InputError("chi-square degrees of freedom must be even and positive");
}

}  // namespace

double chi2_cdf(double x, int dof) {
    check_dof(dof);
    if (!(x > 0.0)) return 0.0;
    const double h = 0.5 * x;
    double term = 1.0;
    double sum = 1.0;
    for (int m = 1; m < dof / 2; ++m) {
        term *= h / m;
        sum += term;
    }
    return std::max(0.0, 1.0 - std::exp(-h) * sum);
}

double chi2_quantile(double confidence, int dof) {
    check_dof(dof);
    if (!(confidence > 0.0 && confidence < 1.0)) throw InputError("confidence must lie strictly inside (0, 1)");
    double lo = 0.0;
    double hi = static_cast<double>(dof);
    while (chi2_cdf(hi, dof) < confidence) {
        lo = hi;
        hi *= 2.0;
    }
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (chi2_cdf(mid, dof) < confidence ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

DetectionCurve mahalanobis_sweep(const ManeuverProblemSpec& spec, const std::vector<double>& confidences,
                                 int workers) {
    const auto t_start = Clock::now();
    if (confidences.empty()) throw InputError("confidence list is empty");
    for (std::size_t k = 0; k < confidences.size(); ++k) {
        if (!(confidences[k] > 0.0 && confidences[k] < 1.0))
            throw InputError("confidence must lie strictly inside (0, 1)");
        if (k > 0 && !(confidences[k] > confidences[k - 1]))
            throw InputError("confidences must increase strictly");
    }
    ManeuverProblemSpec base = spec;
    base.mode = BoundaryMode::mahalanobis(confidences.front());
    base.validate();

    DetectionCurve curve;
    auto t = Clock::now();
    const Linearization lin = linearize_ballistic(base, problem_grid(base));
    curve.linearize_s = seconds_since(t);

    const int n = static_cast<int>(confidences.size());
    const int pool = detail::resolve_threads(workers);
    curve.points.resize(n);
    detail::parallel_for(n, pool, [&](int k) {
        ManeuverProblemSpec s = base;
        s.mode = BoundaryMode::mahalanobis(confidences[k]);
        if (pool > 1) s.threads = 1;
        DetectionPoint& p = curve.points[k];
        p.confidence = confidences[k];
        try {
            const auto sol = run_scp(s, &lin);
            p.total_dv = sol.total_dv;
            p.status = sol.status;
            p.solver_status = sol.solver_status;
            p.iterations = sol.scp_iterations;
            p.validation_miss = sol.validation_miss;
            p.relaxation_gap = sol.max_relaxation_gap;
        } catch (const Error& e) {
            p.status = ScpStatus::SolverFailed;
            p.error = e.what();
        }
    });
    curve.total_s = seconds_since(t_start);
    return curve;
}

DetectionVerdict detect(const DetectionCurve& curve, double confidence, double threshold_dv) {
    for (const auto& p : curve.points) {
        if (std::abs(p.confidence - confidence) > 1e-12) continue;
        DetectionVerdict v;
        v.total_dv = p.total_dv;
        v.margin = p.total_dv - threshold_dv;
        v.maneuver = p.total_dv > threshold_dv;
        return v;
    }
    throw InputError("confidence " + std::to_string(confidence) + " is not on the detection curve");
}

std::string_view to_string(SigmaScheme scheme) {
    switch (scheme) {
        case SigmaScheme::CUT4: return "cut4";
        case SigmaScheme::Unscented: return "unscented";
        case SigmaScheme::MonteCarlo: return "monte_carlo";
    }
    return "?";
}

SigmaScheme parse_sigma_scheme(std::string_view name) {
    if (name == "cut4") return SigmaScheme::CUT4;
    if (name == "unscented") return SigmaScheme::Unscented;
    if (name == "monte_carlo") return SigmaScheme::MonteCarlo;
    throw InputError("unknown sigma-point scheme '" + std::string(name) + "'");
}

SigmaPointSet cut4_points(int n) {
    if (n < 1) throw InputError("CUT-4 dimension must be at least 1");
    if (n > 20) throw InputError("CUT-4 dimension above 20 is not enumerable");
    SigmaPointSet set;
    set.scheme = SigmaScheme::CUT4;
    set.dim = n;
    const double np2 = n + 2.0;
    const double r1 = std::sqrt(np2);
    const double r2 = std::sqrt(np2 / n);
    const double w1 = 1.0 / (np2 * np2);
    const double corners = std::ldexp(1.0, n);
    const double w2 = n * static_cast<double>(n) / (corners * np2 * np2);
    const std::size_t count = 1 + 2 * static_cast<std::size_t>(n) + (std::size_t{1} << n);
    set.points.reserve(count);
    set.weights.reserve(count);

    set.points.push_back(Eigen::VectorXd::Zero(n));
    set.weights.push_back(0.0);
    for (int i = 0; i < n; ++i) {
        for (double sign : {1.0, -1.0}) {
            Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
            p[i] = sign * r1;
            set.points.push_back(std::move(p));
            set.weights.push_back(w1);
        }
    }
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        Eigen::VectorXd p(n);
        for (int i = 0; i < n; ++i) p[i] = (mask >> i) & 1u ? -r2 : r2;
        set.points.push_back(std::move(p));
        set.weights.push_back(w2);
    }
    // Centre weight closes the sum exactly.
    double rest = 0.0;
    for (std::size_t k = 1; k < set.weights.size(); ++k) rest += set.weights[k];
    set.weights[0] = 1.0 - rest;
    return set;
}

SigmaPointSet unscented_points(int n) {
    if (n < 1) throw InputError("sigma-point dimension must be at least 1");
    SigmaPointSet set;
    set.scheme = SigmaScheme::Unscented;
    set.dim = n;
    set.points.push_back(Eigen::VectorXd::Zero(n));
    set.weights.push_back(0.0);
    const double r = std::sqrt(static_cast<double>(n));
    for (int i = 0; i < n; ++i) {
        for (double sign : {1.0, -1.0}) {
            Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
            p[i] = sign * r;
            set.points.push_back(std::move(p));
            set.weights.push_back(0.5 / n);
        }
    }
    return set;
}

SigmaPointSet monte_carlo_points(int n, int count, std::uint64_t seed) {
    if (n < 1) throw InputError("sigma-point dimension must be at least 1");
    if (count < 1) throw InputError("Monte Carlo sample count must be positive");
    SigmaPointSet set;
    set.scheme = SigmaScheme::MonteCarlo;
    set.dim = n;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int k = 0; k < count; ++k) {
        Eigen::VectorXd p(n);
        for (int i = 0; i < n; ++i) p[i] = normal(rng);
        set.points.push_back(std::move(p));
        set.weights.push_back(1.0 / count);
    }
    return set;
}

MomentSet weighted_moments(const std::vector<double>& weights, const std::vector<double>& values) {
    if (weights.size() != values.size() || values.empty()) throw InputError("moment inputs are empty or mismatched");
    double W = 0.0;
    double s1 = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        W += weights[k];
        s1 += weights[k] * values[k];
    }
    if (!(W > 0.0)) throw InputError("moment weights must sum to a positive value");
    MomentSet m;
    m.mean = s1 / W;
    if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); })) {
        m.mean = values.front();
        return m;
    }
    double c2 = 0.0, c3 = 0.0, c4 = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        const double d = values[k] - m.mean;
        const double d2 = d * d;
        c2 += weights[k] * d2;
        c3 += weights[k] * d2 * d;
        c4 += weights[k] * d2 * d2;
    }
    c2 /= W;
    c3 /= W;
    c4 /= W;
    m.variance = c2;
    if (c2 > 0.0) {
        m.skewness = c3 / std::pow(c2, 1.5);
        m.kurtosis = c4 / (c2 * c2);
    }
    return m;
}

ManeuverStatistics estimate(const ManeuverProblemSpec& spec, const EstimateOptions& options) {
    const auto t_start = Clock::now();
    ManeuverProblemSpec base = spec;
    base.mode = BoundaryMode::fixed(Vec12::Zero());
    base.validate();

    ManeuverStatistics st;
    st.scheme = options.scheme;
    constexpr int kDim = 12;
    SigmaPointSet set;
    switch (options.scheme) {
        case SigmaScheme::CUT4: set = cut4_points(kDim); break;
        case SigmaScheme::Unscented: set = unscented_points(kDim); break;
        case SigmaScheme::MonteCarlo: set = monte_carlo_points(kDim, options.monte_carlo_count, options.seed); break;
    }
    st.point_count = static_cast<int>(set.points.size());

    auto t = Clock::now();
    const Linearization lin = linearize_ballistic(base, problem_grid(base));
    st.linearize_s = seconds_since(t);
    st.grid = lin.ref.grid;

    const double mu = base.model.mu;
    const Mat6 L0 = psd_factor(transform_covariance(CoordSet::CC, base.coords, base.boundary0.mean.vector(),
                                                    base.boundary0.cov, mu));
    const Mat6 Lf = psd_factor(transform_covariance(CoordSet::CC, base.coords, base.boundaryF.mean.vector(),
                                                    base.boundaryF.cov, mu));

    const int pool = detail::resolve_threads(options.workers);
    st.per_point_results.resize(st.point_count);
    detail::parallel_for(st.point_count, pool, [&](int k) {
        const Eigen::VectorXd& z = set.points[k];
        Vec12 dev;
        dev.head<6>() = L0 * z.head<6>();
        dev.tail<6>() = Lf * z.tail<6>();
        ManeuverProblemSpec s = base;
        s.mode = BoundaryMode::fixed(dev);
        if (pool > 1) s.threads = 1;
        PointResult& r = st.per_point_results[k];
        r.index = k;
        r.weight = set.weights[k];
        try {
            const auto sol = run_scp(s, &lin);
            r.total_dv = sol.total_dv;
            r.status = sol.status;
            r.solver_status = sol.solver_status;
            r.iterations = sol.scp_iterations;
            r.validation_miss = sol.validation_miss;
            r.relaxation_gap = sol.max_relaxation_gap;
            r.dv_rtn = sol.dv_rtn;
        } catch (const Error& e) {
            r.status = ScpStatus::SolverFailed;
            r.error = e.what();
        }
    });

    std::vector<double> w, v;
    for (const auto& r : st.per_point_results) {
        if (!r.solved()) {
            ++st.failures;
            continue;
        }
        w.push_back(r.weight);
        v.push_back(r.total_dv);
    }
    st.unreliable = st.failures > 0.05 * st.point_count;
    const int nodes = st.grid.nodes();
    st.per_node_mean.assign(nodes, Vec3::Zero());
    st.per_node_3sigma.assign(nodes, Vec3::Zero());
    if (v.empty()) {
        st.unreliable = true;
        st.fit_note = "no sigma point was solved";
        st.total_s = seconds_since(t_start);
        return st;
    }
    st.moments = weighted_moments(w, v);

    double W = 0.0;
    for (const auto& r : st.per_point_results)
        if (r.solved()) {
            W += r.weight;
            for (int i = 0; i < nodes; ++i) st.per_node_mean[i] += r.weight * r.dv_rtn[i];
        }
    for (auto& m : st.per_node_mean) m /= W;
    for (const auto& r : st.per_point_results)
        if (r.solved())
            for (int i = 0; i < nodes; ++i)
                st.per_node_3sigma[i] += r.weight * (r.dv_rtn[i] - st.per_node_mean[i]).cwiseAbs2();
    for (auto& s : st.per_node_3sigma) s = 3.0 * (s / W).cwiseSqrt();

    if (!(st.moments.variance > 0.0)) {
        st.fit_note = "zero variance: every solved point gave the same total dv";
    } else {
        try {
            st.fit = pearson_fit(st.moments);
        } catch (const std::exception& e) {
            st.fit_note = e.what();
        }
    }
    st.total_s = seconds_since(t_start);
    return st;
}

}  // namespace mandet
