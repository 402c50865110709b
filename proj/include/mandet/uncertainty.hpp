#pragma once

#include "mandet/pearson.hpp"
#include "mandet/problem.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mandet {

/// Closed-form chi-square CDF for even degrees of freedom.
double chi2_cdf(double x, int dof);
/// Inverse of chi2_cdf by bisection, absolute tolerance 1e-10 on q.
double chi2_quantile(double confidence, int dof);

struct DetectionPoint {
    double confidence = 0.0;
    double total_dv = 0.0;  // km/s
    ScpStatus status = ScpStatus::NotConverged;
    conic::SolveStatus solver_status = conic::SolveStatus::NumericalError;
    int iterations = 0;
    double validation_miss = 0.0;
    double relaxation_gap = 0.0;  // km/s
    std::string error;  // set when the run threw
    bool solved() const { return status == ScpStatus::Converged; }
};

struct DetectionCurve {
    std::vector<DetectionPoint> points;
    double linearize_s = 0.0;
    double total_s = 0.0;
};

/// One MahalanobisBound run per confidence over a shared ballistic
/// linearisation. Confidences must increase strictly.
DetectionCurve mahalanobis_sweep(const ManeuverProblemSpec& spec, const std::vector<double>& confidences,
                                 int workers = 1);

struct DetectionVerdict {
    bool maneuver = false;
    double margin = 0.0;  // km/s, total_dv - threshold
    double total_dv = 0.0;
};

/// Strict inequality: total_dv == threshold is not a maneuver.
DetectionVerdict detect(const DetectionCurve& curve, double confidence, double threshold_dv);

enum class SigmaScheme { CUT4, Unscented, MonteCarlo };
std::string_view to_string(SigmaScheme scheme);
SigmaScheme parse_sigma_scheme(std::string_view name);

struct SigmaPointSet {
    SigmaScheme scheme = SigmaScheme::CUT4;
    int dim = 0;
    std::vector<Eigen::VectorXd> points;  // standard-normal space
    std::vector<double> weights;
};

/// Centre, 2n axis points at +-sqrt(n+2), 2^n conjugate points at
/// +-sqrt((n+2)/n) per component. Exact Gaussian moments through order 4.
SigmaPointSet cut4_points(int n);
SigmaPointSet unscented_points(int n);
SigmaPointSet monte_carlo_points(int n, int count, std::uint64_t seed);

struct PointResult {
    int index = 0;
    double weight = 0.0;
    double total_dv = 0.0;  // km/s
    ScpStatus status = ScpStatus::NotConverged;
    conic::SolveStatus solver_status = conic::SolveStatus::NumericalError;
    int iterations = 0;
    double validation_miss = 0.0;
    double relaxation_gap = 0.0;  // km/s
    std::string error;
    std::vector<Vec3> dv_rtn;  // km/s
    bool solved() const { return status == ScpStatus::Converged; }
};

/// Weighted moments; the weights are renormalised over the given values.
MomentSet weighted_moments(const std::vector<double>& weights, const std::vector<double>& values);

struct EstimateOptions {
    SigmaScheme scheme = SigmaScheme::CUT4;
    int monte_carlo_count = 1000;
    std::uint64_t seed = 1;
    int workers = 1;
};

struct ManeuverStatistics {
    SigmaScheme scheme = SigmaScheme::CUT4;
    int point_count = 0;
    int failures = 0;
    bool unreliable = false;  // more than 5% failed points
    MomentSet moments;
    std::optional<PearsonFit> fit;
    std::string fit_note;  // reason when fit is absent
    NodeGrid grid;
    std::vector<Vec3> per_node_mean;    // RTN, km/s
    std::vector<Vec3> per_node_3sigma;  // RTN, km/s
    std::vector<PointResult> per_point_results;
    double linearize_s = 0.0;
    double total_s = 0.0;
};

/// One FixedDeviation run per sigma point; the 12-dim points are mapped by
/// block-diagonal factors of the boundary covariances in optimisation
/// coordinates. Results are reduced in point order.
ManeuverStatistics estimate(const ManeuverProblemSpec& spec, const EstimateOptions& options);

}  // namespace mandet
