#pragma once

#include "mandet/conic.hpp"
#include "mandet/coords.hpp"
#include "mandet/dynamics.hpp"
#include "mandet/stm.hpp"

#include <limits>
#include <optional>
#include <string_view>
#include <vector>

namespace mandet {

using Vec12 = Eigen::Matrix<double, 12, 1>;

/// Mean Cartesian state and 6x6 covariance [km, km/s] at an epoch.
struct GaussianState {
    Epoch epoch;
    CartesianState mean;
    Mat6 cov = Mat6::Zero();

    /// Symmetric within 1e-12 (relative) and positive semidefinite.
    void validate(std::string_view name = "boundary") const;
    bool positive_definite() const;
};

struct BoundaryMode {
    enum class Kind { Perfect, MahalanobisBound, FixedDeviation };
    Kind kind = Kind::Perfect;
    double confidence = 0.95;       // MahalanobisBound
    Vec12 deviation = Vec12::Zero();  // FixedDeviation: [dx0; dxN] in optimisation coordinates

    static BoundaryMode perfect() { return {}; }
    static BoundaryMode mahalanobis(double confidence) {
        BoundaryMode m;
        m.kind = Kind::MahalanobisBound;
        m.confidence = confidence;
        return m;
    }
    static BoundaryMode fixed(const Vec12& deviation) {
        BoundaryMode m;
        m.kind = Kind::FixedDeviation;
        m.deviation = deviation;
        return m;
    }
};

std::string_view to_string(BoundaryMode::Kind kind);

struct WindowOptions {
    bool center_search = true;
    double half_width = 0.0;  // s
};

struct ManeuverProblemSpec {
    GaussianState boundary0;
    GaussianState boundaryF;
    AccelerationModel model;
    CoordSet coords = CoordSet::CC;
    int n_segments = 1;
    double dv_max = std::numeric_limits<double>::infinity();  // km/s per node; inf = unbounded
    BoundaryMode mode;
    /// Per-coordinate half-widths of the state trust box, physical units of
    /// `coords`. Empty means the documented default.
    std::optional<Vec6> state_trust;
    double scp_eps = 1e-6;
    int scp_max_iter = 15;
    std::optional<WindowOptions> window;
    PropagatorSettings propagator;
    // Tight enough for u_i = |dv_i| to ~1e-9 dv_max where round-off allows.
    // The assembled rows are independent by construction: no rank check.
    conic::SolverSettings solver{
        .feas_tol = 1e-10, .gap_tol = 1e-10, .acceptable_tol = 1e-8, .rank_check_max_rows = 0};
    int threads = 1;  // STM workers

    void validate() const;
};

enum class ScpStatus { Converged, NotConverged, SolverFailed };
std::string_view to_string(ScpStatus status);

struct StageTimings {
    double linearize_s = 0.0;  // reference + STM builds
    double solve_s = 0.0;      // conic solves
    double total_s = 0.0;
};

struct ManeuverSolution {
    NodeGrid grid;
    CoordSet coords = CoordSet::CC;
    std::vector<Vec3> dv_eci;  // km/s, one per node; zero where impulses are not allowed
    std::vector<Vec3> dv_rtn;
    std::vector<double> dv_mags;
    double total_dv = 0.0;
    Vec6 dx0 = Vec6::Zero();  // boundary deviations from the means, optimisation coordinates
    Vec6 dxN = Vec6::Zero();
    std::vector<Vec6> nodes;  // planned node states (optimisation coordinates)
    int scp_iterations = 0;
    int solves = 0;
    ScpStatus status = ScpStatus::NotConverged;
    conic::SolveStatus solver_status = conic::SolveStatus::NumericalError;
    int failed_iteration = -1;
    int trust_widenings = 0;  // default box grown x10 after an infeasible subproblem
    std::vector<double> iteration_change;  // scaled solution change per solve
    std::vector<double> iteration_miss;    // scaled nonlinear terminal defect per solve
    double max_relaxation_gap = 0.0;       // max_i (u_i - |dv_i|), km/s
    double validation_miss = 0.0;          // Mahalanobis units (Sigma_tf), vs planned terminal state
    double validation_miss_km = 0.0;
    StageTimings timings;
};

/// Nodes with |dv_i| above 1e-3 dv_max (1e-3 of the largest impulse when
/// unbounded), never below 1e-9 km/s.
std::vector<int> active_nodes(const ManeuverSolution& sol, double dv_max);

/// Scales shared by program assembly and the convergence test.
struct ProblemScaling {
    double length = 1.0;    // L, km
    double time = 1.0;      // T, s
    double velocity = 1.0;  // V = L/T, km/s
    Vec6 coord_unit = Vec6::Ones();  // nondimensional unit per coordinate (L-based)
    double deviation = 1.0;          // D, km; solver variables are O(D)
    Vec6 state_scale = Vec6::Ones();  // coord_unit * D / L
    double dv_scale = 1.0;            // V * D / L
};

/// Reference trajectory and STMs around it.
struct Linearization {
    ReferenceTrajectory ref;
    SegmentStms stms;
};

/// Variable layout of an assembled program.
struct ProgramLayout {
    int nodes = 0;
    std::vector<int> state;    // first column of node i's dx block (6)
    std::vector<int> impulse;  // first column of node i's (u, dv) block (4)
    std::vector<int> boundary_cone;  // Mahalanobis cones (7), if any
    int cone_count = 0;              // second-order blocks
};

struct BuiltProgram {
    conic::ConicProgram program;
    ProgramLayout layout;
};

ProblemScaling make_scaling(const ManeuverProblemSpec& spec, const ReferenceTrajectory& ballistic);

/// Trust-box half-widths actually used (physical units of spec.coords).
Vec6 trust_half_widths(const ManeuverProblemSpec& spec, const ProblemScaling& scaling,
                       const ReferenceTrajectory& ballistic);

BuiltProgram build_program(const ManeuverProblemSpec& spec, const Linearization& lin,
                           const ProblemScaling& scaling, const Vec6& trust);

/// Grid used by run_scp: restricted window when configured, uniform otherwise.
NodeGrid problem_grid(const ManeuverProblemSpec& spec);

/// Ballistic linearisation from the t0 mean on `grid`.
Linearization linearize_ballistic(const ManeuverProblemSpec& spec, const NodeGrid& grid);

/// Successive convexification. `initial` may carry a shared ballistic
/// linearisation (it must match problem_grid(spec)).
ManeuverSolution run_scp(const ManeuverProblemSpec& spec, const Linearization* initial = nullptr);

struct ValidationResult {
    double terminal_miss_mahalanobis = 0.0;  // vs planned terminal state, Sigma_tf units
    double terminal_miss_km = 0.0;
    double target_distance_mahalanobis = 0.0;  // planned terminal state vs mu_tf
    double target_distance_km = 0.0;
    CartesianState final_state;
};

/// Nonlinear forward propagation of the solved initial state and impulses.
ValidationResult validate(const ManeuverProblemSpec& spec, const ManeuverSolution& sol);

struct WindowResult {
    NodeGrid grid;
    Epoch t_star;
    bool flat = false;
    std::vector<Epoch> scan_epochs;
    std::vector<double> scan_distance_km;
};

/// Closest-approach search between forward-propagated mu_t0 and
/// backward-propagated mu_tf, then an N-segment grid on the window.
WindowResult restrict_window(const ManeuverProblemSpec& spec, int scan_intervals = 500);

/// Lower Cholesky-type factor of a PSD matrix (LLT when definite).
Mat6 psd_factor(const Mat6& cov);

}  // namespace mandet
