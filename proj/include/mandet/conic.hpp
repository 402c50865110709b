#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <iosfwd>
#include <string_view>
#include <vector>

namespace mandet::conic {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

enum class ConeKind { Free, NonNeg, SecondOrder };

/// One block of consecutive variables. For SecondOrder the first slot is the
/// cone head t with t >= ||tail||.
struct ConeBlock {
    ConeKind kind = ConeKind::Free;
    int dim = 1;
};

/// min c'x  s.t.  A x = b,  x in K_1 x ... x K_n (blocks in variable order).
struct ConicProgram {
    Eigen::VectorXd c;
    SparseMatrix A;
    Eigen::VectorXd b;
    std::vector<ConeBlock> blocks;

    int num_vars() const;
    int num_rows() const { return static_cast<int>(A.rows()); }
    /// Structural checks; throws InputError.
    void validate() const;
};

enum class SolveStatus { Optimal, PrimalInfeasible, DualInfeasible, MaxIterations, NumericalError };

std::string_view to_string(SolveStatus status);
SolveStatus parse_solve_status(std::string_view text);

struct SolverSettings {
    int max_iter = 100;
    double feas_tol = 1e-8;
    double gap_tol = 1e-8;
    /// When progress stalls, a best iterate with all residuals below this
    /// still counts as Optimal. 0 disables.
    double acceptable_tol = 0.0;
    double regularization = 1e-8;
    int refinement_steps = 10;
    /// Rank check of A by sparse QR when the row count is at most this.
    int rank_check_max_rows = 1500;
    /// Per-iteration log on stderr.
    bool verbose = false;
};

struct ConicSolution {
    Eigen::VectorXd x;  // primal
    Eigen::VectorXd y;  // equality duals
    Eigen::VectorXd z;  // dual slacks c - A'y (zero on free blocks)
    SolveStatus status = SolveStatus::NumericalError;
    int iterations = 0;
    double primal_obj = 0.0;
    double dual_obj = 0.0;
    /// Unit-norm Farkas vector: y with A'y in K*, b'y < 0 (PrimalInfeasible)
    /// or x in K with A x = 0, c'x < 0 (DualInfeasible). Empty otherwise.
    Eigen::VectorXd certificate;
    int removed_rows = 0;
    int fixed_variables = 0;
};

ConicSolution solve(const ConicProgram& program, const SolverSettings& settings = {});

/// Residuals of a candidate primal/dual pair, used by tests and reports.
struct KktResiduals {
    double primal = 0.0;     // ||Ax - b|| / (1 + ||b||)
    double dual = 0.0;       // ||c - A'y - z|| / (1 + ||c||)
    double gap = 0.0;        // |c'x - b'y| / (1 + |c'x|)
    double primal_cone = 0.0;  // worst violation of x in K
    double dual_cone = 0.0;    // worst violation of z in K*
};
KktResiduals kkt_residuals(const ConicProgram& program, const ConicSolution& solution);

/// Largest violation of membership of `x` in the cone product (0 when inside).
double cone_violation(const std::vector<ConeBlock>& blocks, const Eigen::VectorXd& x);

/// Rotated cone 2uv >= ||w||^2, u, v >= 0 mapped onto a SecondOrder block by
/// the orthogonal change t = (u+v)/sqrt2, s = (u-v)/sqrt2, tail = w.
struct RotatedCone {
    /// Orthogonal (dim x dim) map from (u, v, w) to (t, s, w).
    static Eigen::MatrixXd to_standard_map(int dim);
    static Eigen::VectorXd to_standard(const Eigen::VectorXd& uvw);
    static Eigen::VectorXd from_standard(const Eigen::VectorXd& tsw);
};

/// Incremental assembly of a ConicProgram.
class ProgramBuilder {
public:
    /// Appends a cone block; returns the index of its first variable.
    int add_block(ConeKind kind, int dim);
    /// Appends a row sum_k coeff_k x_{col_k} = rhs; returns the row index.
    int add_row(std::initializer_list<std::pair<int, double>> terms, double rhs);
    int add_row(const std::vector<std::pair<int, double>>& terms, double rhs);
    void set_cost(int col, double value);

    int num_vars() const { return num_vars_; }
    int num_rows() const { return num_rows_; }
    const std::vector<ConeBlock>& blocks() const { return blocks_; }

    ConicProgram build() const;

private:
    std::vector<ConeBlock> blocks_;
    std::vector<Triplet> triplets_;
    std::vector<double> rhs_;
    std::vector<std::pair<int, double>> costs_;
    int num_vars_ = 0;
    int num_rows_ = 0;
};

/// Plain-text program dump (see docs/conic_format.md).
void write_program(std::ostream& out, const ConicProgram& program);
ConicProgram read_program(std::istream& in);
void write_solution(std::ostream& out, const ConicSolution& solution);
ConicSolution read_solution(std::istream& in);

}  // namespace mandet::conic
