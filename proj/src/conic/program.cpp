#include "mandet/conic.hpp"

#include "mandet/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace mandet::conic {

int ConicProgram::num_vars() const {
    int n = 0;
    for (const auto& block : blocks) n += block.dim;
    return n;
}

void ConicProgram::validate() const {
    for (const auto& block : blocks) {
        if (block.dim <= 0) throw InputError("cone block with non-positive dimension");
        if (block.kind == ConeKind::SecondOrder && block.dim < 2)
            throw InputError("second-order cone block needs dimension >= 2");
    }
    const int n = num_vars();
    if (c.size() != n) throw InputError("objective length does not match the cone dimensions");
    if (A.cols() != n) throw InputError("A column count does not match the cone dimensions");
    if (b.size() != A.rows()) throw InputError("b length does not match the rows of A");
    if (!c.allFinite() || !b.allFinite()) throw InputError("non-finite program data");
    for (int k = 0; k < A.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(A, k); it; ++it)
            if (!std::isfinite(it.value())) throw InputError("non-finite entry in A");
}

std::string_view to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::PrimalInfeasible: return "primal_infeasible";
        case SolveStatus::DualInfeasible: return "dual_infeasible";
        case SolveStatus::MaxIterations: return "max_iterations";
        case SolveStatus::NumericalError: return "numerical_error";
    }
    return "unknown";
}

SolveStatus parse_solve_status(std::string_view text) {
    for (auto s : {SolveStatus::Optimal, SolveStatus::PrimalInfeasible, SolveStatus::DualInfeasible,
                   SolveStatus::MaxIterations, SolveStatus::NumericalError})
        if (to_string(s) == text) return s;
    throw InputError("unknown solver status '" + std::string(text) + "'");
}

double cone_violation(const std::vector<ConeBlock>& blocks, const Eigen::VectorXd& x) {
    double worst = 0.0;
    int offset = 0;
    for (const auto& block : blocks) {
        switch (block.kind) {
            case ConeKind::Free:
                break;
            case ConeKind::NonNeg:
                for (int k = 0; k < block.dim; ++k) worst = std::max(worst, -x[offset + k]);
                break;
            case ConeKind::SecondOrder: {
                const double tail = x.segment(offset + 1, block.dim - 1).norm();
                worst = std::max(worst, tail - x[offset]);
                break;
            }
        }
        offset += block.dim;
    }
    return worst;
}

KktResiduals kkt_residuals(const ConicProgram& program, const ConicSolution& solution) {
    KktResiduals r;
    const Eigen::VectorXd& x = solution.x;
    const Eigen::VectorXd& y = solution.y;
    const Eigen::VectorXd& z = solution.z;
    r.primal = (program.A * x - program.b).norm() / (1.0 + program.b.norm());
    r.dual = (program.c - program.A.transpose() * y - z).norm() / (1.0 + program.c.norm());
    const double pobj = program.c.dot(x);
    r.gap = std::abs(pobj - program.b.dot(y)) / (1.0 + std::abs(pobj));
    r.primal_cone = cone_violation(program.blocks, x);
    // Free blocks carry no dual cone; their slack must be zero instead.
    double dual_cone = cone_violation(program.blocks, z);
    int offset = 0;
    for (const auto& block : program.blocks) {
        if (block.kind == ConeKind::Free)
            dual_cone = std::max(dual_cone, z.segment(offset, block.dim).cwiseAbs().maxCoeff());
        offset += block.dim;
    }
    r.dual_cone = dual_cone;
    return r;
}

Eigen::MatrixXd RotatedCone::to_standard_map(int dim) {
    if (dim < 3) throw InputError("rotated cone needs dimension >= 3");
    Eigen::MatrixXd map = Eigen::MatrixXd::Identity(dim, dim);
    const double h = std::numbers::sqrt2 / 2.0;
    map(0, 0) = h;
    map(0, 1) = h;
    map(1, 0) = h;
    map(1, 1) = -h;
    return map;
}

Eigen::VectorXd RotatedCone::to_standard(const Eigen::VectorXd& uvw) {
    return to_standard_map(static_cast<int>(uvw.size())) * uvw;
}

Eigen::VectorXd RotatedCone::from_standard(const Eigen::VectorXd& tsw) {
    // The map is a symmetric involution.
    return to_standard_map(static_cast<int>(tsw.size())) * tsw;
}

int ProgramBuilder::add_block(ConeKind kind, int dim) {
    if (dim <= 0 || (kind == ConeKind::SecondOrder && dim < 2))
        throw InputError("invalid cone block dimension " + std::to_string(dim));
    blocks_.push_back({kind, dim});
    const int first = num_vars_;
    num_vars_ += dim;
    return first;
}

int ProgramBuilder::add_row(std::initializer_list<std::pair<int, double>> terms, double rhs) {
    return add_row(std::vector<std::pair<int, double>>(terms), rhs);
}

int ProgramBuilder::add_row(const std::vector<std::pair<int, double>>& terms, double rhs) {
    for (const auto& [col, value] : terms) {
        if (col < 0 || col >= num_vars_) throw InputError("row references an unknown variable");
        if (value != 0.0) triplets_.emplace_back(num_rows_, col, value);
    }
    rhs_.push_back(rhs);
    return num_rows_++;
}

void ProgramBuilder::set_cost(int col, double value) {
    if (col < 0 || col >= num_vars_) throw InputError("cost references an unknown variable");
    costs_.emplace_back(col, value);
}

ConicProgram ProgramBuilder::build() const {
    ConicProgram p;
    p.blocks = blocks_;
    p.c = Eigen::VectorXd::Zero(num_vars_);
    for (const auto& [col, value] : costs_) p.c[col] += value;
    p.A.resize(num_rows_, num_vars_);
    p.A.setFromTriplets(triplets_.begin(), triplets_.end());
    p.A.makeCompressed();
    p.b = Eigen::Map<const Eigen::VectorXd>(rhs_.data(), static_cast<Eigen::Index>(rhs_.size()));
    return p;
}

}  // namespace mandet::conic
