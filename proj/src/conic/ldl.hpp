#pragma once

// Sparse LDL' for quasi-definite KKT matrices with dynamic regularisation:
// each pivot has a prescribed sign, and pivots that are too small or of the
// wrong sign are replaced by sign * delta.

#include "mandet/conic.hpp"

#include <Eigen/SparseCore>

#include <vector>

namespace mandet::conic::detail {

class SparseLdl {
public:
    /// `lower` holds the lower triangle; `signs` the expected sign (+1/-1) of
    /// each pivot. Fixes the ordering and the pattern of L.
    void analyze(const SparseMatrix& lower, const std::vector<signed char>& signs);
    /// Numeric factorisation; the pattern must match the analysed one.
    /// Returns false on non-finite pivots.
    bool factorize(const SparseMatrix& lower, double eps, double delta);
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
    /// Pivots replaced in the last factorisation.
    int regularized_pivots() const { return regularized_; }

private:
    int n_ = 0;
    Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm_;  // old -> new
    SparseMatrix upper_;  // permuted matrix, upper triangle
    std::vector<int> parent_, lnz_, lp_, li_;
    std::vector<double> lx_, d_;
    std::vector<double> signs_;  // permuted
    std::vector<int> flag_, pattern_;
    std::vector<double> y_;
    int regularized_ = 0;
};

}  // namespace mandet::conic::detail
