#include "ldl.hpp"

#include <Eigen/OrderingMethods>

#include <cmath>

namespace mandet::conic::detail {

void SparseLdl::analyze(const SparseMatrix& lower, const std::vector<signed char>& signs) {
    n_ = static_cast<int>(lower.rows());
    Eigen::AMDOrdering<int> amd;
    Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> pinv;  // new -> old
    const SparseMatrix full = SparseMatrix(lower.selfadjointView<Eigen::Lower>());
    amd(full, pinv);
    perm_ = pinv.inverse();
    signs_.resize(n_);
    for (int k = 0; k < n_; ++k) signs_[k] = signs[static_cast<std::size_t>(pinv.indices()[k])];

    upper_.resize(n_, n_);
    upper_.selfadjointView<Eigen::Upper>() = lower.selfadjointView<Eigen::Lower>().twistedBy(perm_);
    upper_.makeCompressed();

    // Elimination tree and column counts of L.
    parent_.assign(n_, -1);
    lnz_.assign(n_, 0);
    flag_.assign(n_, -1);
    for (int k = 0; k < n_; ++k) {
        flag_[k] = k;
        for (SparseMatrix::InnerIterator it(upper_, k); it; ++it) {
            int i = it.row();
            if (i >= k) continue;
            for (; flag_[i] != k; i = parent_[i]) {
                if (parent_[i] == -1) parent_[i] = k;
                ++lnz_[i];
                flag_[i] = k;
            }
        }
    }
    lp_.assign(n_ + 1, 0);
    for (int k = 0; k < n_; ++k) lp_[k + 1] = lp_[k] + lnz_[k];
    li_.assign(lp_[n_], 0);
    lx_.assign(lp_[n_], 0.0);
    d_.assign(n_, 0.0);
    y_.assign(n_, 0.0);
    pattern_.assign(n_, 0);
}

bool SparseLdl::factorize(const SparseMatrix& lower, double eps, double delta) {
    upper_.selfadjointView<Eigen::Upper>() = lower.selfadjointView<Eigen::Lower>().twistedBy(perm_);
    regularized_ = 0;
    for (int k = 0; k < n_; ++k) {
        y_[k] = 0.0;
        int top = n_;
        flag_[k] = k;
        lnz_[k] = 0;
        for (SparseMatrix::InnerIterator it(upper_, k); it; ++it) {
            int i = it.row();
            if (i > k) continue;
            y_[i] += it.value();
            int len = 0;
            for (; flag_[i] != k; i = parent_[i]) {
                pattern_[len++] = i;
                flag_[i] = k;
            }
            while (len > 0) pattern_[--top] = pattern_[--len];
        }
        double dk = y_[k];
        y_[k] = 0.0;
        for (; top < n_; ++top) {
            const int i = pattern_[top];
            const double yi = y_[i];
            y_[i] = 0.0;
            const int p2 = lp_[i] + lnz_[i];
            int p = lp_[i];
            for (; p < p2; ++p) y_[li_[p]] -= lx_[p] * yi;
            const double lki = yi / d_[i];
            dk -= lki * yi;
            li_[p] = k;
            lx_[p] = lki;
            ++lnz_[i];
        }
        const double sign = signs_[k];
        if (!std::isfinite(dk)) return false;
        if (sign * dk <= eps) {
            dk = sign * delta;
            ++regularized_;
        }
        d_[k] = dk;
    }
    return true;
}

Eigen::VectorXd SparseLdl::solve(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd x = perm_ * rhs;
    for (int j = 0; j < n_; ++j)
        for (int p = lp_[j]; p < lp_[j + 1]; ++p) x[li_[p]] -= lx_[p] * x[j];
    for (int j = 0; j < n_; ++j) x[j] /= d_[j];
    for (int j = n_ - 1; j >= 0; --j)
        for (int p = lp_[j]; p < lp_[j + 1]; ++p) x[j] -= lx_[p] * x[li_[p]];
    return perm_.inverse() * x;
}

}  // namespace mandet::conic::detail
