#pragma once

#include "mandet/conic.hpp"

#include <algorithm>
#include <random>

namespace mandet::testing {

// Random SOCP with a strictly feasible primal point and a strictly feasible
// dual point, hence a finite optimum. A is banded so fill-in stays small.
inline conic::ConicProgram random_socp(std::mt19937_64& rng, int num_vars) {
    using namespace conic;
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::uniform_int_distribution<int> kind(0, 2);
    std::uniform_int_distribution<int> soc_dim(2, 6);

    ConicProgram p;
    int n = 0;
    while (n < num_vars) {
        ConeBlock b;
        switch (kind(rng)) {
            case 0: b = {ConeKind::Free, std::min(3, num_vars - n)}; break;
            case 1: b = {ConeKind::NonNeg, std::min(4, num_vars - n)}; break;
            default: b = {ConeKind::SecondOrder, soc_dim(rng)}; break;
        }
        if (b.kind == ConeKind::SecondOrder && b.dim > num_vars - n) b = {ConeKind::NonNeg, num_vars - n};
        p.blocks.push_back(b);
        n += b.dim;
    }

    auto interior = [&](bool dual) {
        Eigen::VectorXd v(n);
        int o = 0;
        for (const auto& b : p.blocks) {
            for (int j = 0; j < b.dim; ++j) v[o + j] = U(rng);
            if (b.kind == ConeKind::Free && dual) v.segment(o, b.dim).setZero();
            if (b.kind == ConeKind::NonNeg) v.segment(o, b.dim) = v.segment(o, b.dim).cwiseAbs().array() + 0.1;
            if (b.kind == ConeKind::SecondOrder) v[o] = v.segment(o + 1, b.dim - 1).norm() + 0.1 + std::abs(U(rng));
            o += b.dim;
        }
        return v;
    };

    const int m = std::max(1, n / 2);
    const int band = 8;
    std::vector<Triplet> t;
    for (int r = 0; r < m; ++r) {
        const int centre = static_cast<int>(static_cast<long>(r) * n / m);
        for (int j = std::max(0, centre - band); j < std::min(n, centre + band); ++j)
            if (U(rng) > -0.4) t.emplace_back(r, j, U(rng));
        t.emplace_back(r, centre, 2.0 + U(rng));
    }
    p.A.resize(m, n);
    p.A.setFromTriplets(t.begin(), t.end());
    p.A.makeCompressed();

    const Eigen::VectorXd xs = interior(false);
    const Eigen::VectorXd zs = interior(true);
    Eigen::VectorXd ys(m);
    for (int i = 0; i < m; ++i) ys[i] = U(rng);
    p.b = p.A * xs;
    p.c = p.A.transpose() * ys + zs;
    return p;
}

}  // namespace mandet::testing
