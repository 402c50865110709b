#include <doctest.h>

#include "mandet/conic.hpp"
#include "mandet/errors.hpp"
#include "random_socp.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace mandet;
using namespace mandet::conic;

namespace {

ConicProgram soc_norm_problem() {
    ProgramBuilder b;
    const int t = b.add_block(ConeKind::SecondOrder, 3);
    b.add_row({{t + 1, 1.0}}, 1.0);
    b.add_row({{t + 2, 1.0}}, 1.0);
    b.set_cost(t, 1.0);
    return b.build();
}

ConicProgram lp_vertex_problem() {
    ProgramBuilder b;
    const int x = b.add_block(ConeKind::NonNeg, 2);
    b.add_row({{x, 1.0}, {x + 1, 1.0}}, 1.0);
    b.set_cost(x, -1.0);
    return b.build();
}

void check_optimal_kkt(const ConicProgram& p, const ConicSolution& s, double tol) {
    REQUIRE(s.status == SolveStatus::Optimal);
    const auto r = kkt_residuals(p, s);
    CHECK(r.primal <= tol);
    CHECK(r.dual <= tol);
    CHECK(r.gap <= tol);
    CHECK(r.primal_cone <= tol);
    CHECK(r.dual_cone <= tol);
}

}  // namespace

TEST_CASE("second-order cone minimum norm") {
    const auto p = soc_norm_problem();
    const auto s = solve(p);
    check_optimal_kkt(p, s, 1e-8);
    CHECK(s.x[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-8));
    CHECK(s.primal_obj == doctest::Approx(std::sqrt(2.0)).epsilon(1e-8));
}

TEST_CASE("LP vertex") {
    const auto p = lp_vertex_problem();
    const auto s = solve(p);
    check_optimal_kkt(p, s, 1e-8);
    CHECK(std::abs(s.x[0] - 1.0) <= 1e-8);
    CHECK(std::abs(s.x[1]) <= 1e-8);
}

TEST_CASE("primal infeasible with Farkas certificate") {
    ProgramBuilder b;
    const int x = b.add_block(ConeKind::NonNeg, 1);
    b.add_row({{x, 1.0}}, -1.0);
    const auto p = b.build();
    const auto s = solve(p);
    REQUIRE(s.status == SolveStatus::PrimalInfeasible);
    REQUIRE(s.certificate.size() == 1);
    CHECK(s.certificate.norm() == doctest::Approx(1.0));
    // A'y in K* and b'y < 0.
    const Eigen::VectorXd aty = p.A.transpose() * s.certificate;
    CHECK(aty[0] >= -1e-9);
    CHECK(p.b.dot(s.certificate) < 0.0);
}

TEST_CASE("primal infeasible second-order cone") {
    // t = 1, tail = (2, 0): no point of the cone.
    ProgramBuilder b;
    const int x = b.add_block(ConeKind::SecondOrder, 3);
    b.add_row({{x, 1.0}}, 1.0);
    b.add_row({{x + 1, 1.0}}, 2.0);
    const auto p = b.build();
    const auto s = solve(p);
    REQUIRE(s.status == SolveStatus::PrimalInfeasible);
    const Eigen::VectorXd aty = p.A.transpose() * s.certificate;
    CHECK(cone_violation(p.blocks, aty) <= 1e-8);
    CHECK(p.b.dot(s.certificate) < 0.0);
}

TEST_CASE("inconsistent duplicate rows caught in presolve") {
    ProgramBuilder b;
    const int x = b.add_block(ConeKind::Free, 2);
    b.add_row({{x, 1.0}, {x + 1, 1.0}}, 1.0);
    b.add_row({{x, 2.0}, {x + 1, 2.0}}, 3.0);
    const auto p = b.build();
    const auto s = solve(p);
    REQUIRE(s.status == SolveStatus::PrimalInfeasible);
    const Eigen::VectorXd aty = p.A.transpose() * s.certificate;
    CHECK(aty.norm() <= 1e-9);
    CHECK(p.b.dot(s.certificate) < 0.0);
}

TEST_CASE("dual infeasible (unbounded) with ray certificate") {
    ProgramBuilder b;
    const int x = b.add_block(ConeKind::NonNeg, 2);
    b.add_row({{x, 1.0}, {x + 1, -1.0}}, 0.0);
    b.set_cost(x, -1.0);
    const auto p = b.build();
    const auto s = solve(p);
    REQUIRE(s.status == SolveStatus::DualInfeasible);
    CHECK(s.certificate.norm() == doctest::Approx(1.0));
    CHECK((p.A * s.certificate).norm() <= 1e-8);
    CHECK(cone_violation(p.blocks, s.certificate) <= 1e-8);
    CHECK(p.c.dot(s.certificate) < 0.0);
}

TEST_CASE("redundant rows are removed and solution unaffected") {
    ProgramBuilder b;
    const int x = b.add_block(ConeKind::NonNeg, 2);
    b.add_row({{x, 1.0}, {x + 1, 1.0}}, 1.0);
    b.add_row({{x, 2.0}, {x + 1, 2.0}}, 2.0);
    b.add_row({}, 0.0);
    b.set_cost(x, -1.0);
    const auto p = b.build();
    const auto s = solve(p);
    check_optimal_kkt(p, s, 1e-8);
    CHECK(s.removed_rows == 2);
    CHECK(std::abs(s.x[0] - 1.0) <= 1e-8);
}

TEST_CASE("rotated cone mapping") {
    Eigen::VectorXd uvw(4);
    uvw << 1.0, 1.0, std::sqrt(2.0), 0.0;
    const Eigen::VectorXd tsw = RotatedCone::to_standard(uvw);
    CHECK(std::abs(tsw[0] - tsw.tail(3).norm()) <= 1e-12);
    CHECK((RotatedCone::from_standard(tsw) - uvw).norm() <= 1e-15);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.0, 2.0);
    std::vector<ConeBlock> q{{ConeKind::SecondOrder, 5}};
    for (int k = 0; k < 200; ++k) {
        Eigen::VectorXd p(5);
        p << U(rng), U(rng), U(rng) - 1.0, U(rng) - 1.0, U(rng) - 1.0;
        const double need = p.tail(3).squaredNorm();
        if (2.0 * p[0] * p[1] < need) p[1] = need / (2.0 * p[0]) + 1e-3;
        CHECK(cone_violation(q, RotatedCone::to_standard(p)) <= 1e-12);
    }
    // w = 0: any nonnegative (u, v) lands in the cone.
    Eigen::VectorXd z(3);
    z << 0.0, 3.0, 0.0;
    CHECK(cone_violation({{ConeKind::SecondOrder, 3}}, RotatedCone::to_standard(z)) <= 1e-15);
}

TEST_CASE("random feasible-by-construction SOCPs") {
    std::mt19937_64 rng(2024);
    for (int size : {20, 60, 200, 1000}) {
        for (int rep = 0; rep < 3; ++rep) {
            const auto p = testing::random_socp(rng, size);
            const auto s = solve(p);
            check_optimal_kkt(p, s, 1e-7);
            CHECK(s.primal_obj >= s.dual_obj - 1e-7 * (1.0 + std::abs(s.primal_obj)));
        }
    }
}

TEST_CASE("row and objective scaling invariance") {
    std::mt19937_64 rng(77);
    const auto p = testing::random_socp(rng, 80);
    auto q = p;
    Eigen::VectorXd d(p.num_rows());
    std::uniform_real_distribution<double> U(0.1, 10.0);
    for (int i = 0; i < d.size(); ++i) d[i] = U(rng);
    q.A = d.asDiagonal() * p.A;
    q.b = d.asDiagonal() * p.b;
    q.c = 7.5 * p.c;
    const auto sp = solve(p);
    const auto sq = solve(q);
    REQUIRE(sp.status == SolveStatus::Optimal);
    REQUIRE(sq.status == SolveStatus::Optimal);
    CHECK((sp.x - sq.x).lpNorm<Eigen::Infinity>() <= 1e-6);
    CHECK(sq.primal_obj == doctest::Approx(7.5 * sp.primal_obj).epsilon(1e-7));
}

TEST_CASE("program and solution text round trip") {
    std::mt19937_64 rng(5);
    const auto p = testing::random_socp(rng, 30);
    std::stringstream ss;
    write_program(ss, p);
    const auto back = read_program(ss);
    CHECK((back.c - p.c).norm() == 0.0);
    CHECK((back.b - p.b).norm() == 0.0);
    CHECK(Eigen::MatrixXd(back.A - p.A).norm() == 0.0);
    REQUIRE(back.blocks.size() == p.blocks.size());

    const auto s = solve(p);
    std::stringstream so;
    write_solution(so, s);
    const auto sb = read_solution(so);
    CHECK(sb.status == s.status);
    CHECK((sb.x - s.x).norm() == 0.0);
    CHECK(sb.iterations == s.iterations);
}

TEST_CASE("malformed program text is rejected with a line number") {
    std::istringstream bad("conic_program 1\nvars 2 rows 1\nblocks 1\nL 3\n");
    try {
        read_program(bad);
        FAIL("expected InputError");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
}

TEST_CASE("structural validation") {
    ConicProgram p;
    p.blocks = {{ConeKind::SecondOrder, 1}};
    p.c = Eigen::VectorXd::Zero(1);
    p.A.resize(0, 1);
    p.b.resize(0);
    CHECK_THROWS_AS(solve(p), InputError);
}
