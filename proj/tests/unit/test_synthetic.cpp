#include <doctest.h>

#include "mandet/errors.hpp"
#include "mandet/synthetic.hpp"

#include <cmath>

using namespace mandet;

namespace {

CartesianState geo() { return coe_to_cart({42164.17, 2e-4, 1e-3, 1.0, 0.5, 0.0}, kEarthMu); }

}  // namespace

TEST_CASE("no events is plain propagation") {
    const auto model = AccelerationModel::two_body_j2();
    const PropagatorSettings ps;
    const auto a = propagate_with_impulses(model, geo(), Epoch{0}, Epoch{7200}, {}, ps);
    const auto b = propagate(model, geo(), Epoch{0}, Epoch{7200}, ps);
    CHECK((a.vector() - b.vector()).norm() == 0.0);
}

TEST_CASE("impulse rotates into the local frame") {
    const auto model = AccelerationModel::two_body();
    const PropagatorSettings ps;
    const Vec3 dv{1e-4, 2e-4, -3e-4};
    const auto after = propagate_with_impulses(model, geo(), Epoch{0}, Epoch{3600}, {{Epoch{0}, dv}}, ps);
    CartesianState kicked = geo();
    const Mat3 r = rtn_frame(kicked);
    kicked.velocity += r.transpose() * dv;
    const auto ref = propagate(model, kicked, Epoch{0}, Epoch{3600}, ps);
    CHECK((after.vector() - ref.vector()).norm() < 1e-9);
    // R is radial, N along angular momentum.
    CHECK(r.row(0).dot(geo().position.normalized()) == doctest::Approx(1.0));
    CHECK(r.row(2).dot(geo().position.cross(geo().velocity).normalized()) == doctest::Approx(1.0));
}

TEST_CASE("event order does not matter") {
    const auto model = AccelerationModel::two_body();
    const PropagatorSettings ps;
    std::vector<ImpulseEvent> ev{{Epoch{3000}, Vec3{0, 1e-4, 0}}, {Epoch{1000}, Vec3{0, 0, 1e-4}}};
    const auto a = propagate_with_impulses(model, geo(), Epoch{0}, Epoch{5000}, ev, ps);
    std::swap(ev[0], ev[1]);
    const auto b = propagate_with_impulses(model, geo(), Epoch{0}, Epoch{5000}, ev, ps);
    CHECK((a.vector() - b.vector()).norm() == 0.0);
    CHECK_THROWS_AS(propagate_with_impulses(model, geo(), Epoch{0}, Epoch{5000}, {{Epoch{5000}, Vec3::Zero()}}, ps),
                    InputError);
}

TEST_CASE("node burns") {
    const auto g = NodeGrid::uniform(Epoch{0}, Epoch{100}, 10);
    const auto ev = node_burns(g, 3, 4, Vec3{0, 1, 0});
    REQUIRE(ev.size() == 4);
    CHECK(ev.front().epoch.t == doctest::Approx(30.0));
    CHECK(ev.back().epoch.t == doctest::Approx(60.0));
    CHECK_THROWS_AS(node_burns(g, 8, 3, Vec3::Zero()), InputError);
}

TEST_CASE("noisy truth pairs are seeded draws") {
    const auto model = AccelerationModel::two_body();
    const Mat6 cov = diagonal_covariance(0.1, 1e-5);
    const auto a = make_truth_pair(model, geo(), Epoch{0}, Epoch{3600}, {}, cov, cov, true, 11);
    const auto b = make_truth_pair(model, geo(), Epoch{0}, Epoch{3600}, {}, cov, cov, true, 11);
    const auto c = make_truth_pair(model, geo(), Epoch{0}, Epoch{3600}, {}, cov, cov, false, 11);
    CHECK((a.boundary0.mean.vector() - b.boundary0.mean.vector()).norm() == 0.0);
    CHECK((c.boundary0.mean.vector() - c.truth0.vector()).norm() == 0.0);
    const Vec6 d = a.boundaryF.mean.vector() - a.truthF.vector();
    CHECK(d.norm() > 0.0);
    CHECK(d.head<3>().norm() < 1.0);  // 0.1 km per axis
    CHECK(diagonal_covariance(2, 3)(4, 4) == 9.0);
}
