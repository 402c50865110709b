#include <doctest.h>

#include "mandet/errors.hpp"
#include "mandet/synthetic.hpp"
#include "mandet/uncertainty.hpp"

#include <cmath>
#include <functional>
#include <random>

using namespace mandet;

namespace {

// E[prod x_i^k_i] for a standard normal vector, by the double factorial rule.
double gaussian_monomial(const std::vector<int>& powers) {
    double m = 1.0;
    for (int k : powers) {
        if (k % 2) return 0.0;
        for (int j = k - 1; j > 1; j -= 2) m *= j;
    }
    return m;
}

void check_moments_through(const SigmaPointSet& s, int order, double tol) {
    const int n = s.dim;
    // Every monomial of degree <= order, enumerated as index multisets.
    std::vector<int> idx;
    std::function<void(int)> rec = [&](int start) {
        if (!idx.empty()) {
            std::vector<int> powers(n, 0);
            for (int i : idx) ++powers[i];
            double acc = 0.0;
            for (std::size_t p = 0; p < s.points.size(); ++p) {
                double v = s.weights[p];
                for (int i : idx) v *= s.points[p][i];
                acc += v;
            }
            CHECK(std::abs(acc - gaussian_monomial(powers)) <= tol);
        }
        if (static_cast<int>(idx.size()) == order) return;
        for (int i = start; i < n; ++i) {
            idx.push_back(i);
            rec(i);
            idx.pop_back();
        }
    };
    rec(0);
    double w = 0.0;
    for (double x : s.weights) w += x;
    CHECK(std::abs(w - 1.0) <= 1e-12);
}

ManeuverProblemSpec geo_day(const std::vector<ImpulseEvent>& events, const Mat6& cov, std::uint64_t seed, int n) {
    const auto model = AccelerationModel::two_body_j2();
    const auto x0 = coe_to_cart({42164.17, 2e-4, 1e-3, 1.0, 0.5, 0.0}, kEarthMu);
    const auto tp = make_truth_pair(model, x0, Epoch{0}, Epoch{86400}, events, cov, cov, true, seed);
    ManeuverProblemSpec spec;
    spec.boundary0 = tp.boundary0;
    spec.boundaryF = tp.boundaryF;
    spec.model = model;
    spec.coords = CoordSet::MEE;
    spec.n_segments = n;
    return spec;
}

}  // namespace

TEST_CASE("chi-square cdf and quantile") {
    // dof 2 is exponential with mean 2.
    for (double x : {0.1, 1.0, 5.0, 20.0}) CHECK(chi2_cdf(x, 2) == doctest::Approx(1.0 - std::exp(-x / 2)).epsilon(1e-14));
    // dof 4: 1 - e^{-x/2}(1 + x/2)
    CHECK(chi2_cdf(3.0, 4) == doctest::Approx(1.0 - std::exp(-1.5) * 2.5).epsilon(1e-14));
    CHECK(std::abs(chi2_quantile(0.95, 6) - 12.5916) <= 1e-3);
    for (double c : {0.01, 0.5, 0.68, 0.95, 0.999})
        for (int dof : {2, 6, 12}) CHECK(std::abs(chi2_cdf(chi2_quantile(c, dof), dof) - c) <= 1e-10);
    CHECK_THROWS_AS(chi2_quantile(1.0, 6), InputError);
    CHECK_THROWS_AS(chi2_quantile(0.5, 3), InputError);
}

TEST_CASE("cut4 point counts and moments") {
    for (int n : {2, 3, 6, 12}) {
        CAPTURE(n);
        const auto s = cut4_points(n);
        CHECK(static_cast<int>(s.points.size()) == 1 + 2 * n + (1 << n));
        check_moments_through(s, 4, 1e-10);
    }
    CHECK(cut4_points(12).points.size() == 4121);
}

TEST_CASE("unscented points match moments through order 2") {
    for (int n : {2, 6, 12}) {
        const auto s = unscented_points(n);
        CHECK(static_cast<int>(s.points.size()) == 2 * n + 1);
        check_moments_through(s, 2, 1e-12);
    }
}

TEST_CASE("monte carlo points are seeded") {
    const auto a = monte_carlo_points(12, 50, 9);
    const auto b = monte_carlo_points(12, 50, 9);
    const auto c = monte_carlo_points(12, 50, 10);
    REQUIRE(a.points.size() == 50);
    CHECK((a.points[7] - b.points[7]).norm() == 0.0);
    CHECK((a.points[7] - c.points[7]).norm() > 0.0);
}

TEST_CASE("weighted moments") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> w(40), x(40);
    for (int i = 0; i < 40; ++i) {
        w[i] = u(rng);
        x[i] = std::pow(u(rng), 2);
    }
    double sw = 0, m = 0;
    for (int i = 0; i < 40; ++i) sw += w[i], m += w[i] * x[i];
    m /= sw;
    double c2 = 0, c3 = 0, c4 = 0;
    for (int i = 0; i < 40; ++i) {
        const double d = x[i] - m;
        c2 += w[i] * d * d / sw;
        c3 += w[i] * d * d * d / sw;
        c4 += w[i] * d * d * d * d / sw;
    }
    const auto mm = weighted_moments(w, x);
    CHECK(mm.mean == doctest::Approx(m).epsilon(1e-14));
    CHECK(mm.variance == doctest::Approx(c2).epsilon(1e-13));
    CHECK(mm.skewness == doctest::Approx(c3 / std::pow(c2, 1.5)).epsilon(1e-12));
    CHECK(mm.kurtosis == doctest::Approx(c4 / (c2 * c2)).epsilon(1e-12));
}

TEST_CASE("detection verdict") {
    DetectionCurve curve;
    curve.points.push_back({0.5, 2e-5, ScpStatus::Converged});
    curve.points.push_back({0.95, 7e-6, ScpStatus::Converged});
    const auto v = detect(curve, 0.95, 7e-6);
    CHECK_FALSE(v.maneuver);
    CHECK(v.margin == 0.0);
    CHECK(detect(curve, 0.5, 7e-6).maneuver);
    CHECK_THROWS_AS(detect(curve, 0.9, 7e-6), InputError);
}

TEST_CASE("detection curves on synthetic pairs") {
    const Mat6 cov = diagonal_covariance(0.1, 1e-5);
    const std::vector<double> conf{0.1, 0.5, 0.9, 0.95, 0.99};
    const auto quiet = mahalanobis_sweep(geo_day({}, cov, 1, 48), conf);
    const auto burn = mahalanobis_sweep(geo_day({{Epoch{30000}, Vec3{0, 2e-4, 0}}}, cov, 2, 48), conf);
    for (const auto* c : {&quiet, &burn}) {
        REQUIRE(c->points.size() == conf.size());
        for (std::size_t k = 0; k < conf.size(); ++k) {
            REQUIRE(c->points[k].solved());
            CHECK(c->points[k].validation_miss <= 0.05);
            if (k) CHECK(c->points[k].total_dv <= c->points[k - 1].total_dv + 1e-9 * 1e-3);
        }
    }
    CHECK_FALSE(detect(quiet, 0.95, 7e-6).maneuver);
    CHECK(detect(burn, 0.95, 7e-6).total_dv >= 10 * 7e-6);
    CHECK_THROWS_AS(mahalanobis_sweep(geo_day({}, cov, 1, 48), {0.5, 0.4}), InputError);
}

TEST_CASE("estimate with known boundaries collapses to the nominal answer") {
    auto spec = geo_day({{Epoch{30000}, Vec3{0, 2e-4, 0}}}, Mat6::Zero(), 0, 24);
    const auto nominal = run_scp(spec);
    REQUIRE(nominal.status == ScpStatus::Converged);
    EstimateOptions opt;
    opt.scheme = SigmaScheme::Unscented;
    const auto st = estimate(spec, opt);
    CHECK(st.point_count == 25);
    CHECK(st.failures == 0);
    CHECK(st.moments.variance == 0.0);
    CHECK(st.moments.mean == doctest::Approx(nominal.total_dv).epsilon(1e-9));
    CHECK_FALSE(st.fit.has_value());
    CHECK_FALSE(st.fit_note.empty());
}

TEST_CASE("estimate moments recompute from per-point results and are reproducible") {
    const Mat6 cov = diagonal_covariance(0.1, 1e-5);
    const auto spec = geo_day({{Epoch{30000}, Vec3{0, 2e-4, 0}}}, cov, 4, 24);
    EstimateOptions opt;
    opt.scheme = SigmaScheme::MonteCarlo;
    opt.monte_carlo_count = 16;
    opt.seed = 5;
    const auto a = estimate(spec, opt);
    const auto b = estimate(spec, opt);
    REQUIRE(a.failures == 0);
    std::vector<double> w, x;
    for (const auto& p : a.per_point_results) {
        w.push_back(p.weight);
        x.push_back(p.total_dv);
    }
    const auto m = weighted_moments(w, x);
    CHECK(std::abs(m.mean - a.moments.mean) <= 1e-12 * std::abs(a.moments.mean));
    CHECK(std::abs(m.variance - a.moments.variance) <= 1e-12 * a.moments.variance);
    REQUIRE(a.per_point_results.size() == b.per_point_results.size());
    for (std::size_t k = 0; k < a.per_point_results.size(); ++k) {
        CHECK(a.per_point_results[k].index == b.per_point_results[k].index);
        CHECK(a.per_point_results[k].total_dv == b.per_point_results[k].total_dv);
    }
    CHECK(a.per_node_mean.size() == static_cast<std::size_t>(a.grid.segments() + 1));
}
