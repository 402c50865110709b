// End-to-end acceptance run. One PASS/FAIL line per criterion; exit status 1
// when any criterion fails.
#include "mandet/cli.hpp"
#include "mandet/conic.hpp"
#include "mandet/pearson.hpp"
#include "mandet/stm.hpp"
#include "mandet/uncertainty.hpp"

#include "../unit/random_socp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

using namespace mandet;
namespace fs = std::filesystem;

namespace {

constexpr double kMps = 1e3;

double seconds_since(std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

struct Verdict {
    bool pass = true;
    std::ostringstream detail;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

int failures = 0;

void report(int id, const std::string& title, Verdict& v) {
    std::printf("CRITERION %2d %s: %s%s\n", id, v.pass ? "PASS" : "FAIL", title.c_str(), v.detail.str().c_str());
    std::fflush(stdout);
    failures += !v.pass;
}

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

// Every solve made for the shipped scenarios, for criteria 3 and 11.
struct SolveRecord {
    std::string where;
    bool perfect = true;
    double gap = 0.0;    // km/s
    double scale = 0.0;  // km/s, gap allowance is 1e-7 * scale
    double miss = 0.0;   // km (perfect) or Mahalanobis units
};

struct ScenarioRun {
    cli::Scenario sc;
    std::optional<ManeuverSolution> solution;
    std::optional<DetectionCurve> curve;
    std::optional<ManeuverStatistics> stats;
    double seconds = 0.0;
};

double gap_scale(double dv_max, double total) {
    return std::max(std::isfinite(dv_max) ? dv_max : total, 1e-9);
}

std::map<std::string, ScenarioRun> run_shipped(const fs::path& dir, std::vector<SolveRecord>& records) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::map<std::string, ScenarioRun> runs;
    for (const auto& f : files) {
        ScenarioRun r{cli::load_scenario(f)};
        const auto& spec = r.sc.spec;
        const auto t0 = std::chrono::steady_clock::now();
        switch (r.sc.kind) {
            case cli::ScenarioKind::Perfect: {
                r.solution = run_scp(spec);
                const auto& s = *r.solution;
                if (s.status == ScpStatus::Converged)
                    records.push_back({r.sc.name, true, s.max_relaxation_gap, gap_scale(spec.dv_max, s.total_dv),
                                       s.validation_miss_km});
                break;
            }
            case cli::ScenarioKind::Mahalanobis:
                r.curve = mahalanobis_sweep(spec, r.sc.detect.confidences, spec.threads);
                for (const auto& p : r.curve->points)
                    if (p.solved())
                        records.push_back({r.sc.name + "@" + fmt("%g", p.confidence), false, p.relaxation_gap,
                                           gap_scale(spec.dv_max, p.total_dv), p.validation_miss});
                break;
            case cli::ScenarioKind::SigmaPoints:
                r.stats = estimate(spec, r.sc.estimate);
                for (const auto& p : r.stats->per_point_results)
                    if (p.solved())
                        records.push_back({r.sc.name + "#" + std::to_string(p.index), false, p.relaxation_gap,
                                           gap_scale(spec.dv_max, p.total_dv), p.validation_miss});
                break;
        }
        r.seconds = seconds_since(t0);
        std::printf("  ran %-20s %8.2f s\n", r.sc.name.c_str(), r.seconds);
        std::fflush(stdout);
        runs.emplace(r.sc.name, std::move(r));
    }
    return runs;
}

const ManeuverSolution* solution_of(const std::map<std::string, ScenarioRun>& runs, const std::string& name,
                                    Verdict& v) {
    auto it = runs.find(name);
    if (it == runs.end() || !it->second.solution) {
        v.require(false, "scenario " + name + " missing");
        return nullptr;
    }
    const auto& s = *it->second.solution;
    v.require(s.status == ScpStatus::Converged, name + " status " + std::string(to_string(s.status)));
    return s.status == ScpStatus::Converged ? &s : nullptr;
}

void criterion1(const std::map<std::string, ScenarioRun>& runs) {
    Verdict v;
    if (const auto* s = solution_of(runs, "geo_impulse", v)) {
        const double total = s->total_dv * kMps;
        double near = 0.0;
        const int burn = 300;  // 5 h on 1 min nodes
        for (int i = burn - 2; i <= burn + 2; ++i) near += s->dv_mags[i];
        const double share = near / s->total_dv;
        const double secs = runs.at("geo_impulse").seconds;
        v.detail << " total " << fmt("%.6f", total) << " m/s, share within +-2 nodes " << fmt("%.6f", share)
                 << ", runtime " << fmt("%.2f", secs) << " s";
        v.require(total >= 0.99 && total <= 1.01, "total outside [0.99, 1.01]");
        v.require(share >= 0.99, "share below 0.99");
        v.require(secs <= 60.0, "runtime above 60 s");
    }
    report(1, "synthetic impulse recovery", v);
}

void criterion2(const std::map<std::string, ScenarioRun>& runs) {
    Verdict v;
    if (const auto* s = solution_of(runs, "geo_lowthrust", v)) {
        const double dv_max = runs.at("geo_lowthrust").sc.spec.dv_max;
        const auto act = active_nodes(*s, dv_max);
        v.require(!act.empty(), "no active impulses");
        if (!act.empty()) {
            const double dt = s->grid.epochs[1].t - s->grid.epochs[0].t;
            const double span_h = (act.back() - act.front() + 1) * dt / 3600.0;
            double w = 0, wi = 0;
            for (int i : act) {
                w += s->dv_mags[i];
                wi += s->dv_mags[i] * i;
            }
            const double centroid = wi / w;
            const int count = static_cast<int>(act.size());
            v.detail << " active " << count << ", span " << fmt("%.3f", span_h) << " h (nodes " << act.front()
                     << ".." << act.back() << "), centroid node " << fmt("%.2f", centroid);
            v.require(std::abs(count - 167) <= 10, "count outside 167 +- 10");
            v.require(std::abs(span_h - 2.8) <= 0.2, "span outside 2.8 +- 0.2 h");
            v.require(std::abs(centroid - 300.0) <= 3.0, "centroid more than 3 nodes from the burn");
        }
    }
    report(2, "low-thrust splitting", v);
}

void criterion3(const std::vector<SolveRecord>& records, std::size_t scenarios) {
    Verdict v;
    double worst = 0.0;
    std::string where;
    for (const auto& r : records) {
        const double ratio = r.gap / r.scale;
        if (ratio > worst) worst = ratio, where = r.where;
    }
    v.detail << " " << records.size() << " optimal solves over " << scenarios << " scenarios, worst gap/dv_max "
             << fmt("%.2e", worst) << (where.empty() ? "" : " at " + where);
    v.require(!records.empty(), "no solves");
    v.require(worst <= 1e-7, "gap above 1e-7 dv_max");
    report(3, "relaxation tightness", v);
}

void criterion4(const std::map<std::string, ScenarioRun>& runs) {
    Verdict v;
    for (const char* name : {"detect_quiet", "detect_burn"}) {
        auto it = runs.find(name);
        if (it == runs.end() || !it->second.curve) {
            v.require(false, std::string(name) + " missing");
            continue;
        }
        const auto& c = *it->second.curve;
        const auto& d = it->second.sc.detect;
        bool solved = true, monotone = true;
        for (std::size_t k = 0; k < c.points.size(); ++k) {
            solved = solved && c.points[k].solved();
            if (k && c.points[k].total_dv > c.points[k - 1].total_dv + 1e-9 / kMps) monotone = false;
        }
        v.require(solved, std::string(name) + " has unsolved points");
        v.require(monotone, std::string(name) + " not non-increasing");
        const auto verdict = detect(c, d.decision_confidence, d.threshold);
        const double dv = verdict.total_dv * kMps, thr = d.threshold * kMps;
        v.detail << " " << name << " dV(95%) " << fmt("%.6g", dv) << " m/s;";
        if (std::string(name) == "detect_quiet")
            v.require(dv < thr && !verdict.maneuver, "quiet pair flagged");
        else
            v.require(dv >= 10.0 * thr && verdict.maneuver, "burn pair below 10x threshold");
    }
    v.detail << " threshold 0.007 m/s, monotone within 1e-9 m/s";
    report(4, "detection curves", v);
}

double gaussian_monomial(const std::vector<int>& powers) {
    double m = 1.0;
    for (int k : powers) {
        if (k % 2) return 0.0;
        for (int j = k - 1; j > 1; j -= 2) m *= j;
    }
    return m;
}

double worst_moment_error(const SigmaPointSet& s, int order) {
    const int n = s.dim;
    std::vector<int> idx;
    double worst = 0.0;
    std::function<void(int)> rec = [&](int start) {
        if (!idx.empty()) {
            std::vector<int> powers(n, 0);
            for (int i : idx) ++powers[i];
            double acc = 0.0;
            for (std::size_t p = 0; p < s.points.size(); ++p) {
                double w = s.weights[p];
                for (int i : idx) w *= s.points[p][i];
                acc += w;
            }
            worst = std::max(worst, std::abs(acc - gaussian_monomial(powers)));
        }
        if (static_cast<int>(idx.size()) == order) return;
        for (int i = start; i < n; ++i) {
            idx.push_back(i);
            rec(i);
            idx.pop_back();
        }
    };
    rec(0);
    return worst;
}

void criterion5(const std::map<std::string, ScenarioRun>& runs) {
    Verdict v;
    const auto s12 = cut4_points(12);
    v.detail << " n=12 points " << s12.points.size() << ";";
    v.require(s12.points.size() == 4121, "n=12 count is not 4121");
    for (int n : {2, 3, 6, 12}) {
        const double err = worst_moment_error(n == 12 ? s12 : cut4_points(n), 4);
        v.detail << " n=" << n << " err " << fmt("%.1e", err);
        v.require(err <= 1e-10, "moments of n=" + std::to_string(n));
    }
    if (auto it = runs.find("ewsk_cut4"); it != runs.end() && it->second.stats) {
        v.detail << "; ewsk_cut4 reports " << it->second.stats->point_count << " points";
        v.require(it->second.stats->point_count == 4121, "estimate point count");
    }
    report(5, "CUT-4 construction", v);
}

void criterion6() {
    Verdict v;
    const double q = chi2_quantile(0.95, 6);
    double worst = 0.0;
    for (int dof : {2, 4, 6, 12})
        for (double c = 0.005; c < 1.0; c += 0.0497) worst = std::max(worst, std::abs(chi2_cdf(chi2_quantile(c, dof), dof) - c));
    v.detail << " q(0.95, 6) = " << fmt("%.6f", q) << ", worst |F(q(c)) - c| " << fmt("%.1e", worst);
    v.require(std::abs(q - 12.5916) <= 1e-3, "quantile");
    v.require(worst <= 1e-10, "inverse property");
    report(6, "chi-square quantile", v);
}

void criterion7() {
    using namespace conic;
    Verdict v;
    auto kkt_ok = [](const ConicProgram& p, const ConicSolution& s, double tol) {
        if (s.status != SolveStatus::Optimal) return false;
        const auto r = kkt_residuals(p, s);
        return r.primal <= tol && r.dual <= tol && r.gap <= tol && r.primal_cone <= tol && r.dual_cone <= tol;
    };
    {
        ProgramBuilder b;
        const int t = b.add_block(ConeKind::SecondOrder, 3);
        b.add_row({{t + 1, 1.0}}, 1.0);
        b.add_row({{t + 2, 1.0}}, 1.0);
        b.set_cost(t, 1.0);
        const auto p = b.build();
        const auto s = solve(p);
        v.require(kkt_ok(p, s, 1e-8) && std::abs(s.primal_obj - std::sqrt(2.0)) <= 1e-8, "minimum norm problem");
    }
    {
        ProgramBuilder b;
        const int x = b.add_block(ConeKind::NonNeg, 2);
        b.add_row({{x, 1.0}, {x + 1, 1.0}}, 1.0);
        b.set_cost(x, -1.0);
        const auto p = b.build();
        const auto s = solve(p);
        v.require(kkt_ok(p, s, 1e-8) && std::abs(s.x[0] - 1.0) <= 1e-8 && std::abs(s.x[1]) <= 1e-8, "LP vertex");
    }
    {
        ProgramBuilder b;
        const int x = b.add_block(ConeKind::NonNeg, 1);
        b.add_row({{x, 1.0}}, -1.0);
        const auto p = b.build();
        const auto s = solve(p);
        const Eigen::VectorXd aty = p.A.transpose() * s.certificate;
        v.require(s.status == SolveStatus::PrimalInfeasible && s.certificate.size() == 1 &&
                      cone_violation(p.blocks, aty) <= 1e-9 && p.b.dot(s.certificate) < 0.0,
                  "primal infeasibility certificate");
    }
    {
        ProgramBuilder b;
        const int x = b.add_block(ConeKind::NonNeg, 2);
        b.add_row({{x, 1.0}, {x + 1, -1.0}}, 0.0);
        b.set_cost(x, -1.0);
        const auto p = b.build();
        const auto s = solve(p);
        v.require(s.status == SolveStatus::DualInfeasible && s.certificate.size() == 2 &&
                      (p.A * s.certificate).norm() <= 1e-8 && cone_violation(p.blocks, s.certificate) <= 1e-8 &&
                      p.c.dot(s.certificate) < 0.0,
                  "dual infeasibility certificate");
    }
    std::mt19937_64 rng(20240607);
    int solved = 0, largest = 0;
    double worst = 0.0;
    const auto t0 = std::chrono::steady_clock::now();
    for (int k = 0; k < 100; ++k) {
        const int n = static_cast<int>(std::lround(10.0 * std::pow(1000.0, k / 99.0)));
        const auto p = testing::random_socp(rng, n);
        const auto s = solve(p);
        largest = std::max(largest, p.num_vars());
        if (s.status != SolveStatus::Optimal) continue;
        const auto r = kkt_residuals(p, s);
        const double m = std::max({r.primal, r.dual, r.gap, r.primal_cone, r.dual_cone});
        worst = std::max(worst, m);
        solved += m <= 1e-7;
    }
    v.detail << " analytic problems and both certificates checked; random SOCPs " << solved << "/100 within 1e-7 "
             << "(largest " << largest << " variables, worst residual " << fmt("%.1e", worst) << ", "
             << fmt("%.1f", seconds_since(t0)) << " s)";
    v.require(solved == 100, "random SOCPs");
    report(7, "conic solver", v);
}

void criterion8() {
    Verdict v;
    const auto model = AccelerationModel::two_body_j2();
    const CartesianState gto = coe_to_cart({24326.0, 0.7284, 0.1, 0.5, 0.2, 1.0}, kEarthMu);
    std::mt19937_64 rng(8);
    std::normal_distribution<double> N(0.0, 1.0);
    double worst_ratio = 0.0;
    for (CoordSet cs : {CoordSet::CC, CoordSet::COE, CoordSet::MEE}) {
        const auto grid = NodeGrid::uniform(Epoch{0.0}, Epoch{21600.0}, 3);
        const auto ref = build_reference(model, gto, grid, cs, {}, {});
        const auto stms = compute_stms(model, ref, {});
        const Vec6 scale = unit_scales(cs, 24326.0, std::sqrt(kEarthMu / 24326.0));
        for (int i = 0; i < grid.segments(); ++i) {
            Vec6 dir;
            for (int j = 0; j < 6; ++j) dir[j] = N(rng) * scale[j];
            dir *= 1e-5 / dir.cwiseQuotient(scale).norm();
            auto remainder = [&](double f) {
                const Vec6 d = f * dir;
                const Vec6 nl = segment_map(model, cs, ref.nodes[i] + d, ref.impulses[i], ref.schedules[i]);
                return (coord_difference(cs, nl, ref.nodes[i + 1]) - stms.R[i] * d).cwiseQuotient(scale).norm();
            };
            const double e1 = remainder(1.0), e2 = remainder(0.5), e4 = remainder(0.25);
            for (double ratio : {e1 / e2, e2 / e4}) worst_ratio = std::max(worst_ratio, std::abs(ratio / 4.0 - 1.0));
        }
    }
    const auto two = AccelerationModel::two_body();
    const auto grid = NodeGrid::uniform(Epoch{0.0}, Epoch{86400.0}, 24);
    const auto ref = build_reference(two, gto, grid, CoordSet::CC, {}, {});
    const auto stms = compute_stms(two, ref, {});
    Vec6 s;
    const double vs = std::sqrt(kEarthMu / 24326.0);
    s << 24326.0, 24326.0, 24326.0, vs, vs, vs;
    Mat6 J = Mat6::Zero();
    J.block<3, 3>(0, 3) = Mat3::Identity();
    J.block<3, 3>(3, 0) = -Mat3::Identity();
    double worst_sym = 0.0;
    for (int i = 0; i < grid.segments(); ++i) {
        const Mat6 R = s.cwiseInverse().asDiagonal() * stms.R[i] * s.asDiagonal();
        worst_sym = std::max(worst_sym, (R.transpose() * J * R - J).lpNorm<Eigen::Infinity>());
    }
    v.detail << " remainder halving ratio within " << fmt("%.2f", 100 * worst_ratio) << "% of 4 (CC, COE, MEE), "
             << "worst |R'JR - J| " << fmt("%.1e", worst_sym);
    v.require(worst_ratio <= 0.05, "remainder not quadratic");
    v.require(worst_sym <= 1e-5, "symplecticity");
    report(8, "STM fidelity", v);
}

void criterion9(const std::map<std::string, ScenarioRun>& runs) {
    Verdict v;
    const auto* cc = solution_of(runs, "lt_raise_cc", v);
    const auto* coe = solution_of(runs, "lt_raise_coe", v);
    const auto* mee = solution_of(runs, "lt_raise_mee", v);
    if (cc && coe && mee) {
        const double lo = std::min({cc->total_dv, coe->total_dv, mee->total_dv});
        const double hi = std::max({cc->total_dv, coe->total_dv, mee->total_dv});
        v.detail << " iterations CC " << cc->scp_iterations << ", COE " << coe->scp_iterations << ", MEE "
                 << mee->scp_iterations << "; totals " << fmt("%.6f", cc->total_dv * kMps) << " / "
                 << fmt("%.6f", coe->total_dv * kMps) << " / " << fmt("%.6f", mee->total_dv * kMps)
                 << " m/s, spread " << fmt("%.2e", (hi - lo) / lo);
        v.require(mee->scp_iterations <= coe->scp_iterations && coe->scp_iterations <= cc->scp_iterations,
                  "iteration ordering");
        v.require(mee->scp_iterations == 1, "MEE needs more than one iteration");
        v.require(hi - lo <= 1e-3 * lo, "totals differ by more than 0.1%");
    }
    report(9, "coordinate comparison", v);
}

void criterion10() {
    Verdict v;
    const auto normal = pearson_fit({0.0, 1.0, 0.0, 3.0});
    const auto bounded = pearson_fit({0.0, 1.0, 0.7, 2.52});
    v.require(normal.family() == PearsonFamily::Normal, "s=0, k=3 not normal");
    v.require(std::isfinite(bounded.lower()) && std::isfinite(bounded.upper()), "s=0.7, k=2.52 unbounded");
    double worst = 0.0;
    for (const MomentSet& m : {MomentSet{0, 1, 0, 3}, MomentSet{0, 1, 0.7, 2.52}, MomentSet{0, 1, 0, 2.2},
                               MomentSet{0, 1, 0, 4.5}, MomentSet{0, 1, 0.5, 4.0}, MomentSet{0, 1, 1.0, 5.5},
                               MomentSet{0, 1, -0.6, 3.2}}) {
        const auto f = pearson_fit(m);
        const double c2 = f.central_moment(2), c3 = f.central_moment(3), c4 = f.central_moment(4);
        worst = std::max({worst, std::abs(f.central_moment(0) - 1.0), std::abs(c2 - m.variance) / m.variance,
                          std::abs(c3 / std::pow(c2, 1.5) - m.skewness) / std::max(1.0, std::abs(m.skewness)),
                          std::abs(c4 / (c2 * c2) - m.kurtosis) / m.kurtosis});
    }
    v.detail << " (0, 3) -> " << to_string(normal.family()) << ", (0.7, 2.52) -> " << to_string(bounded.family())
             << " on [" << fmt("%.3f", bounded.lower()) << ", " << fmt("%.3f", bounded.upper())
             << "], worst relative moment error " << fmt("%.1e", worst);
    v.require(worst <= 1e-6, "moment round trip");
    report(10, "Pearson fit", v);
}

void criterion11(const std::vector<SolveRecord>& records) {
    Verdict v;
    double worst_km = 0.0, worst_m = 0.0;
    int perfect = 0, uncertain = 0;
    for (const auto& r : records) {
        if (r.perfect) {
            ++perfect;
            worst_km = std::max(worst_km, r.miss);
        } else {
            ++uncertain;
            worst_m = std::max(worst_m, r.miss);
        }
    }
    v.detail << " perfect solves " << perfect << ", worst miss " << fmt("%.1e", worst_km) << " km; uncertain solves "
             << uncertain << ", worst miss " << fmt("%.1e", worst_m) << " Mahalanobis";
    v.require(worst_km <= 1e-3, "perfect-mode miss above 1e-3 km");
    v.require(worst_m <= 0.05, "uncertain-mode miss above 0.05");
    report(11, "end-to-end validation", v);
}

void ewsk_range(const std::map<std::string, ScenarioRun>& runs) {
    Verdict v;
    for (const char* name : {"ewsk_cut4", "ewsk_unscented"}) {
        auto it = runs.find(name);
        if (it == runs.end() || !it->second.stats) {
            v.require(false, std::string(name) + " missing");
            continue;
        }
        const auto& st = *it->second.stats;
        const double mean = st.moments.mean * kMps;
        v.detail << " " << name << " mean " << fmt("%.4f", mean) << " m/s (" << st.point_count << " points, "
                 << st.failures << " failed, " << fmt("%.1f", it->second.seconds) << " s);";
        v.require(mean >= 0.05 && mean <= 0.2, std::string(name) + " outside 0.05-0.2 m/s");
        v.require(!st.unreliable, std::string(name) + " unreliable");
    }
    if (auto it = runs.find("ewsk_unscented"); it != runs.end())
        v.require(it->second.seconds <= 60.0, "unscented run above 60 s");
    std::printf("EWSK-RANGE   %s: station-keeping analogue%s\n", v.pass ? "PASS" : "FAIL", v.detail.str().c_str());
    failures += !v.pass;
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path dir = argc > 1 ? fs::path(argv[1]) : fs::path(MANDET_SCENARIO_DIR);
    std::vector<SolveRecord> records;
    std::map<std::string, ScenarioRun> runs;
    try {
        runs = run_shipped(dir, records);
    } catch (const std::exception& e) {
        std::printf("scenario run aborted: %s\n", e.what());
        return 1;
    }
    criterion1(runs);
    criterion2(runs);
    criterion3(records, runs.size());
    criterion4(runs);
    criterion5(runs);
    criterion6();
    criterion7();
    criterion8();
    criterion9(runs);
    criterion10();
    criterion11(records);
    ewsk_range(runs);
    std::printf("%s: %d failing\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
