#include "mandet/cli.hpp"

#include "mandet/pearson.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unistd.h>

#ifndef MANDET_VERSION
#define MANDET_VERSION "0.0.0"
#endif

namespace mandet::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr double kMps = 1e3;  // km/s -> m/s at the report boundary
constexpr int kPdfSamples = 201;

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

json software() {
    json j;
    j["name"] = "mandet";
    j["version"] = MANDET_VERSION;
    return j;
}

json header(const char* command, const Scenario& sc) {
    json j;
    j["software"] = software();
    j["command"] = command;
    j["scenario"] = sc.source;
    return j;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json nullable(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

ManeuverProblemSpec effective_spec(const Scenario& sc, const RunOptions& opt) {
    ManeuverProblemSpec spec = sc.spec;
    if (opt.threads) spec.threads = *opt.threads;
    return spec;
}

void check_kind(const Scenario& sc, ScenarioKind want, const char* command) {
    if (sc.kind != want)
        throw ScenarioError("mode.kind", std::string(command) + " needs mode \"" + std::string(to_string(want)) +
                                             "\", scenario has \"" + std::string(to_string(sc.kind)) + "\"");
}

}  // namespace

fs::path output_dir(const Scenario& sc, const RunOptions& opt) {
    if (opt.out) return *opt.out;
    if (const char* env = std::getenv("MANDET_OUT"); env && *env) return fs::path(env) / sc.name;
    if (!sc.output_dir.empty()) return sc.output_dir;
    return fs::path("out") / sc.name;
}

void write_atomic(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp" + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw Error("cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

int cmd_reconstruct(const Scenario& sc, const RunOptions& opt) {
    check_kind(sc, ScenarioKind::Perfect, "reconstruct");
    const ManeuverProblemSpec spec = effective_spec(sc, opt);
    const fs::path dir = output_dir(sc, opt);
    const auto sol = run_scp(spec);

    std::ostringstream csv;
    csv << "node,epoch_s,dv_r_mps,dv_t_mps,dv_n_mps,dv_mps\n";
    for (int i = 0; i < static_cast<int>(sol.dv_rtn.size()); ++i) {
        const Vec3 d = sol.dv_rtn[i] * kMps;
        csv << i << ',' << num(sol.grid.epochs[i].t) << ',' << num(d[0]) << ',' << num(d[1]) << ','
            << num(d[2]) << ',' << num(sol.dv_mags[i] * kMps) << '\n';
    }

    json j = header("reconstruct", sc);
    j["status"] = to_string(sol.status);
    j["solver_status"] = conic::to_string(sol.solver_status);
    j["failed_iteration"] = sol.failed_iteration >= 0 ? json(sol.failed_iteration) : json(nullptr);
    j["total_dv_mps"] = sol.total_dv * kMps;
    j["scp_iterations"] = sol.scp_iterations;
    j["solves"] = sol.solves;
    j["trust_widenings"] = sol.trust_widenings;
    j["iteration_change"] = sol.iteration_change;
    j["iteration_miss"] = sol.iteration_miss;
    j["max_relaxation_gap_mps"] = sol.max_relaxation_gap * kMps;
    json val;
    if (!sol.nodes.empty()) {
        const auto v = validate(spec, sol);
        val["terminal_miss_mahalanobis"] = nullable(v.terminal_miss_mahalanobis);
        val["terminal_miss_km"] = v.terminal_miss_km;
        val["target_distance_mahalanobis"] = nullable(v.target_distance_mahalanobis);
        val["target_distance_km"] = v.target_distance_km;
    }
    j["validation"] = val;
    json active = json::array();
    if (!sol.nodes.empty())
        for (int i : active_nodes(sol, spec.dv_max)) {
            json a;
            a["node"] = i;
            a["epoch_s"] = sol.grid.epochs[i].t;
            const Vec3 d = sol.dv_rtn[i] * kMps;
            a["dv_rtn_mps"] = {d[0], d[1], d[2]};
            a["dv_mps"] = sol.dv_mags[i] * kMps;
            active.push_back(a);
        }
    j["active_impulses"] = active;
    json t;
    t["linearize_s"] = sol.timings.linearize_s;
    t["solve_s"] = sol.timings.solve_s;
    t["per_solve_s"] = sol.solves > 0 ? sol.timings.solve_s / sol.solves : 0.0;
    t["other_s"] = std::max(0.0, sol.timings.total_s - sol.timings.linearize_s - sol.timings.solve_s);
    t["total_s"] = sol.timings.total_s;
    j["timings"] = t;

    write_atomic(dir / "profile.csv", csv.str());
    write_atomic(dir / "summary.json", dump(j));
    if (sol.status == ScpStatus::SolverFailed) {
        std::cerr << "solver failed at SCP iteration " << sol.failed_iteration << ": "
                  << conic::to_string(sol.solver_status) << "\n";
        return kExitSolver;
    }
    if (sol.status == ScpStatus::NotConverged) {
        std::cerr << "SCP did not converge in " << spec.scp_max_iter << " iterations\n";
        return kExitSolver;
    }
    return kExitOk;
}

int cmd_detect(const Scenario& sc, const RunOptions& opt) {
    check_kind(sc, ScenarioKind::Mahalanobis, "detect");
    const ManeuverProblemSpec spec = effective_spec(sc, opt);
    const fs::path dir = output_dir(sc, opt);
    const auto curve = mahalanobis_sweep(spec, sc.detect.confidences, spec.threads);

    std::ostringstream csv;
    csv << "confidence,dv_mps,status\n";
    json points = json::array();
    int solved = 0;
    for (const auto& p : curve.points) {
        solved += p.solved();
        csv << num(p.confidence) << ',' << (p.solved() ? num(p.total_dv * kMps) : std::string()) << ','
            << to_string(p.status) << '\n';
        json q;
        q["confidence"] = p.confidence;
        q["total_dv_mps"] = p.solved() ? json(p.total_dv * kMps) : json(nullptr);
        q["status"] = to_string(p.status);
        q["solver_status"] = conic::to_string(p.solver_status);
        q["scp_iterations"] = p.iterations;
        q["validation_miss_mahalanobis"] = nullable(p.validation_miss);
        q["max_relaxation_gap_mps"] = p.relaxation_gap * kMps;
        q["error"] = p.error;
        points.push_back(q);
    }

    json j = header("detect", sc);
    j["points"] = points;
    j["solved_points"] = solved;
    json verdict;
    verdict["decision_confidence"] = sc.detect.decision_confidence;
    verdict["threshold_mps"] = sc.detect.threshold * kMps;
    const auto v = detect(curve, sc.detect.decision_confidence, sc.detect.threshold);
    bool decided = false;
    for (const auto& p : curve.points)
        if (p.confidence == sc.detect.decision_confidence) decided = p.solved();
    verdict["maneuver"] = decided ? json(v.maneuver) : json(nullptr);
    verdict["total_dv_mps"] = decided ? json(v.total_dv * kMps) : json(nullptr);
    verdict["margin_mps"] = decided ? json(v.margin * kMps) : json(nullptr);
    j["verdict"] = verdict;
    json t;
    t["linearize_s"] = curve.linearize_s;
    t["solves_s"] = std::max(0.0, curve.total_s - curve.linearize_s);
    t["per_point_s"] = curve.points.empty() ? 0.0 : (curve.total_s - curve.linearize_s) / curve.points.size();
    t["total_s"] = curve.total_s;
    j["timings"] = t;

    write_atomic(dir / "detection_curve.csv", csv.str());
    write_atomic(dir / "summary.json", dump(j));
    if (solved == 0) {
        std::cerr << "no confidence level was solved\n";
        return kExitSolver;
    }
    return kExitOk;
}

int cmd_estimate(const Scenario& sc, const RunOptions& opt) {
    check_kind(sc, ScenarioKind::SigmaPoints, "estimate");
    const ManeuverProblemSpec spec = effective_spec(sc, opt);
    EstimateOptions eo = sc.estimate;
    eo.workers = spec.threads;
    if (opt.seed) eo.seed = *opt.seed;
    const fs::path dir = output_dir(sc, opt);
    const auto st = estimate(spec, eo);

    std::ostringstream csv;
    csv << "node,epoch_s,mean_r_mps,mean_t_mps,mean_n_mps,sigma3_r_mps,sigma3_t_mps,sigma3_n_mps\n";
    for (int i = 0; i < static_cast<int>(st.per_node_mean.size()); ++i) {
        const Vec3 m = st.per_node_mean[i] * kMps;
        const Vec3 s = st.per_node_3sigma[i] * kMps;
        csv << i << ',' << num(st.grid.epochs[i].t) << ',' << num(m[0]) << ',' << num(m[1]) << ',' << num(m[2])
            << ',' << num(s[0]) << ',' << num(s[1]) << ',' << num(s[2]) << '\n';
    }

    const int solved = st.point_count - st.failures;
    json moments;
    if (solved > 0) {
        moments["mean_mps"] = st.moments.mean * kMps;
        moments["variance_mps2"] = st.moments.variance * kMps * kMps;
        moments["skewness"] = nullable(st.moments.skewness);
        moments["kurtosis"] = nullable(st.moments.kurtosis);
    }

    json dist;
    dist["software"] = software();
    dist["scheme"] = to_string(eo.scheme);
    dist["seed"] = eo.seed;
    dist["point_count"] = st.point_count;
    dist["failures"] = st.failures;
    dist["unreliable"] = st.unreliable;
    dist["moments"] = moments;
    json pearson = nullptr;
    json pdf = nullptr;
    std::string note = st.fit_note;
    std::optional<PearsonFit> refit;
    const MomentSet m{st.moments.mean * kMps, st.moments.variance * kMps * kMps, st.moments.skewness,
                      st.moments.kurtosis};
    if (st.fit) {
        // Refit in m/s so every reported parameter carries report units.
        try {
            refit = pearson_fit(m);
        } catch (const std::exception& e) {
            note = std::string("refit in m/s failed: ") + e.what();
        }
    }
    if (refit) {
        const PearsonFit& f = *refit;
        pearson = json::object();
        pearson["family"] = to_string(f.family());
        pearson["kappa"] = f.kappa();
        pearson["a"] = f.a();
        pearson["c"] = f.c();
        pearson["b0"] = f.b0();
        pearson["b1"] = f.b1();
        pearson["b2"] = f.b2();
        pearson["support_mps"] = {nullable(f.lower()), nullable(f.upper())};
        pearson["m1"] = f.m1();
        pearson["m2"] = f.m2();
        pearson["r1"] = f.r1();
        pearson["r2"] = f.r2();
        const double sd = std::sqrt(m.variance);
        const double lo = std::max(f.lower(), m.mean - 6.0 * sd);
        const double hi = std::min(f.upper(), m.mean + 6.0 * sd);
        json xs = json::array(), ps = json::array();
        for (int k = 0; k < kPdfSamples; ++k) {
            const double x = lo + (k + 0.5) * (hi - lo) / kPdfSamples;
            xs.push_back(x);
            ps.push_back(nullable(f.pdf(x)));
        }
        pdf = json::object();
        pdf["grid"] = "201 cell midpoints of [max(lower, mean - 6 sd), min(upper, mean + 6 sd)]";
        pdf["x_mps"] = xs;
        pdf["density_per_mps"] = ps;
    }
    dist["pearson"] = pearson;
    dist["fit_note"] = note;
    dist["pdf"] = pdf;

    double worst_miss = 0.0, worst_gap = 0.0;
    json failed = json::array();
    for (const auto& r : st.per_point_results) {
        if (!r.solved()) {
            failed.push_back(json{{"index", r.index}, {"status", to_string(r.status)},
                                  {"solver_status", conic::to_string(r.solver_status)}, {"error", r.error}});
            continue;
        }
        worst_miss = std::max(worst_miss, r.validation_miss);
        worst_gap = std::max(worst_gap, r.relaxation_gap);
    }

    json j = header("estimate", sc);
    j["scheme"] = to_string(eo.scheme);
    j["point_count"] = st.point_count;
    j["failures"] = st.failures;
    j["failed_points"] = failed;
    j["unreliable"] = st.unreliable;
    j["max_validation_miss_mahalanobis"] = worst_miss;
    j["max_relaxation_gap_mps"] = worst_gap * kMps;
    j["moments"] = moments;
    j["pearson_family"] = st.fit ? json(to_string(st.fit->family())) : json(nullptr);
    j["fit_note"] = note;
    json t;
    t["linearize_s"] = st.linearize_s;
    t["points_s"] = std::max(0.0, st.total_s - st.linearize_s);
    t["per_point_s"] = st.point_count > 0 ? (st.total_s - st.linearize_s) / st.point_count : 0.0;
    t["total_s"] = st.total_s;
    j["timings"] = t;

    write_atomic(dir / "profile_stats.csv", csv.str());
    write_atomic(dir / "distribution.json", dump(dist));
    write_atomic(dir / "summary.json", dump(j));
    if (solved == 0) {
        std::cerr << "every sigma point failed\n";
        return kExitSolver;
    }
    if (st.unreliable) {
        std::cerr << st.failures << " of " << st.point_count << " points failed; statistics unreliable\n";
        return kExitUnreliable;
    }
    return kExitOk;
}

int cmd_solve_conic(const fs::path& program, const RunOptions& opt) {
    std::ifstream in(program);
    if (!in) throw InputError("cannot open program " + program.string());
    const auto prog = conic::read_program(in);
    conic::SolverSettings st;
    const auto sol = conic::solve(prog, st);
    fs::path dir;
    if (opt.out)
        dir = *opt.out;
    else if (const char* env = std::getenv("MANDET_OUT"); env && *env)
        dir = fs::path(env) / "solve_conic";
    else
        dir = fs::path("out") / "solve_conic";
    std::ostringstream out;
    conic::write_solution(out, sol);
    write_atomic(dir / "solution.txt", out.str());
    std::cout << conic::to_string(sol.status) << "\n";
    return sol.status == conic::SolveStatus::Optimal || sol.status == conic::SolveStatus::PrimalInfeasible ||
                   sol.status == conic::SolveStatus::DualInfeasible
               ? kExitOk
               : kExitSolver;
}

int run(int argc, char** argv) {
    CLI::App app{"Maneuver detection and estimation between two orbit estimates"};
    app.set_version_flag("--version", MANDET_VERSION);
    app.require_subcommand(1);

    std::string scenario_path, program_path, out;
    int threads = 0;
    std::uint64_t seed = 0;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", out, "Output directory (overrides MANDET_OUT and the scenario)");
        cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
    };
    std::vector<std::pair<CLI::App*, int (*)(const Scenario&, const RunOptions&)>> scenario_cmds;
    for (auto [name, help, fn] : {std::tuple{"reconstruct", "Minimum-fuel reconstruction between perfect states",
                                             &cmd_reconstruct},
                                  std::tuple{"detect", "Detection curve over Mahalanobis confidence levels", &cmd_detect},
                                  std::tuple{"estimate", "Sigma-point statistics of the maneuver", &cmd_estimate}}) {
        CLI::App* cmd = app.add_subcommand(name, help);
        cmd->add_option("--scenario", scenario_path, "Scenario JSON")->required();
        add_common(cmd);
        cmd->add_option("--seed", seed, "Random seed (Monte Carlo)");
        scenario_cmds.emplace_back(cmd, fn);
    }
    CLI::App* solve = app.add_subcommand("solve-conic", "Solve a plain-text conic program dump");
    solve->add_option("program", program_path, "Program dump")->required();
    add_common(solve);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitInput;
    }

    RunOptions opt;
    if (!out.empty()) opt.out = out;
    if (threads > 0) opt.threads = threads;
    try {
        if (solve->parsed()) return cmd_solve_conic(program_path, opt);
        for (auto& [cmd, fn] : scenario_cmds) {
            if (!cmd->parsed()) continue;
            if (cmd->count("--seed")) opt.seed = seed;
            const Scenario sc = load_scenario(scenario_path);
            return fn(sc, opt);
        }
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const DomainError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const PropagationError& e) {
        std::cerr << "propagation failed: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    }
    return kExitInput;
}

}  // namespace mandet::cli
