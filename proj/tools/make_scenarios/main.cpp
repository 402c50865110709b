// Regenerates the shipped scenario files from synthetic truth arcs.
#include "mandet/cli.hpp"
#include "mandet/synthetic.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>

using namespace mandet;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr double kGeoRadius = 42164.17;
constexpr const char* kFrame = "Earth-centred inertial, km and km/s";

json model_json(bool j2) {
    json m;
    m["kind"] = j2 ? "two_body_j2" : "two_body";
    return m;
}

json base(const std::string& name, const std::string& description, bool j2, const TruthPair& tp,
          const std::string& coords, int segments) {
    json j;
    j["name"] = name;
    j["description"] = description;
    j["model"] = model_json(j2);
    j["boundary0"] = cli::boundary_json(tp.boundary0, kFrame);
    j["boundaryF"] = cli::boundary_json(tp.boundaryF, kFrame);
    j["coords"] = coords;
    j["n_segments"] = segments;
    return j;
}

json perfect() { return json{{"kind", "perfect"}}; }

json mahalanobis() {
    json m;
    m["kind"] = "mahalanobis";
    m["confidences"] = {0.01, 0.1, 0.3, 0.5, 0.68, 0.8, 0.9, 0.95, 0.99, 0.999};
    m["decision_confidence"] = 0.95;
    m["threshold_mps"] = 0.007;
    return m;
}

json sigma_points(const std::string& scheme) {
    json m;
    m["kind"] = "sigma_points";
    m["scheme"] = scheme;
    return m;
}

void save(const fs::path& dir, const json& j) {
    const fs::path p = dir / (j["name"].get<std::string>() + ".json");
    cli::write_atomic(p, j.dump(2) + "\n");
    std::cout << p.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path dir = argc > 1 ? argv[1] : "scenarios";
    const PropagatorSettings ps;
    const auto kepler = AccelerationModel::two_body();
    const auto j2 = AccelerationModel::two_body_j2();
    const Mat6 tight = diagonal_covariance(1e-3, 1e-6);

    // 10 h circular GEO arc, 1 m/s out-of-plane burn at 5 h.
    const CartesianState geo0{Vec3{kGeoRadius, 0, 0}, Vec3{0, std::sqrt(kEarthMu / kGeoRadius), 0}};
    const auto impulse =
        make_truth_pair(kepler, geo0, Epoch{0}, Epoch{36000}, {{Epoch{18000}, Vec3{0, 0, 1e-3}}}, tight, tight, false, 0);
    json j = base("geo_impulse", "1 m/s normal burn 5 h into a 10 h GEO arc, 1 min nodes", false, impulse, "MEE", 600);
    j["mode"] = perfect();
    save(dir, j);

    j = base("geo_lowthrust", "Same arc with each impulse capped at 6 mm/s", false, impulse, "MEE", 600);
    j["dv_max_mps"] = 0.006;
    j["mode"] = perfect();
    save(dir, j);

    const auto coast = make_truth_pair(kepler, geo0, Epoch{0}, Epoch{36000}, {}, tight, tight, false, 0);
    j = base("geo_ballistic", "Unperturbed 10 h GEO arc, no manoeuvre", false, coast, "MEE", 60);
    j["mode"] = perfect();
    save(dir, j);

    // Slightly eccentric, inclined GEO so every coordinate set is defined.
    const CartesianState geo1 = coe_to_cart({kGeoRadius, 2e-4, 1e-3, 1.0, 0.5, 0.0}, kEarthMu);
    const Mat6 od = diagonal_covariance(0.1, 1e-5);

    const auto quiet = make_truth_pair(j2, geo1, Epoch{0}, Epoch{86400}, {}, od, od, true, 1);
    j = base("detect_quiet", "One day of J2 GEO motion, no manoeuvre, noisy estimates", true, quiet, "MEE", 144);
    j["mode"] = mahalanobis();
    save(dir, j);

    const auto burn =
        make_truth_pair(j2, geo1, Epoch{0}, Epoch{86400}, {{Epoch{30000}, Vec3{0, 2e-4, 0}}}, od, od, true, 2);
    j = base("detect_burn", "One day of J2 GEO motion, 0.2 m/s tangential burn at 30000 s", true, burn, "MEE", 144);
    j["mode"] = mahalanobis();
    save(dir, j);

    const auto ewsk = make_truth_pair(j2, geo1, Epoch{0}, Epoch{86400},
                                      {{Epoch{21600}, Vec3{0, 5e-5, 0}}, {Epoch{64800}, Vec3{0, 5e-5, 0}}}, od, od,
                                      true, 7);
    j = base("ewsk_cut4", "East-west station-keeping pair (2 x 0.05 m/s), CUT-4 statistics", true, ewsk, "MEE", 48);
    j["mode"] = sigma_points("cut4");
    save(dir, j);
    j = base("ewsk_unscented", "Station-keeping pair, unscented statistics", true, ewsk, "MEE", 48);
    j["mode"] = sigma_points("unscented");
    save(dir, j);

    const Mat6 zero = Mat6::Zero();
    const auto exact = make_truth_pair(j2, geo1, Epoch{0}, Epoch{86400}, {{Epoch{30000}, Vec3{0, 2e-4, 0}}}, zero,
                                      zero, false, 0);
    j = base("estimate_zero_cov", "Known boundaries: every sigma point is the nominal problem", true, exact, "MEE", 48);
    j["mode"] = sigma_points("unscented");
    save(dir, j);

    // Two-day arc with the search restricted to a few hours around the burn.
    const auto late = make_truth_pair(j2, geo1, Epoch{0}, Epoch{172800}, {{Epoch{108000}, Vec3{0, 2e-4, 0}}}, tight,
                                      tight, false, 0);
    j = base("window_burn", "Two-day arc, 0.2 m/s burn at 30 h, 3 h search window", true, late, "MEE", 60);
    j["mode"] = perfect();
    j["window"] = json{{"center_search", true}, {"half_width_s", 10800.0}};
    save(dir, j);

    // Apogee-centred low-thrust arc on a GTO, 0.22 mm/s^2 for six nodes.
    const double span = 34000.0;
    const int nodes = 50;
    const double accel = 0.22e-6;
    const CartesianState gto = coe_to_cart({24326.0, 0.7284, 0.12, 0.5, 0.3, 1.5}, kEarthMu);
    const NodeGrid grid = NodeGrid::uniform(Epoch{0}, Epoch{span}, nodes);
    const auto raise = make_truth_pair(j2, gto, Epoch{0}, Epoch{span},
                                       node_burns(grid, 22, 6, Vec3{0, accel * span / nodes, 0}), tight, tight, false, 0);
    for (const char* cs : {"CC", "COE", "MEE"}) {
        std::string lower = cs;
        for (char& c : lower) c = static_cast<char>(std::tolower(c));
        j = base("lt_raise_" + lower, std::string("Low-thrust apogee raise on a GTO, solved in ") + cs, true, raise, cs,
                 nodes);
        j["accel_max_mps2"] = accel * 1e3;
        j["mode"] = perfect();
        save(dir, j);
    }
    return 0;
}
