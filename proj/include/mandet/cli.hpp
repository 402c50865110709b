#pragma once

#include "mandet/errors.hpp"
#include "mandet/problem.hpp"
#include "mandet/uncertainty.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mandet::cli {

// Stable exit-code contract.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitUnreliable = 4;

/// Scenario problem at a key path such as "boundary0.covariance_km_kmps".
class ScenarioError : public InputError {
public:
    ScenarioError(const std::string& key, const std::string& what)
        : InputError(key.empty() ? what : key + ": " + what), key_(key) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

enum class ScenarioKind { Perfect, Mahalanobis, SigmaPoints };
std::string_view to_string(ScenarioKind kind);

struct DetectSettings {
    std::vector<double> confidences;
    double decision_confidence = 0.95;
    double threshold = 0.007e-3;  // km/s
};

struct Scenario {
    std::string name;
    ScenarioKind kind = ScenarioKind::Perfect;
    ManeuverProblemSpec spec;
    DetectSettings detect;
    EstimateOptions estimate;
    std::string output_dir;  // empty: out/<name>
    nlohmann::ordered_json source;
};

/// Unknown keys, wrong types and invalid values throw ScenarioError naming the key.
Scenario parse_scenario(const nlohmann::ordered_json& doc);
/// JSON syntax errors are reported with line and column.
Scenario load_scenario(const std::filesystem::path& path);

// Helpers for scenario writers.
nlohmann::ordered_json cartesian_json(const CartesianState& s);
nlohmann::ordered_json matrix_json(const Mat6& m);
nlohmann::ordered_json boundary_json(const GaussianState& g, const std::string& frame_note);

struct RunOptions {
    std::optional<std::filesystem::path> out;
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;
};

/// --out, then $MANDET_OUT, then the scenario's output_dir, then out/<name>.
std::filesystem::path output_dir(const Scenario& sc, const RunOptions& opt);

/// Writes to a temporary sibling and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

int cmd_reconstruct(const Scenario& sc, const RunOptions& opt);
int cmd_detect(const Scenario& sc, const RunOptions& opt);
int cmd_estimate(const Scenario& sc, const RunOptions& opt);
/// Reads a program dump and writes solution.txt into the output directory.
int cmd_solve_conic(const std::filesystem::path& program, const RunOptions& opt);

/// Command-line entry point.
int run(int argc, char** argv);

}  // namespace mandet::cli
