#include "mandet/cli.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace mandet::cli {

using json = nlohmann::ordered_json;

std::string_view to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::Perfect: return "perfect";
        case ScenarioKind::Mahalanobis: return "mahalanobis";
        case ScenarioKind::SigmaPoints: return "sigma_points";
    }
    return "?";
}

namespace {

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

// Object reader that remembers which keys were consumed.
class Obj {
public:
    Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ScenarioError(path_, "expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& at(const std::string& key) {
        if (!j_.contains(key)) throw ScenarioError(join(path_, key), "missing");
        seen_.insert(key);
        return j_.at(key);
    }

    double number(const std::string& key) {
        const json& v = at(key);
        if (!v.is_number()) throw ScenarioError(join(path_, key), "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ScenarioError(join(path_, key), "must be finite");
        return x;
    }
    double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

    double positive(const std::string& key, double fallback) {
        const double x = number(key, fallback);
        if (!(x > 0.0)) throw ScenarioError(join(path_, key), "must be positive");
        return x;
    }

    long long integer(const std::string& key) {
        const json& v = at(key);
        if (!v.is_number_integer()) throw ScenarioError(join(path_, key), "expected an integer");
        return v.get<long long>();
    }
    long long integer(const std::string& key, long long fallback) { return has(key) ? integer(key) : fallback; }

    std::string text(const std::string& key) {
        const json& v = at(key);
        if (!v.is_string()) throw ScenarioError(join(path_, key), "expected a string");
        return v.get<std::string>();
    }
    std::string text(const std::string& key, const std::string& fallback) { return has(key) ? text(key) : fallback; }

    bool flag(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = at(key);
        if (!v.is_boolean()) throw ScenarioError(join(path_, key), "expected true or false");
        return v.get<bool>();
    }

    std::vector<double> numbers(const std::string& key, int size = -1) {
        const json& v = at(key);
        const std::string p = join(path_, key);
        if (!v.is_array()) throw ScenarioError(p, "expected an array");
        if (size >= 0 && static_cast<int>(v.size()) != size)
            throw ScenarioError(p, "expected " + std::to_string(size) + " entries");
        std::vector<double> out;
        for (const auto& x : v) {
            if (!x.is_number()) throw ScenarioError(p, "expected numbers");
            out.push_back(x.get<double>());
            if (!std::isfinite(out.back())) throw ScenarioError(p, "entries must be finite");
        }
        return out;
    }

    Obj child(const std::string& key) {
        const json& v = at(key);
        return Obj(v, join(path_, key));
    }

    std::string key(const std::string& k) const { return join(path_, k); }

    void finish() const {
        for (const auto& item : j_.items())
            if (!seen_.count(item.key())) throw ScenarioError(join(path_, item.key()), "unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

Vec3 vec3(Obj& o, const std::string& key) {
    const auto v = o.numbers(key, 3);
    return {v[0], v[1], v[2]};
}

Mat6 covariance(Obj& o, const std::string& key) {
    const json& rows = o.at(key);
    const std::string p = o.key(key);
    if (!rows.is_array() || rows.size() != 6) throw ScenarioError(p, "expected 6 rows");
    Mat6 c;
    for (int r = 0; r < 6; ++r) {
        if (!rows[r].is_array() || rows[r].size() != 6) throw ScenarioError(p, "expected 6x6 numbers");
        for (int k = 0; k < 6; ++k) {
            if (!rows[r][k].is_number()) throw ScenarioError(p, "expected 6x6 numbers");
            c(r, k) = rows[r][k].get<double>();
        }
    }
    if (!c.allFinite()) throw ScenarioError(p, "entries must be finite");
    const double scale = std::max(c.cwiseAbs().maxCoeff(), 1e-300);
    if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw ScenarioError(p, "not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat6> eig(c);
    if (eig.eigenvalues().minCoeff() < -1e-12 * scale) throw ScenarioError(p, "not positive semidefinite");
    return c;
}

CartesianState mean_state(Obj o, double mu) {
    const std::string frame = o.text("frame");
    CartesianState s;
    if (frame == "cartesian") {
        s = {vec3(o, "position_km"), vec3(o, "velocity_kmps")};
    } else if (frame == "coe") {
        ClassicalElements el;
        el.a = o.number("a_km");
        el.e = o.number("e");
        el.i = o.number("i_rad");
        el.raan = o.number("raan_rad");
        el.argp = o.number("argp_rad");
        el.true_anomaly = o.number("nu_rad");
        try {
            s = coe_to_cart(el, mu);
        } catch (const Error& e) {
            throw ScenarioError(o.key("frame"), e.what());
        }
    } else {
        throw ScenarioError(o.key("frame"), "expected \"cartesian\" or \"coe\"");
    }
    o.finish();
    return s;
}

GaussianState boundary(Obj o, double mu) {
    GaussianState g;
    g.epoch = Epoch{o.number("epoch_s")};
    g.mean = mean_state(o.child("state"), mu);
    g.cov = covariance(o, "covariance_km_kmps");
    o.text("frame_note", "");
    o.finish();
    return g;
}

AccelerationModel model(Obj o) {
    const std::string kind = o.text("kind");
    AccelerationModel m;
    if (kind == "two_body")
        m = AccelerationModel::two_body(o.positive("mu_km3ps2", kEarthMu));
    else if (kind == "two_body_j2")
        m = AccelerationModel::two_body_j2(o.positive("mu_km3ps2", kEarthMu), o.number("j2", kEarthJ2),
                                           o.positive("body_radius_km", kEarthRadius));
    else
        throw ScenarioError(o.key("kind"), "expected \"two_body\" or \"two_body_j2\"");
    o.finish();
    return m;
}

}  // namespace

Scenario parse_scenario(const json& doc) {
    Scenario sc;
    sc.source = doc;
    Obj root(doc, "");
    sc.name = root.text("name");
    if (sc.name.empty()) throw ScenarioError("name", "must not be empty");
    root.text("description", "");
    auto& spec = sc.spec;

    spec.model = model(root.child("model"));
    spec.boundary0 = boundary(root.child("boundary0"), spec.model.mu);
    spec.boundaryF = boundary(root.child("boundaryF"), spec.model.mu);
    try {
        spec.coords = parse_coord_set(root.text("coords"));
    } catch (const InputError& e) {
        throw ScenarioError("coords", e.what());
    }
    const long long segs = root.integer("n_segments");
    if (segs < 1 || segs > 1000000) throw ScenarioError("n_segments", "must be in [1, 1e6]");
    spec.n_segments = static_cast<int>(segs);

    if (root.has("dv_max_mps") && root.has("accel_max_mps2"))
        throw ScenarioError("accel_max_mps2", "give either dv_max_mps or accel_max_mps2");
    if (root.has("dv_max_mps")) spec.dv_max = root.positive("dv_max_mps", 1.0) * 1e-3;
    if (root.has("accel_max_mps2")) {
        const double span = spec.boundaryF.epoch - spec.boundary0.epoch;
        spec.dv_max = root.positive("accel_max_mps2", 1.0) * 1e-3 * span / spec.n_segments;
    }

    {
        Obj m = root.child("mode");
        const std::string kind = m.text("kind");
        if (kind == "perfect") {
            sc.kind = ScenarioKind::Perfect;
            spec.mode = BoundaryMode::perfect();
        } else if (kind == "mahalanobis") {
            sc.kind = ScenarioKind::Mahalanobis;
            sc.detect.confidences = m.numbers("confidences");
            if (sc.detect.confidences.empty()) throw ScenarioError(m.key("confidences"), "must not be empty");
            for (std::size_t k = 0; k < sc.detect.confidences.size(); ++k) {
                const double c = sc.detect.confidences[k];
                if (!(c > 0.0 && c < 1.0)) throw ScenarioError(m.key("confidences"), "entries must lie in (0, 1)");
                if (k > 0 && !(c > sc.detect.confidences[k - 1]))
                    throw ScenarioError(m.key("confidences"), "must increase strictly");
            }
            sc.detect.decision_confidence = m.number("decision_confidence", 0.95);
            sc.detect.threshold = m.number("threshold_mps", 0.007) * 1e-3;
            if (sc.detect.threshold < 0.0) throw ScenarioError(m.key("threshold_mps"), "must be non-negative");
            bool listed = false;
            for (double c : sc.detect.confidences) listed = listed || c == sc.detect.decision_confidence;
            if (!listed) throw ScenarioError(m.key("decision_confidence"), "must be one of the confidences");
            spec.mode = BoundaryMode::mahalanobis(sc.detect.decision_confidence);
        } else if (kind == "sigma_points") {
            sc.kind = ScenarioKind::SigmaPoints;
            try {
                sc.estimate.scheme = parse_sigma_scheme(m.text("scheme"));
            } catch (const InputError& e) {
                throw ScenarioError(m.key("scheme"), e.what());
            }
            const long long count = m.integer("monte_carlo_count", 1000);
            if (count < 1) throw ScenarioError(m.key("monte_carlo_count"), "must be positive");
            sc.estimate.monte_carlo_count = static_cast<int>(count);
            spec.mode = BoundaryMode::fixed(Vec12::Zero());
        } else {
            throw ScenarioError(m.key("kind"), "expected \"perfect\", \"mahalanobis\" or \"sigma_points\"");
        }
        m.finish();
    }

    if (root.has("window")) {
        Obj w = root.child("window");
        WindowOptions opt;
        opt.center_search = w.flag("center_search", true);
        opt.half_width = w.positive("half_width_s", 1.0);
        w.finish();
        spec.window = opt;
    }
    if (root.has("scp")) {
        Obj s = root.child("scp");
        spec.scp_eps = s.positive("eps", spec.scp_eps);
        const long long it = s.integer("max_iter", spec.scp_max_iter);
        if (it < 1) throw ScenarioError(s.key("max_iter"), "must be positive");
        spec.scp_max_iter = static_cast<int>(it);
        if (s.has("state_trust_coord_units")) {
            const auto t = s.numbers("state_trust_coord_units", 6);
            spec.state_trust = Vec6(t.data());
        }
        s.finish();
    }
    if (root.has("solver")) {
        Obj s = root.child("solver");
        auto& st = spec.solver;
        st.max_iter = static_cast<int>(s.integer("max_iter", st.max_iter));
        st.feas_tol = s.positive("feas_tol", st.feas_tol);
        st.gap_tol = s.positive("gap_tol", st.gap_tol);
        st.acceptable_tol = s.number("acceptable_tol", st.acceptable_tol);
        st.regularization = s.number("regularization", st.regularization);
        st.refinement_steps = static_cast<int>(s.integer("refinement_steps", st.refinement_steps));
        st.verbose = s.flag("verbose", st.verbose);
        s.finish();
    }
    if (root.has("propagator")) {
        Obj p = root.child("propagator");
        auto& ps = spec.propagator;
        ps.rel_tol = p.positive("rel_tol", ps.rel_tol);
        ps.abs_tol = p.positive("abs_tol", ps.abs_tol);
        ps.max_step = p.positive("max_step_s", ps.max_step);
        p.finish();
    }
    sc.output_dir = root.text("output_dir", "");
    const long long seed = root.integer("seed", 1);
    if (seed < 0) throw ScenarioError("seed", "must be non-negative");
    sc.estimate.seed = static_cast<std::uint64_t>(seed);
    const long long threads = root.integer("threads", 1);
    if (threads < 1) throw ScenarioError("threads", "must be positive");
    spec.threads = static_cast<int>(threads);
    sc.estimate.workers = spec.threads;
    root.finish();

    try {
        spec.validate();
    } catch (const InputError& e) {
        throw ScenarioError("", e.what());
    }
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("", "cannot open scenario " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ScenarioError("", path.string() + ": " + e.what());
    }
    return parse_scenario(doc);
}

json cartesian_json(const CartesianState& s) {
    json j;
    j["frame"] = "cartesian";
    j["position_km"] = {s.position[0], s.position[1], s.position[2]};
    j["velocity_kmps"] = {s.velocity[0], s.velocity[1], s.velocity[2]};
    return j;
}

json matrix_json(const Mat6& m) {
    json rows = json::array();
    for (int r = 0; r < 6; ++r) {
        json row = json::array();
        for (int k = 0; k < 6; ++k) row.push_back(m(r, k));
        rows.push_back(row);
    }
    return rows;
}

json boundary_json(const GaussianState& g, const std::string& frame_note) {
    json j;
    j["epoch_s"] = g.epoch.t;
    j["state"] = cartesian_json(g.mean);
    j["covariance_km_kmps"] = matrix_json(g.cov);
    j["frame_note"] = frame_note;
    return j;
}

}  // namespace mandet::cli
