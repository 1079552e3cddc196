#include "bpsv/run.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "bpsv/io.hpp"

namespace bpsv {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

[[noreturn]] void parse_fail(const std::string& key, const std::string& what) {
    throw Error(ErrorCode::Parse, "config key '" + key + "': " + what);
}

void reject_unknown(const json& obj, const std::string& where, std::set<std::string> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) parse_fail(where.empty() ? it.key() : where + "." + it.key(), "unknown key");
}

const json& require_object(const json& parent, const std::string& key) {
    if (!parent.contains(key)) parse_fail(key, "missing");
    if (!parent[key].is_object()) parse_fail(key, "expected an object");
    return parent[key];
}

double get_number(const json& obj, const std::string& where, const std::string& key, std::optional<double> fallback = {}) {
    if (!obj.contains(key)) {
        if (fallback) return *fallback;
        parse_fail(where + key, "missing");
    }
    if (!obj[key].is_number()) parse_fail(where + key, "expected a number");
    return obj[key].get<double>();
}

int get_int(const json& obj, const std::string& where, const std::string& key, std::optional<int> fallback = {}) {
    if (!obj.contains(key)) {
        if (fallback) return *fallback;
        parse_fail(where + key, "missing");
    }
    if (!obj[key].is_number_integer()) parse_fail(where + key, "expected an integer");
    return obj[key].get<int>();
}

bool get_bool(const json& obj, const std::string& where, const std::string& key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_boolean()) parse_fail(where + key, "expected true or false");
    return obj[key].get<bool>();
}

json parse_text(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // nlohmann reports "line L, column C" inside the message
        throw Error(ErrorCode::Parse, origin + ": " + e.what());
    }
}

std::vector<std::vector<Point>> parse_vortices(const json& v, const std::string& key) {
    if (!v.is_array()) parse_fail(key, "expected one list of [x, y] pairs per component");
    std::vector<std::vector<Point>> out;
    for (std::size_t c = 0; c < v.size(); ++c) {
        const auto ckey = key + "[" + std::to_string(c) + "]";
        if (!v[c].is_array()) parse_fail(ckey, "expected a list of [x, y] pairs");
        std::vector<Point> pts;
        for (std::size_t k = 0; k < v[c].size(); ++k) {
            const auto& p = v[c][k];
            if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
                parse_fail(ckey + "[" + std::to_string(k) + "]", "expected [x, y]");
            pts.push_back({p[0].get<double>(), p[1].get<double>()});
        }
        out.push_back(std::move(pts));
    }
    return out;
}

int even_count(double n) {
    const int k = static_cast<int>(std::lround(n / 2.0)) * 2;
    return std::max(k, 8);
}

double flux_relative_error(const std::vector<double>& flux, const std::vector<double>& expected) {
    double m = 0.0;
    for (std::size_t j = 0; j < flux.size(); ++j)
        m = std::max(m, std::abs(flux[j] - expected[j]) / (kFourPi * std::max(1.0, expected[j] / kFourPi)));
    return m;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const fs::path& base_dir) {
    const json doc = parse_text(text, "config");
    if (!doc.is_object()) throw Error(ErrorCode::Parse, "config: top level must be an object");
    reject_unknown(doc, "", {"mode", "l", "vortices", "vortices_file", "torus", "plane", "solver", "diagnostics",
                             "output", "seed"});

    RunConfig cfg;
    if (!doc.contains("mode") || !doc["mode"].is_string()) parse_fail("mode", "expected \"torus\" or \"plane\"");
    const auto mode = doc["mode"].get<std::string>();
    cfg.spec.l = get_int(doc, "", "l");

    if (doc.contains("vortices") == doc.contains("vortices_file"))
        parse_fail("vortices", "give exactly one of 'vortices' or 'vortices_file'");
    if (doc.contains("vortices")) {
        cfg.spec.points = parse_vortices(doc["vortices"], "vortices");
    } else {
        if (!doc["vortices_file"].is_string()) parse_fail("vortices_file", "expected a path");
        fs::path path = doc["vortices_file"].get<std::string>();
        if (path.is_relative()) path = base_dir / path;
        std::ifstream in(path);
        if (!in) parse_fail("vortices_file", "cannot open " + path.string());
        std::stringstream buf;
        buf << in.rdbuf();
        cfg.spec.points = parse_vortices(parse_text(buf.str(), path.string()), "vortices_file");
    }
    if (static_cast<int>(cfg.spec.points.size()) != cfg.spec.l)
        parse_fail("vortices", "has " + std::to_string(cfg.spec.points.size()) + " component lists but l = " +
                                   std::to_string(cfg.spec.l));

    if (mode == "torus") {
        if (doc.contains("plane")) parse_fail("plane", "not allowed in torus mode");
        const auto& t = require_object(doc, "torus");
        reject_unknown(t, "torus", {"Lx", "Ly", "nx", "ny"});
        cfg.spec.domain = TorusGeometry{get_number(t, "torus.", "Lx"), get_number(t, "torus.", "Ly"),
                                        get_int(t, "torus.", "nx"), get_int(t, "torus.", "ny")};
    } else if (mode == "plane") {
        if (doc.contains("torus")) parse_fail("torus", "not allowed in plane mode");
        const auto& p = require_object(doc, "plane");
        reject_unknown(p, "plane", {"R", "nx", "ny", "mu"});
        const int nx = get_int(p, "plane.", "nx");
        cfg.spec.domain = PlanarTruncation{get_number(p, "plane.", "R"), nx, get_int(p, "plane.", "ny", nx)};
        cfg.mu = get_number(p, "plane.", "mu", 1.0);
    } else {
        parse_fail("mode", "expected \"torus\" or \"plane\", got \"" + mode + "\"");
    }

    if (doc.contains("solver")) {
        const auto& s = require_object(doc, "solver");
        reject_unknown(s, "solver", {"tol", "residual_tol", "max_outer"});
        cfg.solver.tol = get_number(s, "solver.", "tol", cfg.solver.tol);
        cfg.solver.residual_tol = get_number(s, "solver.", "residual_tol", cfg.solver.residual_tol);
        cfg.solver.max_outer = get_int(s, "solver.", "max_outer", cfg.solver.max_outer);
    }
    if (doc.contains("diagnostics")) {
        const auto& d = require_object(doc, "diagnostics");
        reject_unknown(d, "diagnostics", {"flux", "K", "uniqueness", "decay", "symmetric"});
        cfg.flux = get_bool(d, "diagnostics.", "flux", cfg.flux);
        cfg.K = get_bool(d, "diagnostics.", "K", cfg.K);
        cfg.uniqueness_trials = get_int(d, "diagnostics.", "uniqueness", 0);
        cfg.symmetric = get_bool(d, "diagnostics.", "symmetric", false);
        if (d.contains("decay") && !d["decay"].is_null()) {
            const auto& w = d["decay"];
            if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number())
                parse_fail("diagnostics.decay", "expected [r1, r2]");
            cfg.decay_window = std::make_pair(w[0].get<double>(), w[1].get<double>());
        }
    }
    if (doc.contains("output")) {
        if (!doc["output"].is_string()) parse_fail("output", "expected a path");
        cfg.output = doc["output"].get<std::string>();
    }
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned()) parse_fail("seed", "expected a non-negative integer");
        cfg.seed = doc["seed"].get<std::uint64_t>();
    }

    try {
        cfg.spec.validate();
        (void)cfg.spec.grid();
    } catch (const Error& e) {
        throw Error(ErrorCode::Parse, std::string("config describes an invalid problem: ") + e.what());
    }
    if (cfg.uniqueness_trials == 1 || cfg.uniqueness_trials < 0)
        parse_fail("diagnostics.uniqueness", "expected 0 (off) or at least 2 starts");
    return cfg;
}

void set_sweep_parameter(RunConfig& config, const std::string& name, double value) {
    if (name == "nx") {
        const int n = static_cast<int>(std::lround(value));
        if (auto* t = std::get_if<TorusGeometry>(&config.spec.domain)) {
            t->nx = t->ny = n;
        } else {
            auto& p = std::get<PlanarTruncation>(config.spec.domain);
            p.nx = p.ny = n;
        }
    } else if (name == "R" || name == "mu") {
        auto* p = std::get_if<PlanarTruncation>(&config.spec.domain);
        if (!p) throw Error(ErrorCode::WrongDomain, "sweep parameter '" + name + "' applies to plane mode only");
        if (name == "mu") {
            config.mu = value;
        } else {
            p->nx = even_count(p->nx * value / p->R);
            p->ny = even_count(p->ny * value / p->R);
            p->R = value;
        }
    } else {
        throw Error(ErrorCode::InvalidArgument, "unknown sweep parameter '" + name + "' (expected nx, R or mu)");
    }
}

std::string format_gate_report(const GateReport& gate) {
    std::ostringstream out;
    out.precision(12);
    out << "threshold (l+1)|Omega|/(4 pi) = " << gate.threshold << "\n";
    for (std::size_t j = 0; j < gate.counts.size(); ++j)
        out << "component " << j + 1 << ": N = " << gate.counts[j] << ", margin = " << gate.margins[j]
            << ", K = " << gate.K[j] << (gate.K[j] > 0.0 ? "" : "  (K <= 0)") << "\n";
    out << "count condition max N_j < threshold: " << (gate.count_condition ? "holds" : "fails") << "\n";
    out << (gate.admissible ? "admissible" : "not admissible: some K_j <= 0, no solution exists") << "\n";
    return out.str();
}

RunSummary execute_run(const RunConfig& config, const fs::path& out_dir) {
    RunSummary out;
    const bool torus = config.spec.is_torus();
    const int l = config.spec.l;
    const bool write = !out_dir.empty();
    auto stem = [&](const char* base, int j) { return out_dir / (std::string(base) + "_" + std::to_string(j + 1)); };
    auto write_partial = [&](const SolveResult& r) {
        if (!write) return;
        write_history_csv(out_dir / "history.csv", r.history);
        for (int j = 0; j < l; ++j) write_field(stem("w", j), r.w[j], "w", j + 1);
    };

    std::optional<PeriodicProblem> periodic;
    std::optional<PlanarProblem> planar;
    try {
        if (torus) {
            periodic.emplace(config.spec);
            out.result = minimize(*periodic, config.solver);
        } else {
            planar.emplace(config.spec, config.mu);
            out.result = planar_minimize(*planar, config.solver);
        }
    } catch (const NotConvergedError& e) {
        write_partial(*e.partial());
        throw;
    }
    const auto& r = out.result;

    DiagnosticsReport& rep = out.report;
    rep.periodic = torus;
    rep.tolerances.gradient = config.solver.tol;
    rep.tolerances.residual = config.solver.residual_tol;
    rep.residuals = r.residual_components;
    const auto fields = reconstruct_fields(r);
    std::vector<double> flux, expected;
    for (int j = 0; j < l; ++j) {
        flux.push_back(integrate(fields.F[j]));
        expected.push_back(kFourPi * r.counts[j]);
    }
    out.flux_err_max = flux_relative_error(flux, expected);
    if (config.flux) {
        rep.flux = flux;
        rep.flux_expected = expected;
    }

    out.K_err_max = std::numeric_limits<double>::quiet_NaN();
    if (torus) {
        const auto res = check_K_identity(r, *periodic);
        rep.K = periodic->K();
        out.K_err_max = 0.0;
        for (int j = 0; j < l; ++j) out.K_err_max = std::max(out.K_err_max, std::abs(res[j]) / std::abs(rep.K[j]));
        if (config.K) rep.K_residuals = res;
    }

    out.decay_rate = std::numeric_limits<double>::quiet_NaN();
    if (config.decay_window) {
        if (torus) throw Error(ErrorCode::WrongDomain, "decay fits apply to plane mode only");
        rep.decay = decay_rate(r, config.decay_window->first, config.decay_window->second);
        out.decay_rate = rep.decay->rate;
    }
    if (config.uniqueness_trials >= 2)
        rep.multistart_delta = torus ? check_uniqueness(*periodic, config.uniqueness_trials, config.seed, config.solver)
                                     : check_uniqueness(*planar, config.uniqueness_trials, config.seed, config.solver);
    if (config.symmetric) {
        for (const auto& pts : config.spec.points)
            if (pts.size() != config.spec.points[0].size() ||
                !std::equal(pts.begin(), pts.end(), config.spec.points[0].begin(),
                            [](const Point& a, const Point& b) { return a.x == b.x && a.y == b.y; }))
                throw Error(ErrorCode::InvalidArgument, "symmetric check needs identical vortex lists in every component");
        rep.symmetric_delta =
            check_symmetric_reduction(l, config.spec.points[0], config.spec.domain, config.solver, config.mu).inter_component;
    }
    out.failures = rep.failures();

    if (write) {
        for (int j = 0; j < l; ++j) {
            write_field(stem("exp_u", j), r.exp_u[j], "exp_u", j + 1, 1.0);
            write_field(stem("F", j), fields.F[j], "F", j + 1, 0.0);
            write_field(stem("w", j), r.w[j], "w", j + 1, 0.0);
        }
        write_history_csv(out_dir / "history.csv", r.history);
        write_json(out_dir / "diagnostics.json", rep.to_json());
        if (rep.decay) write_decay_csv(out_dir / "decay.csv", *rep.decay);
    }
    return out;
}

}  // namespace bpsv
