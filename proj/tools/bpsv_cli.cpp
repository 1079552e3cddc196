// Batch front end. Links only the C interface.
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "bpsv/bpsvortex.h"

namespace fs = std::filesystem;

namespace {

// exit codes
constexpr int kOk = 0;
constexpr int kNegative = 1;
constexpr int kRefused = 2;
constexpr int kNotConverged = 3;
constexpr int kUsage = 64;

struct Options {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool force = false;
    int threads = 1;
    std::string param;
    std::string values;
};

int exit_for(bpsv_status s) {
    switch (s) {
        case BPSV_OK: return kOk;
        case BPSV_E_GATE: return kRefused;
        case BPSV_E_NOT_CONVERGED:
        case BPSV_E_DIVERGED:
        case BPSV_E_SOLVABILITY:
        case BPSV_E_UNDERFLOW: return kNotConverged;
        default: return kUsage;
    }
}

int report(bpsv_status s) {
    std::cerr << "error (" << bpsv_status_name(s) << "): " << bpsv_last_error() << "\n";
    return exit_for(s);
}

class Config {
public:
    ~Config() { bpsv_config_destroy(ptr_); }
    bpsv_config* get() const { return ptr_; }
    bpsv_config** out() { return &ptr_; }

private:
    bpsv_config* ptr_ = nullptr;
};

bpsv_status load(const Options& o, Config& cfg) {
    std::ifstream in(o.config);
    if (!in) {
        std::cerr << "error (parse): cannot read config " << o.config << "\n";
        return BPSV_E_PARSE;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    const auto base = fs::path(o.config).parent_path().string();
    if (auto s = bpsv_config_parse(buf.str().c_str(), base.c_str(), cfg.out()); s != BPSV_OK) return s;
    if (o.seed_given) bpsv_config_set_seed(cfg.get(), o.seed);
    bpsv_config_set_force(cfg.get(), o.force ? 1 : 0);
    return BPSV_OK;
}

std::string output_dir(const Options& o, const Config& cfg) {
    if (!o.out.empty()) return o.out;
    char* s = nullptr;
    if (bpsv_config_output(cfg.get(), &s) != BPSV_OK) return "out";
    std::string dir = s;
    bpsv_string_free(s);
    return dir;
}

std::string num(double x) {
    if (std::isnan(x)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

int cmd_check(const Options& o) {
    Config cfg;
    if (auto s = load(o, cfg); s != BPSV_OK) return report(s);
    int admissible = 0;
    char* text = nullptr;
    if (auto s = bpsv_config_check(cfg.get(), &admissible, &text); s != BPSV_OK) return report(s);
    std::cout << text;
    bpsv_string_free(text);
    return admissible ? kOk : kNegative;
}

int cmd_solve(const Options& o) {
    Config cfg;
    if (auto s = load(o, cfg); s != BPSV_OK) return report(s);
    const auto dir = output_dir(o, cfg);
    bpsv_run_summary sum{};
    const auto s = bpsv_config_run(cfg.get(), dir.c_str(), &sum);
    if (s != BPSV_OK) {
        if (s == BPSV_E_NOT_CONVERGED)
            std::cerr << "iterations " << sum.iterations << ", gradient norm " << sum.grad_norm << "\n";
        return report(s);
    }
    std::cout << "converged in " << sum.iterations << " iterations; gradient norm " << num(sum.grad_norm)
              << ", residual " << num(sum.residual) << "\n"
              << "flux_err_max " << num(sum.flux_err_max);
    if (!std::isnan(sum.K_err_max)) std::cout << ", K_err_max " << num(sum.K_err_max);
    if (!std::isnan(sum.decay_rate)) std::cout << ", decay_rate " << num(sum.decay_rate);
    std::cout << "\nartifacts in " << dir << "\n";
    if (!sum.checks_passed) {
        std::cout << "checks outside tolerance: " << sum.failures << "\n";
        return kNegative;
    }
    return kOk;
}

std::vector<std::string> split_values(const std::string& list) {
    std::vector<std::string> out;
    std::stringstream ss(list);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok.erase(0, tok.find_first_not_of(" \t"));
        tok.erase(tok.find_last_not_of(" \t") + 1);
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

int cmd_sweep(const Options& o) {
    Config cfg;
    if (auto s = load(o, cfg); s != BPSV_OK) return report(s);
    if (o.param != "nx" && o.param != "R" && o.param != "mu") {
        std::cerr << "error (parse): --param must be nx, R or mu\n";
        return kUsage;
    }
    const auto values = split_values(o.values);
    std::vector<double> parsed;
    for (const auto& v : values) {
        try {
            std::size_t used = 0;
            parsed.push_back(std::stod(v, &used));
            if (used != v.size()) throw std::invalid_argument(v);
        } catch (const std::exception&) {
            std::cerr << "error (parse): sweep value '" << v << "' is not a number\n";
            return kUsage;
        }
    }
    const fs::path dir = output_dir(o, cfg);

    std::vector<std::string> rows(values.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < values.size();) {
            std::string row = values[i] + ",";
            Config sub;
            auto s = bpsv_config_clone(cfg.get(), sub.out());
            if (s == BPSV_OK) s = bpsv_config_set_parameter(sub.get(), o.param.c_str(), parsed[i]);
            bpsv_run_summary sum{};
            if (s == BPSV_OK) {
                const auto sub_dir = (dir / (o.param + "_" + values[i])).string();
                s = bpsv_config_run(sub.get(), sub_dir.c_str(), &sum);
            }
            if (s == BPSV_OK) {
                row += num(sum.residual) + "," + num(sum.flux_err_max) + "," + num(sum.K_err_max) + "," +
                       num(sum.decay_rate);
            } else {
                std::string msg = bpsv_last_error();
                for (auto& c : msg)
                    if (c == ',' || c == '\n') c = ';';
                row += std::string("failed:") + bpsv_status_name(s) + " " + msg + ",,,";
            }
            rows[i] = std::move(row);
        }
    };
    const int n = std::max(1, std::min<int>(o.threads, static_cast<int>(values.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::ostringstream csv;
    csv << "value,residual,flux_err_max,K_err_max,decay_rate\n";
    for (const auto& r : rows) csv << r << "\n";
    std::cout << csv.str();
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream(dir / "sweep.csv") << csv.str();
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BPS multi-vortex solver"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON run configuration")->required();
        sub->add_option("--out", o.out, "output directory (default: config \"output\")");
        sub->add_option("--seed", o.seed, "seed for random initializations")->each([&](const std::string&) {
            o.seed_given = true;
        });
        sub->add_flag("--force", o.force, "solve even when the existence condition fails");
        sub->add_option("--threads", o.threads, "concurrent sweep sub-runs")->check(CLI::PositiveNumber);
    };
    auto* check = app.add_subcommand("check", "print the existence-condition report (torus)");
    common(check);
    auto* solve = app.add_subcommand("solve", "solve, run diagnostics, write artifacts");
    common(solve);
    auto* sweep = app.add_subcommand("sweep", "one solve per parameter value; CSV on stdout");
    common(sweep);
    sweep->add_option("--param", o.param, "nx, R or mu")->required();
    sweep->add_option("--values", o.values, "comma-separated values")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kUsage;
    }
    if (*check) return cmd_check(o);
    if (*solve) return cmd_solve(o);
    return cmd_sweep(o);
}
