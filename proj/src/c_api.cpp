#include "bpsv/bpsvortex.h"

#include <cstdlib>
#include <cstring>
#include <optional>
#include <limits>
#include <memory>
#include <new>
#include <string>
#include <variant>

#include "bpsv/diagnostics.hpp"
#include "bpsv/io.hpp"
#include "bpsv/run.hpp"

struct bpsv_problem {
    std::variant<bpsv::PeriodicProblem, bpsv::PlanarProblem> p;
};
struct bpsv_result {
    bpsv::SolveResult r;
};
struct bpsv_config {
    bpsv::RunConfig c;
};

namespace {

thread_local std::string g_last_error;

bpsv_status fail(bpsv_status s, std::string msg) {
    g_last_error = std::move(msg);
    return s;
}

template <class F>
bpsv_status guarded(F&& f) {
    try {
        g_last_error.clear();
        return f();
    } catch (const bpsv::Error& e) {
        return fail(static_cast<bpsv_status>(static_cast<int>(e.code())), e.what());
    } catch (const std::bad_alloc&) {
        return fail(BPSV_E_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(BPSV_E_INTERNAL, e.what());
    }
}

#define BPSV_REQUIRE(ptr) \
    if (!(ptr)) return fail(BPSV_E_INVALID_ARGUMENT, std::string(#ptr) + " must not be NULL")

bpsv::SolverOptions to_options(const bpsv_solver_options* o) {
    bpsv::SolverOptions s;
    if (!o) return s;
    s.tol = o->tol;
    s.residual_tol = o->residual_tol;
    s.max_outer = o->max_outer;
    s.max_cg = o->max_cg;
    s.max_step = o->max_step;
    s.force = o->force != 0;
    return s;
}

std::vector<std::vector<bpsv::Point>> gather_points(int l, const int* counts, const double* xy) {
    if (l < 1) throw bpsv::Error(bpsv::ErrorCode::Domain, "l must be at least 1");
    std::vector<std::vector<bpsv::Point>> pts(l);
    std::size_t k = 0;
    for (int j = 0; j < l; ++j) {
        const int n = counts ? counts[j] : 0;
        if (n < 0) throw bpsv::Error(bpsv::ErrorCode::InvalidArgument, "negative vortex count");
        if (n > 0 && !xy) throw bpsv::Error(bpsv::ErrorCode::InvalidArgument, "xy must not be NULL");
        for (int i = 0; i < n; ++i, k += 2) pts[j].push_back({xy[k], xy[k + 1]});
    }
    return pts;
}

const bpsv::Grid& problem_grid(const bpsv_problem* p) {
    return std::visit([](const auto& q) -> const bpsv::Grid& { return q.grid(); }, p->p);
}

const bpsv::VortexSpec& problem_spec(const bpsv_problem* p) {
    return std::visit([](const auto& q) -> const bpsv::VortexSpec& { return q.spec(); }, p->p);
}

const bpsv::VortexFunctional& problem_functional(const bpsv_problem* p) {
    return std::visit([](const auto& q) -> const bpsv::VortexFunctional& { return q.functional(); }, p->p);
}

bpsv::FieldSet unpack(const bpsv::Grid& grid, int l, const double* data, std::size_t len) {
    if (len != grid.size() * static_cast<std::size_t>(l))
        throw bpsv::Error(bpsv::ErrorCode::Shape, "expected " + std::to_string(grid.size() * l) + " values");
    bpsv::FieldSet w;
    for (int j = 0; j < l; ++j)
        w.emplace_back(grid, std::vector<double>(data + j * grid.size(), data + (j + 1) * grid.size()));
    return w;
}

void pack(const bpsv::FieldSet& f, double* out) {
    for (const auto& c : f) out = std::copy(c.values().begin(), c.values().end(), out);
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void copy_matrix(const bpsv::DenseMatrix& m, double* out) {
    if (!out) return;
    std::copy(m.data.begin(), m.data.end(), out);
}

}  // namespace

extern "C" {

const char* bpsv_version(void) { return "1.0.0"; }

const char* bpsv_last_error(void) { return g_last_error.c_str(); }

const char* bpsv_status_name(bpsv_status status) {
    switch (status) {
        case BPSV_OK: return "ok";
        case BPSV_E_INTERNAL: return "internal";
        default: return bpsv::error_code_name(static_cast<bpsv::ErrorCode>(static_cast<int>(status)));
    }
}

void bpsv_string_free(char* s) { std::free(s); }

void bpsv_solver_options_default(bpsv_solver_options* options) {
    if (!options) return;
    const bpsv::SolverOptions d;
    *options = {d.tol, d.residual_tol, d.max_outer, d.max_cg, d.max_step, d.force ? 1 : 0};
}

bpsv_status bpsv_coupling(int l, double* A, double* L, double* L_inv, double* A_inv, double* eigenvalues) {
    return guarded([&] {
        const bpsv::CouplingData c(l);
        copy_matrix(c.A(), A);
        copy_matrix(c.L(), L);
        copy_matrix(c.L_inv(), L_inv);
        copy_matrix(c.A_inv(), A_inv);
        if (eigenvalues) std::copy(c.eigenvalues().begin(), c.eigenvalues().end(), eigenvalues);
        return BPSV_OK;
    });
}

bpsv_status bpsv_problem_create_torus(int l, double Lx, double Ly, int nx, int ny, const int* counts,
                                      const double* xy, bpsv_problem** out) {
    BPSV_REQUIRE(out);
    *out = nullptr;
    return guarded([&] {
        bpsv::VortexSpec spec{l, gather_points(l, counts, xy), bpsv::TorusGeometry{Lx, Ly, nx, ny}};
        *out = new bpsv_problem{bpsv::PeriodicProblem(std::move(spec))};
        return BPSV_OK;
    });
}

bpsv_status bpsv_problem_create_plane(int l, double R, int nx, int ny, double mu, const int* counts,
                                      const double* xy, bpsv_problem** out) {
    BPSV_REQUIRE(out);
    *out = nullptr;
    return guarded([&] {
        bpsv::VortexSpec spec{l, gather_points(l, counts, xy), bpsv::PlanarTruncation{R, nx, ny}};
        *out = new bpsv_problem{bpsv::PlanarProblem(std::move(spec), mu)};
        return BPSV_OK;
    });
}

void bpsv_problem_destroy(bpsv_problem* problem) { delete problem; }

bpsv_status bpsv_problem_gate(const bpsv_problem* problem, int* admissible, double* threshold, double* K,
                              double* margins) {
    BPSV_REQUIRE(problem);
    return guarded([&] {
        const auto* p = std::get_if<bpsv::PeriodicProblem>(&problem->p);
        if (!p) return fail(BPSV_E_WRONG_DOMAIN, "the existence gate applies to torus problems");
        const auto& g = p->gate();
        if (admissible) *admissible = g.admissible ? 1 : 0;
        if (threshold) *threshold = g.threshold;
        if (K) std::copy(g.K.begin(), g.K.end(), K);
        if (margins) std::copy(g.margins.begin(), g.margins.end(), margins);
        return BPSV_OK;
    });
}

bpsv_status bpsv_problem_mu(const bpsv_problem* problem, double* mu) {
    BPSV_REQUIRE(problem);
    BPSV_REQUIRE(mu);
    const auto* p = std::get_if<bpsv::PlanarProblem>(&problem->p);
    if (!p) return fail(BPSV_E_WRONG_DOMAIN, "mu applies to plane problems");
    *mu = p->mu();
    return BPSV_OK;
}

bpsv_status bpsv_problem_energy(const bpsv_problem* problem, const double* w, size_t len, double* energy) {
    BPSV_REQUIRE(problem);
    BPSV_REQUIRE(w);
    BPSV_REQUIRE(energy);
    return guarded([&] {
        *energy = problem_functional(problem).energy(unpack(problem_grid(problem), problem_spec(problem).l, w, len));
        return BPSV_OK;
    });
}

bpsv_status bpsv_problem_gradient(const bpsv_problem* problem, const double* w, size_t len, double* grad) {
    BPSV_REQUIRE(problem);
    BPSV_REQUIRE(w);
    BPSV_REQUIRE(grad);
    return guarded([&] {
        pack(problem_functional(problem).gradient(unpack(problem_grid(problem), problem_spec(problem).l, w, len)), grad);
        return BPSV_OK;
    });
}

bpsv_status bpsv_solve(const bpsv_problem* problem, const bpsv_solver_options* options, const double* w0,
                       bpsv_result** out) {
    BPSV_REQUIRE(problem);
    BPSV_REQUIRE(out);
    *out = nullptr;
    return guarded([&] {
        const auto opts = to_options(options);
        const auto& grid = problem_grid(problem);
        const int l = problem_spec(problem).l;
        const auto start = w0 ? unpack(grid, l, w0, grid.size() * l) : bpsv::zero_fields(grid, l);
        try {
            *out = new bpsv_result{std::visit(
                [&](const auto& p) {
                    if constexpr (std::is_same_v<std::decay_t<decltype(p)>, bpsv::PeriodicProblem>)
                        return bpsv::minimize(p, start, opts);
                    else
                        return bpsv::planar_minimize(p, start, opts);
                },
                problem->p)};
        } catch (const bpsv::NotConvergedError& e) {
            *out = new bpsv_result{*e.partial()};
            return fail(BPSV_E_NOT_CONVERGED, e.what());
        }
        return BPSV_OK;
    });
}

void bpsv_result_destroy(bpsv_result* result) { delete result; }

bpsv_status bpsv_result_info_get(const bpsv_result* result, bpsv_result_info* info) {
    BPSV_REQUIRE(result);
    BPSV_REQUIRE(info);
    const auto& r = result->r;
    *info = {r.l,         r.boundary == bpsv::Boundary::Periodic ? 1 : 0,
             r.grid.nx,   r.grid.ny,
             r.grid.x0,   r.grid.y0,
             r.grid.hx,   r.grid.hy,
             r.iterations, r.grad_norm,
             r.residual,  r.residual_max,
             r.converged ? 1 : 0};
    return BPSV_OK;
}

bpsv_status bpsv_result_field(const bpsv_result* result, bpsv_field field, int component, double* buf, size_t len) {
    BPSV_REQUIRE(result);
    BPSV_REQUIRE(buf);
    return guarded([&] {
        const auto& r = result->r;
        if (component < 0 || component >= r.l) return fail(BPSV_E_INVALID_ARGUMENT, "component out of range");
        if (len != r.grid.size()) return fail(BPSV_E_SHAPE, "buffer must hold nx*ny values");
        const bpsv::ScalarField2D* f = nullptr;
        std::optional<bpsv::ReconstructedFields> rec;
        switch (field) {
            case BPSV_FIELD_EXP_U: f = &r.exp_u[component]; break;
            case BPSV_FIELD_U: f = &r.u[component]; break;
            case BPSV_FIELD_W: f = &r.w[component]; break;
            case BPSV_FIELD_V: f = &r.v[component]; break;
            case BPSV_FIELD_Q_ABS:
            case BPSV_FIELD_F:
                rec = bpsv::reconstruct_fields(r);
                f = field == BPSV_FIELD_F ? &rec->F[component] : &rec->q_abs[component];
                break;
            default: return fail(BPSV_E_INVALID_ARGUMENT, "unknown field");
        }
        std::copy(f->values().begin(), f->values().end(), buf);
        return BPSV_OK;
    });
}

bpsv_status bpsv_result_max_u_distance(const bpsv_result* a, const bpsv_result* b, double* distance) {
    BPSV_REQUIRE(a);
    BPSV_REQUIRE(b);
    BPSV_REQUIRE(distance);
    return guarded([&] {
        *distance = bpsv::max_u_distance(a->r, b->r);
        return BPSV_OK;
    });
}

bpsv_status bpsv_check_flux(const bpsv_result* result, double* flux) {
    BPSV_REQUIRE(result);
    BPSV_REQUIRE(flux);
    return guarded([&] {
        const auto f = bpsv::check_flux(result->r);
        std::copy(f.begin(), f.end(), flux);
        return BPSV_OK;
    });
}

bpsv_status bpsv_check_K_identity(const bpsv_problem* problem, const bpsv_result* result, double* residuals) {
    BPSV_REQUIRE(problem);
    BPSV_REQUIRE(result);
    BPSV_REQUIRE(residuals);
    return guarded([&] {
        const auto* p = std::get_if<bpsv::PeriodicProblem>(&problem->p);
        if (!p) return fail(BPSV_E_WRONG_DOMAIN, "the K identity holds on the torus only");
        const auto r = bpsv::check_K_identity(result->r, *p);
        std::copy(r.begin(), r.end(), residuals);
        return BPSV_OK;
    });
}

bpsv_status bpsv_check_uniqueness(const bpsv_problem* problem, int trials, uint64_t seed,
                                  const bpsv_solver_options* options, double* delta) {
    BPSV_REQUIRE(problem);
    BPSV_REQUIRE(delta);
    return guarded([&] {
        const auto opts = to_options(options);
        *delta = std::visit([&](const auto& p) { return bpsv::check_uniqueness(p, trials, seed, opts); }, problem->p);
        return BPSV_OK;
    });
}

bpsv_status bpsv_decay_rate(const bpsv_result* result, double r1, double r2, double* rate, double* grad_rate) {
    BPSV_REQUIRE(result);
    return guarded([&] {
        const auto fit = bpsv::decay_rate(result->r, r1, r2);
        if (rate) *rate = fit.rate;
        if (grad_rate) *grad_rate = fit.grad_rate;
        return BPSV_OK;
    });
}

bpsv_status bpsv_check_symmetric(const bpsv_problem* like, int n, const double* xy, const bpsv_solver_options* options,
                                 double* inter_component, double* scalar_profile) {
    BPSV_REQUIRE(like);
    return guarded([&] {
        const auto pts = gather_points(1, &n, xy)[0];
        const auto& spec = problem_spec(like);
        double mu = 1.0;
        if (const auto* p = std::get_if<bpsv::PlanarProblem>(&like->p)) mu = p->mu();
        const auto sym = bpsv::check_symmetric_reduction(spec.l, pts, spec.domain, to_options(options), mu);
        if (inter_component) *inter_component = sym.inter_component;
        if (scalar_profile) *scalar_profile = sym.scalar_profile;
        return BPSV_OK;
    });
}

bpsv_status bpsv_result_write_fields(const bpsv_result* result, const char* dir) {
    BPSV_REQUIRE(result);
    BPSV_REQUIRE(dir);
    return guarded([&] {
        const auto& r = result->r;
        const std::filesystem::path base(dir);
        for (int j = 0; j < r.l; ++j) {
            const auto suffix = "_" + std::to_string(j + 1);
            bpsv::write_field(base / ("exp_u" + suffix), r.exp_u[j], "exp_u", j + 1, 1.0);
            bpsv::write_field(base / ("w" + suffix), r.w[j], "w", j + 1, 0.0);
            if (r.converged)
                bpsv::write_field(base / ("F" + suffix), bpsv::reconstruct_fields(r).F[j], "F", j + 1, 0.0);
        }
        return BPSV_OK;
    });
}

bpsv_status bpsv_result_write_history(const bpsv_result* result, const char* path) {
    BPSV_REQUIRE(result);
    BPSV_REQUIRE(path);
    return guarded([&] {
        bpsv::write_history_csv(path, result->r.history);
        return BPSV_OK;
    });
}

bpsv_status bpsv_config_parse(const char* json_text, const char* base_dir, bpsv_config** out) {
    BPSV_REQUIRE(json_text);
    BPSV_REQUIRE(out);
    *out = nullptr;
    return guarded([&] {
        *out = new bpsv_config{bpsv::parse_run_config(json_text, base_dir ? base_dir : "")};
        return BPSV_OK;
    });
}

void bpsv_config_destroy(bpsv_config* config) { delete config; }

bpsv_status bpsv_config_clone(const bpsv_config* config, bpsv_config** out) {
    BPSV_REQUIRE(config);
    BPSV_REQUIRE(out);
    return guarded([&] {
        *out = new bpsv_config{config->c};
        return BPSV_OK;
    });
}

bpsv_status bpsv_config_set_seed(bpsv_config* config, uint64_t seed) {
    BPSV_REQUIRE(config);
    config->c.seed = seed;
    return BPSV_OK;
}

bpsv_status bpsv_config_set_force(bpsv_config* config, int force) {
    BPSV_REQUIRE(config);
    config->c.solver.force = force != 0;
    return BPSV_OK;
}

bpsv_status bpsv_config_set_parameter(bpsv_config* config, const char* name, double value) {
    BPSV_REQUIRE(config);
    BPSV_REQUIRE(name);
    return guarded([&] {
        bpsv::set_sweep_parameter(config->c, name, value);
        return BPSV_OK;
    });
}

bpsv_status bpsv_config_output(const bpsv_config* config, char** out) {
    BPSV_REQUIRE(config);
    BPSV_REQUIRE(out);
    return guarded([&] {
        *out = dup_string(config->c.output);
        return BPSV_OK;
    });
}

bpsv_status bpsv_config_check(const bpsv_config* config, int* admissible, char** report) {
    BPSV_REQUIRE(config);
    return guarded([&] {
        if (!config->c.spec.is_torus()) return fail(BPSV_E_WRONG_DOMAIN, "check applies to torus mode only");
        const auto gate = bpsv::existence_condition(config->c.spec);
        if (admissible) *admissible = gate.admissible ? 1 : 0;
        if (report) *report = dup_string(bpsv::format_gate_report(gate));
        return BPSV_OK;
    });
}

bpsv_status bpsv_config_run(const bpsv_config* config, const char* out_dir, bpsv_run_summary* summary) {
    BPSV_REQUIRE(config);
    return guarded([&] {
        bpsv_run_summary s{};
        s.K_err_max = s.decay_rate = std::numeric_limits<double>::quiet_NaN();
        try {
            const auto run = bpsv::execute_run(config->c, out_dir ? out_dir : "");
            s.converged = 1;
            s.iterations = run.result.iterations;
            s.grad_norm = run.result.grad_norm;
            s.residual = run.result.residual;
            s.flux_err_max = run.flux_err_max;
            s.K_err_max = run.K_err_max;
            s.decay_rate = run.decay_rate;
            s.checks_passed = run.failures.empty() ? 1 : 0;
            std::string joined;
            for (const auto& f : run.failures) joined += (joined.empty() ? "" : ",") + f;
            std::strncpy(s.failures, joined.c_str(), sizeof s.failures - 1);
        } catch (const bpsv::NotConvergedError& e) {
            const auto& p = *e.partial();
            s.iterations = p.iterations;
            s.grad_norm = p.grad_norm;
            s.residual = p.residual;
            s.flux_err_max = std::numeric_limits<double>::quiet_NaN();
            if (summary) *summary = s;
            throw;
        }
        if (summary) *summary = s;
        return BPSV_OK;
    });
}

}  // extern "C"
