#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "bpsv/bpsvortex.h"

namespace {

const double kPi = 3.14159265358979323846;

bpsv_problem* two_vortex(int n) {
    const int counts[2] = {1, 1};
    const double xy[4] = {1.0, 2.0, 4.0, 3.5};
    bpsv_problem* p = nullptr;
    REQUIRE(bpsv_problem_create_torus(2, 2 * kPi, 2 * kPi, n, n, counts, xy, &p) == BPSV_OK);
    return p;
}

}  // namespace

TEST_CASE("coupling through the C interface") {
    std::vector<double> A(9), L(9), Li(9), Ai(9), ev(3);
    REQUIRE(bpsv_coupling(3, A.data(), L.data(), Li.data(), Ai.data(), ev.data()) == BPSV_OK);
    CHECK(A[0] == 2.0);
    CHECK(A[1] == 1.0);
    // L L^T = A, A A^-1 = I
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double llt = 0.0, aai = 0.0;
            for (int k = 0; k < 3; ++k) {
                llt += L[i * 3 + k] * L[j * 3 + k];
                aai += A[i * 3 + k] * Ai[k * 3 + j];
            }
            CHECK(llt == doctest::Approx(A[i * 3 + j]).epsilon(1e-14));
            CHECK(aai == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-14));
        }
    double lo = 1e9, hi = 0.0;
    for (double e : ev) lo = std::min(lo, e), hi = std::max(hi, e);
    CHECK(lo == doctest::Approx(1.0));
    CHECK(hi == doctest::Approx(4.0));
    CHECK(bpsv_coupling(0, A.data(), nullptr, nullptr, nullptr, nullptr) == BPSV_E_DOMAIN);
    CHECK(std::string(bpsv_last_error()).size() > 0);
}

TEST_CASE("torus problem, gate and solve") {
    bpsv_problem* p = two_vortex(64);
    int admissible = 0;
    double threshold = 0.0, K[2], margins[2];
    REQUIRE(bpsv_problem_gate(p, &admissible, &threshold, K, margins) == BPSV_OK);
    CHECK(admissible == 1);
    CHECK(K[0] == doctest::Approx(4 * kPi * kPi - 4 * kPi + 8 * kPi / 3));
    double mu = 0.0;
    CHECK(bpsv_problem_mu(p, &mu) == BPSV_E_WRONG_DOMAIN);

    bpsv_result* r = nullptr;
    REQUIRE(bpsv_solve(p, nullptr, nullptr, &r) == BPSV_OK);
    bpsv_result_info info{};
    REQUIRE(bpsv_result_info_get(r, &info) == BPSV_OK);
    CHECK(info.converged == 1);
    CHECK(info.periodic == 1);
    CHECK(info.nx == 64);
    CHECK(info.grad_norm <= 1e-10);

    std::vector<double> e(64 * 64);
    REQUIRE(bpsv_result_field(r, BPSV_FIELD_EXP_U, 0, e.data(), e.size()) == BPSV_OK);
    for (double v : e) REQUIRE(v >= 0.0);
    CHECK(bpsv_result_field(r, BPSV_FIELD_U, 2, e.data(), e.size()) == BPSV_E_INVALID_ARGUMENT);
    CHECK(bpsv_result_field(r, BPSV_FIELD_U, 0, e.data(), 10) == BPSV_E_SHAPE);

    double flux[2];
    REQUIRE(bpsv_check_flux(r, flux) == BPSV_OK);
    CHECK(flux[0] == doctest::Approx(4 * kPi).epsilon(5e-3));
    double res[2];
    REQUIRE(bpsv_check_K_identity(p, r, res) == BPSV_OK);
    CHECK(std::abs(res[0]) < 1e-3 * K[0]);

    double E = 0.0;
    std::vector<double> w(2 * 64 * 64);
    REQUIRE(bpsv_result_field(r, BPSV_FIELD_W, 0, w.data(), 64 * 64) == BPSV_OK);
    REQUIRE(bpsv_result_field(r, BPSV_FIELD_W, 1, w.data() + 64 * 64, 64 * 64) == BPSV_OK);
    REQUIRE(bpsv_problem_energy(p, w.data(), w.size(), &E) == BPSV_OK);
    CHECK(std::isfinite(E));
    CHECK(bpsv_problem_energy(p, w.data(), 5, &E) == BPSV_E_SHAPE);

    // restart from the solution converges at once
    bpsv_result* again = nullptr;
    REQUIRE(bpsv_solve(p, nullptr, w.data(), &again) == BPSV_OK);
    double d = 1.0;
    REQUIRE(bpsv_result_max_u_distance(r, again, &d) == BPSV_OK);
    CHECK(d < 1e-8);

    bpsv_result_destroy(again);
    bpsv_result_destroy(r);
    bpsv_problem_destroy(p);
}

TEST_CASE("vacuum has no magnetic field") {
    const int counts[2] = {0, 0};
    bpsv_problem* p = nullptr;
    REQUIRE(bpsv_problem_create_torus(2, 3.0, 3.0, 16, 16, counts, nullptr, &p) == BPSV_OK);
    bpsv_result* r = nullptr;
    REQUIRE(bpsv_solve(p, nullptr, nullptr, &r) == BPSV_OK);
    std::vector<double> F(256);
    for (int j = 0; j < 2; ++j) {
        REQUIRE(bpsv_result_field(r, BPSV_FIELD_F, j, F.data(), F.size()) == BPSV_OK);
        for (double v : F) CHECK(std::abs(v) < 1e-14);
    }
    bpsv_result_destroy(r);
    bpsv_problem_destroy(p);
}

TEST_CASE("non-convergence returns the partial result") {
    bpsv_problem* p = two_vortex(32);
    bpsv_solver_options o;
    bpsv_solver_options_default(&o);
    o.max_outer = 2;
    bpsv_result* r = nullptr;
    CHECK(bpsv_solve(p, &o, nullptr, &r) == BPSV_E_NOT_CONVERGED);
    REQUIRE(r != nullptr);
    bpsv_result_info info{};
    REQUIRE(bpsv_result_info_get(r, &info) == BPSV_OK);
    CHECK(info.converged == 0);
    CHECK(info.iterations == 2);
    bpsv_result_destroy(r);
    bpsv_problem_destroy(p);
}

TEST_CASE("argument errors") {
    CHECK(bpsv_problem_create_torus(2, 1.0, 1.0, 8, 8, nullptr, nullptr, nullptr) == BPSV_E_INVALID_ARGUMENT);
    CHECK(bpsv_result_info_get(nullptr, nullptr) == BPSV_E_INVALID_ARGUMENT);
    CHECK(std::string(bpsv_status_name(BPSV_E_GATE)) == "gate");
    bpsv_problem_destroy(nullptr);
    bpsv_result_destroy(nullptr);

    const int counts[2] = {3, 0};
    const double xy[6] = {0.5, 0.5, 1.5, 1.0, 1.0, 2.5};
    const double L = 2 * std::sqrt(kPi);
    bpsv_problem* p = nullptr;
    REQUIRE(bpsv_problem_create_torus(2, L, L, 32, 32, counts, xy, &p) == BPSV_OK);
    bpsv_result* r = nullptr;
    CHECK(bpsv_solve(p, nullptr, nullptr, &r) == BPSV_E_GATE);
    CHECK(r == nullptr);
    CHECK(std::string(bpsv_last_error()).find("K_j") != std::string::npos);
    bpsv_problem_destroy(p);
}

TEST_CASE("config documents") {
    const char* text = R"({"mode": "torus", "l": 2, "vortices": [[[1, 2]], []],
        "torus": {"Lx": 6.0, "Ly": 6.0, "nx": 32, "ny": 32}})";
    bpsv_config* c = nullptr;
    REQUIRE(bpsv_config_parse(text, nullptr, &c) == BPSV_OK);
    int admissible = 0;
    char* report = nullptr;
    REQUIRE(bpsv_config_check(c, &admissible, &report) == BPSV_OK);
    CHECK(admissible == 1);
    CHECK(std::string(report).find("component 2: N = 0") != std::string::npos);
    bpsv_string_free(report);

    bpsv_run_summary s{};
    REQUIRE(bpsv_config_run(c, nullptr, &s) == BPSV_OK);
    CHECK(s.converged == 1);
    CHECK(s.checks_passed == 1);
    CHECK(s.flux_err_max < 5e-3);
    CHECK(std::isnan(s.decay_rate));

    CHECK(bpsv_config_set_parameter(c, "mu", 2.0) == BPSV_E_WRONG_DOMAIN);
    bpsv_config_destroy(c);

    c = nullptr;
    CHECK(bpsv_config_parse(R"({"mode": "torus", "bogus": 1})", nullptr, &c) == BPSV_E_PARSE);
    CHECK(c == nullptr);
    CHECK(std::string(bpsv_last_error()).find("bogus") != std::string::npos);
}
