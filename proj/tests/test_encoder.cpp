#include <doctest.h>

#include <cmath>
#include <random>

#include "ccomm/encoder_solver.hpp"
#include "ccomm/error.hpp"
#include "ccomm/integrator.hpp"
#include "oracles.hpp"

using namespace ccomm;
using namespace ccomm::encoder;
using integrator::IntegratorProblem;

namespace {

SubproblemSpec reduced(const Matrix& q, const Matrix& r, int m, double eps, SolverConfig cfg = {}) {
    return SubproblemSpec::from_basis(Matrix::Identity(q.rows(), q.cols()), q, r, m, eps, cfg);
}

// Minimum of v'Av / v'Bv by gradient descent on the B-sphere from many starts.
double rayleigh_search(const Matrix& A, const Matrix& B, std::mt19937_64& rng) {
    double best = 1e300;
    for (int start = 0; start < 20; ++start) {
        Vector v = oracle::random_vector(A.rows(), rng);
        double step = 0.1;
        double val = v.dot(A * v) / v.dot(B * v);
        for (int it = 0; it < 20000; ++it) {
            Vector g = 2.0 * (A * v - val * (B * v)) / v.dot(B * v);
            Vector w = v - step * g;
            w /= std::sqrt(w.dot(B * w));
            const double nv = w.dot(A * w);
            if (nv < val) {
                v = w;
                val = nv;
                step *= 1.2;
            } else {
                step *= 0.5;
                if (step < 1e-18) break;
            }
        }
        best = std::min(best, val);
    }
    return best;
}

IntegratorProblem problem(int n, int N, Vector x, int m, double eps) {
    IntegratorProblem p;
    p.order = n;
    p.degree = N;
    p.messages = m;
    p.epsilon = eps;
    p.terminal = std::move(x);
    return p;
}

}  // namespace

TEST_CASE("m2 oracle examples") {
    auto id = solve_m2_oracle(reduced(Matrix::Identity(3, 3), Matrix::Identity(3, 3), 2, 0.4));
    CHECK(id.cost == doctest::Approx(0.08).epsilon(1e-14));

    Matrix q = Eigen::Vector2d(1, 4).asDiagonal();
    auto d = solve_m2_oracle(reduced(q, Matrix::Identity(2, 2), 2, 1.0));
    CHECK(d.cost == doctest::Approx(0.5).epsilon(1e-14));
    Vector delta = d.coordinates[0] - d.coordinates[1];
    CHECK(std::abs(delta(1)) <= 1e-14);
    CHECK(std::abs(delta(0)) == doctest::Approx(1.0));

    CHECK_THROWS_AS(solve_m2_oracle(reduced(q, Matrix::Identity(2, 2), 3, 1.0)), InvalidArgument);
}

TEST_CASE("m2 oracle matches a direct Rayleigh search") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 5; ++trial) {
        Matrix A = oracle::random_spd(3, rng), B = oracle::random_spd(3, rng);
        const double eps = 0.7;
        const double lam = rayleigh_search(A, B, rng);
        auto sol = solve_m2_oracle(reduced(A, B, 2, eps));
        CHECK(std::abs(sol.cost - 0.5 * eps * eps * lam) <= 1e-6);
    }
}

TEST_CASE("solve_subproblem small cases") {
    auto one = solve_subproblem(reduced(Matrix::Identity(2, 2), Matrix::Identity(2, 2), 1, 1.0));
    REQUIRE(one.offsets.size() == 1);
    CHECK(one.offsets[0].isZero(0));
    CHECK(one.cost == 0.0);

    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index d = 1 + trial % 4;
        Matrix A = oracle::random_spd(d, rng), B = oracle::random_spd(d, rng);
        auto spec = reduced(A, B, 2, 0.3 + 0.1 * trial);
        CHECK(std::abs(solve_subproblem(spec).cost - solve_m2_oracle(spec).cost) <= 1e-6);
    }
}

TEST_CASE("equal Q and R reproduce the identity geometry") {
    std::mt19937_64 rng(6);
    for (int m = 2; m <= 5; ++m) {
        Matrix A = oracle::random_spd(m + 1, rng);
        const double eps = 0.5;
        auto sol = solve_subproblem(reduced(A, A, m, eps));
        CHECK(std::abs(sol.cost - 0.5 * (m - 1) * eps * eps) <= 1e-6);
    }
}

TEST_CASE("solutions reach the eigenvalue-sum bound") {
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 8; ++trial) {
        const int m = 3 + trial % 3;
        const Eigen::Index d = m - 1 + trial % 2;
        Matrix A = oracle::random_spd(d, rng), B = oracle::random_spd(d, rng);
        auto sol = solve_subproblem(reduced(A, B, m, 1.0));
        CHECK(sol.cost >= oracle::simplex_trace_bound(A, B, m, 1.0) - 1e-8);
        CHECK(std::abs(sol.cost - oracle::simplex_trace_bound(A, B, m, 1.0)) <= 1e-6);
        CHECK(sol.max_separation_error <= 1e-8);
    }
}

TEST_CASE("integrator subproblem feasibility") {
    for (int n = 1; n <= 3; ++n)
        for (int N = n; N <= 8; N += 2)
            for (int m = 2; m <= std::min(4, N - n + 2); ++m) {
                auto spec = integrator_subproblem(n, N, m, 0.2);
                auto sol = solve_subproblem(spec);
                CHECK(sol.max_nullspace_residual <= 1e-9);
                const Matrix L = integrator::build_L(n, N).to_double();
                const Matrix R = integrator::build_R(n, N).to_double();
                for (int i = 0; i < m; ++i) {
                    CHECK((L * sol.offsets[static_cast<std::size_t>(i)]).cwiseAbs().maxCoeff() <= 1e-9);
                    for (int j = i + 1; j < m; ++j) {
                        Vector dlt = sol.offsets[static_cast<std::size_t>(i)] - sol.offsets[static_cast<std::size_t>(j)];
                        CHECK(std::abs(integrator::quadratic_form(dlt, integrator::build_R(n, N)) - 0.04) <= 1e-8 * 0.04);
                        CHECK(std::abs(dlt.dot(R * dlt) - 0.04) <= 1e-6 * 0.04);
                    }
                }
                CHECK(std::abs(sol.cost - oracle::simplex_trace_bound(spec.q_reduced, spec.r_reduced, m, 0.2)) <= 1e-8);
            }
}

TEST_CASE("cost is nondecreasing in epsilon") {
    for (auto [n, N, m] : std::vector<std::tuple<int, int, int>>{{1, 3, 2}, {2, 5, 3}, {3, 7, 4}}) {
        double prev = 0.0;
        for (double eps : {0.01, 0.05, 0.1, 0.3, 0.7, 1.0, 2.0}) {
            auto sol = solve_subproblem(integrator_subproblem(n, N, m, eps));
            CHECK(sol.cost >= prev);
            prev = sol.cost;
        }
    }
}

TEST_CASE("solver output is deterministic") {
    SolverConfig cfg;
    cfg.seed = 1234;
    auto a = solve_subproblem(integrator_subproblem(2, 6, 4, 0.3, cfg));
    auto b = solve_subproblem(integrator_subproblem(2, 6, 4, 0.3, cfg));
    cfg.threads = 4;
    auto c = solve_subproblem(integrator_subproblem(2, 6, 4, 0.3, cfg));
    CHECK(a.cost == b.cost);
    CHECK(a.cost == c.cost);
    CHECK(a.best_restart == c.best_restart);
    for (std::size_t j = 0; j < a.offsets.size(); ++j) {
        CHECK(a.offsets[j] == b.offsets[j]);
        CHECK(a.offsets[j] == c.offsets[j]);
    }
}

TEST_CASE("output-L2 metric separates simulated outputs") {
    auto spec = integrator_subproblem(2, 5, 3, 0.1, {}, SeparationMetric::OutputL2);
    auto sol = solve_subproblem(spec);
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
            integrator::PolynomialControl a{sol.offsets[static_cast<std::size_t>(i)]};
            integrator::PolynomialControl b{sol.offsets[static_cast<std::size_t>(j)]};
            CHECK(std::abs(integrator::output_l2_separation(a, b, 2) - 0.01) <= 1e-10);
        }
    CHECK(std::string(to_string(SeparationMetric::OutputL2)) == "output-L2");
    CHECK(separation_metric_from_string("R-form") == SeparationMetric::RForm);
    CHECK_THROWS(separation_metric_from_string("l1"));
}

TEST_CASE("assemble_full_solution examples") {
    auto single = assemble_full_solution(problem(1, 1, Vector::Constant(1, 1.7), 1, 1.0));
    REQUIRE(single.controls.size() == 1);
    CHECK(single.controls[0].coefficients(0) == doctest::Approx(1.7));
    CHECK(std::abs(single.controls[0].coefficients(1)) <= 1e-14);
    CHECK(single.cost == doctest::Approx(1.7 * 1.7));

    Vector x(3);
    x << 0.4, -1.0, 2.0;
    auto general = assemble_full_solution(problem(3, 6, x, 1, 1.0));
    CHECK(general.cost == doctest::Approx(context_energy(3, 6, x)).epsilon(1e-12));

    auto p = problem(1, 2, Vector::Constant(1, 1.0), 2, 0.1);
    auto two = assemble_full_solution(p);
    auto m2 = solve_m2_oracle(integrator_subproblem(1, 2, 2, 0.1));
    CHECK(two.cost == doctest::Approx(2.0 + m2.cost).epsilon(1e-12));
    for (const auto& u : two.controls) CHECK(integrator::simulate(u, 1, 11).endpoint(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(integrator::separation(two.controls[0], two.controls[1], integrator::build_R(1, 2)) == doctest::Approx(0.01).epsilon(1e-10));

    CHECK_THROWS_AS(assemble_full_solution(problem(2, 4, Eigen::Vector2d(1, 0), 10, 0.1)), CapacityError);
}

TEST_CASE("direct energy splits into context and message parts") {
    std::mt19937_64 rng(44);
    for (int trial = 0; trial < 6; ++trial) {
        const int n = 1 + trial % 3, N = n + 2 + trial % 3, m = 2 + trial % 3;
        auto sol = assemble_full_solution(problem(n, N, oracle::random_vector(n, rng), m, 0.25));
        const Matrix Q = integrator::build_Q(N).to_double();
        const Vector a0 = sol.base.coefficients;
        double message = 0.0;
        for (const auto& off : sol.encoding.offsets) message += off.dot(Q * off);
        CHECK(std::abs(sol.cost_direct - (m * a0.dot(Q * a0) + message)) <= 1e-8 * std::max(1.0, sol.cost_direct));
        CHECK(std::abs(sol.cost_direct - sol.cost) <= 1e-8 * std::max(1.0, sol.cost));
        for (const auto& r : sol.endpoint_residuals) CHECK(r.cwiseAbs().maxCoeff() <= 1e-8);
    }
}

TEST_CASE("context independence") {
    auto p = problem(1, 3, Vector::Constant(1, 2.0), 3, 0.2);
    auto rep = context_independence_report(p, {Vector::Constant(1, -0.5), Vector::Zero(1)});
    CHECK(rep.offsets_identical);
    REQUIRE(rep.cost_gaps.size() == 2);
    CHECK(rep.cost_gaps[0] == doctest::Approx(3 * (0.25 - 4.0)).epsilon(1e-12));
    CHECK(rep.cost_gaps[1] == doctest::Approx(-3 * 4.0).epsilon(1e-12));
    CHECK(rep.max_gap_error <= 1e-8);

    CHECK_THROWS_AS(context_independence_report(p, {Vector::Zero(2)}), InvalidArgument);
}
