#include <doctest.h>

#include <cmath>
#include <random>

#include "ccomm/error.hpp"
#include "ccomm/integrator.hpp"
#include "ccomm/linalg.hpp"
#include "oracles.hpp"

using namespace ccomm;
using namespace ccomm::integrator;
using linalg::Rational;

namespace {

PolynomialControl poly(std::initializer_list<double> c) {
    Vector v(static_cast<Eigen::Index>(c.size()));
    Eigen::Index i = 0;
    for (double x : c) v(i++) = x;
    return PolynomialControl{v};
}

IntegratorProblem problem(int n, int N, Vector x, int m = 1, double eps = 1.0) {
    IntegratorProblem p;
    p.order = n;
    p.degree = N;
    p.messages = m;
    p.epsilon = eps;
    p.terminal = std::move(x);
    return p;
}

}  // namespace

TEST_CASE("build_L small cases") {
    auto l1 = build_L(1, 2);
    CHECK(l1.rows() == 1);
    CHECK(l1(0, 0) == Rational(1));
    CHECK(l1(0, 1) == Rational(1, 2));
    CHECK(l1(0, 2) == Rational(1, 3));

    auto l2 = build_L(2, 2);
    CHECK(l2(0, 0) == Rational(1, 2));
    CHECK(l2(0, 1) == Rational(1, 6));
    CHECK(l2(0, 2) == Rational(1, 12));
    CHECK(l2(1, 0) == Rational(1));
    CHECK(l2(1, 1) == Rational(1, 2));
    CHECK(l2(1, 2) == Rational(1, 3));

    CHECK_THROWS(build_L(3, 2));
    CHECK_THROWS_AS(build_L(1, 17), NumericalError);
}

TEST_CASE("build_L agrees with quadrature") {
    for (int n = 1; n <= 4; ++n)
        for (int N = n; N <= 12; ++N) {
            const auto L = build_L(n, N);
            for (int j = 1; j <= n; ++j)
                for (int k = 0; k <= N; ++k) {
                    const int p = n - j;
                    const double q = oracle::integrate(
                        [&](double s) { return std::pow(1.0 - s, p) * std::pow(s, k); }) / oracle::factorial(p);
                    CHECK(std::abs(L(static_cast<std::size_t>(j - 1), static_cast<std::size_t>(k)).get_d() - q) <= 1e-12);
                }
        }
}

TEST_CASE("build_Q is the Hilbert matrix") {
    auto q = build_Q(2);
    CHECK(q(0, 0) == Rational(1));
    CHECK(q(0, 1) == Rational(1, 2));
    CHECK(q(2, 2) == Rational(1, 5));
    CHECK(q(1, 2) == Rational(1, 4));
    for (int N = 1; N <= 12; ++N) {
        auto Q = build_Q(N);
        for (int i = 0; i <= N; ++i)
            for (int j = 0; j <= N; ++j)
                CHECK(Q(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) == Rational(1, i + j + 1));
    }
    CHECK(control_energy(poly({1, 0, 0})) == doctest::Approx(1.0));
}

TEST_CASE("build_R closed form equals the double sum") {
    CHECK(build_R(1, 5) == build_Q(5));
    CHECK(build_R(2, 3)(0, 0) == Rational(1, 3));
    CHECK(oracle::r_double_sum(2, 0, 0) == Rational(1, 3));
    for (int n = 1; n <= 4; ++n)
        for (int N = n; N <= 12; ++N) {
            auto R = build_R(n, N);
            CHECK(R.is_symmetric());
            for (int k = 0; k <= N; ++k)
                for (int l = 0; l <= N; ++l)
                    CHECK(R(static_cast<std::size_t>(k), static_cast<std::size_t>(l)) == oracle::r_double_sum(n, k, l));
        }
}

TEST_CASE("output Gram matrix matches quadrature of simulated outputs") {
    for (int n = 1; n <= 3; ++n)
        for (int N = n; N <= 6; ++N) {
            auto G = build_output_gram(n, N);
            for (int k = 0; k <= N; ++k)
                for (int l = k; l <= N; ++l) {
                    Vector ek = Vector::Unit(N + 1, k), el = Vector::Unit(N + 1, l);
                    Matrix sk = state_polynomials(PolynomialControl{ek}, n);
                    Matrix sl = state_polynomials(PolynomialControl{el}, n);
                    const double q = oracle::integrate(
                        [&](double t) { return oracle::poly(sk.col(0), t) * oracle::poly(sl.col(0), t); });
                    CHECK(std::abs(G(static_cast<std::size_t>(k), static_cast<std::size_t>(l)).get_d() - q) <= 1e-13);
                }
        }
}

TEST_CASE("base control examples") {
    auto a = base_control(problem(1, 3, Vector::Constant(1, 2.5)));
    CHECK(a.coefficients(0) == doctest::Approx(2.5));
    CHECK(a.coefficients.tail(3).cwiseAbs().maxCoeff() <= 1e-15);

    for (int N = 2; N <= 10; ++N) {
        auto b = base_control(problem(2, N, Eigen::Vector2d(1, 0)));
        CHECK(b.coefficients(0) == doctest::Approx(6.0).epsilon(1e-12));
        CHECK(b.coefficients(1) == doctest::Approx(-12.0).epsilon(1e-12));
        CHECK(b.coefficients.tail(N - 1).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(control_energy(b) == doctest::Approx(12.0).epsilon(1e-12));
    }

    auto z = base_control(problem(3, 5, Vector::Zero(3)));
    CHECK(z.coefficients.isZero(0));
}

TEST_CASE("base control has degree below n") {
    std::mt19937_64 rng(77);
    for (int n = 1; n <= 4; ++n)
        for (int N = n; N <= 12; ++N)
            for (int trial = 0; trial < 5; ++trial) {
                Vector x = oracle::random_vector(n, rng);
                auto a = base_control(problem(n, N, x));
                if (N >= n) CHECK(a.coefficients.tail(N + 1 - n).cwiseAbs().maxCoeff() <= 1e-9);
                CHECK((endpoint_exact(a, n) - x).cwiseAbs().maxCoeff() <= 1e-10);
            }
}

TEST_CASE("projector range is the shifted Legendre span") {
    for (int n = 1; n <= 4; ++n)
        for (int N = n; N <= 12; ++N) {
            auto P = projector(n, N);
            CHECK(P * P == P);
            auto L = build_L(n, N);
            CHECK((L * P).is_zero());
            auto N_exact = legendre_nullspace(n, N);
            CHECK(P * N_exact == N_exact);
            auto Pd = P.to_double();
            CHECK(linalg::numerical_rank(Pd) == N + 1 - n);
            CHECK(linalg::subspace_distance(Pd, N_exact.to_double()) <= 1e-8);
        }
    auto P = projector(2, 2);
    auto leg = linalg::shifted_legendre(2, 2);
    linalg::RationalMatrix col(3, 1);
    for (std::size_t i = 0; i < 3; ++i) col(i, 0) = leg[i];
    CHECK(P * col == col);
}

TEST_CASE("simulate") {
    auto one = simulate(poly({1}), 1, 11);
    CHECK(one.endpoint(0) == doctest::Approx(1.0));
    for (std::size_t i = 0; i < one.t.size(); ++i) CHECK(one.states(static_cast<Eigen::Index>(i), 0) == doctest::Approx(one.t[i]));

    auto di = simulate(poly({6, -12}), 2, 5);
    CHECK(di.endpoint(0) == doctest::Approx(1.0));
    CHECK(std::abs(di.endpoint(1)) <= 1e-15);

    auto zero = simulate(poly({0, 0, 0}), 3, 7);
    CHECK(zero.states.isZero(0));
    CHECK(zero.endpoint.isZero(0));
    CHECK_THROWS(simulate(poly({1}), 1, 1));
}

TEST_CASE("simulated endpoint equals L a") {
    std::mt19937_64 rng(8);
    for (int n = 1; n <= 4; ++n)
        for (int N = n; N <= 10; N += 3) {
            Vector a = oracle::random_vector(N + 1, rng);
            PolynomialControl u{a};
            Vector sim = simulate(u, n, 3).endpoint;
            Vector la = build_L(n, N).to_double() * a;
            CHECK((sim - la).cwiseAbs().maxCoeff() <= 1e-10);
            CHECK((endpoint_exact(u, n) - la).cwiseAbs().maxCoeff() <= 1e-10);
        }
}

TEST_CASE("energy identity and quadrature") {
    std::mt19937_64 rng(12);
    for (int N = 0; N <= 12; ++N) {
        Vector a = oracle::random_vector(N + 1, rng);
        PolynomialControl u{a};
        const double direct = oracle::integrate([&](double s) { return std::pow(oracle::poly(a, s), 2); });
        CHECK(std::abs(control_energy(u) - direct) <= 1e-10 * std::max(1.0, direct));
        CHECK(std::abs(energy_quadrature(u) - direct) <= 1e-10 * std::max(1.0, direct));
    }

    std::vector<double> x, w;
    for (int pts : {1, 3, 8, 17}) {
        auto rule = gauss_legendre(pts);
        oracle::gauss_legendre_newton(pts, x, w);
        std::vector<double> nodes = rule.nodes, weights = rule.weights;
        std::vector<std::pair<double, double>> a, b;
        for (int i = 0; i < pts; ++i) {
            a.emplace_back(nodes[static_cast<std::size_t>(i)], weights[static_cast<std::size_t>(i)]);
            b.emplace_back(x[static_cast<std::size_t>(i)], w[static_cast<std::size_t>(i)]);
        }
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        for (int i = 0; i < pts; ++i) {
            CHECK(std::abs(a[static_cast<std::size_t>(i)].first - b[static_cast<std::size_t>(i)].first) <= 1e-13);
            CHECK(std::abs(a[static_cast<std::size_t>(i)].second - b[static_cast<std::size_t>(i)].second) <= 1e-13);
        }
    }
}

TEST_CASE("separation measures") {
    auto a = poly({1, 2, 3});
    CHECK(separation(a, a, build_R(2, 2)) == 0.0);
    CHECK(output_l2_separation(a, a, 2) == 0.0);
    auto b = poly({0, 2, 3});
    CHECK(separation(a, b, build_R(1, 2)) == doctest::Approx(1.0));
    CHECK(output_l2_separation(a, b, 1) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("problem validation") {
    CHECK_NOTHROW(problem(2, 4, Eigen::Vector2d(1, 0), 4).validate());
    CHECK_THROWS_AS(problem(2, 4, Eigen::Vector2d(1, 0), 5).validate(), CapacityError);
    CHECK_THROWS(problem(2, 4, Vector::Zero(3)).validate());
    CHECK_THROWS(problem(3, 2, Vector::Zero(3)).validate());
    CHECK_THROWS_AS(problem(2, 17, Eigen::Vector2d(1, 0)).validate(), NumericalError);
    auto bad = problem(1, 2, Vector::Constant(1, 1.0), 2, -1.0);
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("trajectory csv") {
    auto tr = simulate(poly({6, -12}), 2, 3);
    const auto csv = trajectory_csv(tr);
    CHECK(csv.rfind("t,x1,x2,u\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}
