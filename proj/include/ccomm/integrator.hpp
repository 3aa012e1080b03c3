#pragma once

// Polynomial-control reduction of the n-th order integrator x^(n) = u on
// [0,1] with zero initial state. A control u(s) = a_0 + a_1 s + ... + a_N s^N
// is carried as its coefficient vector; the endpoint map L, the energy Gram
// matrix Q and the separation matrix R are built exactly.

#include <memory>
#include <string>
#include <vector>

#include "ccomm/linalg.hpp"

namespace ccomm::integrator {

using linalg::Matrix;
using linalg::RationalMatrix;
using linalg::Vector;

struct IntegratorProblem {
    int order = 1;           // n
    int degree = 1;          // N
    int messages = 1;        // m
    double epsilon = 1.0;    // separation, (a_i - a_j)^T R (a_i - a_j) = epsilon^2
    Vector terminal;         // (x(1), x'(1), ..., x^(n-1)(1))

    /// Throws InvalidArgument for malformed shapes and CapacityError when
    /// N - n < m - 2.
    void validate() const;
};

struct PolynomialControl {
    Vector coefficients;  // a_0 ... a_N

    int degree() const noexcept { return static_cast<int>(coefficients.size()) - 1; }
    double operator()(double s) const;
};

/// Endpoint map, n x (N+1). Row j (1-based) sends a to x_j(1).
RationalMatrix build_L(int n, int N);
/// (N+1) x (N+1) Hilbert matrix: a^T Q a = int_0^1 u^2.
RationalMatrix build_Q(int N);
/// R_kl = (2(n-1))! (k+l)! / (2n-1+k+l)!.
RationalMatrix build_R(int n, int N);
/// Gram matrix of the first output: a^T G a = int_0^1 x_1(t)^2 dt.
RationalMatrix build_output_gram(int n, int N);
/// Columns k = n..N of the shifted Legendre basis; they span N(L) and
/// diagonalize Q.
RationalMatrix legendre_nullspace(int n, int N);

struct ProblemMatrices {
    RationalMatrix L, Q, R;
    Matrix L_d, Q_d, R_d;
};

/// Memoized (n, N) -> matrices. Safe to call concurrently.
std::shared_ptr<const ProblemMatrices> problem_matrices(int n, int N);

/// Q^{-1} L^T (L Q^{-1} L^T)^{-1}, computed exactly.
RationalMatrix base_control_map(int n, int N);

/// Minimum-energy control reaching the terminal state.
PolynomialControl base_control(const IntegratorProblem& p);

/// I - Q^{-1} L^T (L Q^{-1} L^T)^{-1} L, computed exactly.
RationalMatrix projector(int n, int N);

struct Trajectory {
    std::vector<double> t;
    Matrix states;  // rows: samples, cols: x_1..x_n
    std::vector<double> u;
    Vector endpoint;
};

/// Exact evaluation of x_j(t) = int_0^t (t-s)^(n-j)/(n-j)! u(s) ds by
/// repeated polynomial antidifferentiation, sampled at `steps` uniform times.
Trajectory simulate(const PolynomialControl& u, int n, int steps);

/// Monomial coefficients of x_j(t) for j = 1..n (column j-1).
Matrix state_polynomials(const PolynomialControl& u, int n);

/// L a evaluated in exact arithmetic on the double coefficients.
Vector endpoint_exact(const PolynomialControl& u, int n);

/// a^T Q a in exact arithmetic on the double coefficients.
double control_energy(const PolynomialControl& u);

/// delta^T M delta with delta = a_i - a_j, exact arithmetic.
double quadratic_form(const Vector& delta, const RationalMatrix& M);

/// (a_i - a_j)^T R (a_i - a_j).
double separation(const PolynomialControl& ai, const PolynomialControl& aj, const RationalMatrix& R);

/// int_0^1 (y_i - y_j)^2 dt with y = x_1, by Gauss-Legendre quadrature on the
/// simulated outputs.
double output_l2_separation(const PolynomialControl& ai, const PolynomialControl& aj, int n);

struct QuadratureRule {
    std::vector<double> nodes;    // in [0,1]
    std::vector<double> weights;  // sum to 1
};

/// Gauss-Legendre rule on [0,1], exact for polynomials of degree 2*points-1.
QuadratureRule gauss_legendre(int points);

/// int_0^1 u(s)^2 ds by Gauss-Legendre quadrature.
double energy_quadrature(const PolynomialControl& u);

/// `t,x1..xn,u` rows.
std::string trajectory_csv(const Trajectory& tr);

}  // namespace ccomm::integrator
