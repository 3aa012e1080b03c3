#pragma once

// Test-only reference computations. None of these call into the code path
// they are used to check.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <gmpxx.h>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Gauss-Legendre nodes/weights on [0,1] by Newton iteration on P_n.
inline void gauss_legendre_newton(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(static_cast<std::size_t>(n), 0.0);
    w.assign(static_cast<std::size_t>(n), 0.0);
    const double pi = std::acos(-1.0);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        double p0 = 1.0, p1 = z;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (z * p1 - p0) / (z * z - 1.0);
        x[static_cast<std::size_t>(i)] = 0.5 * (1.0 - z);
        w[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
}

/// Composite Gauss-Legendre quadrature of f over [0,1].
inline double integrate(const std::function<double(double)>& f, int panels = 8, int points = 20) {
    std::vector<double> x, w;
    gauss_legendre_newton(points, x, w);
    double acc = 0.0;
    const double h = 1.0 / panels;
    for (int p = 0; p < panels; ++p)
        for (std::size_t q = 0; q < x.size(); ++q) acc += h * w[q] * f(h * (p + x[q]));
    return acc;
}

inline double poly(const Vector& a, double s) {
    double acc = 0.0, pw = 1.0;
    for (Eigen::Index k = 0; k < a.size(); ++k, pw *= s) acc += a(k) * pw;
    return acc;
}

inline double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

inline mpz_class binom(unsigned long n, unsigned long k) {
    mpz_class b;
    mpz_bin_uiui(b.get_mpz_t(), n, k);
    return b;
}

/// R_kl via the double sum over binomial expansions of (1-s)^(n-1), exact.
inline mpq_class r_double_sum(int n, int k, int l) {
    mpq_class acc(0);
    for (int i = 0; i <= n - 1; ++i)
        for (int j = 0; j <= n - 1; ++j) {
            mpq_class term(binom(static_cast<unsigned long>(n - 1), static_cast<unsigned long>(i)) *
                               binom(static_cast<unsigned long>(n - 1), static_cast<unsigned long>(j)),
                           mpz_class(i + j + k + l + 1));
            term.canonicalize();
            if ((i + j) % 2) term = -term;
            acc += term;
        }
    return acc;
}

/// Plain Gaussian elimination with partial pivoting.
inline Vector gauss_solve(Matrix a, Vector b) {
    const Eigen::Index n = a.rows();
    for (Eigen::Index c = 0; c < n; ++c) {
        Eigen::Index p = c;
        for (Eigen::Index r = c + 1; r < n; ++r)
            if (std::abs(a(r, c)) > std::abs(a(p, c))) p = r;
        a.row(c).swap(a.row(p));
        std::swap(b(c), b(p));
        for (Eigen::Index r = c + 1; r < n; ++r) {
            const double f = a(r, c) / a(c, c);
            a.row(r) -= f * a.row(c);
            b(r) -= f * b(c);
        }
    }
    Vector x(n);
    for (Eigen::Index r = n - 1; r >= 0; --r) {
        double s = b(r);
        for (Eigen::Index c = r + 1; c < n; ++c) s -= a(r, c) * x(c);
        x(r) = s / a(r, r);
    }
    return x;
}

/// Sum of the m-1 smallest generalized eigenvalues of (A, B), times eps^2/2:
/// the minimum of sum_j c_j^T A c_j over configurations with all pairwise
/// B-distances equal to eps (regular simplex in B-whitened coordinates).
inline double simplex_trace_bound(const Matrix& A, const Matrix& B, int m, double eps) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(A, B);
    double s = 0.0;
    for (int i = 0; i < m - 1; ++i) s += es.eigenvalues()(i);
    return 0.5 * eps * eps * s;
}

inline Matrix random_spd(Eigen::Index d, std::mt19937_64& rng, double floor = 0.1) {
    std::normal_distribution<double> g;
    Matrix a(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) a(i, j) = g(rng);
    return a * a.transpose() + floor * Matrix::Identity(d, d);
}

inline Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Matrix a(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) a(i, j) = g(rng);
    return a;
}

inline Vector random_vector(Eigen::Index n, std::mt19937_64& rng) { return random_matrix(n, 1, rng).col(0); }

}  // namespace oracle
