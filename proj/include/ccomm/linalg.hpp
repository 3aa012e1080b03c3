#pragma once

// Small dense kernels used by the encoders. Double-precision routines sit on
// Eigen; RationalMatrix carries exact GMP rationals for the constructor-built
// Hilbert-type matrices, where double elimination loses every digit.

#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <gmpxx.h>

namespace ccomm::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Rational = mpq_class;

/// Largest polynomial degree the integrator constructors accept.
inline constexpr int kMaxDegree = 16;

/// Reciprocal condition number below which double solves refuse to proceed.
inline constexpr double kMinReciprocalCondition = 1e-14;

class RationalMatrix {
public:
    RationalMatrix() = default;
    RationalMatrix(std::size_t rows, std::size_t cols);

    static RationalMatrix identity(std::size_t n);
    /// Exact conversion; every finite double is a dyadic rational.
    static RationalMatrix from_double(const Matrix& m);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    Rational& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const Rational& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    RationalMatrix transpose() const;
    /// Gauss-Jordan inverse. Throws NumericalError if singular.
    RationalMatrix inverse() const;
    RationalMatrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
    bool is_symmetric() const;
    bool is_zero() const;
    Matrix to_double() const;

    friend RationalMatrix operator*(const RationalMatrix& a, const RationalMatrix& b);
    friend RationalMatrix operator+(const RationalMatrix& a, const RationalMatrix& b);
    friend RationalMatrix operator-(const RationalMatrix& a, const RationalMatrix& b);
    friend bool operator==(const RationalMatrix& a, const RationalMatrix& b);

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Rational> data_;
};

/// Column vector of exact rationals from doubles.
RationalMatrix exact_column(const Vector& v);

/// (size x size) Hilbert matrix H_ij = 1/(i+j+1), zero-based.
RationalMatrix hilbert_matrix(std::size_t size);

/// Max-abs asymmetry |M - M^T|_max.
double asymmetry(const Matrix& m);

/// L^T (L L^T)^{-1}: the minimum-norm right inverse of a full-row-rank L.
Matrix pinv_rows(const Matrix& L);

/// Q^{-1} L^T (L Q^{-1} L^T)^{-1}: for each x, result * x is the solution of
/// L a = x with the least a^T Q a. Q must be symmetric positive definite.
Matrix weighted_pinv(const Matrix& L, const Matrix& Q);
RationalMatrix weighted_pinv(const RationalMatrix& L, const RationalMatrix& Q);

/// Orthonormal basis of N(L), columns of an (ambient x d) matrix.
struct NullspaceBasis {
    Matrix basis;
    Eigen::Index dimension() const noexcept { return basis.cols(); }
    Eigen::Index ambient() const noexcept { return basis.rows(); }
};

/// Householder QR of L^T without pivoting; the trailing columns of the
/// orthogonal factor span N(L). Deterministic for identical input.
NullspaceBasis nullspace_basis(const Matrix& L);

/// m vertices in R^d, pairwise distance eps, centred at the origin.
///
/// Canonical orientation: vertex i is eps/sqrt(2) * (e_i - centroid) written
/// in the Helmert basis h_k = (1,...,1,-k,0,...)/sqrt(k(k+1)), k = 1..m-1,
/// and padded with zeros up to d. For m = 2 this gives (+eps/2, -eps/2) on
/// the first axis.
std::vector<Vector> regular_simplex(Eigen::Index d, int m, double eps);

/// Circumradius of a regular simplex with m vertices and edge eps.
double simplex_radius(int m, double eps);

struct GenEigPair {
    double value = 0.0;
    Vector vector;  // normalized v^T B v = 1, largest-magnitude entry positive
};

/// Smallest generalized eigenpair of A v = lambda B v (A symmetric PSD,
/// B symmetric PD).
GenEigPair gen_eig_min(const Matrix& A, const Matrix& B);

/// All generalized eigenvalues in ascending order.
Vector gen_eig_values(const Matrix& A, const Matrix& B);

/// Monomial coefficients (length N+1) of the degree-k shifted Legendre
/// polynomial on [0,1], normalized to P_k(1) = 1.
std::vector<Rational> shifted_legendre(int k, int N);

/// (N+1) x (N+1) matrix whose column k holds shifted_legendre(k, N).
RationalMatrix shifted_legendre_basis(int N);

/// Largest principal angle sine between the column spans of A and B
/// (spectral norm of the difference of their orthogonal projectors).
double subspace_distance(const Matrix& A, const Matrix& B);

/// Numerical rank by SVD with relative threshold.
Eigen::Index numerical_rank(const Matrix& m, double rel_tol = 1e-10);

}  // namespace ccomm::linalg
