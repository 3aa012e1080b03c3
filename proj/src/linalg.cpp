#include "ccomm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ccomm/error.hpp"

namespace ccomm::linalg {

RationalMatrix::RationalMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, Rational(0)) {}

RationalMatrix RationalMatrix::identity(std::size_t n) {
    RationalMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
    return m;
}

RationalMatrix RationalMatrix::from_double(const Matrix& m) {
    RationalMatrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (!std::isfinite(m(r, c))) throw InvalidArgument("non-finite matrix entry");
            out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = Rational(m(r, c));
        }
    return out;
}

RationalMatrix RationalMatrix::transpose() const {
    RationalMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

RationalMatrix RationalMatrix::inverse() const {
    if (rows_ != cols_) throw InvalidArgument("inverse of a non-square matrix");
    const std::size_t n = rows_;
    RationalMatrix a = *this;
    RationalMatrix inv = identity(n);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        while (pivot < n && sgn(a(pivot, col)) == 0) ++pivot;
        if (pivot == n) throw NumericalError("exact inverse: matrix is singular");
        if (pivot != col)
            for (std::size_t c = 0; c < n; ++c) {
                std::swap(a(col, c), a(pivot, c));
                std::swap(inv(col, c), inv(pivot, c));
            }
        const Rational p = a(col, col);
        for (std::size_t c = 0; c < n; ++c) {
            a(col, c) /= p;
            inv(col, c) /= p;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col || sgn(a(r, col)) == 0) continue;
            const Rational f = a(r, col);
            for (std::size_t c = 0; c < n; ++c) {
                a(r, c) -= f * a(col, c);
                inv(r, c) -= f * inv(col, c);
            }
        }
    }
    return inv;
}

RationalMatrix RationalMatrix::block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
    if (r0 + nr > rows_ || c0 + nc > cols_) throw InvalidArgument("block out of range");
    RationalMatrix b(nr, nc);
    for (std::size_t r = 0; r < nr; ++r)
        for (std::size_t c = 0; c < nc; ++c) b(r, c) = (*this)(r0 + r, c0 + c);
    return b;
}

bool RationalMatrix::is_symmetric() const {
    if (rows_ != cols_) return false;
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = r + 1; c < cols_; ++c)
            if ((*this)(r, c) != (*this)(c, r)) return false;
    return true;
}

bool RationalMatrix::is_zero() const {
    return std::all_of(data_.begin(), data_.end(), [](const Rational& q) { return sgn(q) == 0; });
}

Matrix RationalMatrix::to_double() const {
    Matrix m(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = (*this)(r, c).get_d();
    return m;
}

RationalMatrix operator*(const RationalMatrix& a, const RationalMatrix& b) {
    if (a.cols_ != b.rows_) throw InvalidArgument("product dimension mismatch");
    RationalMatrix out(a.rows_, b.cols_);
    for (std::size_t r = 0; r < a.rows_; ++r)
        for (std::size_t k = 0; k < a.cols_; ++k) {
            const Rational& ark = a(r, k);
            if (sgn(ark) == 0) continue;
            for (std::size_t c = 0; c < b.cols_; ++c) out(r, c) += ark * b(k, c);
        }
    return out;
}

RationalMatrix operator+(const RationalMatrix& a, const RationalMatrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw InvalidArgument("sum dimension mismatch");
    RationalMatrix out = a;
    for (std::size_t i = 0; i < out.data_.size(); ++i) out.data_[i] += b.data_[i];
    return out;
}

RationalMatrix operator-(const RationalMatrix& a, const RationalMatrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw InvalidArgument("difference dimension mismatch");
    RationalMatrix out = a;
    for (std::size_t i = 0; i < out.data_.size(); ++i) out.data_[i] -= b.data_[i];
    return out;
}

bool operator==(const RationalMatrix& a, const RationalMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
}

RationalMatrix exact_column(const Vector& v) { return RationalMatrix::from_double(Matrix(v)); }

RationalMatrix hilbert_matrix(std::size_t size) {
    RationalMatrix h(size, size);
    for (std::size_t i = 0; i < size; ++i)
        for (std::size_t j = 0; j < size; ++j) h(i, j) = Rational(1, static_cast<unsigned long>(i + j + 1));
    return h;
}

double asymmetry(const Matrix& m) {
    if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
    return (m - m.transpose()).cwiseAbs().maxCoeff();
}

namespace {

void require_finite(const Matrix& m, const char* name) {
    if (!m.allFinite()) throw InvalidArgument(std::string(name) + " has non-finite entries");
}

void require_full_row_rank(const Matrix& L) {
    if (L.rows() == 0 || L.cols() == 0) throw InvalidArgument("empty operator");
    if (L.rows() > L.cols()) {
        std::ostringstream msg;
        msg << "operator with " << L.rows() << " rows and " << L.cols() << " columns cannot have full row rank";
        throw NumericalError(msg.str());
    }
    Eigen::JacobiSVD<Matrix> svd(L);
    const auto& s = svd.singularValues();
    const double smax = s(0);
    const double smin = s(s.size() - 1);
    if (!(smin > smax * 1e-12)) {
        std::ostringstream msg;
        msg << "operator is rank deficient (condition estimate " << (smin > 0 ? smax / smin : INFINITY) << ")";
        throw NumericalError(msg.str());
    }
}

Eigen::LLT<Matrix> spd_factor(const Matrix& M, const char* name) {
    if (M.rows() != M.cols()) throw InvalidArgument(std::string(name) + " is not square");
    if (asymmetry(M) > 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff()))
        throw InvalidArgument(std::string(name) + " is not symmetric");
    Eigen::LLT<Matrix> llt(M);
    if (llt.info() != Eigen::Success) throw NumericalError(std::string(name) + " is not positive definite");
    const double rc = llt.rcond();
    if (!(rc > kMinReciprocalCondition)) {
        std::ostringstream msg;
        msg << name << " is too ill-conditioned for double precision (rcond " << rc << ")";
        throw NumericalError(msg.str());
    }
    return llt;
}

}  // namespace

Matrix pinv_rows(const Matrix& L) {
    require_finite(L, "L");
    require_full_row_rank(L);
    const Matrix gram = L * L.transpose();
    const auto llt = spd_factor(gram, "L L^T");
    return L.transpose() * llt.solve(Matrix::Identity(L.rows(), L.rows()));
}

Matrix weighted_pinv(const Matrix& L, const Matrix& Q) {
    require_finite(L, "L");
    require_finite(Q, "Q");
    if (Q.rows() != L.cols()) throw InvalidArgument("Q must be square with size cols(L)");
    require_full_row_rank(L);
    const auto q = spd_factor(Q, "Q");
    const Matrix qinv_lt = q.solve(L.transpose());
    const Matrix s = L * qinv_lt;
    const auto sf = spd_factor(0.5 * (s + s.transpose()), "L Q^{-1} L^T");
    return qinv_lt * sf.solve(Matrix::Identity(L.rows(), L.rows()));
}

RationalMatrix weighted_pinv(const RationalMatrix& L, const RationalMatrix& Q) {
    if (Q.rows() != L.cols() || Q.cols() != L.cols()) throw InvalidArgument("Q must be square with size cols(L)");
    if (!Q.is_symmetric()) throw InvalidArgument("Q is not symmetric");
    const RationalMatrix qinv_lt = Q.inverse() * L.transpose();
    return qinv_lt * (L * qinv_lt).inverse();
}

NullspaceBasis nullspace_basis(const Matrix& L) {
    require_finite(L, "L");
    require_full_row_rank(L);
    const Eigen::Index ambient = L.cols();
    const Eigen::Index rank = L.rows();
    Eigen::HouseholderQR<Matrix> qr(L.transpose());
    const Matrix q = qr.householderQ() * Matrix::Identity(ambient, ambient);
    return NullspaceBasis{q.rightCols(ambient - rank)};
}

std::vector<Vector> regular_simplex(Eigen::Index d, int m, double eps) {
    if (m < 1) throw InvalidArgument("simplex needs at least one vertex");
    if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("separation must be positive");
    if (d < m - 1) {
        std::ostringstream msg;
        msg << "nullspace too small to encode " << m << " messages (dimension " << d << ", need " << (m - 1) << ")";
        throw CapacityError(msg.str());
    }
    const double scale = eps / std::sqrt(2.0);
    std::vector<Vector> vertices(static_cast<std::size_t>(m), Vector::Zero(d));
    for (int k = 1; k < m; ++k) {
        const double norm = std::sqrt(static_cast<double>(k) * static_cast<double>(k + 1));
        for (int i = 0; i < k; ++i) vertices[static_cast<std::size_t>(i)](k - 1) = scale / norm;
        vertices[static_cast<std::size_t>(k)](k - 1) = -scale * k / norm;
    }
    return vertices;
}

double simplex_radius(int m, double eps) {
    if (m < 1) throw InvalidArgument("simplex needs at least one vertex");
    return std::sqrt(static_cast<double>(m - 1) / (2.0 * m)) * eps;
}

namespace {

Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> gen_eig(const Matrix& A, const Matrix& B) {
    if (A.rows() != A.cols() || B.rows() != B.cols() || A.rows() != B.rows())
        throw InvalidArgument("generalized eigenproblem needs two square matrices of equal size");
    if (A.rows() == 0) throw InvalidArgument("empty generalized eigenproblem");
    require_finite(A, "A");
    spd_factor(B, "B");
    if (asymmetry(A) > 1e-12 * std::max(1.0, A.cwiseAbs().maxCoeff())) throw InvalidArgument("A is not symmetric");
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(0.5 * (A + A.transpose()), 0.5 * (B + B.transpose()));
    if (es.info() != Eigen::Success) throw NumericalError("generalized eigensolver failed");
    return es;
}

}  // namespace

GenEigPair gen_eig_min(const Matrix& A, const Matrix& B) {
    const auto es = gen_eig(A, B);
    GenEigPair out;
    out.value = es.eigenvalues()(0);
    out.vector = es.eigenvectors().col(0);
    out.vector /= std::sqrt(out.vector.dot(B * out.vector));
    Eigen::Index imax = 0;
    out.vector.cwiseAbs().maxCoeff(&imax);
    if (out.vector(imax) < 0) out.vector = -out.vector;
    return out;
}

Vector gen_eig_values(const Matrix& A, const Matrix& B) { return gen_eig(A, B).eigenvalues(); }

std::vector<Rational> shifted_legendre(int k, int N) {
    if (k < 0 || k > N) throw InvalidArgument("shifted Legendre degree must satisfy 0 <= k <= N");
    std::vector<Rational> coeffs(static_cast<std::size_t>(N) + 1, Rational(0));
    // P_k(s) = sum_i (-1)^(k+i) C(k,i) C(k+i,i) s^i
    for (int i = 0; i <= k; ++i) {
        mpz_class a, b;
        mpz_bin_uiui(a.get_mpz_t(), static_cast<unsigned long>(k), static_cast<unsigned long>(i));
        mpz_bin_uiui(b.get_mpz_t(), static_cast<unsigned long>(k + i), static_cast<unsigned long>(i));
        mpz_class c = a * b;
        if ((k + i) % 2 != 0) c = -c;
        coeffs[static_cast<std::size_t>(i)] = Rational(c);
    }
    return coeffs;
}

RationalMatrix shifted_legendre_basis(int N) {
    if (N < 0) throw InvalidArgument("degree must be non-negative");
    const auto size = static_cast<std::size_t>(N) + 1;
    RationalMatrix t(size, size);
    for (int k = 0; k <= N; ++k) {
        const auto c = shifted_legendre(k, N);
        for (std::size_t i = 0; i < size; ++i) t(i, static_cast<std::size_t>(k)) = c[i];
    }
    return t;
}

namespace {

Matrix orthonormal_span(const Matrix& A) {
    Matrix scaled = A;
    for (Eigen::Index c = 0; c < scaled.cols(); ++c) {
        const double n = scaled.col(c).norm();
        if (n > 0) scaled.col(c) /= n;
    }
    Eigen::JacobiSVD<Matrix> svd(scaled, Eigen::ComputeThinU);
    const Eigen::Index r = numerical_rank(scaled);
    return svd.matrixU().leftCols(r);
}

}  // namespace

double subspace_distance(const Matrix& A, const Matrix& B) {
    if (A.rows() != B.rows()) throw InvalidArgument("subspaces live in different ambient spaces");
    const Matrix ua = orthonormal_span(A);
    const Matrix ub = orthonormal_span(B);
    if (ua.cols() != ub.cols()) return 1.0;
    const Matrix diff = ua * ua.transpose() - ub * ub.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(diff);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::Index numerical_rank(const Matrix& m, double rel_tol) {
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& s = svd.singularValues();
    const double cutoff = s(0) * rel_tol;
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > cutoff) ++r;
    return r;
}

}  // namespace ccomm::linalg
