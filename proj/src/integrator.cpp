#include "ccomm/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#include "ccomm/error.hpp"

namespace ccomm::integrator {

using linalg::Rational;

namespace {

mpz_class factorial(unsigned long k) {
    mpz_class f;
    mpz_fac_ui(f.get_mpz_t(), k);
    return f;
}

Rational ratio(const mpz_class& num, const mpz_class& den) {
    Rational q(num, den);
    q.canonicalize();
    return q;
}

mpz_class binomial(unsigned long n, unsigned long k) {
    mpz_class b;
    mpz_bin_uiui(b.get_mpz_t(), n, k);
    return b;
}

void check_order_degree(int n, int N) {
    if (n < 1) throw InvalidArgument("integrator order must be at least 1");
    if (N < n) {
        std::ostringstream msg;
        msg << "polynomial degree " << N << " must be at least the order " << n;
        throw InvalidArgument(msg.str());
    }
    if (N > linalg::kMaxDegree) {
        std::ostringstream msg;
        msg << "polynomial degree " << N << " exceeds the supported maximum " << linalg::kMaxDegree;
        throw NumericalError(msg.str());
    }
}

void check_degree(int N) {
    if (N < 0) throw InvalidArgument("polynomial degree must be non-negative");
    if (N > linalg::kMaxDegree) throw NumericalError("polynomial degree exceeds the supported maximum");
}

}  // namespace

void IntegratorProblem::validate() const {
    check_order_degree(order, degree);
    if (messages < 1) throw InvalidArgument("need at least one message");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InvalidArgument("separation must be positive");
    if (terminal.size() != order) {
        std::ostringstream msg;
        msg << "terminal state has " << terminal.size() << " entries, expected " << order;
        throw InvalidArgument(msg.str());
    }
    if (!terminal.allFinite()) throw InvalidArgument("terminal state is not finite");
    if (degree - order < messages - 2) {
        std::ostringstream msg;
        msg << "capacity exceeded: N - n = " << (degree - order) << " < m - 2 = " << (messages - 2)
            << " (need N - n >= m - 2)";
        throw CapacityError(msg.str());
    }
}

double PolynomialControl::operator()(double s) const {
    double acc = 0.0;
    for (Eigen::Index k = coefficients.size() - 1; k >= 0; --k) acc = acc * s + coefficients(k);
    return acc;
}

RationalMatrix build_L(int n, int N) {
    check_order_degree(n, N);
    RationalMatrix L(static_cast<std::size_t>(n), static_cast<std::size_t>(N) + 1);
    for (int j = 1; j <= n; ++j) {
        const auto p = static_cast<unsigned long>(n - j);
        const Rational inv_fact(mpz_class(1), factorial(p));
        for (int k = 0; k <= N; ++k) {
            // (1/(n-j)!) sum_{i=0}^{n-j} (-1)^i C(n-j,i) / (k+1+i)
            Rational sum(0);
            for (unsigned long i = 0; i <= p; ++i) {
                Rational term = ratio(binomial(p, i), mpz_class(static_cast<unsigned long>(k) + 1 + i));
                if (i % 2 == 1) term = -term;
                sum += term;
            }
            L(static_cast<std::size_t>(j - 1), static_cast<std::size_t>(k)) = inv_fact * sum;
        }
    }
    return L;
}

RationalMatrix build_Q(int N) {
    check_degree(N);
    return linalg::hilbert_matrix(static_cast<std::size_t>(N) + 1);
}

RationalMatrix build_R(int n, int N) {
    if (n < 1) throw InvalidArgument("integrator order must be at least 1");
    check_degree(N);
    const auto size = static_cast<std::size_t>(N) + 1;
    const mpz_class lead = factorial(2UL * static_cast<unsigned long>(n - 1));
    RationalMatrix R(size, size);
    for (std::size_t k = 0; k < size; ++k)
        for (std::size_t l = 0; l < size; ++l)
            R(k, l) = ratio(lead * factorial(k + l), factorial(2UL * static_cast<unsigned long>(n) - 1 + k + l));
    return R;
}

RationalMatrix build_output_gram(int n, int N) {
    if (n < 1) throw InvalidArgument("integrator order must be at least 1");
    check_degree(N);
    // x_1 for u = s^k is k!/(n+k)! t^(n+k).
    const auto size = static_cast<std::size_t>(N) + 1;
    std::vector<Rational> c(size);
    for (std::size_t k = 0; k < size; ++k) {
        c[k] = ratio(factorial(k), factorial(static_cast<unsigned long>(n) + k));
    }
    RationalMatrix G(size, size);
    for (std::size_t k = 0; k < size; ++k)
        for (std::size_t l = 0; l < size; ++l)
            G(k, l) = c[k] * c[l] / Rational(static_cast<unsigned long>(2 * n) + k + l + 1);
    return G;
}

RationalMatrix legendre_nullspace(int n, int N) {
    check_order_degree(n, N);
    const auto t = linalg::shifted_legendre_basis(N);
    return t.block(0, static_cast<std::size_t>(n), static_cast<std::size_t>(N) + 1, static_cast<std::size_t>(N - n + 1));
}

std::shared_ptr<const ProblemMatrices> problem_matrices(int n, int N) {
    check_order_degree(n, N);
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::shared_ptr<const ProblemMatrices>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[{n, N}];
    if (!slot) {
        auto pm = std::make_shared<ProblemMatrices>();
        pm->L = build_L(n, N);
        pm->Q = build_Q(N);
        pm->R = build_R(n, N);
        pm->L_d = pm->L.to_double();
        pm->Q_d = pm->Q.to_double();
        pm->R_d = pm->R.to_double();
        slot = std::move(pm);
    }
    return slot;
}

RationalMatrix base_control_map(int n, int N) {
    const auto pm = problem_matrices(n, N);
    return linalg::weighted_pinv(pm->L, pm->Q);
}

PolynomialControl base_control(const IntegratorProblem& p) {
    check_order_degree(p.order, p.degree);
    if (p.terminal.size() != p.order) throw InvalidArgument("terminal state size must equal the order");
    const RationalMatrix a0 = base_control_map(p.order, p.degree) * linalg::exact_column(p.terminal);
    return PolynomialControl{a0.to_double().col(0)};
}

RationalMatrix projector(int n, int N) {
    const auto pm = problem_matrices(n, N);
    return RationalMatrix::identity(static_cast<std::size_t>(N) + 1) - base_control_map(n, N) * pm->L;
}

Matrix state_polynomials(const PolynomialControl& u, int n) {
    if (n < 1) throw InvalidArgument("integrator order must be at least 1");
    const Eigen::Index len = u.coefficients.size() + n;
    Matrix states = Matrix::Zero(len, n);
    Vector current = Vector::Zero(len);
    current.head(u.coefficients.size()) = u.coefficients;
    // x_n = int u, x_{j} = int x_{j+1}
    for (int j = n; j >= 1; --j) {
        Vector next = Vector::Zero(len);
        for (Eigen::Index k = 0; k + 1 < len; ++k) next(k + 1) = current(k) / static_cast<double>(k + 1);
        states.col(j - 1) = next;
        current = std::move(next);
    }
    return states;
}

Trajectory simulate(const PolynomialControl& u, int n, int steps) {
    if (steps < 2) throw InvalidArgument("simulation needs at least two samples");
    const Matrix poly = state_polynomials(u, n);
    Trajectory tr;
    tr.states.resize(steps, n);
    for (int i = 0; i < steps; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(steps - 1);
        tr.t.push_back(t);
        tr.u.push_back(u(t));
        for (int j = 0; j < n; ++j) tr.states(i, j) = PolynomialControl{poly.col(j)}(t);
    }
    tr.endpoint = poly.colwise().sum().transpose();
    return tr;
}

Vector endpoint_exact(const PolynomialControl& u, int n) {
    const auto pm = problem_matrices(n, u.degree());
    return (pm->L * linalg::exact_column(u.coefficients)).to_double().col(0);
}

double quadratic_form(const Vector& delta, const RationalMatrix& M) {
    if (static_cast<std::size_t>(delta.size()) != M.rows() || M.rows() != M.cols())
        throw InvalidArgument("quadratic form dimension mismatch");
    const RationalMatrix d = linalg::exact_column(delta);
    return (d.transpose() * M * d)(0, 0).get_d();
}

double control_energy(const PolynomialControl& u) {
    return quadratic_form(u.coefficients, build_Q(u.degree()));
}

double separation(const PolynomialControl& ai, const PolynomialControl& aj, const RationalMatrix& R) {
    if (ai.coefficients.size() != aj.coefficients.size()) throw InvalidArgument("controls differ in degree");
    return quadratic_form(ai.coefficients - aj.coefficients, R);
}

QuadratureRule gauss_legendre(int points) {
    if (points < 1) throw InvalidArgument("quadrature needs at least one node");
    // Golub-Welsch on the Legendre Jacobi matrix.
    Matrix jac = Matrix::Zero(points, points);
    for (int k = 1; k < points; ++k) {
        const double b = k / std::sqrt(4.0 * k * k - 1.0);
        jac(k, k - 1) = b;
        jac(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(jac);
    QuadratureRule rule;
    for (int i = 0; i < points; ++i) {
        const double v0 = es.eigenvectors()(0, i);
        rule.nodes.push_back(0.5 * (es.eigenvalues()(i) + 1.0));
        rule.weights.push_back(v0 * v0);  // 2 v0^2 on [-1,1], halved on [0,1]
    }
    return rule;
}

double output_l2_separation(const PolynomialControl& ai, const PolynomialControl& aj, int n) {
    if (ai.coefficients.size() != aj.coefficients.size()) throw InvalidArgument("controls differ in degree");
    const PolynomialControl yi{state_polynomials(ai, n).col(0)};
    const PolynomialControl yj{state_polynomials(aj, n).col(0)};
    const auto rule = gauss_legendre(ai.degree() + n + 1);
    double acc = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double d = yi(rule.nodes[q]) - yj(rule.nodes[q]);
        acc += rule.weights[q] * d * d;
    }
    return acc;
}

double energy_quadrature(const PolynomialControl& u) {
    const auto rule = gauss_legendre(u.degree() + 1);
    double acc = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double v = u(rule.nodes[q]);
        acc += rule.weights[q] * v * v;
    }
    return acc;
}

std::string trajectory_csv(const Trajectory& tr) {
    std::ostringstream out;
    out.precision(17);
    out << 't';
    for (Eigen::Index j = 0; j < tr.states.cols(); ++j) out << ",x" << (j + 1);
    out << ",u\n";
    for (std::size_t i = 0; i < tr.t.size(); ++i) {
        out << tr.t[i];
        for (Eigen::Index j = 0; j < tr.states.cols(); ++j) out << ',' << tr.states(static_cast<Eigen::Index>(i), j);
        out << ',' << tr.u[i] << '\n';
    }
    return out.str();
}

}  // namespace ccomm::integrator
