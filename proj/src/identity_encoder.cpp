#include "ccomm/identity_encoder.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "ccomm/error.hpp"
#include "ccomm/optim.hpp"

namespace ccomm::identity {

void IdentityProblem::validate() const {
    if (L.rows() == 0 || L.cols() == 0) throw InvalidArgument("L must be non-empty");
    if (x.size() != L.rows()) throw InvalidArgument("target dimension must equal rows(L)");
    if (messages < 1) throw InvalidArgument("need at least one message");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InvalidArgument("separation must be positive");
    if (!L.allFinite() || !x.allFinite()) throw InvalidArgument("non-finite problem data");
    if (L.cols() - L.rows() < messages - 1) {
        std::ostringstream msg;
        msg << "dim U - dim V = " << (L.cols() - L.rows()) << " is smaller than messages - 1 = " << (messages - 1);
        throw CapacityError(msg.str());
    }
}

double theoretical_cost(const IdentityProblem& p) {
    p.validate();
    const Matrix gram = p.L * p.L.transpose();
    const Vector y = gram.llt().solve(p.x);
    return p.messages * p.x.dot(y) + 0.5 * (p.messages - 1) * p.epsilon * p.epsilon;
}

IdentitySolution solve_identity(const IdentityProblem& p) {
    p.validate();
    IdentitySolution sol;
    sol.base = linalg::pinv_rows(p.L) * p.x;
    const auto z = linalg::nullspace_basis(p.L);
    const auto simplex = linalg::regular_simplex(z.dimension(), p.messages, p.epsilon);
    for (const auto& s : simplex) {
        sol.offsets.push_back(z.basis * s);
        sol.controls.push_back(sol.base + sol.offsets.back());
    }
    for (const auto& u : sol.controls) sol.cost += u.squaredNorm();
    return sol;
}

namespace {

struct PenaltyState {
    Vector lambda;  // multipliers for L u_j = x, stacked per message
    Vector mu;      // multipliers for pair constraints, row-major i<j
    double rho = 10.0;
};

}  // namespace

BruteForceResult brute_force_identity(const IdentityProblem& p, const BruteForceOptions& options) {
    p.validate();
    const Eigen::Index dim_u = p.L.cols();
    const Eigen::Index dim_v = p.L.rows();
    const int m = p.messages;
    const Eigen::Index nvar = dim_u * m;
    const double eps2 = p.epsilon * p.epsilon;
    const int npairs = m * (m - 1) / 2;

    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) pairs.emplace_back(i, j);

    auto block = [&](const Vector& z, int j) { return z.segment(j * dim_u, dim_u); };

    auto violations = [&](const Vector& z, Vector& lin, Vector& pair) {
        lin.resize(dim_v * m);
        pair.resize(npairs);
        for (int j = 0; j < m; ++j) lin.segment(j * dim_v, dim_v) = p.L * block(z, j) - p.x;
        for (int k = 0; k < npairs; ++k) {
            const auto [i, j] = pairs[static_cast<std::size_t>(k)];
            pair(k) = (block(z, i) - block(z, j)).squaredNorm() - eps2;
        }
    };
    auto max_violation = [&](const Vector& lin, const Vector& pair) {
        double v = lin.size() ? lin.lpNorm<Eigen::Infinity>() : 0.0;
        for (Eigen::Index k = 0; k < pair.size(); ++k)
            v = std::max(v, options.inequality ? std::max(0.0, -pair(k)) : std::abs(pair(k)));
        return v;
    };

    const double scale = std::max(1.0, p.x.norm() + p.epsilon);
    const double feas_tol = 1e-11 * std::max(1.0, std::max(eps2, p.x.squaredNorm()));

    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> gauss(0.0, scale);

    BruteForceResult best;
    best.cost = std::numeric_limits<double>::infinity();
    best.max_constraint_violation = std::numeric_limits<double>::infinity();

    for (int restart = 0; restart < options.restarts; ++restart) {
        Vector z(nvar);
        for (Eigen::Index i = 0; i < nvar; ++i) z(i) = gauss(rng);

        PenaltyState st;
        st.lambda = Vector::Zero(dim_v * m);
        st.mu = Vector::Zero(npairs);

        auto lagrangian = [&](const Vector& zz, Vector& grad) {
            grad = 2.0 * zz;
            double val = zz.squaredNorm();
            for (int j = 0; j < m; ++j) {
                const Vector r = p.L * block(zz, j) - p.x;
                const Vector lam = st.lambda.segment(j * dim_v, dim_v);
                val += -lam.dot(r) + 0.5 * st.rho * r.squaredNorm();
                grad.segment(j * dim_u, dim_u) += p.L.transpose() * (st.rho * r - lam);
            }
            for (int k = 0; k < npairs; ++k) {
                const auto [i, j] = pairs[static_cast<std::size_t>(k)];
                const Vector diff = block(zz, i) - block(zz, j);
                const double g = diff.squaredNorm() - eps2;
                double dpsi = 0.0;
                if (!options.inequality || g <= st.mu(k) / st.rho) {
                    val += -st.mu(k) * g + 0.5 * st.rho * g * g;
                    dpsi = -st.mu(k) + st.rho * g;
                } else {
                    val += -st.mu(k) * st.mu(k) / (2.0 * st.rho);
                }
                grad.segment(i * dim_u, dim_u) += 2.0 * dpsi * diff;
                grad.segment(j * dim_u, dim_u) -= 2.0 * dpsi * diff;
            }
            return val;
        };

        Vector lin, pair;
        violations(z, lin, pair);
        double prev = max_violation(lin, pair);
        for (int outer = 0; outer < options.max_outer; ++outer) {
            optim::BfgsOptions bo;
            bo.gradient_tolerance = 1e-12 * scale * std::max(1.0, st.rho);
            z = optim::minimize_bfgs(lagrangian, z, bo).x;
            violations(z, lin, pair);
            const double viol = max_violation(lin, pair);
            st.lambda -= st.rho * lin;
            for (int k = 0; k < npairs; ++k) {
                st.mu(k) -= st.rho * pair(k);
                if (options.inequality) st.mu(k) = std::max(0.0, st.mu(k));
            }
            if (viol <= feas_tol) break;
            if (viol > 0.25 * prev) st.rho = std::min(st.rho * 10.0, 1e6);
            prev = viol;
        }

        violations(z, lin, pair);
        const double viol = max_violation(lin, pair);
        double cost = z.squaredNorm();
        const bool feasible = viol <= 1e-8 * std::max(1.0, eps2);
        const bool best_feasible = best.max_constraint_violation <= 1e-8 * std::max(1.0, eps2);
        const bool better = feasible ? (!best_feasible || cost < best.cost) : (!best_feasible && viol < best.max_constraint_violation);
        if (better) {
            best.cost = cost;
            best.max_constraint_violation = viol;
            best.best_restart = restart;
            best.controls.clear();
            for (int j = 0; j < m; ++j) best.controls.push_back(block(z, j));
            best.active_pairs.clear();
            for (int k = 0; k < npairs; ++k)
                if (std::abs(pair(k)) <= 1e-6 * eps2) best.active_pairs.push_back(pairs[static_cast<std::size_t>(k)]);
        }
    }
    if (best.best_restart < 0 || best.max_constraint_violation > 1e-8 * std::max(1.0, eps2))
        throw SolverError("brute-force search found no feasible point");
    return best;
}

}  // namespace ccomm::identity
