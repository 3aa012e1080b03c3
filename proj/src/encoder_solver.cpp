#include "ccomm/encoder_solver.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <random>
#include <sstream>

#include "ccomm/error.hpp"

namespace ccomm::encoder {

using integrator::IntegratorProblem;
using integrator::PolynomialControl;
using linalg::RationalMatrix;

const char* to_string(SeparationMetric m) {
    switch (m) {
        case SeparationMetric::RForm: return "R-form";
        case SeparationMetric::OutputL2: return "output-L2";
    }
    return "?";
}

SeparationMetric separation_metric_from_string(const std::string& s) {
    if (s == "R-form") return SeparationMetric::RForm;
    if (s == "output-L2") return SeparationMetric::OutputL2;
    throw InvalidArgument("unknown separation metric '" + s + "' (expected R-form or output-L2)");
}

void SubproblemSpec::validate() const {
    const Eigen::Index d = basis.cols();
    if (messages < 1) throw InvalidArgument("need at least one message");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InvalidArgument("separation must be positive");
    if (q_reduced.rows() != d || q_reduced.cols() != d || r_reduced.rows() != d || r_reduced.cols() != d)
        throw InvalidArgument("reduced matrices must be d x d with d = basis columns");
    if (d < messages - 1) {
        std::ostringstream msg;
        msg << "nullspace dimension " << d << " cannot hold " << messages << " messages (need " << (messages - 1) << ")";
        throw CapacityError(msg.str());
    }
    if (config.restarts < 1) throw InvalidArgument("need at least one restart");
    if (endpoint_map && endpoint_map->cols() != basis.rows()) throw InvalidArgument("endpoint map shape mismatch");
}

SubproblemSpec SubproblemSpec::from_basis(const Matrix& z, const Matrix& Q, const Matrix& R, int messages,
                                          double epsilon, const SolverConfig& config) {
    if (Q.rows() != z.rows() || R.rows() != z.rows()) throw InvalidArgument("basis and Q/R dimension mismatch");
    SubproblemSpec spec;
    spec.basis = z;
    spec.q_reduced = z.transpose() * Q * z;
    spec.r_reduced = z.transpose() * R * z;
    spec.q_reduced = 0.5 * (spec.q_reduced + spec.q_reduced.transpose()).eval();
    spec.r_reduced = 0.5 * (spec.r_reduced + spec.r_reduced.transpose()).eval();
    spec.messages = messages;
    spec.epsilon = epsilon;
    spec.config = config;
    return spec;
}

SubproblemSpec integrator_subproblem(int n, int N, int messages, double epsilon, const SolverConfig& config,
                                     SeparationMetric metric) {
    const auto pm = integrator::problem_matrices(n, N);
    const RationalMatrix t = integrator::legendre_nullspace(n, N);
    const RationalMatrix tt = t.transpose();
    const RationalMatrix sep =
        metric == SeparationMetric::RForm ? pm->R : integrator::build_output_gram(n, N);
    SubproblemSpec spec;
    spec.basis = t.to_double();
    spec.q_reduced = (tt * pm->Q * t).to_double();
    spec.r_reduced = (tt * sep * t).to_double();
    spec.messages = messages;
    spec.epsilon = epsilon;
    spec.config = config;
    spec.endpoint_map = pm->L_d;
    return spec;
}

namespace {

std::vector<std::pair<int, int>> pair_list(int m) {
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) pairs.emplace_back(i, j);
    return pairs;
}

/// Fills every derived field of a solution from its coordinates.
void finalize(const SubproblemSpec& spec, SubproblemSolution& sol) {
    const int m = spec.messages;
    const double eps2 = spec.epsilon * spec.epsilon;
    sol.offsets.clear();
    sol.cost = 0.0;
    for (const auto& c : sol.coordinates) {
        sol.offsets.push_back(spec.basis * c);
        sol.cost += c.dot(spec.q_reduced * c);
    }
    sol.separations = Matrix::Zero(m, m);
    sol.max_separation_error = 0.0;
    sol.active_pairs.clear();
    for (const auto& [i, j] : pair_list(m)) {
        const Vector d = sol.coordinates[static_cast<std::size_t>(i)] - sol.coordinates[static_cast<std::size_t>(j)];
        const double s = d.dot(spec.r_reduced * d);
        sol.separations(i, j) = sol.separations(j, i) = s;
        const double err = (s - eps2) / eps2;
        sol.max_separation_error =
            std::max(sol.max_separation_error, spec.config.inequality ? std::max(0.0, -err) : std::abs(err));
        if (std::abs(err) <= 1e-6) sol.active_pairs.emplace_back(i, j);
    }
    sol.max_nullspace_residual = 0.0;
    if (spec.endpoint_map)
        for (const auto& nj : sol.offsets)
            sol.max_nullspace_residual =
                std::max(sol.max_nullspace_residual, (*spec.endpoint_map * nj).lpNorm<Eigen::Infinity>());
}

/// Augmented-Lagrangian state for one restart, in eps-normalized coordinates.
class AugmentedLagrangian {
public:
    AugmentedLagrangian(const SubproblemSpec& spec)
        : spec_(spec),
          m_(spec.messages),
          d_(spec.dimension()),
          pairs_(pair_list(spec.messages)),
          mu_(Vector::Zero(static_cast<Eigen::Index>(pairs_.size()))) {
        const double tq = spec.q_reduced.trace();
        const double tr = spec.r_reduced.trace();
        rho_ = 10.0 * std::max(tq / tr, 1e-6);
    }

    struct Outcome {
        Vector x;
        double violation = 0.0;
        double stationarity = 0.0;
        Vector multipliers;
        int newton_steps = 0;
    };

    Outcome run(Vector x) {
        Outcome out;
        double prev = violation(constraints(x));
        for (int outer = 0; outer < spec_.config.max_outer_iterations; ++outer) {
            out.newton_steps += minimize_inner(x);
            const Vector g = constraints(x);
            const double viol = violation(g);
            for (Eigen::Index k = 0; k < g.size(); ++k) {
                mu_(k) -= rho_ * g(k);
                if (spec_.config.inequality) mu_(k) = std::max(0.0, mu_(k));
            }
            if (viol <= 1e-14 && stationarity(x, nullptr) <= 1e-11) break;
            if (viol > 0.25 * prev) rho_ = std::min(rho_ * 10.0, 1e10);
            prev = viol;
        }
        out.x = std::move(x);
        out.violation = violation(constraints(out.x));
        out.stationarity = stationarity(out.x, &out.multipliers);
        return out;
    }

    /// Objective gradient minus the least-squares multiplier combination of
    /// active constraint gradients, infinity norm.
    double stationarity(const Vector& x, Vector* multipliers) const {
        const Vector gf = objective_gradient(x);
        const Vector g = constraints(x);
        const auto npairs = static_cast<Eigen::Index>(pairs_.size());
        Matrix jt = Matrix::Zero(x.size(), npairs);
        for (Eigen::Index k = 0; k < npairs; ++k) {
            if (spec_.config.inequality && g(k) > 1e-6) continue;  // inactive
            jt.col(k) = constraint_gradient(x, k);
        }
        Vector mu = Vector::Zero(npairs);
        if (npairs > 0) mu = jt.colPivHouseholderQr().solve(gf);
        if (multipliers) *multipliers = mu;
        return (gf - jt * mu).lpNorm<Eigen::Infinity>();
    }

    double cost(const Vector& x) const {
        double f = 0.0;
        for (int j = 0; j < m_; ++j) f += block(x, j).dot(spec_.q_reduced * block(x, j));
        return f;
    }

    Vector constraints(const Vector& x) const {
        Vector g(static_cast<Eigen::Index>(pairs_.size()));
        for (std::size_t k = 0; k < pairs_.size(); ++k) {
            const Vector diff = block(x, pairs_[k].first) - block(x, pairs_[k].second);
            g(static_cast<Eigen::Index>(k)) = diff.dot(spec_.r_reduced * diff) - 1.0;
        }
        return g;
    }

    double violation(const Vector& g) const {
        double v = 0.0;
        for (Eigen::Index k = 0; k < g.size(); ++k) v = std::max(v, spec_.config.inequality ? -g(k) : std::abs(g(k)));
        return std::max(v, 0.0);
    }

private:
    Eigen::VectorBlock<const Vector> block(const Vector& x, int j) const { return x.segment(j * d_, d_); }

    Vector objective_gradient(const Vector& x) const {
        Vector g(x.size());
        for (int j = 0; j < m_; ++j) g.segment(j * d_, d_) = 2.0 * spec_.q_reduced * block(x, j);
        return g;
    }

    Vector constraint_gradient(const Vector& x, Eigen::Index k) const {
        const auto [i, j] = pairs_[static_cast<std::size_t>(k)];
        Vector g = Vector::Zero(x.size());
        const Vector rd = 2.0 * spec_.r_reduced * (block(x, i) - block(x, j));
        g.segment(i * d_, d_) = rd;
        g.segment(j * d_, d_) = -rd;
        return g;
    }

    /// Value, gradient and Hessian of the augmented Lagrangian.
    double evaluate(const Vector& x, Vector* grad, Matrix* hess) const {
        double val = cost(x);
        if (grad) *grad = objective_gradient(x);
        if (hess) {
            hess->setZero(x.size(), x.size());
            for (int j = 0; j < m_; ++j) hess->block(j * d_, j * d_, d_, d_) = 2.0 * spec_.q_reduced;
        }
        for (std::size_t k = 0; k < pairs_.size(); ++k) {
            const auto [i, j] = pairs_[k];
            const Vector diff = block(x, i) - block(x, j);
            const Vector rd = spec_.r_reduced * diff;
            const double g = diff.dot(rd) - 1.0;
            const double mu = mu_(static_cast<Eigen::Index>(k));
            double d1 = 0.0, d2 = 0.0;
            if (!spec_.config.inequality || g <= mu / rho_) {
                val += -mu * g + 0.5 * rho_ * g * g;
                d1 = -mu + rho_ * g;
                d2 = rho_;
            } else {
                val += -mu * mu / (2.0 * rho_);
            }
            if (grad) {
                grad->segment(i * d_, d_) += 2.0 * d1 * rd;
                grad->segment(j * d_, d_) -= 2.0 * d1 * rd;
            }
            if (hess && (d1 != 0.0 || d2 != 0.0)) {
                const Matrix hr = 2.0 * d1 * spec_.r_reduced + 4.0 * d2 * rd * rd.transpose();
                hess->block(i * d_, i * d_, d_, d_) += hr;
                hess->block(j * d_, j * d_, d_, d_) += hr;
                hess->block(i * d_, j * d_, d_, d_) -= hr;
                hess->block(j * d_, i * d_, d_, d_) -= hr;
            }
        }
        return val;
    }

    /// Damped Newton with a Levenberg shift; returns steps taken.
    int minimize_inner(Vector& x) const {
        Vector grad;
        Matrix hess;
        double val = evaluate(x, &grad, &hess);
        int steps = 0;
        for (; steps < spec_.config.max_inner_iterations; ++steps) {
            if (grad.lpNorm<Eigen::Infinity>() <= 1e-13 * std::max(1.0, rho_)) break;
            const Eigen::Index n = x.size();
            double shift = 0.0;
            const double base_shift = 1e-10 * std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
            Vector p;
            for (int attempt = 0; attempt < 60; ++attempt) {
                Eigen::LLT<Matrix> llt(hess + shift * Matrix::Identity(n, n));
                if (llt.info() == Eigen::Success) {
                    p = -llt.solve(grad);
                    if (p.allFinite()) break;
                }
                shift = shift == 0.0 ? base_shift : shift * 4.0;
            }
            if (p.size() == 0) break;
            const double slope = grad.dot(p);
            if (!(slope < 0.0)) break;
            double step = 1.0;
            bool accepted = false;
            Vector trial;
            double trial_val = 0.0;
            for (int k = 0; k < 60; ++k) {
                trial = x + step * p;
                trial_val = evaluate(trial, nullptr, nullptr);
                if (trial_val <= val + 1e-4 * step * slope) {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) break;
            x = std::move(trial);
            val = evaluate(x, &grad, &hess);
        }
        return steps;
    }

    const SubproblemSpec& spec_;
    int m_;
    Eigen::Index d_;
    std::vector<std::pair<int, int>> pairs_;
    Vector mu_;
    double rho_ = 10.0;
};

struct RestartResult {
    int index = 0;
    Vector x;
    double cost = 0.0;
    double violation = 0.0;
    double stationarity = 0.0;
    Vector multipliers;
    int newton_steps = 0;
};

/// Random orthogonal matrix from the QR factorization of a Gaussian matrix,
/// with the sign convention that makes it Haar distributed.
Matrix random_rotation(Eigen::Index d, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    Matrix g(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) g(i, j) = gauss(rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(d, d);
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < d; ++j)
        if (r(j, j) < 0) q.col(j) = -q.col(j);
    return q;
}

/// Starting configuration for restart `index`, in whitened coordinates.
/// 0: canonical simplex; 1: simplex spanning the eigenvectors of the
/// whitened Q with smallest eigenvalues; >= 2: random rotations of 0.
std::vector<Vector> whitened_start(const SubproblemSpec& spec, const Matrix& whitened_q, int index) {
    const Eigen::Index d = spec.dimension();
    const int m = spec.messages;
    auto simplex = linalg::regular_simplex(d, m, 1.0);
    if (index == 0) return simplex;
    Matrix rot;
    if (index == 1) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(whitened_q);
        rot = es.eigenvectors();
    } else {
        std::seed_seq seq{static_cast<std::uint32_t>(spec.config.seed & 0xffffffffu),
                          static_cast<std::uint32_t>(spec.config.seed >> 32), static_cast<std::uint32_t>(index)};
        std::mt19937_64 rng(seq);
        rot = random_rotation(d, rng);
    }
    for (auto& v : simplex) v = rot * v;
    return simplex;
}

RestartResult run_restart(const SubproblemSpec& spec, const Eigen::LLT<Matrix>& whiten, const Matrix& whitened_q,
                          int index) {
    const Eigen::Index d = spec.dimension();
    const int m = spec.messages;
    // c = G^{-T} w with R = G G^T.
    const auto start = whitened_start(spec, whitened_q, index);
    Vector x(d * m);
    for (int j = 0; j < m; ++j)
        x.segment(j * d, d) = whiten.matrixU().solve(start[static_cast<std::size_t>(j)]);

    AugmentedLagrangian al(spec);
    auto out = al.run(std::move(x));
    RestartResult r;
    r.index = index;
    r.cost = al.cost(out.x);
    r.x = std::move(out.x);
    r.violation = out.violation;
    r.stationarity = out.stationarity;
    r.multipliers = std::move(out.multipliers);
    r.newton_steps = out.newton_steps;
    return r;
}

}  // namespace

SubproblemSolution solve_m2_oracle(const SubproblemSpec& spec) {
    spec.validate();
    if (spec.messages != 2) throw InvalidArgument("the generalized-eigenvalue oracle handles exactly two messages");
    const auto eig = linalg::gen_eig_min(spec.q_reduced, spec.r_reduced);
    const Vector delta = spec.epsilon * eig.vector;
    SubproblemSolution sol;
    sol.coordinates = {0.5 * delta, -0.5 * delta};
    sol.multipliers = Vector::Constant(1, eig.value / 2.0);
    sol.restarts_run = 1;
    sol.feasible_restarts = 1;
    finalize(spec, sol);
    return sol;
}

SubproblemSolution solve_subproblem(const SubproblemSpec& spec) {
    spec.validate();
    const Eigen::Index d = spec.dimension();
    const int m = spec.messages;
    if (m == 1) {
        SubproblemSolution sol;
        sol.coordinates = {Vector::Zero(d)};
        sol.restarts_run = 1;
        sol.feasible_restarts = 1;
        finalize(spec, sol);
        return sol;
    }

    Eigen::LLT<Matrix> whiten(spec.r_reduced);
    if (whiten.info() != Eigen::Success) throw NumericalError("restricted separation matrix is not positive definite");
    if (!spec.q_reduced.allFinite()) throw InvalidArgument("restricted Q has non-finite entries");
    {
        Eigen::LLT<Matrix> qf(spec.q_reduced);
        if (qf.info() != Eigen::Success) throw NumericalError("restricted Q is not positive definite");
    }
    // M = G^{-1} Qz G^{-T}
    const Matrix gl = whiten.matrixL();
    const Matrix tmp = gl.triangularView<Eigen::Lower>().solve(spec.q_reduced);
    Matrix whitened_q = gl.triangularView<Eigen::Lower>().solve(tmp.transpose());
    whitened_q = 0.5 * (whitened_q + whitened_q.transpose()).eval();

    const int restarts = spec.config.restarts;
    std::vector<RestartResult> results(static_cast<std::size_t>(restarts));
    const int threads = std::max(1, std::min(spec.config.threads, restarts));
    if (threads == 1) {
        for (int r = 0; r < restarts; ++r) results[static_cast<std::size_t>(r)] = run_restart(spec, whiten, whitened_q, r);
    } else {
        std::vector<std::future<void>> workers;
        for (int t = 0; t < threads; ++t)
            workers.push_back(std::async(std::launch::async, [&, t] {
                for (int r = t; r < restarts; r += threads)
                    results[static_cast<std::size_t>(r)] = run_restart(spec, whiten, whitened_q, r);
            }));
        for (auto& w : workers) w.get();
    }

    // Deterministic aggregation: lowest cost among acceptable restarts, ties
    // to the lower index.
    const RestartResult* best = nullptr;
    int feasible = 0;
    double best_violation = std::numeric_limits<double>::infinity();
    for (const auto& r : results) {
        best_violation = std::min(best_violation, r.violation);
        const bool ok = r.violation <= spec.config.tolerance && r.stationarity <= spec.config.stationarity_tolerance;
        if (!ok) continue;
        ++feasible;
        if (!best || r.cost < best->cost) best = &r;
    }
    if (!best) {
        std::ostringstream msg;
        msg << "no restart reached a feasible stationary point (" << restarts
            << " restarts, best relative constraint violation " << best_violation << ")";
        throw SolverError(msg.str());
    }

    SubproblemSolution sol;
    for (int j = 0; j < m; ++j) sol.coordinates.push_back(spec.epsilon * best->x.segment(j * d, d));
    sol.stationarity = best->stationarity;
    sol.multipliers = best->multipliers;
    sol.best_restart = best->index;
    sol.restarts_run = restarts;
    sol.feasible_restarts = feasible;
    sol.iterations = best->newton_steps;
    finalize(spec, sol);
    return sol;
}

double context_energy(int n, int N, const Vector& terminal) {
    const auto pm = integrator::problem_matrices(n, N);
    if (terminal.size() != n) throw InvalidArgument("terminal state size must equal the order");
    const RationalMatrix s = pm->L * pm->Q.inverse() * pm->L.transpose();
    const RationalMatrix x = linalg::exact_column(terminal);
    return (x.transpose() * s.inverse() * x)(0, 0).get_d();
}

EncodedSolution assemble_with_encoding(const IntegratorProblem& p, const SubproblemSolution& encoding,
                                       SeparationMetric metric) {
    p.validate();
    if (static_cast<int>(encoding.offsets.size()) != p.messages)
        throw InvalidArgument("encoding has the wrong number of messages");
    const auto pm = integrator::problem_matrices(p.order, p.degree);
    EncodedSolution out;
    out.problem = p;
    out.metric = metric;
    out.base = integrator::base_control(p);
    out.encoding = encoding;
    for (const auto& nj : encoding.offsets) {
        if (nj.size() != out.base.coefficients.size()) throw InvalidArgument("encoding offsets have the wrong length");
        out.controls.push_back(PolynomialControl{out.base.coefficients + nj});
    }
    out.context_cost = p.messages * context_energy(p.order, p.degree, p.terminal);
    out.cost = out.context_cost + encoding.cost;
    out.cost_direct = 0.0;
    for (const auto& a : out.controls) {
        out.cost_direct += integrator::control_energy(a);
        out.endpoint_residuals.push_back(integrator::endpoint_exact(a, p.order) - p.terminal);
    }
    const RationalMatrix sep = metric == SeparationMetric::RForm ? pm->R : integrator::build_output_gram(p.order, p.degree);
    out.separations = Matrix::Zero(p.messages, p.messages);
    for (int i = 0; i < p.messages; ++i)
        for (int j = i + 1; j < p.messages; ++j)
            out.separations(i, j) = out.separations(j, i) =
                integrator::quadratic_form(out.controls[static_cast<std::size_t>(i)].coefficients -
                                               out.controls[static_cast<std::size_t>(j)].coefficients,
                                           sep);
    return out;
}

EncodedSolution assemble_full_solution(const IntegratorProblem& p, const SolverConfig& config,
                                       SeparationMetric metric) {
    p.validate();
    const auto spec = integrator_subproblem(p.order, p.degree, p.messages, p.epsilon, config, metric);
    return assemble_with_encoding(p, solve_subproblem(spec), metric);
}

ContextReport context_independence_report(const IntegratorProblem& p, const std::vector<Vector>& alternates,
                                          const SolverConfig& config, SeparationMetric metric) {
    p.validate();
    ContextReport report;
    const auto spec = integrator_subproblem(p.order, p.degree, p.messages, p.epsilon, config, metric);
    report.encoding = solve_subproblem(spec);
    report.offsets_identical = true;

    std::vector<Vector> terminals{p.terminal};
    terminals.insert(terminals.end(), alternates.begin(), alternates.end());
    for (const auto& x : terminals) {
        if (x.size() != p.order) throw InvalidArgument("alternate terminal state has the wrong size");
        IntegratorProblem q = p;
        q.terminal = x;
        report.solutions.push_back(assemble_with_encoding(q, report.encoding, metric));

        const auto fresh = assemble_full_solution(q, config, metric);
        for (std::size_t j = 0; j < fresh.encoding.offsets.size(); ++j)
            if (fresh.encoding.offsets[j] != report.encoding.offsets[j]) report.offsets_identical = false;
    }

    const auto& first = report.solutions.front();
    for (std::size_t k = 1; k < report.solutions.size(); ++k) {
        const auto& s = report.solutions[k];
        const double gap = s.cost_direct - first.cost_direct;
        const double expected = s.context_cost - first.context_cost;
        report.cost_gaps.push_back(gap);
        report.max_gap_error = std::max(report.max_gap_error, std::abs(gap - expected));
    }
    return report;
}

}  // namespace ccomm::encoder
