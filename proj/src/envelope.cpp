#include "ccomm/envelope.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "ccomm/error.hpp"

namespace ccomm::cli {

using linalg::Matrix;
using linalg::Vector;
using nlohmann::json;

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw InvalidArgument("matrix must be a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.at(0).size());
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j.at(static_cast<std::size_t>(r));
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw InvalidArgument("matrix rows must have equal length");
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
}

json vector_to_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Vector vector_from_json(const json& j) {
    if (!j.is_array()) throw InvalidArgument("vector must be an array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j.at(i).get<double>();
    return v;
}

namespace {

Vector to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

integrator::IntegratorProblem integrator_problem(const SolveRequest& r) {
    integrator::IntegratorProblem p;
    p.order = r.order;
    p.degree = r.degree;
    p.messages = r.messages;
    p.epsilon = r.epsilon;
    p.terminal = to_vector(r.terminal);
    return p;
}

identity::IdentityProblem identity_problem(const SolveRequest& r) {
    identity::IdentityProblem p;
    p.L = r.L;
    p.x = to_vector(r.target);
    p.messages = r.messages;
    p.epsilon = r.epsilon;
    return p;
}

}  // namespace

void SolveRequest::validate() const {
    if (config.restarts < 1) throw InvalidArgument("--starts must be at least 1");
    if (!(config.tolerance > 0.0)) throw InvalidArgument("--tol must be positive");
    if (trajectory_samples < 2) throw InvalidArgument("trajectory needs at least two samples");
    if (mode == Mode::Integrator)
        integrator_problem(*this).validate();
    else
        identity_problem(*this).validate();
}

json request_to_json(const SolveRequest& r) {
    json j;
    j["mode"] = r.mode == Mode::Integrator ? "integrator" : "identity";
    j["messages"] = r.messages;
    j["epsilon"] = r.epsilon;
    if (r.mode == Mode::Integrator) {
        j["n"] = r.order;
        j["degree"] = r.degree;
        j["terminal"] = r.terminal;
        j["separation_metric"] = encoder::to_string(r.metric);
        j["trajectory_samples"] = r.trajectory_samples;
    } else {
        j["L"] = matrix_to_json(r.L);
        j["target"] = r.target;
    }
    j["solver"] = {{"starts", r.config.restarts},
                   {"seed", r.config.seed},
                   {"tol", r.config.tolerance},
                   {"inequality", r.config.inequality}};
    return j;
}

SolveRequest request_from_json(const json& j) {
    SolveRequest r;
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "integrator")
        r.mode = Mode::Integrator;
    else if (mode == "identity")
        r.mode = Mode::Identity;
    else
        throw InvalidArgument("unknown mode '" + mode + "'");
    r.messages = j.at("messages").get<int>();
    r.epsilon = j.at("epsilon").get<double>();
    if (r.mode == Mode::Integrator) {
        r.order = j.at("n").get<int>();
        r.degree = j.at("degree").get<int>();
        r.terminal = j.at("terminal").get<std::vector<double>>();
        r.metric = encoder::separation_metric_from_string(j.at("separation_metric").get<std::string>());
        r.trajectory_samples = j.value("trajectory_samples", 101);
    } else {
        r.L = matrix_from_json(j.at("L"));
        r.target = j.at("target").get<std::vector<double>>();
    }
    const auto& s = j.at("solver");
    r.config.restarts = s.at("starts").get<int>();
    r.config.seed = s.at("seed").get<std::uint64_t>();
    r.config.tolerance = s.at("tol").get<double>();
    r.config.inequality = s.at("inequality").get<bool>();
    return r;
}

namespace {

json encode_integrator(const SolveRequest& r) {
    const auto p = integrator_problem(r);
    const auto sol = encoder::assemble_full_solution(p, r.config, r.metric);
    const auto pm = integrator::problem_matrices(p.order, p.degree);
    const double eps2 = p.epsilon * p.epsilon;

    json env;
    env["matrices"] = {{"L", matrix_to_json(pm->L_d)}, {"Q", matrix_to_json(pm->Q_d)}, {"R", matrix_to_json(pm->R_d)}};
    json controls = json::array();
    json offsets = json::array();
    json trajectories = json::array();
    json endpoints = json::array();
    for (std::size_t j = 0; j < sol.controls.size(); ++j) {
        controls.push_back(vector_to_json(sol.controls[j].coefficients));
        offsets.push_back(vector_to_json(sol.encoding.offsets[j]));
        endpoints.push_back(vector_to_json(sol.endpoint_residuals[j]));
        const auto tr = integrator::simulate(sol.controls[j], p.order, r.trajectory_samples);
        json rows = json::array();
        for (std::size_t i = 0; i < tr.t.size(); ++i) {
            json row = json::array({tr.t[i]});
            for (Eigen::Index c = 0; c < tr.states.cols(); ++c) row.push_back(tr.states(static_cast<Eigen::Index>(i), c));
            row.push_back(tr.u[i]);
            rows.push_back(std::move(row));
        }
        trajectories.push_back({{"columns", [&] {
                                     json cols = json::array({"t"});
                                     for (int c = 1; c <= p.order; ++c) cols.push_back("x" + std::to_string(c));
                                     cols.push_back("u");
                                     return cols;
                                 }()},
                                {"rows", std::move(rows)},
                                {"simulated_endpoint", vector_to_json(tr.endpoint)}});
    }
    Matrix sep_residual = sol.separations;
    for (Eigen::Index i = 0; i < sep_residual.rows(); ++i)
        for (Eigen::Index k = 0; k < sep_residual.cols(); ++k)
            sep_residual(i, k) = i == k ? 0.0 : sep_residual(i, k) - eps2;

    env["controls"] = std::move(controls);
    env["base_control"] = vector_to_json(sol.base.coefficients);
    env["offsets"] = std::move(offsets);
    env["cost"] = sol.cost;
    env["cost_direct"] = sol.cost_direct;
    env["context_cost"] = sol.context_cost;
    env["encoding_cost"] = sol.encoding.cost;
    env["residuals"] = {{"endpoint", std::move(endpoints)},
                        {"separation", matrix_to_json(sep_residual)},
                        {"kkt", sol.encoding.stationarity},
                        {"nullspace", sol.encoding.max_nullspace_residual}};
    env["trajectories"] = std::move(trajectories);
    json active = json::array();
    for (const auto& [i, k] : sol.encoding.active_pairs) active.push_back({i, k});
    env["meta"] = {{"seed", r.config.seed},
                   {"starts", r.config.restarts},
                   {"best_restart", sol.encoding.best_restart},
                   {"feasible_restarts", sol.encoding.feasible_restarts},
                   {"solver_iterations", sol.encoding.iterations},
                   {"multipliers", vector_to_json(sol.encoding.multipliers)},
                   {"active_pairs", std::move(active)},
                   {"optimality", "best-of-restarts; global optimality of the encoding is not established"}};
    return env;
}

json encode_identity(const SolveRequest& r) {
    const auto p = identity_problem(r);
    const auto sol = identity::solve_identity(p);
    const double eps2 = p.epsilon * p.epsilon;
    json env;
    env["matrices"] = {{"L", matrix_to_json(p.L)}};
    json controls = json::array();
    json offsets = json::array();
    json endpoints = json::array();
    for (std::size_t j = 0; j < sol.controls.size(); ++j) {
        controls.push_back(vector_to_json(sol.controls[j]));
        offsets.push_back(vector_to_json(sol.offsets[j]));
        endpoints.push_back(vector_to_json(p.L * sol.controls[j] - p.x));
    }
    Matrix sep = Matrix::Zero(p.messages, p.messages);
    for (int i = 0; i < p.messages; ++i)
        for (int k = 0; k < p.messages; ++k)
            if (i != k)
                sep(i, k) = (sol.controls[static_cast<std::size_t>(i)] - sol.controls[static_cast<std::size_t>(k)])
                                .squaredNorm() -
                            eps2;
    env["controls"] = std::move(controls);
    env["base_control"] = vector_to_json(sol.base);
    env["offsets"] = std::move(offsets);
    env["cost"] = sol.cost;
    env["cost_direct"] = sol.cost;
    env["theoretical_cost"] = identity::theoretical_cost(p);
    env["residuals"] = {{"endpoint", std::move(endpoints)}, {"separation", matrix_to_json(sep)}, {"kkt", 0.0}};
    env["meta"] = {{"seed", r.config.seed}, {"starts", 0}, {"optimality", "closed form"}};
    return env;
}

}  // namespace

json encode(const SolveRequest& r) {
    r.validate();
    const auto t0 = std::chrono::steady_clock::now();
    json env = r.mode == Mode::Integrator ? encode_integrator(r) : encode_identity(r);
    const auto t1 = std::chrono::steady_clock::now();
    env["version"] = kEnvelopeVersion;
    env["request"] = request_to_json(r);
    env["meta"]["runtime_ms"] = std::chrono::duration<double, std::milli>(t1 - t0).count();
    return env;
}

namespace {

class Checker {
public:
    explicit Checker(VerifyReport& report) : report_(report) {}

    void require(bool ok, const std::string& what) {
        if (ok) return;
        report_.ok = false;
        report_.failures.push_back(what);
    }

    /// Stored residual entries must agree with the recomputed ones.
    void compare_stored(const json& stored, const Matrix& recomputed, double tol, const std::string& name) {
        try {
            const Matrix s = matrix_from_json(stored);
            const bool same_shape = s.rows() == recomputed.rows() && s.cols() == recomputed.cols();
            require(same_shape, name + ": stored residual has the wrong shape");
            if (same_shape)
                require((s - recomputed).lpNorm<Eigen::Infinity>() <= tol,
                        name + ": stored residuals disagree with recomputed values");
        } catch (const std::exception& e) {
            require(false, name + ": unreadable stored residuals (" + e.what() + ")");
        }
    }

private:
    VerifyReport& report_;
};

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(3);
    s << std::scientific << v;
    return s.str();
}

void verify_integrator(const SolveRequest& r, const json& env, VerifyReport& report) {
    Checker check(report);
    const auto p = integrator_problem(r);
    p.validate();
    const auto pm = integrator::problem_matrices(p.order, p.degree);
    const double eps2 = p.epsilon * p.epsilon;
    const auto& cj = env.at("controls");
    check.require(static_cast<int>(cj.size()) == p.messages, "number of controls differs from messages");
    if (static_cast<int>(cj.size()) != p.messages) return;

    std::vector<integrator::PolynomialControl> controls;
    for (const auto& c : cj) {
        integrator::PolynomialControl a{vector_from_json(c)};
        check.require(a.degree() == p.degree, "control has the wrong number of coefficients");
        if (a.degree() != p.degree) return;
        controls.push_back(std::move(a));
    }

    const double x_scale = std::max(1.0, p.terminal.lpNorm<Eigen::Infinity>());
    Matrix endpoint(p.messages, p.order);
    for (int j = 0; j < p.messages; ++j) {
        const Vector res = integrator::endpoint_exact(controls[static_cast<std::size_t>(j)], p.order) - p.terminal;
        endpoint.row(j) = res.transpose();
        const double e = res.lpNorm<Eigen::Infinity>();
        report.max_endpoint_residual = std::max(report.max_endpoint_residual, e);
        check.require(e <= kEndpointTolerance * x_scale,
                      "control " + std::to_string(j) + ": endpoint residual " + fmt(e));
    }
    check.compare_stored(env.at("residuals").at("endpoint"), endpoint, 1e-9 * x_scale, "endpoint");

    const linalg::RationalMatrix sep_matrix =
        r.metric == encoder::SeparationMetric::RForm ? pm->R : integrator::build_output_gram(p.order, p.degree);
    Matrix sep_residual = Matrix::Zero(p.messages, p.messages);
    for (int i = 0; i < p.messages; ++i)
        for (int k = i + 1; k < p.messages; ++k) {
            const double s = integrator::quadratic_form(
                controls[static_cast<std::size_t>(i)].coefficients - controls[static_cast<std::size_t>(k)].coefficients,
                sep_matrix);
            sep_residual(i, k) = sep_residual(k, i) = s - eps2;
            const double rel = (s - eps2) / eps2;
            const double err = r.config.inequality ? std::max(0.0, -rel) : std::abs(rel);
            report.max_separation_error = std::max(report.max_separation_error, err);
            check.require(err <= kSeparationTolerance, "pair (" + std::to_string(i) + "," + std::to_string(k) +
                                                           "): separation error " + fmt(rel) + " relative to eps^2");
        }
    check.compare_stored(env.at("residuals").at("separation"), sep_residual, 1e-9 * eps2, "separation");

    // Context-plus-message form versus direct energy.
    double direct = 0.0;
    for (const auto& a : controls) direct += integrator::control_energy(a);
    const auto base = integrator::base_control(p);
    double encoding = 0.0;
    for (const auto& a : controls) encoding += integrator::quadratic_form(a.coefficients - base.coefficients, pm->Q);
    const double formula = p.messages * encoder::context_energy(p.order, p.degree, p.terminal) + encoding;
    const double stored = env.at("cost").get<double>();
    const double scale = std::max(1.0, std::abs(direct));
    report.cost_identity_error = std::max(std::abs(formula - direct), std::abs(stored - direct)) / scale;
    check.require(std::abs(formula - direct) <= kCostTolerance * scale,
                  "cost identity: separated form " + fmt(formula) + " vs direct " + fmt(direct));
    check.require(std::abs(stored - direct) <= kCostTolerance * scale,
                  "stored cost " + fmt(stored) + " vs direct " + fmt(direct));
}

void verify_identity(const SolveRequest& r, const json& env, VerifyReport& report) {
    Checker check(report);
    const auto p = identity_problem(r);
    p.validate();
    const double eps2 = p.epsilon * p.epsilon;
    const auto& cj = env.at("controls");
    check.require(static_cast<int>(cj.size()) == p.messages, "number of controls differs from messages");
    if (static_cast<int>(cj.size()) != p.messages) return;
    std::vector<Vector> u;
    for (const auto& c : cj) {
        u.push_back(vector_from_json(c));
        check.require(u.back().size() == p.L.cols(), "control has the wrong dimension");
        if (u.back().size() != p.L.cols()) return;
    }
    const double x_scale = std::max(1.0, p.x.lpNorm<Eigen::Infinity>());
    Matrix endpoint(p.messages, p.L.rows());
    double direct = 0.0;
    for (int j = 0; j < p.messages; ++j) {
        const Vector res = p.L * u[static_cast<std::size_t>(j)] - p.x;
        endpoint.row(j) = res.transpose();
        report.max_endpoint_residual = std::max(report.max_endpoint_residual, res.lpNorm<Eigen::Infinity>());
        check.require(res.lpNorm<Eigen::Infinity>() <= kEndpointTolerance * x_scale,
                      "control " + std::to_string(j) + ": endpoint residual " + fmt(res.lpNorm<Eigen::Infinity>()));
        direct += u[static_cast<std::size_t>(j)].squaredNorm();
    }
    check.compare_stored(env.at("residuals").at("endpoint"), endpoint, 1e-9 * x_scale, "endpoint");
    Matrix sep = Matrix::Zero(p.messages, p.messages);
    for (int i = 0; i < p.messages; ++i)
        for (int k = 0; k < p.messages; ++k) {
            if (i == k) continue;
            const double s = (u[static_cast<std::size_t>(i)] - u[static_cast<std::size_t>(k)]).squaredNorm();
            sep(i, k) = s - eps2;
            const double rel = std::abs(s - eps2) / eps2;
            report.max_separation_error = std::max(report.max_separation_error, rel);
            check.require(rel <= kSeparationTolerance,
                          "pair (" + std::to_string(i) + "," + std::to_string(k) + "): separation error " + fmt(rel));
        }
    check.compare_stored(env.at("residuals").at("separation"), sep, 1e-9 * eps2, "separation");
    const double theory = identity::theoretical_cost(p);
    const double stored = env.at("cost").get<double>();
    const double scale = std::max(1.0, std::abs(theory));
    report.cost_identity_error = std::max(std::abs(direct - theory), std::abs(stored - direct)) / scale;
    check.require(std::abs(direct - theory) <= kCostTolerance * scale,
                  "cost " + fmt(direct) + " differs from closed form " + fmt(theory));
    check.require(std::abs(stored - direct) <= kCostTolerance * scale, "stored cost differs from recomputed cost");
}

}  // namespace

VerifyReport verify(const json& envelope) {
    VerifyReport report;
    Checker check(report);
    check.require(envelope.value("version", std::string()) == kEnvelopeVersion, "unsupported envelope version");
    if (!report.ok) return report;
    const SolveRequest r = request_from_json(envelope.at("request"));
    try {
        if (r.mode == Mode::Integrator)
            verify_integrator(r, envelope, report);
        else
            verify_identity(r, envelope, report);
    } catch (const CapacityError& e) {
        check.require(false, std::string("request violates capacity: ") + e.what());
    } catch (const InvalidArgument& e) {
        check.require(false, std::string("inconsistent envelope: ") + e.what());
    }
    return report;
}

}  // namespace ccomm::cli
