#pragma once

// Message encoding in the nullspace of the endpoint map: choose m offsets
// n_j in N(L) minimizing sum_j n_j^T Q n_j subject to
// (n_i - n_j)^T R (n_i - n_j) = eps^2 for every pair. No closed form is
// known for Q != R, so solve_subproblem is a multi-start local method and
// reports best-of-restarts, not a certified optimum.

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ccomm/integrator.hpp"
#include "ccomm/linalg.hpp"

namespace ccomm::encoder {

using linalg::Matrix;
using linalg::Vector;

struct SolverConfig {
    /// Relative feasibility target |g_ij| <= tolerance * eps^2.
    double tolerance = 1e-8;
    /// Required KKT stationarity of the returned point (eps-normalized units).
    double stationarity_tolerance = 1e-6;
    int max_outer_iterations = 60;
    int max_inner_iterations = 200;
    int restarts = 32;
    std::uint64_t seed = 1;
    /// Enforce (n_i - n_j)^T R (n_i - n_j) >= eps^2 instead of equality.
    bool inequality = false;
    /// Restarts run on this many threads; the result does not depend on it.
    int threads = 1;
};

enum class SeparationMetric {
    RForm,     // (a_i - a_j)^T R (a_i - a_j), R from the closed-form entries
    OutputL2,  // int_0^1 (y_i - y_j)^2 dt with y = x_1
};

const char* to_string(SeparationMetric m);
SeparationMetric separation_metric_from_string(const std::string& s);

struct SubproblemSpec {
    Matrix basis;      // ambient x d, columns span N(L)
    Matrix q_reduced;  // basis^T Q basis
    Matrix r_reduced;  // basis^T R basis
    int messages = 2;
    double epsilon = 1.0;
    SolverConfig config;
    /// When set, used to report |L n_j|.
    std::optional<Matrix> endpoint_map;

    Eigen::Index dimension() const noexcept { return basis.cols(); }
    void validate() const;

    /// Restricts Q and R to the span of `z`.
    static SubproblemSpec from_basis(const Matrix& z, const Matrix& Q, const Matrix& R, int messages,
                                     double epsilon, const SolverConfig& config = {});
};

/// Integrator subproblem on the shifted-Legendre nullspace basis; the
/// restricted Q and R are formed in exact arithmetic.
SubproblemSpec integrator_subproblem(int n, int N, int messages, double epsilon, const SolverConfig& config = {},
                                     SeparationMetric metric = SeparationMetric::RForm);

struct SubproblemSolution {
    std::vector<Vector> offsets;      // n_j in the ambient space
    std::vector<Vector> coordinates;  // c_j with n_j = basis * c_j
    double cost = 0.0;                // sum_j n_j^T Q n_j
    Matrix separations;               // m x m, (n_i - n_j)^T R (n_i - n_j)
    double max_separation_error = 0.0;  // max |sep - eps^2| / eps^2 (equality mode)
    double max_nullspace_residual = 0.0;
    double stationarity = 0.0;
    Vector multipliers;  // pair multipliers, row-major i<j
    std::vector<std::pair<int, int>> active_pairs;
    int best_restart = 0;
    int restarts_run = 0;
    int feasible_restarts = 0;
    int iterations = 0;  // Newton steps spent on the winning restart
};

/// Exact m = 2 solution via the smallest generalized eigenpair of
/// (q_reduced, r_reduced): offsets +/- delta/2 with delta^T R delta = eps^2.
SubproblemSolution solve_m2_oracle(const SubproblemSpec& spec);

/// Multi-start augmented Lagrangian in nullspace coordinates. Throws
/// SolverError when no restart reaches a feasible stationary point.
SubproblemSolution solve_subproblem(const SubproblemSpec& spec);

struct EncodedSolution {
    integrator::IntegratorProblem problem;
    SeparationMetric metric = SeparationMetric::RForm;
    integrator::PolynomialControl base;
    std::vector<integrator::PolynomialControl> controls;
    SubproblemSolution encoding;
    double context_cost = 0.0;  // m x^T (L Q^{-1} L^T)^{-1} x
    double cost = 0.0;          // context_cost + sum n_j^T Q n_j
    double cost_direct = 0.0;   // sum a_j^T Q a_j
    std::vector<Vector> endpoint_residuals;
    Matrix separations;
};

/// Builds matrices, the base control and the encoding, then assembles and
/// checks a_j = a_0 + n_j.
EncodedSolution assemble_full_solution(const integrator::IntegratorProblem& p, const SolverConfig& config = {},
                                       SeparationMetric metric = SeparationMetric::RForm);

/// Assembles with a precomputed encoding.
EncodedSolution assemble_with_encoding(const integrator::IntegratorProblem& p, const SubproblemSolution& encoding,
                                       SeparationMetric metric = SeparationMetric::RForm);

/// x^T (L Q^{-1} L^T)^{-1} x, exact arithmetic.
double context_energy(int n, int N, const Vector& terminal);

struct ContextReport {
    SubproblemSolution encoding;
    std::vector<EncodedSolution> solutions;  // one per terminal state
    bool offsets_identical = false;
    /// max_k |(cost_k - cost_0) - m (e_k - e_0)| with e = context energy.
    double max_gap_error = 0.0;
    std::vector<double> cost_gaps;
};

/// Solves the encoding once and reuses it for every terminal state; each
/// context is also solved from scratch to confirm that the offsets come out
/// bit-identical.
ContextReport context_independence_report(const integrator::IntegratorProblem& p,
                                          const std::vector<Vector>& alternates, const SolverConfig& config = {},
                                          SeparationMetric metric = SeparationMetric::RForm);

}  // namespace ccomm::encoder
