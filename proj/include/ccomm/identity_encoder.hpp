#pragma once

// Closed-form multi-message encoding when distinguishability is measured
// directly on the control vector (output operator = identity), and a
// brute-force optimizer that checks it independently.

#include <cstdint>
#include <vector>

#include "ccomm/linalg.hpp"

namespace ccomm::identity {

using linalg::Matrix;
using linalg::Vector;

struct IdentityProblem {
    Matrix L;            // dim V x dim U, full row rank
    Vector x;            // target in V
    int messages = 1;
    double epsilon = 1.0;

    /// Throws InvalidArgument on shape errors and CapacityError when
    /// dim U - dim V < messages - 1.
    void validate() const;
};

struct IdentitySolution {
    std::vector<Vector> controls;  // u_j = base + offsets[j]
    Vector base;                   // least-norm solution of L u = x
    std::vector<Vector> offsets;   // simplex vertices in N(L)
    double cost = 0.0;             // sum_j |u_j|^2
};

IdentitySolution solve_identity(const IdentityProblem& p);

/// m x^T (L L^T)^{-1} x + (m-1)/2 eps^2, evaluated without solving.
double theoretical_cost(const IdentityProblem& p);

struct BruteForceOptions {
    int restarts = 8;
    std::uint64_t seed = 1;
    int max_outer = 60;
    /// Enforce |u_i - u_j| >= eps instead of equality.
    bool inequality = false;
};

struct BruteForceResult {
    std::vector<Vector> controls;
    double cost = 0.0;
    double max_constraint_violation = 0.0;
    int best_restart = -1;
    /// Pairs (i<j, row-major) whose separation constraint is active at the
    /// returned point (within 1e-6 relative). Always all pairs in equality mode.
    std::vector<std::pair<int, int>> active_pairs;
};

/// Augmented-Lagrangian/BFGS search over all m control vectors at once in the
/// ambient space, from seeded random starts. Meant for dim U <= 6, m <= 3.
BruteForceResult brute_force_identity(const IdentityProblem& p, const BruteForceOptions& options = {});

}  // namespace ccomm::identity
