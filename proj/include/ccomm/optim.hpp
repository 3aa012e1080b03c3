#pragma once

// Unconstrained quasi-Newton minimization used by the brute-force oracles.

#include <functional>

#include "ccomm/linalg.hpp"

namespace ccomm::optim {

/// Returns f(x) and writes the gradient into `grad`.
using Objective = std::function<double(const linalg::Vector& x, linalg::Vector& grad)>;

struct BfgsOptions {
    int max_iterations = 5000;
    double gradient_tolerance = 1e-11;
    int stall_iterations = 10;  // consecutive steps without a strict decrease
};

struct BfgsResult {
    linalg::Vector x;
    double value = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Dense BFGS with backtracking Armijo line search. The inverse-Hessian
/// update is skipped whenever the curvature condition fails.
BfgsResult minimize_bfgs(const Objective& f, linalg::Vector x0, const BfgsOptions& options = {});

}  // namespace ccomm::optim
