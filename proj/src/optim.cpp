#include "ccomm/optim.hpp"

#include <cmath>

namespace ccomm::optim {

using linalg::Matrix;
using linalg::Vector;

BfgsResult minimize_bfgs(const Objective& f, Vector x0, const BfgsOptions& options) {
    const Eigen::Index n = x0.size();
    BfgsResult res;
    res.x = std::move(x0);
    Vector g(n);
    res.value = f(res.x, g);
    Matrix h = Matrix::Identity(n, n);
    Vector g_new(n);
    int stalled = 0;

    for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
        res.gradient_norm = g.lpNorm<Eigen::Infinity>();
        if (res.gradient_norm <= options.gradient_tolerance) {
            res.converged = true;
            return res;
        }
        Vector p = -h * g;
        double slope = g.dot(p);
        if (slope >= 0.0) {
            // Lost descent; restart from steepest descent.
            h.setIdentity();
            p = -g;
            slope = -g.squaredNorm();
        }
        double step = 1.0;
        double value_new = 0.0;
        Vector x_new;
        bool accepted = false;
        for (int k = 0; k < 60; ++k) {
            x_new = res.x + step * p;
            value_new = f(x_new, g_new);
            if (std::isfinite(value_new) && value_new <= res.value + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        stalled = value_new < res.value ? 0 : stalled + 1;
        if (stalled >= options.stall_iterations) {
            res.x = std::move(x_new);
            res.value = value_new;
            g = g_new;
            break;
        }

        const Vector s = x_new - res.x;
        const Vector y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-14 * s.norm() * y.norm()) {
            if (res.iterations == 0) h *= sy / y.squaredNorm();
            const double rho = 1.0 / sy;
            const Vector hy = h * y;
            h += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
        }
        res.x = std::move(x_new);
        res.value = value_new;
        g = g_new;
    }
    res.gradient_norm = g.lpNorm<Eigen::Infinity>();
    res.converged = res.gradient_norm <= options.gradient_tolerance;
    return res;
}

}  // namespace ccomm::optim
