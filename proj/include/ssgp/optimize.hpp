#pragma once

#include <cmath>
#include <functional>
#include <limits>

#include "ssgp/linalg.hpp"

namespace ssgp {

struct BfgsOptions {
    int max_iters = 20;
    double gradient_tol = 1e-6;
    double fd_step = 1e-5;
};

struct MinimizeResult {
    VectorXd x;
    double value = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

/// Central finite-difference gradient.
inline VectorXd numerical_gradient(const std::function<double(const VectorXd&)>& f, const VectorXd& x, double step) {
    VectorXd g(x.size());
    VectorXd probe = x;
    for (Index i = 0; i < x.size(); ++i) {
        const double h = step * std::max(1.0, std::abs(x(i)));
        probe(i) = x(i) + h;
        const double up = f(probe);
        probe(i) = x(i) - h;
        const double down = f(probe);
        probe(i) = x(i);
        g(i) = (up - down) / (2.0 * h);
    }
    return g;
}

/// Quasi-Newton (BFGS) minimization with finite-difference gradients and Armijo
/// backtracking. Non-finite objective values are treated as +inf so that the line
/// search backs off; the best finite iterate is always returned.
inline MinimizeResult bfgs_minimize(const std::function<double(const VectorXd&)>& objective, const VectorXd& x0,
                                    const BfgsOptions& options = {}) {
    auto f = [&](const VectorXd& x) {
        const double v = objective(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    MinimizeResult best;
    best.x = x0;
    best.value = f(x0);
    if (!std::isfinite(best.value)) return best;

    const Index n = x0.size();
    MatrixXd inv_hessian = MatrixXd::Identity(n, n);
    VectorXd x = x0;
    double fx = best.value;
    VectorXd g = numerical_gradient(f, x, options.fd_step);

    for (int iter = 0; iter < options.max_iters; ++iter) {
        best.iterations = iter + 1;
        if (!g.allFinite()) break;
        if (g.lpNorm<Eigen::Infinity>() < options.gradient_tol) {
            best.converged = true;
            break;
        }
        VectorXd direction = -inv_hessian * g;
        if (direction.dot(g) >= 0.0) {
            inv_hessian.setIdentity();
            direction = -g;
        }
        // Keep the first trial step bounded in log-parameter space.
        const double max_step = direction.lpNorm<Eigen::Infinity>();
        double alpha = max_step > 2.0 ? 2.0 / max_step : 1.0;

        VectorXd x_new;
        double f_new = std::numeric_limits<double>::infinity();
        bool found = false;
        for (int ls = 0; ls < 40; ++ls) {
            x_new = x + alpha * direction;
            f_new = f(x_new);
            if (f_new <= fx + 1e-4 * alpha * g.dot(direction)) {
                found = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!found) break;

        const VectorXd g_new = numerical_gradient(f, x_new, options.fd_step);
        const VectorXd s = x_new - x;
        const VectorXd yv = g_new - g;
        const double sy = s.dot(yv);
        if (sy > 1e-12) {
            const double rho = 1.0 / sy;
            const MatrixXd ident = MatrixXd::Identity(n, n);
            inv_hessian = (ident - rho * s * yv.transpose()) * inv_hessian * (ident - rho * yv * s.transpose()) +
                          rho * s * s.transpose();
        }
        x = x_new;
        fx = f_new;
        g = g_new;
        if (fx < best.value) {
            best.value = fx;
            best.x = x;
        }
    }
    return best;
}

}  // namespace ssgp
