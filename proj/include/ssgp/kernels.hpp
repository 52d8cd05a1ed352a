#pragma once

#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "ssgp/linalg.hpp"

namespace ssgp {

/// State-space (SDE) form of a one-dimensional GP covariance function:
///
///   dx/dt = F x + w(t),   E[w w^T] = diffusion · δ,   f(t) = h^T x(t).
///
/// Stationary kernels carry P∞, the solution of F P∞ + P∞ F^T + diffusion = 0,
/// and start at it. Nonstationary kernels (Brownian motion and sums containing it)
/// start from `initial_cov` at the first observation.
struct StateSpaceKernel {
    MatrixXd feedback;     // F, L×L
    VectorXd emission;     // h, L
    MatrixXd diffusion;    // L Qc L^T, L×L
    MatrixXd initial_cov;  // P∞ when stationary
    bool stationary = true;
    std::string expression;

    Index state_dim() const { return feedback.rows(); }

    std::optional<MatrixXd> stationary_cov() const {
        if (!stationary) return std::nullopt;
        return initial_cov;
    }
};

/// Transition over an elapsed time dt: x_{t+dt} = A x_t + q, q ~ N(0, Q).
struct DiscretizedTransition {
    MatrixXd A;
    MatrixXd Q;
    double dt = 0.0;
};

namespace detail {

inline void require_positive(double value, const char* what) {
    if (!(value > 0.0)) throw ParameterError(std::string(what) + " must be positive, got " + std::to_string(value));
}

inline std::string format_param(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

inline StateSpaceKernel matern32(double lengthscale, double variance) {
    detail::require_positive(lengthscale, "matern32 lengthscale");
    detail::require_positive(variance, "matern32 variance");
    const double lambda = std::sqrt(3.0) / lengthscale;
    StateSpaceKernel k;
    k.feedback.resize(2, 2);
    k.feedback << 0.0, 1.0, -lambda * lambda, -2.0 * lambda;
    k.emission = VectorXd::Unit(2, 0);
    k.initial_cov = VectorXd{{variance, lambda * lambda * variance}}.asDiagonal();
    k.diffusion = MatrixXd::Zero(2, 2);
    k.diffusion(1, 1) = 4.0 * lambda * lambda * lambda * variance;
    k.stationary = true;
    k.expression = "matern32(lengthscale=" + detail::format_param(lengthscale) +
                   ", variance=" + detail::format_param(variance) + ")";
    return k;
}

/// Cosine kernel k(τ) = variance · cos(2πτ / period). An infinite period gives
/// the constant kernel.
inline StateSpaceKernel cosine(double period, double variance) {
    detail::require_positive(period, "cosine period");
    detail::require_positive(variance, "cosine variance");
    const double omega = 2.0 * std::numbers::pi / period;
    StateSpaceKernel k;
    k.feedback.resize(2, 2);
    k.feedback << 0.0, -omega, omega, 0.0;
    k.emission = VectorXd::Unit(2, 0);
    k.initial_cov = variance * MatrixXd::Identity(2, 2);
    k.diffusion = MatrixXd::Zero(2, 2);
    k.stationary = true;
    k.expression = "cosine(period=" + detail::format_param(period) + ", variance=" + detail::format_param(variance) + ")";
    return k;
}

/// Brownian motion with diffusion coefficient q, pinned to zero variance at stream start.
inline StateSpaceKernel brownian(double diffusion) {
    detail::require_positive(diffusion, "brownian diffusion");
    StateSpaceKernel k;
    k.feedback = MatrixXd::Zero(1, 1);
    k.emission = VectorXd::Ones(1);
    k.initial_cov = MatrixXd::Zero(1, 1);
    k.diffusion = MatrixXd::Constant(1, 1, diffusion);
    k.stationary = false;
    k.expression = "brownian(diffusion=" + detail::format_param(diffusion) + ")";
    return k;
}

inline StateSpaceKernel add(const StateSpaceKernel& a, const StateSpaceKernel& b) {
    StateSpaceKernel k;
    k.feedback = block_diag(a.feedback, b.feedback);
    k.emission.resize(a.state_dim() + b.state_dim());
    k.emission << a.emission, b.emission;
    k.diffusion = block_diag(a.diffusion, b.diffusion);
    k.initial_cov = block_diag(a.initial_cov, b.initial_cov);
    k.stationary = a.stationary && b.stationary;
    k.expression = "(" + a.expression + " + " + b.expression + ")";
    return k;
}

inline StateSpaceKernel multiply(const StateSpaceKernel& a, const StateSpaceKernel& b) {
    if (!a.stationary || !b.stationary)
        throw UnsupportedError("multiply: both kernels must be stationary (got " + a.expression + " * " + b.expression + ")");
    StateSpaceKernel k;
    k.feedback = kron_sum(a.feedback, b.feedback);
    k.emission = kron(a.emission, b.emission);
    k.initial_cov = kron(a.initial_cov, b.initial_cov);
    // Stationary Lyapunov identity F P∞ + P∞ F^T + diffusion = 0.
    k.diffusion = symmetrized(-(k.feedback * k.initial_cov + k.initial_cov * k.feedback.transpose()));
    k.stationary = true;
    k.expression = a.expression + " * " + b.expression;
    return k;
}

/// A(dt) = expm(F dt). Stationary kernels use Q = P∞ − A P∞ A^T; nonstationary
/// ones integrate the diffusion (Van Loan block exponential).
inline DiscretizedTransition discretize(const StateSpaceKernel& k, double dt) {
    if (!(dt >= 0.0)) throw ParameterError("discretize: dt must be nonnegative, got " + std::to_string(dt));
    const Index n = k.state_dim();
    DiscretizedTransition out;
    out.dt = dt;
    if (dt == 0.0) {
        out.A = MatrixXd::Identity(n, n);
        out.Q = MatrixXd::Zero(n, n);
        return out;
    }
    if (k.stationary) {
        out.A = matrix_exponential(k.feedback * dt);
        out.Q = symmetrized(k.initial_cov - out.A * k.initial_cov * out.A.transpose());
        return out;
    }
    MatrixXd block = MatrixXd::Zero(2 * n, 2 * n);
    block.topLeftCorner(n, n) = k.feedback * dt;
    block.topRightCorner(n, n) = k.diffusion * dt;
    block.bottomRightCorner(n, n) = -k.feedback.transpose() * dt;
    const MatrixXd e = matrix_exponential(block);
    out.A = e.topLeftCorner(n, n);
    out.Q = symmetrized(e.topRightCorner(n, n) * out.A.transpose());
    return out;
}

/// k(τ) = h^T expm(F τ) P∞ h.
inline double prior_covariance(const StateSpaceKernel& k, double tau) {
    if (!k.stationary) throw UnsupportedError("prior_covariance: kernel " + k.expression + " is not stationary");
    if (!(tau >= 0.0)) throw ParameterError("prior_covariance: tau must be nonnegative");
    return k.emission.dot(matrix_exponential(k.feedback * tau) * k.initial_cov * k.emission);
}

/// Marginal prior variance h^T P∞ h of a stationary kernel.
inline double prior_variance(const StateSpaceKernel& k) {
    if (!k.stationary) throw UnsupportedError("prior_variance: kernel " + k.expression + " is not stationary");
    return k.emission.dot(k.initial_cov * k.emission);
}

}  // namespace ssgp
