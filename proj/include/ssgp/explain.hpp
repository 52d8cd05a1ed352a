#pragma once

#include <atomic>
#include <cmath>
#include <span>
#include <vector>

#include "ssgp/factor_model.hpp"

namespace ssgp {

/// Predictive distribution of each latent z_{k,t} given the past.
struct LatentPrediction {
    VectorXd mean;
    VectorXd variance;
};

struct Attribution {
    VectorXd projected_latents;  // v_t
    VectorXd per_latent_nll;     // −log p(v_{k,t} | past)
    double reconstruction_error = 0.0;
};

namespace detail {

struct Projection {
    VectorXd latents;
    VectorXd noise_variance;  // variance the observation noise contributes to each v_k
    double reconstruction_error = 0.0;
};

inline void warn_normal_equations_once() {
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true))
        log::warn("project_latents: loading matrix is not orthonormal, using normal equations");
}

inline Projection project(const FactorModel& model, const VectorXd& y) {
    if (y.size() != model.obs_dim()) throw ShapeError("project_latents: observation has wrong dimension");
    const Index k_count = model.num_latents();
    Projection out;
    if (model.mode == LoadingMode::orthogonal && !y.hasNaN()) {
        const VectorXd centered = y - model.offset;
        out.latents = model.loading.transpose() * centered;
        out.noise_variance = VectorXd::Constant(k_count, model.noise_variance());
        out.reconstruction_error = (centered - model.loading * out.latents).norm();
        return out;
    }
    if (model.mode == LoadingMode::unconstrained) warn_normal_equations_once();

    std::vector<Index> idx;
    for (Index i = 0; i < y.size(); ++i)
        if (!std::isnan(y(i))) idx.push_back(i);
    const Index m = static_cast<Index>(idx.size());
    MatrixXd c_obs(m, k_count);
    VectorXd centered(m), psi(m);
    for (Index r = 0; r < m; ++r) {
        c_obs.row(r) = model.loading.row(idx[r]);
        centered(r) = y(idx[r]) - model.offset(idx[r]);
        psi(r) = model.noise(idx[r]);
    }
    if (m < k_count) {
        out.latents = VectorXd::Constant(k_count, kNaN);
        out.noise_variance = VectorXd::Constant(k_count, kNaN);
        out.reconstruction_error = kNaN;
        return out;
    }
    const Eigen::LDLT<MatrixXd> gram(c_obs.transpose() * c_obs);
    const MatrixXd pinv = gram.solve(c_obs.transpose());  // (C^T C)^-1 C^T
    out.latents = pinv * centered;
    out.noise_variance = (pinv * psi.asDiagonal() * pinv.transpose()).diagonal();
    out.reconstruction_error = (centered - c_obs * out.latents).norm();
    return out;
}

}  // namespace detail

/// Least-squares latent values explaining y: v = C^T (y − d) when C has orthonormal columns,
/// (C^T C)^-1 C^T (y − d) otherwise.
inline VectorXd project_latents(const FactorModel& model, const VectorXd& y) { return detail::project(model, y).latents; }

/// Scores each projected latent under its predictive distribution. The variance used for v_k
/// is the latent predictive variance plus the observation noise carried through the projection.
inline Attribution attribute(const FactorModel& model, const VectorXd& y, const LatentPrediction& prediction) {
    if (prediction.mean.size() != model.num_latents() || prediction.variance.size() != model.num_latents())
        throw ShapeError("attribute: latent prediction has wrong dimension");
    const auto proj = detail::project(model, y);
    Attribution out;
    out.projected_latents = proj.latents;
    out.reconstruction_error = proj.reconstruction_error;
    out.per_latent_nll.resize(model.num_latents());
    for (Index k = 0; k < model.num_latents(); ++k) {
        const double var = prediction.variance(k) + proj.noise_variance(k);
        const double dev = proj.latents(k) - prediction.mean(k);
        out.per_latent_nll(k) = 0.5 * (kLog2Pi + std::log(var) + dev * dev / var);
    }
    return out;
}

/// Attribution for every column of observations (D×T).
inline std::vector<Attribution> attribute(const FactorModel& model, const MatrixXd& observations,
                                          std::span<const LatentPrediction> predictions) {
    if (static_cast<Index>(predictions.size()) != observations.cols())
        throw ShapeError("attribute: one latent prediction per observation required");
    std::vector<Attribution> out;
    out.reserve(predictions.size());
    for (Index t = 0; t < observations.cols(); ++t)
        out.push_back(attribute(model, observations.col(t), predictions[static_cast<std::size_t>(t)]));
    return out;
}

}  // namespace ssgp
