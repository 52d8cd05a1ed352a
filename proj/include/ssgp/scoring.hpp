#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "ssgp/explain.hpp"

namespace ssgp {

struct ScoredPoint {
    double timestamp = kNaN;
    double score = kNaN;        // −log p(y_t | y_{1:t−1})
    VectorXd marginal_scores;   // per dimension, NaN where missing
    bool accepted = false;
    LatentPrediction latent_prediction;
    Attribution attribution;
};

struct ScoreOptions {
    bool robust = true;
    double log_rho = std::log(kDefaultRho);
    SkipRule rule = SkipRule::joint;
};

/// Streaming anomaly scorer over a trained model; constant memory in stream length.
///
/// Orthogonal multivariate models run one filter per latent on the projected observation and
/// reconstruct the joint predictive N(d + C μ, C diag(s) C^T + σ² I) exactly. All other models
/// (and the per-dimension skip rule) run the assembled joint filter.
class OnlineScorer {
public:
    OnlineScorer(FactorModel model, ScoreOptions options = {}) : model_(std::move(model)), options_(options) {
        model_.validate();
        per_latent_ = model_.mode == LoadingMode::orthogonal && model_.obs_dim() > 1 && options_.rule == SkipRule::joint;
        if (per_latent_) {
            for (const auto& k : model_.latents) chains_.push_back(Chain{BlockDynamics(k), {}, {}, false});
        } else {
            JointStateSpace joint = assemble_joint(model_);
            readout_ = joint.latent_readout;
            RobustOptions ro{options_.robust, options_.log_rho, options_.rule};
            joint_.emplace(std::move(joint.dynamics), std::move(joint.observation), ro);
        }
    }

    const FactorModel& model() const { return model_; }

    ScoredPoint step(double t, const VectorXd& y) {
        if (y.size() != model_.obs_dim())
            throw ShapeError("score: observation has " + std::to_string(y.size()) + " dimensions, model expects " +
                             std::to_string(model_.obs_dim()));
        ScoredPoint out = per_latent_ ? step_per_latent(t, y) : step_joint(t, y);
        out.timestamp = t;
        out.attribution = attribute(model_, y, out.latent_prediction);
        return out;
    }

private:
    struct Chain {
        BlockDynamics dynamics;
        GaussianState state;
        DiscretizedTransition cached;
        bool cache_valid;
    };

    ScoredPoint step_joint(double t, const VectorXd& y) {
        const FilterStepResult r = joint_->step(t, y);
        ScoredPoint out;
        out.score = -r.log_likelihood;
        out.marginal_scores = -r.marginal_log_likelihoods;
        out.accepted = r.accepted;
        out.latent_prediction.mean = readout_ * r.predicted.mean;
        out.latent_prediction.variance = (readout_ * r.predicted.cov * readout_.transpose()).diagonal();
        return out;
    }

    ScoredPoint step_per_latent(double t, const VectorXd& y) {
        const Index d_count = model_.obs_dim(), k_count = model_.num_latents();
        const double sigma2 = model_.noise_variance();
        if (index_ == 0) {
            for (auto& c : chains_) {
                c.state.mean = VectorXd::Zero(c.dynamics.state_dim());
                c.state.cov = c.dynamics.initial_cov();
            }
            last_accepted_ = t;
        } else if (!(t > last_time_)) {
            throw InputError("score: timestamps must be strictly increasing (index " + std::to_string(index_) + ")");
        }
        const long time_index = index_++;
        last_time_ = t;
        const double dt = t - last_accepted_;

        std::vector<GaussianState> predicted(chains_.size());
        ScoredPoint out;
        out.latent_prediction.mean.resize(k_count);
        out.latent_prediction.variance.resize(k_count);
        for (std::size_t k = 0; k < chains_.size(); ++k) {
            auto& c = chains_[k];
            if (!c.cache_valid || c.cached.dt != dt) {
                c.cached = c.dynamics.transition(dt);
                c.cache_valid = true;
            }
            predicted[k] = predict(c.state, c.cached);
            const auto& h = c.dynamics.block(0).emission;
            out.latent_prediction.mean(static_cast<Index>(k)) = h.dot(predicted[k].mean);
            out.latent_prediction.variance(static_cast<Index>(k)) = h.dot(predicted[k].cov * h);
        }
        const VectorXd& mu = out.latent_prediction.mean;
        const VectorXd& s = out.latent_prediction.variance;
        const MatrixXd& c_mat = model_.loading;

        out.marginal_scores = VectorXd::Constant(d_count, kNaN);
        const bool complete = !y.hasNaN();
        double log_lik = kNaN;
        VectorXd projected;
        if (complete) {
            const VectorXd centered = y - model_.offset;
            projected = c_mat.transpose() * centered;
            const double r2 = (centered - c_mat * projected).squaredNorm();
            log_lik = -0.5 * (static_cast<double>(d_count - k_count) * (kLog2Pi + std::log(sigma2)) + r2 / sigma2);
            for (Index k = 0; k < k_count; ++k) {
                const double var = s(k) + sigma2;
                const double dev = projected(k) - mu(k);
                log_lik += -0.5 * (kLog2Pi + std::log(var) + dev * dev / var);
            }
            const VectorXd mean = model_.offset + c_mat * mu;
            const VectorXd var = c_mat.cwiseAbs2() * s + VectorXd::Constant(d_count, sigma2);
            for (Index i = 0; i < d_count; ++i) {
                const double dev = y(i) - mean(i);
                out.marginal_scores(i) = 0.5 * (kLog2Pi + std::log(var(i)) + dev * dev / var(i));
            }
        } else {
            std::vector<Index> idx;
            for (Index i = 0; i < d_count; ++i)
                if (!std::isnan(y(i))) idx.push_back(i);
            if (!idx.empty()) {
                const Index m = static_cast<Index>(idx.size());
                MatrixXd c_obs(m, k_count);
                VectorXd resid(m);
                for (Index r = 0; r < m; ++r) {
                    c_obs.row(r) = c_mat.row(idx[r]);
                    resid(r) = y(idx[r]) - model_.offset(idx[r]);
                }
                resid -= c_obs * mu;
                const MatrixXd cov = c_obs * s.asDiagonal() * c_obs.transpose() + sigma2 * MatrixXd::Identity(m, m);
                const auto ll = observation_log_likelihood(resid, cov, time_index);
                log_lik = ll.joint;
                for (Index r = 0; r < m; ++r) out.marginal_scores(idx[r]) = -ll.marginals(r);
            }
        }
        out.score = -log_lik;

        // Partially observed rows break the per-latent factorization; they are scored but not absorbed.
        const bool accept = complete && (!options_.robust || log_lik > options_.log_rho);
        if (accept) {
            for (std::size_t k = 0; k < chains_.size(); ++k) {
                const auto& h = chains_[k].dynamics.block(0).emission;
                LinearObservationModel obs{h.transpose(), VectorXd::Constant(1, sigma2), VectorXd::Zero(1)};
                Innovation inn;
                inn.observed = {0};
                inn.residual = VectorXd::Constant(1, projected(static_cast<Index>(k)) - mu(static_cast<Index>(k)));
                inn.cov = MatrixXd::Constant(1, 1, s(static_cast<Index>(k)) + sigma2);
                chains_[k].state = update(predicted[k], inn, obs, time_index);
            }
            last_accepted_ = t;
        }
        out.accepted = accept;
        return out;
    }

    FactorModel model_;
    ScoreOptions options_;
    bool per_latent_ = false;

    std::optional<RobustFilter<BlockDynamics>> joint_;
    MatrixXd readout_;

    std::vector<Chain> chains_;
    long index_ = 0;
    double last_time_ = kNaN;
    double last_accepted_ = kNaN;
};

/// Scores a batch (observations D×T) in one streaming pass.
inline std::vector<ScoredPoint> score_online(const FactorModel& model, std::span<const double> timestamps,
                                             const MatrixXd& observations, const ScoreOptions& options = {}) {
    if (observations.cols() != static_cast<Index>(timestamps.size()))
        throw ShapeError("score_online: one observation column per timestamp required");
    OnlineScorer scorer(model, options);
    std::vector<ScoredPoint> out;
    out.reserve(timestamps.size());
    for (std::size_t t = 0; t < timestamps.size(); ++t)
        out.push_back(scorer.step(timestamps[t], observations.col(static_cast<Index>(t))));
    return out;
}

}  // namespace ssgp
