#pragma once

#include <cmath>
#include <concepts>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "ssgp/kernels.hpp"

namespace ssgp {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Default robust acceptance threshold on the predictive likelihood.
inline constexpr double kDefaultRho = 1e-12;

struct GaussianState {
    VectorXd mean;
    MatrixXd cov;
    double last_accepted_time = kNaN;
};

/// y = H x + offset + ε, ε ~ N(0, diag(noise_var)).
struct LinearObservationModel {
    MatrixXd H;
    VectorXd noise_var;
    VectorXd offset;

    Index obs_dim() const { return H.rows(); }
};

/// Residual and covariance restricted to the observed (non-NaN) dimensions.
struct Innovation {
    VectorXd residual;
    MatrixXd cov;
    std::vector<Index> observed;
};

struct ObservationLogLikelihood {
    double joint = 0.0;
    VectorXd marginals;
};

/// Anything that can produce a transition over an elapsed time and a prior covariance.
template <class T>
concept TransitionModel = requires(const T& dynamics, double dt) {
    { dynamics.state_dim() } -> std::convertible_to<Index>;
    { dynamics.transition(dt) } -> std::convertible_to<DiscretizedTransition>;
    { dynamics.initial_cov() } -> std::convertible_to<MatrixXd>;
};

/// Independent latent processes stacked block-diagonally.
class BlockDynamics {
public:
    BlockDynamics() = default;
    explicit BlockDynamics(std::vector<StateSpaceKernel> blocks) : blocks_(std::move(blocks)) {
        for (const auto& b : blocks_) {
            offsets_.push_back(dim_);
            dim_ += b.state_dim();
        }
    }
    explicit BlockDynamics(StateSpaceKernel kernel) : BlockDynamics(std::vector<StateSpaceKernel>{std::move(kernel)}) {}

    Index state_dim() const { return dim_; }
    std::size_t num_blocks() const { return blocks_.size(); }
    const StateSpaceKernel& block(std::size_t k) const { return blocks_[k]; }
    Index block_offset(std::size_t k) const { return offsets_[k]; }

    DiscretizedTransition transition(double dt) const {
        if (blocks_.size() == 1) return discretize(blocks_.front(), dt);
        DiscretizedTransition out;
        out.dt = dt;
        out.A = MatrixXd::Zero(dim_, dim_);
        out.Q = MatrixXd::Zero(dim_, dim_);
        for (std::size_t k = 0; k < blocks_.size(); ++k) {
            const auto tr = discretize(blocks_[k], dt);
            const Index n = blocks_[k].state_dim();
            out.A.block(offsets_[k], offsets_[k], n, n) = tr.A;
            out.Q.block(offsets_[k], offsets_[k], n, n) = tr.Q;
        }
        return out;
    }

    MatrixXd initial_cov() const {
        MatrixXd p = MatrixXd::Zero(dim_, dim_);
        for (std::size_t k = 0; k < blocks_.size(); ++k) {
            const Index n = blocks_[k].state_dim();
            p.block(offsets_[k], offsets_[k], n, n) = blocks_[k].initial_cov;
        }
        return p;
    }

private:
    std::vector<StateSpaceKernel> blocks_;
    std::vector<Index> offsets_;
    Index dim_ = 0;
};

inline GaussianState predict(const GaussianState& state, const DiscretizedTransition& trans) {
    if (trans.A.cols() != state.mean.size() || trans.A.rows() != trans.Q.rows() || state.cov.rows() != state.mean.size())
        throw ShapeError("predict: transition and state dimensions disagree");
    GaussianState out;
    out.mean = trans.A * state.mean;
    out.cov = symmetrized(trans.A * state.cov * trans.A.transpose() + trans.Q);
    out.last_accepted_time = state.last_accepted_time;
    return out;
}

/// Innovation on the observed entries of y (NaN marks a missing entry).
inline Innovation innovation(const GaussianState& predicted, const VectorXd& y, const LinearObservationModel& obs) {
    if (y.size() != obs.obs_dim() || obs.H.cols() != predicted.mean.size())
        throw ShapeError("innovation: observation has " + std::to_string(y.size()) + " entries, model expects " +
                         std::to_string(obs.obs_dim()));
    Innovation inn;
    for (Index i = 0; i < y.size(); ++i)
        if (!std::isnan(y(i))) inn.observed.push_back(i);
    const Index m = static_cast<Index>(inn.observed.size());
    MatrixXd h_obs(m, obs.H.cols());
    inn.residual.resize(m);
    for (Index r = 0; r < m; ++r) {
        const Index i = inn.observed[r];
        h_obs.row(r) = obs.H.row(i);
        inn.residual(r) = y(i) - obs.offset(i);
    }
    inn.residual -= h_obs * predicted.mean;
    inn.cov = h_obs * predicted.cov * h_obs.transpose();
    for (Index r = 0; r < m; ++r) inn.cov(r, r) += obs.noise_var(inn.observed[r]);
    symmetrize(inn.cov);
    return inn;
}

namespace detail {

inline Eigen::LLT<MatrixXd> factor_innovation(const MatrixXd& s, long time_index) {
    Eigen::LLT<MatrixXd> llt(s);
    if (llt.info() != Eigen::Success) throw NumericalError("innovation covariance is not positive definite", time_index);
    if (llt.rcond() < 1e-12) throw NumericalError("innovation covariance is numerically singular", time_index);
    return llt;
}

}  // namespace detail

/// log N(v; 0, S) and the per-dimension log N(v_i; 0, S_ii).
inline ObservationLogLikelihood observation_log_likelihood(const VectorXd& v, const MatrixXd& s, long time_index = -1) {
    if (s.rows() != v.size() || s.cols() != v.size()) throw ShapeError("observation_log_likelihood: shape mismatch");
    ObservationLogLikelihood ll;
    ll.marginals.resize(v.size());
    if (v.size() == 0) return ll;
    const auto llt = detail::factor_innovation(s, time_index);
    const VectorXd white = llt.matrixL().solve(v);
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    ll.joint = -0.5 * (static_cast<double>(v.size()) * kLog2Pi + log_det + white.squaredNorm());
    for (Index i = 0; i < v.size(); ++i)
        ll.marginals(i) = -0.5 * (kLog2Pi + std::log(s(i, i)) + v(i) * v(i) / s(i, i));
    return ll;
}

/// Joseph-form measurement update with a precomputed innovation.
inline GaussianState update(const GaussianState& predicted, const Innovation& inn, const LinearObservationModel& obs,
                            long time_index = -1) {
    if (inn.observed.empty()) return predicted;
    const Index m = static_cast<Index>(inn.observed.size());
    const Index n = predicted.mean.size();
    MatrixXd h_obs(m, n);
    VectorXd r_obs(m);
    for (Index r = 0; r < m; ++r) {
        h_obs.row(r) = obs.H.row(inn.observed[r]);
        r_obs(r) = obs.noise_var(inn.observed[r]);
    }
    const auto llt = detail::factor_innovation(inn.cov, time_index);
    const MatrixXd gain = llt.solve(h_obs * predicted.cov).transpose();  // P H^T S^-1
    const MatrixXd i_kh = MatrixXd::Identity(n, n) - gain * h_obs;

    GaussianState out;
    out.mean = predicted.mean + gain * inn.residual;
    out.cov = symmetrized(i_kh * predicted.cov * i_kh.transpose() + gain * r_obs.asDiagonal() * gain.transpose());
    out.last_accepted_time = predicted.last_accepted_time;
    return out;
}

inline GaussianState update(const GaussianState& predicted, const VectorXd& y, const LinearObservationModel& obs,
                            long time_index = -1) {
    return update(predicted, innovation(predicted, y, obs), obs, time_index);
}

enum class SkipRule { joint, per_dimension };

struct RobustOptions {
    bool robust = true;
    double log_rho = std::log(kDefaultRho);  // accept when log p(y_t) > log_rho
    SkipRule rule = SkipRule::joint;
};

struct FilterStepResult {
    GaussianState predicted;
    GaussianState updated;
    double log_likelihood = kNaN;  // NaN when no dimension was observed
    VectorXd marginal_log_likelihoods;  // NaN for missing dimensions
    bool accepted = false;
};

/// Streaming Kalman filter that skips the measurement update for observations whose
/// predictive likelihood falls below rho, treating them as missing. The carried state is
/// the last accepted posterior; each prediction spans back to its timestamp.
template <TransitionModel Dynamics>
class RobustFilter {
public:
    RobustFilter(Dynamics dynamics, LinearObservationModel obs, RobustOptions options = {})
        : dynamics_(std::move(dynamics)), obs_(std::move(obs)), options_(options) {
        if (obs_.H.cols() != dynamics_.state_dim()) throw ShapeError("RobustFilter: emission/state dimension mismatch");
        if (obs_.noise_var.size() != obs_.obs_dim() || obs_.offset.size() != obs_.obs_dim())
            throw ShapeError("RobustFilter: noise/offset length must equal observation dimension");
        if ((obs_.noise_var.array() <= 0.0).any()) throw ParameterError("RobustFilter: noise variances must be positive");
    }

    FilterStepResult step(double t, const VectorXd& y) {
        if (!std::isfinite(t)) throw InputError("RobustFilter: non-finite timestamp at index " + std::to_string(index_));
        if (index_ == 0) {
            state_.mean = VectorXd::Zero(dynamics_.state_dim());
            state_.cov = dynamics_.initial_cov();
            state_.last_accepted_time = t;
        } else if (!(t > last_time_)) {
            throw InputError("RobustFilter: timestamps must be strictly increasing (index " + std::to_string(index_) + ")");
        }
        const long time_index = index_++;
        last_time_ = t;

        FilterStepResult res;
        res.predicted = predict(state_, transition(t - state_.last_accepted_time));
        res.marginal_log_likelihoods = VectorXd::Constant(obs_.obs_dim(), kNaN);

        Innovation inn = innovation(res.predicted, y, obs_);
        if (inn.observed.empty()) {
            res.updated = res.predicted;
            return res;
        }
        const auto ll = observation_log_likelihood(inn.residual, inn.cov, time_index);
        res.log_likelihood = ll.joint;
        for (std::size_t r = 0; r < inn.observed.size(); ++r)
            res.marginal_log_likelihoods(inn.observed[r]) = ll.marginals(static_cast<Index>(r));

        bool accept = !options_.robust || ll.joint > options_.log_rho;
        if (options_.robust && options_.rule == SkipRule::per_dimension) {
            VectorXd masked = y;
            for (std::size_t r = 0; r < inn.observed.size(); ++r)
                if (!(ll.marginals(static_cast<Index>(r)) > options_.log_rho)) masked(inn.observed[r]) = kNaN;
            inn = innovation(res.predicted, masked, obs_);
            accept = !inn.observed.empty();
        }

        if (!accept) {
            res.updated = res.predicted;
            return res;
        }
        res.updated = update(res.predicted, inn, obs_, time_index);
        res.updated.last_accepted_time = t;
        res.accepted = true;
        state_ = res.updated;
        return res;
    }

    /// Last accepted filtering distribution.
    const GaussianState& state() const { return state_; }
    const Dynamics& dynamics() const { return dynamics_; }
    const LinearObservationModel& observation_model() const { return obs_; }
    long steps() const { return index_; }

private:
    const DiscretizedTransition& transition(double dt) {
        if (!cache_valid_ || cached_.dt != dt) {
            cached_ = dynamics_.transition(dt);
            cache_valid_ = true;
        }
        return cached_;
    }

    Dynamics dynamics_;
    LinearObservationModel obs_;
    RobustOptions options_;
    GaussianState state_;
    DiscretizedTransition cached_;
    bool cache_valid_ = false;
    long index_ = 0;
    double last_time_ = kNaN;
};

/// Runs RobustFilter over a batch. observations is D×T (one column per timestamp).
template <TransitionModel Dynamics>
std::vector<FilterStepResult> robust_filter(std::span<const double> timestamps, const MatrixXd& observations,
                                            Dynamics dynamics, LinearObservationModel obs, RobustOptions options = {}) {
    if (observations.cols() != static_cast<Index>(timestamps.size()))
        throw ShapeError("robust_filter: one observation column per timestamp required");
    RobustFilter<Dynamics> filter(std::move(dynamics), std::move(obs), options);
    std::vector<FilterStepResult> out;
    out.reserve(timestamps.size());
    for (std::size_t t = 0; t < timestamps.size(); ++t)
        out.push_back(filter.step(timestamps[t], observations.col(static_cast<Index>(t))));
    return out;
}

inline double total_log_likelihood(std::span<const FilterStepResult> steps) {
    double sum = 0.0;
    for (const auto& s : steps)
        if (!std::isnan(s.log_likelihood)) sum += s.log_likelihood;
    return sum;
}

/// Rauch–Tung–Striebel backward pass. transitions[k] maps the state at step k to step k+1.
inline std::vector<GaussianState> rts_smooth(std::span<const GaussianState> filtered,
                                             std::span<const DiscretizedTransition> transitions) {
    if (filtered.empty()) return {};
    if (transitions.size() + 1 != filtered.size())
        throw ShapeError("rts_smooth: need exactly one transition between consecutive states");
    std::vector<GaussianState> smoothed(filtered.begin(), filtered.end());
    for (std::size_t k = filtered.size() - 1; k-- > 0;) {
        const auto& f = filtered[k];
        const auto& tr = transitions[k];
        const VectorXd mean_pred = tr.A * f.mean;
        const MatrixXd cov_pred = symmetrized(tr.A * f.cov * tr.A.transpose() + tr.Q);
        Eigen::LDLT<MatrixXd> ldlt(cov_pred);
        if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-15))
            throw NumericalError("rts_smooth: predicted covariance is singular", static_cast<long>(k + 1));
        const MatrixXd gain = ldlt.solve(tr.A * f.cov).transpose();  // P A^T P_pred^-1
        smoothed[k].mean = f.mean + gain * (smoothed[k + 1].mean - mean_pred);
        smoothed[k].cov = symmetrized(f.cov + gain * (smoothed[k + 1].cov - cov_pred) * gain.transpose());
    }
    return smoothed;
}

/// Transitions between consecutive timestamps, as consumed by rts_smooth.
template <TransitionModel Dynamics>
std::vector<DiscretizedTransition> consecutive_transitions(std::span<const double> timestamps, const Dynamics& dynamics) {
    std::vector<DiscretizedTransition> out;
    if (timestamps.size() < 2) return out;
    out.reserve(timestamps.size() - 1);
    for (std::size_t k = 0; k + 1 < timestamps.size(); ++k) {
        const double dt = timestamps[k + 1] - timestamps[k];
        if (!out.empty() && out.back().dt == dt) {
            out.push_back(out.back());
        } else {
            out.push_back(dynamics.transition(dt));
        }
    }
    return out;
}

}  // namespace ssgp
