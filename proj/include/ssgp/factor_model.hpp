#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "ssgp/kalman.hpp"
#include "ssgp/kernel_expr.hpp"
#include "ssgp/optimize.hpp"

namespace ssgp {

enum class LoadingMode { orthogonal, unconstrained };

inline std::string to_string(LoadingMode mode) { return mode == LoadingMode::orthogonal ? "orthogonal" : "unconstrained"; }

inline LoadingMode parse_loading_mode(std::string_view text) {
    if (text == "orthogonal") return LoadingMode::orthogonal;
    if (text == "unconstrained") return LoadingMode::unconstrained;
    throw ConfigError("unknown mode '" + std::string(text) + "' (expected orthogonal or unconstrained)");
}

/// Per-dimension affine transform applied to raw observations before the model sees them.
struct Standardization {
    VectorXd mean;
    VectorXd scale;

    VectorXd apply(const VectorXd& y) const { return (y - mean).cwiseQuotient(scale); }
};

/// Gaussian process factor analysis in state-space form:
///   y_t = C z_t + d + ε_t,  ε_t ~ N(0, Ψ),  z_{k,·} ~ GP(0, kernel_k).
/// In orthogonal mode C^T C = I and Ψ = σ² I.
struct FactorModel {
    std::vector<KernelSpec> latent_specs;
    std::vector<StateSpaceKernel> latents;
    MatrixXd loading;  // C, D×K
    VectorXd offset;   // d
    VectorXd noise;    // diag(Ψ)
    LoadingMode mode = LoadingMode::orthogonal;
    std::vector<double> training_log;
    std::optional<Standardization> standardization;
    double time_scale = 1.0;  // input timestamp units per model time unit

    Index obs_dim() const { return loading.rows(); }
    Index num_latents() const { return loading.cols(); }
    double noise_variance() const { return noise.mean(); }

    /// Builds the latent kernels and checks every structural invariant.
    static FactorModel make(std::vector<KernelSpec> specs, MatrixXd loading, VectorXd offset, VectorXd noise,
                            LoadingMode mode) {
        FactorModel m;
        m.latent_specs = std::move(specs);
        for (const auto& s : m.latent_specs) m.latents.push_back(build(s));
        m.loading = std::move(loading);
        m.offset = std::move(offset);
        m.noise = std::move(noise);
        m.mode = mode;
        m.validate();
        return m;
    }

    void validate() const {
        const Index d = obs_dim(), k = num_latents();
        if (static_cast<Index>(latents.size()) != k)
            throw ShapeError("FactorModel: " + std::to_string(latents.size()) + " kernels for " + std::to_string(k) +
                             " loading columns");
        if (k > d) throw ConfigError("FactorModel: more latents (" + std::to_string(k) + ") than dimensions (" +
                                     std::to_string(d) + ")");
        if (offset.size() != d || noise.size() != d) throw ShapeError("FactorModel: offset/noise length must equal D");
        if (!(noise.array() > 0.0).all()) throw ParameterError("FactorModel: noise variances must be positive");
        if (mode == LoadingMode::orthogonal) {
            const double err = (loading.transpose() * loading - MatrixXd::Identity(k, k)).norm();
            if (err > 1e-8) throw ParameterError("FactorModel: orthogonal mode requires C^T C = I (error " +
                                                 std::to_string(err) + ")");
            if ((noise.array() != noise(0)).any())
                throw ParameterError("FactorModel: orthogonal mode requires isotropic noise");
        }
    }
};

/// The whole model as one linear-Gaussian SSM over the concatenated latent states.
struct JointStateSpace {
    BlockDynamics dynamics;
    LinearObservationModel observation;
    MatrixXd latent_readout;  // K×n, row k holds h^(k) in block k
};

inline JointStateSpace assemble_joint(const FactorModel& model) {
    JointStateSpace joint;
    joint.dynamics = BlockDynamics(model.latents);
    const Index n = joint.dynamics.state_dim();
    const Index k_count = model.num_latents();
    joint.latent_readout = MatrixXd::Zero(k_count, n);
    joint.observation.H = MatrixXd::Zero(model.obs_dim(), n);
    for (Index k = 0; k < k_count; ++k) {
        const auto& h = model.latents[static_cast<std::size_t>(k)].emission;
        const Index off = joint.dynamics.block_offset(static_cast<std::size_t>(k));
        joint.latent_readout.block(k, off, 1, h.size()) = h.transpose();
        joint.observation.H.block(0, off, model.obs_dim(), h.size()) = model.loading.col(k) * h.transpose();
    }
    joint.observation.noise_var = model.noise;
    joint.observation.offset = model.offset;
    return joint;
}

/// Smoothed moments of z_t for every time step.
struct LatentPosterior {
    MatrixXd means;              // K×T
    std::vector<MatrixXd> covs;  // T entries, K×K
    double log_likelihood = 0.0;
};

struct EStepOptions {
    int threads = 1;
};

namespace detail {

inline bool row_complete(const VectorXd& y) { return !y.hasNaN(); }

template <class Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(threads, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct SmoothedChain {
    std::vector<GaussianState> states;
    double log_likelihood = 0.0;
};

template <TransitionModel Dynamics>
SmoothedChain filter_and_smooth(std::span<const double> timestamps, const MatrixXd& observations, const Dynamics& dyn,
                                const LinearObservationModel& obs, long latent_index) {
    SmoothedChain chain;
    try {
        RobustOptions plain;
        plain.robust = false;
        const auto steps = robust_filter(timestamps, observations, dyn, obs, plain);
        std::vector<GaussianState> filtered;
        filtered.reserve(steps.size());
        for (const auto& s : steps) filtered.push_back(s.updated);
        chain.log_likelihood = total_log_likelihood(steps);
        const auto transitions = consecutive_transitions(timestamps, dyn);
        chain.states = rts_smooth(filtered, transitions);
    } catch (const NumericalError& e) {
        if (latent_index < 0) throw;
        throw NumericalError(e.what(), -1, latent_index);
    }
    return chain;
}

}  // namespace detail

/// Smoothed latent posterior. Orthogonal mode runs one independent chain per latent on the
/// projection C_k^T (y_t − d), which is a sufficient statistic for latent k when C^T C = I
/// and Ψ = σ² I; the off-subspace residual contributes a latent-free likelihood term.
/// Unconstrained mode filters the joint state space. Rows with missing entries are
/// treated as unobserved in orthogonal mode and masked per entry otherwise.
inline LatentPosterior e_step(const FactorModel& model, std::span<const double> timestamps, const MatrixXd& observations,
                              const EStepOptions& options = {}) {
    const Index d_count = model.obs_dim(), k_count = model.num_latents();
    const Index t_count = static_cast<Index>(timestamps.size());
    if (observations.rows() != d_count || observations.cols() != t_count)
        throw ShapeError("e_step: observations must be D×T with D=" + std::to_string(d_count));

    LatentPosterior post;
    post.means = MatrixXd::Zero(k_count, t_count);
    post.covs.assign(static_cast<std::size_t>(t_count), MatrixXd::Zero(k_count, k_count));

    if (model.mode == LoadingMode::unconstrained) {
        const JointStateSpace joint = assemble_joint(model);
        const auto chain = detail::filter_and_smooth(timestamps, observations, joint.dynamics, joint.observation, -1);
        for (Index t = 0; t < t_count; ++t) {
            const auto& s = chain.states[static_cast<std::size_t>(t)];
            post.means.col(t) = joint.latent_readout * s.mean;
            post.covs[static_cast<std::size_t>(t)] =
                symmetrized(joint.latent_readout * s.cov * joint.latent_readout.transpose());
        }
        post.log_likelihood = chain.log_likelihood;
        return post;
    }

    const double sigma2 = model.noise_variance();
    MatrixXd projected = MatrixXd::Constant(k_count, t_count, kNaN);
    double residual_ll = 0.0;
    for (Index t = 0; t < t_count; ++t) {
        const VectorXd y = observations.col(t);
        if (!detail::row_complete(y)) continue;
        const VectorXd centered = y - model.offset;
        projected.col(t) = model.loading.transpose() * centered;
        const double r2 = (centered - model.loading * projected.col(t)).squaredNorm();
        residual_ll += -0.5 * (static_cast<double>(d_count - k_count) * (kLog2Pi + std::log(sigma2)) + r2 / sigma2);
    }

    std::vector<double> chain_ll(static_cast<std::size_t>(k_count), 0.0);
    detail::parallel_for(static_cast<std::size_t>(k_count), options.threads, [&](std::size_t k) {
        const auto& kernel = model.latents[k];
        LinearObservationModel obs;
        obs.H = kernel.emission.transpose();
        obs.noise_var = VectorXd::Constant(1, sigma2);
        obs.offset = VectorXd::Zero(1);
        const auto chain = detail::filter_and_smooth(timestamps, projected.row(static_cast<Index>(k)), BlockDynamics(kernel),
                                                     obs, static_cast<long>(k));
        for (Index t = 0; t < t_count; ++t) {
            const auto& s = chain.states[static_cast<std::size_t>(t)];
            post.means(static_cast<Index>(k), t) = kernel.emission.dot(s.mean);
            post.covs[static_cast<std::size_t>(t)](static_cast<Index>(k), static_cast<Index>(k)) =
                kernel.emission.dot(s.cov * kernel.emission);
        }
        chain_ll[k] = chain.log_likelihood;
    });
    post.log_likelihood = residual_ll;
    for (double ll : chain_ll) post.log_likelihood += ll;  // fixed order
    return post;
}

struct MStepResult {
    MatrixXd loading;
    VectorXd offset;
    VectorXd noise;
};

namespace detail {

/// Ψ = diag(1/T Σ_t (y_t − C μ_t − d)(·)^T + C Σ_t C^T) over complete rows.
inline VectorXd noise_update(const LatentPosterior& post, const MatrixXd& observations, const MatrixXd& loading,
                             const VectorXd& offset) {
    VectorXd psi = VectorXd::Zero(observations.rows());
    double used = 0.0;
    for (Index t = 0; t < observations.cols(); ++t) {
        const VectorXd y = observations.col(t);
        if (!row_complete(y)) continue;
        const VectorXd resid = y - loading * post.means.col(t) - offset;
        psi += resid.cwiseAbs2();
        psi += (loading * post.covs[static_cast<std::size_t>(t)] * loading.transpose()).diagonal();
        used += 1.0;
    }
    return psi / used;
}

}  // namespace detail

/// Closed-form maximizer of the expected complete-data log-likelihood.
/// C and d solve their two stationarity conditions
///   C = Σ(y_t − d) μ_t^T (Σ(Σ_t + μ_t μ_t^T))^-1,   d = 1/T Σ(y_t − C μ_t)
/// simultaneously (a single solve over the augmented latent [μ_t; 1]); Ψ then uses the new C and d.
inline MStepResult m_step(const LatentPosterior& post, const MatrixXd& observations, const FactorModel& current) {
    const Index d_count = observations.rows();
    const Index k_count = post.means.rows();
    if (d_count != current.obs_dim() || post.means.cols() != observations.cols())
        throw ShapeError("m_step: posterior/observation shapes disagree");

    MatrixXd moment = MatrixXd::Zero(k_count + 1, k_count + 1);
    MatrixXd cross = MatrixXd::Zero(d_count, k_count + 1);
    double used = 0.0;
    for (Index t = 0; t < observations.cols(); ++t) {
        const VectorXd y = observations.col(t);
        if (!detail::row_complete(y)) continue;
        VectorXd aug(k_count + 1);
        aug << post.means.col(t), 1.0;
        moment += aug * aug.transpose();
        moment.topLeftCorner(k_count, k_count) += post.covs[static_cast<std::size_t>(t)];
        cross += y * aug.transpose();
        used += 1.0;
    }
    if (used < 1.0) throw InputError("m_step: no fully observed time step");

    Eigen::LLT<MatrixXd> llt(moment);
    if (llt.info() != Eigen::Success || llt.rcond() < 1e-14) {
        log::warn("m_step: singular latent second-moment matrix, adding ridge 1e-9");
        moment += 1e-9 * MatrixXd::Identity(k_count + 1, k_count + 1);
        llt.compute(moment);
        if (llt.info() != Eigen::Success) throw NumericalError("m_step: second-moment matrix is not positive definite");
    }
    const MatrixXd solution = llt.solve(cross.transpose()).transpose();  // D×(K+1)

    MStepResult out;
    out.loading = solution.leftCols(k_count);
    out.offset = solution.col(k_count);
    out.noise = detail::noise_update(post, observations, out.loading, out.offset);
    return out;
}

/// Closest matrix with orthonormal columns in Frobenius norm: U V^T from the thin SVD.
inline MatrixXd orthogonalize(const MatrixXd& c_star) {
    if (c_star.cols() > c_star.rows()) throw ShapeError("orthogonalize: more columns than rows");
    if (c_star.cols() == 0) return c_star;
    Eigen::JacobiSVD<MatrixXd> svd(c_star, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd& sv = svd.singularValues();
    const double smallest = sv(sv.size() - 1);
    if (!(smallest > 1e-12 * std::max(sv(0), 1e-300)))
        throw DegenerateLoadingError("orthogonalize: loading matrix is rank deficient", smallest);
    return svd.matrixU() * svd.matrixV().transpose();
}

/// Per-step factor-analysis likelihood Σ_t log N(y_t; d, Ψ + C K̃ C^T), K̃ = diag of the
/// latents' stationary prior variances; ignores temporal coupling.
inline double fa_likelihood(const FactorModel& model, const MatrixXd& observations) {
    VectorXd prior(model.num_latents());
    for (Index k = 0; k < prior.size(); ++k) prior(k) = prior_variance(model.latents[static_cast<std::size_t>(k)]);
    const MatrixXd cov = model.loading * prior.asDiagonal() * model.loading.transpose() +
                         MatrixXd(model.noise.asDiagonal());
    double total = 0.0;
    for (Index t = 0; t < observations.cols(); ++t) {
        const VectorXd y = observations.col(t);
        std::vector<Index> idx;
        for (Index i = 0; i < y.size(); ++i)
            if (!std::isnan(y(i))) idx.push_back(i);
        if (idx.empty()) continue;
        VectorXd v(static_cast<Index>(idx.size()));
        MatrixXd s(v.size(), v.size());
        for (Index a = 0; a < v.size(); ++a) {
            v(a) = y(idx[a]) - model.offset(idx[a]);
            for (Index b = 0; b < v.size(); ++b) s(a, b) = cov(idx[a], idx[b]);
        }
        total += observation_log_likelihood(v, s, static_cast<long>(t)).joint;
    }
    return total;
}

/// Batch log-likelihood of the full temporal model (joint Kalman filter, no robust skipping).
inline double log_likelihood(const FactorModel& model, std::span<const double> timestamps, const MatrixXd& observations) {
    const JointStateSpace joint = assemble_joint(model);
    RobustOptions plain;
    plain.robust = false;
    return total_log_likelihood(robust_filter(timestamps, observations, joint.dynamics, joint.observation, plain));
}

struct EmConfig {
    Index num_latents = 4;
    std::vector<KernelSpec> kernels;  // one per latent, or a single spec shared by all
    LoadingMode mode = LoadingMode::orthogonal;
    int max_iters = 50;
    double tol = 1e-6;
    int threads = 1;
    /// Called after each M-step with the updated model and the posterior it was fitted on.
    std::function<void(int iteration, const FactorModel&, const LatentPosterior&)> on_iteration;
};

/// Default multivariate latents: four Matérn-3/2 kernels with lengthscales 130, 200, 50, 10.
inline std::vector<KernelSpec> default_latent_kernels() {
    std::vector<KernelSpec> out;
    for (double l : {130.0, 200.0, 50.0, 10.0})
        out.push_back(parse_kernel("matern32(lengthscale=" + detail::format_param(l) + ", variance=1)"));
    return out;
}

namespace detail {

inline FactorModel initial_model(const MatrixXd& observations, const EmConfig& config, std::vector<KernelSpec> kernels) {
    const Index d_count = observations.rows(), k_count = config.num_latents;
    std::vector<Index> complete;
    for (Index t = 0; t < observations.cols(); ++t)
        if (row_complete(observations.col(t))) complete.push_back(t);
    if (complete.size() < 2) throw InputError("fit_em: need at least two fully observed time steps");

    MatrixXd data(d_count, static_cast<Index>(complete.size()));
    for (Index j = 0; j < data.cols(); ++j) data.col(j) = observations.col(complete[static_cast<std::size_t>(j)]);
    const VectorXd offset = data.rowwise().mean();
    const MatrixXd centered = data.colwise() - offset;

    Eigen::JacobiSVD<MatrixXd> svd(centered, Eigen::ComputeThinU);
    MatrixXd loading = svd.matrixU().leftCols(k_count);
    const double n = static_cast<double>(data.cols());
    if (config.mode == LoadingMode::unconstrained) {
        const VectorXd scale = (svd.singularValues().head(k_count) / std::sqrt(n)).cwiseMax(1e-6);
        loading = loading * scale.asDiagonal();
    }
    const MatrixXd basis = svd.matrixU().leftCols(k_count);
    const MatrixXd residual = centered - basis * (basis.transpose() * centered);
    VectorXd noise = (residual.cwiseAbs2().rowwise().sum() / n).cwiseMax(1e-6);
    if (config.mode == LoadingMode::orthogonal) noise = VectorXd::Constant(d_count, noise.mean());
    return FactorModel::make(std::move(kernels), loading, offset, noise, config.mode);
}

}  // namespace detail

/// Expectation maximization over (C, d, Ψ) with fixed latent kernels. Orthogonal mode projects
/// C onto the orthonormal-column set after every M-step and refits d and an isotropic σ².
inline FactorModel fit_em(std::span<const double> timestamps, const MatrixXd& observations, const EmConfig& config) {
    const Index d_count = observations.rows();
    if (timestamps.size() < 2) throw InputError("fit_em: need T >= 2");
    if (observations.cols() != static_cast<Index>(timestamps.size()))
        throw ShapeError("fit_em: one observation column per timestamp required");
    if (config.num_latents < 1) throw ConfigError("fit_em: need at least one latent");
    if (config.num_latents > d_count)
        throw ConfigError("fit_em: K=" + std::to_string(config.num_latents) + " exceeds D=" + std::to_string(d_count));

    std::vector<KernelSpec> kernels = config.kernels;
    if (kernels.empty()) kernels = default_latent_kernels();
    if (kernels.size() == 1 && config.num_latents > 1) kernels.assign(static_cast<std::size_t>(config.num_latents), kernels[0]);
    if (static_cast<Index>(kernels.size()) < config.num_latents)
        throw ConfigError("fit_em: " + std::to_string(kernels.size()) + " kernels for K=" + std::to_string(config.num_latents));
    kernels.resize(static_cast<std::size_t>(config.num_latents));

    FactorModel model = detail::initial_model(observations, config, std::move(kernels));
    const EStepOptions estep{config.threads};
    double previous = kNaN;
    bool converged = false;
    for (int iter = 0; iter < config.max_iters; ++iter) {
        const LatentPosterior post = e_step(model, timestamps, observations, estep);
        if (!std::isfinite(post.log_likelihood))
            throw NumericalError("fit_em: non-finite log-likelihood at iteration " + std::to_string(iter));
        model.training_log.push_back(post.log_likelihood);
        if (iter > 0 && std::abs(post.log_likelihood - previous) <= config.tol * std::max(std::abs(previous), 1.0)) {
            converged = true;
            break;
        }
        previous = post.log_likelihood;

        MStepResult next = m_step(post, observations, model);
        if (model.mode == LoadingMode::orthogonal) {
            next.loading = orthogonalize(next.loading);
            VectorXd offset = VectorXd::Zero(d_count);
            double used = 0.0;
            for (Index t = 0; t < observations.cols(); ++t) {
                if (!detail::row_complete(observations.col(t))) continue;
                offset += observations.col(t) - next.loading * post.means.col(t);
                used += 1.0;
            }
            next.offset = offset / used;
            const VectorXd psi = detail::noise_update(post, observations, next.loading, next.offset);
            next.noise = VectorXd::Constant(d_count, psi.mean());
        }
        model.loading = std::move(next.loading);
        model.offset = std::move(next.offset);
        model.noise = next.noise.cwiseMax(1e-12);
        if (config.on_iteration) config.on_iteration(iter, model, post);
    }
    // The log ends with the likelihood of the returned parameters.
    if (!converged && config.max_iters > 0) model.training_log.push_back(log_likelihood(model, timestamps, observations));
    return model;
}

struct UnivariateFitOptions {
    int max_outer = 20;
    double initial_noise = 0.1;
};

struct UnivariateFit {
    FactorModel model;
    double initial_log_likelihood = kNaN;
    double final_log_likelihood = kNaN;
    int iterations = 0;
};

/// Fits kernel parameters and noise variance of a univariate ssGP by maximizing the Kalman
/// filter marginal likelihood in log-parameter space (quasi-Newton, finite-difference gradients).
/// max_outer = 0 keeps the given parameters.
inline UnivariateFit fit_univariate(std::span<const double> timestamps, const VectorXd& y, const KernelSpec& spec,
                                    const UnivariateFitOptions& options = {}) {
    if (static_cast<Index>(timestamps.size()) != y.size()) throw ShapeError("fit_univariate: length mismatch");
    if (timestamps.size() < 2) throw InputError("fit_univariate: need at least two points");
    if (!(options.initial_noise > 0.0)) throw ParameterError("fit_univariate: initial noise must be positive");
    const MatrixXd observations = y.transpose();

    auto evaluate = [&](const VectorXd& log_params) {
        const std::vector<double> values(log_params.data(), log_params.data() + log_params.size() - 1);
        std::vector<double> natural(values.size());
        std::transform(values.begin(), values.end(), natural.begin(), [](double v) { return std::exp(v); });
        try {
            const StateSpaceKernel kernel = build(with_parameters(spec, natural));
            LinearObservationModel obs{kernel.emission.transpose(),
                                       VectorXd::Constant(1, std::exp(log_params(log_params.size() - 1))),
                                       VectorXd::Zero(1)};
            RobustOptions plain;
            plain.robust = false;
            return total_log_likelihood(robust_filter(timestamps, observations, BlockDynamics(kernel), obs, plain));
        } catch (const Error&) {
            return -std::numeric_limits<double>::infinity();
        }
    };

    const std::vector<double> initial = parameters(spec);
    VectorXd x0(static_cast<Index>(initial.size()) + 1);
    for (std::size_t i = 0; i < initial.size(); ++i) {
        if (!(initial[i] > 0.0)) throw ParameterError("fit_univariate: kernel parameters must be positive");
        x0(static_cast<Index>(i)) = std::log(initial[i]);
    }
    x0(x0.size() - 1) = std::log(options.initial_noise);

    UnivariateFit fit;
    fit.initial_log_likelihood = evaluate(x0);
    VectorXd best = x0;
    fit.final_log_likelihood = fit.initial_log_likelihood;
    if (options.max_outer > 0) {
        BfgsOptions bfgs;
        bfgs.max_iters = options.max_outer;
        const auto res = bfgs_minimize([&](const VectorXd& x) { return -evaluate(x); }, x0, bfgs);
        if (std::isfinite(res.value) && -res.value >= fit.initial_log_likelihood) {
            best = res.x;
            fit.final_log_likelihood = -res.value;
        }
        fit.iterations = res.iterations;
    }

    KernelSpec fitted = spec;
    double noise = options.initial_noise;
    if (best != x0) {  // keep the caller's values bit-exact when nothing moved
        std::vector<double> natural(static_cast<std::size_t>(best.size() - 1));
        for (std::size_t i = 0; i < natural.size(); ++i) natural[i] = std::exp(best(static_cast<Index>(i)));
        fitted = with_parameters(spec, natural);
        noise = std::exp(best(best.size() - 1));
    }
    fit.model = FactorModel::make({fitted}, MatrixXd::Ones(1, 1), VectorXd::Zero(1), VectorXd::Constant(1, noise),
                                  LoadingMode::orthogonal);
    fit.model.training_log = {fit.initial_log_likelihood, fit.final_log_likelihood};
    return fit;
}

}  // namespace ssgp
