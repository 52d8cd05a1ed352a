#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ssgp/data.hpp"
#include "ssgp/scoring.hpp"

using namespace ssgp;

namespace {

std::vector<KernelSpec> two_latents() {
    return {parse_kernel("matern32(lengthscale=6)"), parse_kernel("matern32(lengthscale=2) + cosine(period=10, variance=0.5)")};
}

SyntheticData sample(Index d, Index t, std::uint64_t seed, double noise = 0.05) {
    SyntheticSpec spec;
    spec.length = t;
    spec.dims = d;
    spec.seed = seed;
    spec.latents = two_latents();
    spec.noise_variance = noise;
    return gen_multivariate(spec);
}

FactorModel truth_model(const SyntheticData& data, double noise, LoadingMode mode) {
    return FactorModel::make(two_latents(), data.loading, data.offset, VectorXd::Constant(data.loading.rows(), noise), mode);
}

}  // namespace

TEST(OnlineScorer, PerLatentMatchesJointFilter) {
    for (std::uint64_t seed : {1, 2, 3}) {
        auto data = sample(4, 150, seed);
        // Spikes exercise the skip path and a fully missing row the masked path. The partial row comes
        // last: the joint filter absorbs it while the per-latent scorer only scores it.
        data.series.values(1, 40) += 6.0;
        data.series.values.col(41).array() += 4.0;
        data.series.values.col(70).setConstant(kNaN);
        data.series.values(2, 90) = kNaN;
        for (bool robust : {true, false}) {
            ScoreOptions options;
            options.robust = robust;
            const auto a = score_online(truth_model(data, 0.05, LoadingMode::orthogonal), data.series.timestamps,
                                        data.series.values, options);
            const auto b = score_online(truth_model(data, 0.05, LoadingMode::unconstrained), data.series.timestamps,
                                        data.series.values, options);
            ASSERT_EQ(a.size(), b.size());
            if (robust) {
                EXPECT_FALSE(a[41].accepted);
                EXPECT_FALSE(a[90].accepted);
            }
            for (std::size_t t = 0; t <= 90; ++t) {
                if (std::isnan(b[t].score)) {
                    EXPECT_TRUE(std::isnan(a[t].score)) << t;
                    continue;
                }
                EXPECT_NEAR(a[t].score, b[t].score, 1e-6) << seed << " " << t;
                EXPECT_LT((a[t].latent_prediction.mean - b[t].latent_prediction.mean).cwiseAbs().maxCoeff(), 1e-6) << t;
                EXPECT_LT((a[t].latent_prediction.variance - b[t].latent_prediction.variance).cwiseAbs().maxCoeff(), 1e-6);
                for (Index i = 0; i < 4; ++i) {
                    if (std::isnan(b[t].marginal_scores(i))) EXPECT_TRUE(std::isnan(a[t].marginal_scores(i)));
                    else EXPECT_NEAR(a[t].marginal_scores(i), b[t].marginal_scores(i), 1e-6);
                }
                if (t != 90) EXPECT_EQ(a[t].accepted, b[t].accepted) << t;
            }
        }
    }
}

TEST(OnlineScorer, StreamingSumEqualsBatchLikelihood) {
    const auto data = sample(5, 300, 4);
    for (auto mode : {LoadingMode::orthogonal, LoadingMode::unconstrained}) {
        const auto model = truth_model(data, 0.05, mode);
        ScoreOptions options;
        options.robust = false;
        const auto scored = score_online(model, data.series.timestamps, data.series.values, options);
        double sum = 0.0;
        for (const auto& p : scored) sum -= p.score;
        const double batch = log_likelihood(model, data.series.timestamps, data.series.values);
        EXPECT_NEAR(sum, batch, 1e-8 * std::max(1.0, std::abs(batch)));
    }
}

TEST(OnlineScorer, TrainingDataMeanScoreMatchesTrainingLikelihood) {
    const auto data = sample(6, 400, 5, 0.1);
    EmConfig config;
    config.num_latents = 2;
    config.kernels = two_latents();
    const auto model = fit_em(data.series.timestamps, data.series.values, config);
    ScoreOptions options;
    options.robust = false;
    const auto scored = score_online(model, data.series.timestamps, data.series.values, options);
    double mean = 0.0;
    for (const auto& p : scored) {
        ASSERT_TRUE(std::isfinite(p.score));
        mean += p.score / static_cast<double>(scored.size());
    }
    EXPECT_NEAR(mean, -model.training_log.back() / static_cast<double>(scored.size()), 1e-9);
}

TEST(OnlineScorer, SpikeOnQuietStreamStandsOut) {
    const Index d = 4;
    Rng rng(6);
    const auto model = FactorModel::make(two_latents(), random_orthonormal(d, 2, rng), VectorXd::LinSpaced(d, -1.0, 1.0),
                                         VectorXd::Constant(d, 1e-4), LoadingMode::orthogonal);
    const double sigma = 1e-2;
    std::vector<double> t;
    MatrixXd y(d, 200);
    for (Index i = 0; i < 200; ++i) {
        t.push_back(static_cast<double>(i));
        y.col(i) = model.offset + sigma * rng.normal_vector(d);
    }
    y(2, 150) += 10.0 * sigma;
    const auto scored = score_online(model, t, y);
    std::vector<double> scores;
    for (const auto& p : scored) scores.push_back(p.score);
    std::vector<double> sorted = scores;
    std::nth_element(sorted.begin(), sorted.begin() + 100, sorted.end());
    const double median = sorted[100];
    EXPECT_GE(scores[150] - median, 20.0);
    // Elsewhere scores sit near the entropy of the predictive distribution (slightly below it, as the
    // stream carries none of the latent variance the model allows for).
    std::vector<double> excess;
    for (std::size_t i = 20; i < scored.size(); ++i) {
        if (i == 150) continue;
        const VectorXd var = scored[i].latent_prediction.variance.array() + 1e-4;
        const double entropy = 0.5 * (var.array() * 2 * std::numbers::pi * std::numbers::e).log().sum() +
                               0.5 * static_cast<double>(d - 2) * std::log(2 * std::numbers::pi * std::numbers::e * 1e-4);
        excess.push_back(scores[i] - entropy);
    }
    std::nth_element(excess.begin(), excess.begin() + static_cast<long>(excess.size() / 2), excess.end());
    EXPECT_GT(excess[excess.size() / 2], -2.0);
    EXPECT_LT(excess[excess.size() / 2], 0.5);
}

TEST(OnlineScorer, MissingRows) {
    auto data = sample(3, 60, 7);
    data.series.values.col(10).setConstant(kNaN);
    data.series.values(0, 20) = kNaN;
    const auto scored = score_online(truth_model(data, 0.05, LoadingMode::orthogonal), data.series.timestamps,
                                     data.series.values);
    EXPECT_TRUE(std::isnan(scored[10].score));
    EXPECT_FALSE(scored[10].accepted);
    EXPECT_TRUE(std::isfinite(scored[20].score));
    EXPECT_TRUE(std::isnan(scored[20].marginal_scores(0)));
    EXPECT_TRUE(std::isfinite(scored[20].marginal_scores(1)));
    EXPECT_TRUE(std::isnan(scored[10].attribution.reconstruction_error));
}

TEST(OnlineScorer, PerDimensionRule) {
    auto data = sample(4, 80, 8);
    data.series.values(3, 50) += 5.0;
    ScoreOptions options;
    options.rule = SkipRule::per_dimension;
    const auto scored = score_online(truth_model(data, 0.05, LoadingMode::orthogonal), data.series.timestamps,
                                     data.series.values, options);
    EXPECT_TRUE(std::isfinite(scored[50].score));
    EXPECT_GT(scored[50].marginal_scores(3), 20.0);
}

TEST(OnlineScorer, RejectsBadInput) {
    const auto data = sample(3, 10, 9);
    OnlineScorer scorer(truth_model(data, 0.05, LoadingMode::orthogonal));
    EXPECT_THROW(scorer.step(0.0, VectorXd::Zero(2)), ShapeError);
    scorer.step(1.0, data.series.values.col(0));
    EXPECT_THROW(scorer.step(1.0, data.series.values.col(1)), InputError);
    EXPECT_THROW(score_online(scorer.model(), std::vector<double>{0.0, 1.0}, data.series.values), ShapeError);
}
