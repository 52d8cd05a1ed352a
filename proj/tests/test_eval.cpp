#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "ssgp/eval.hpp"

using namespace ssgp;

namespace {

using oracle::naive_adjusted;

std::vector<int> threshold(const std::vector<double>& s, double alpha) { return oracle::threshold_predictions(s, alpha); }

}  // namespace

TEST(RangeAdjusted, Examples) {
    const std::vector<int> labels{0, 1, 1, 0};
    const auto a = range_adjusted_metrics(std::vector<double>{0, 0, 1, 0}, labels, 0.5);
    EXPECT_EQ(point_adjust(std::vector<double>{0, 0, 1, 0}, labels, 0.5), (std::vector<int>{0, 1, 1, 0}));
    EXPECT_EQ(a.precision, 1.0);
    EXPECT_EQ(a.recall, 1.0);
    EXPECT_EQ(a.f1, 1.0);

    const auto b = range_adjusted_metrics(std::vector<double>{1, 0, 0, 0}, labels, 0.5);
    EXPECT_EQ(b.true_positives, 0);
    EXPECT_EQ(b.false_positives, 1);
    EXPECT_EQ(b.precision, 0.0);
    EXPECT_EQ(b.f1, 0.0);

    const auto c = range_adjusted_metrics(std::vector<double>{0, 0, 0, 0}, labels, 0.5);
    EXPECT_EQ(c.precision, 0.0);
    EXPECT_EQ(c.recall, 0.0);
    EXPECT_EQ(c.f1, 0.0);
}

TEST(RangeAdjusted, ThresholdIsStrict) {
    const auto r = range_adjusted_metrics(std::vector<double>{0.5, 0.5}, std::vector<int>{0, 1}, 0.5);
    EXPECT_EQ(r.true_positives + r.false_positives, 0);
}

TEST(RangeAdjusted, RangesDoNotSpanSeries) {
    const std::vector<double> s1{0, 5}, s2{0, 0};
    const std::vector<int> l1{0, 1}, l2{1, 0};
    const std::vector<LabeledScores> split{{s1, l1}, {s2, l2}};
    const auto r = range_adjusted_metrics(split, 1.0);
    EXPECT_EQ(r.true_positives, 1);
    EXPECT_EQ(r.false_negatives, 1);
    const auto joined = range_adjusted_metrics(std::vector<double>{0, 5, 0, 0}, std::vector<int>{0, 1, 1, 0}, 1.0);
    EXPECT_EQ(joined.true_positives, 2);
}

TEST(RangeAdjusted, LengthMismatchThrows) {
    EXPECT_THROW(range_adjusted_metrics(std::vector<double>{1, 2}, std::vector<int>{1}, 0.0), ShapeError);
}

TEST(BestF1Sweep, Examples) {
    const auto r = best_f1_sweep(std::vector<double>{0.1, 0.9, 0.2}, std::vector<int>{0, 1, 0});
    EXPECT_EQ(r.f1, 1.0);
    EXPECT_EQ(r.threshold, 0.2);

    const std::vector<int> labels{0, 1, 1, 0, 0, 1};
    std::vector<double> perfect(labels.begin(), labels.end());
    EXPECT_EQ(best_f1_sweep(perfect, labels).f1, 1.0);

    EXPECT_THROW(best_f1_sweep(std::vector<double>{1, 2}, std::vector<int>{0, 0}), EvaluationError);
}

TEST(BestF1Sweep, CurveCoversEveryCandidate) {
    std::vector<EvalReport> curve;
    best_f1_sweep(std::vector<double>{3, 1, 3, std::nan(""), 2}, std::vector<int>{0, 1, 0, 1, 0}, &curve);
    ASSERT_EQ(curve.size(), 4u);
    EXPECT_EQ(curve[0].threshold, 1.0);
    EXPECT_EQ(curve[2].threshold, 3.0);
    EXPECT_TRUE(std::isinf(curve[3].threshold));
    EXPECT_EQ(curve[3].true_positives + curve[3].false_positives, 0);
}

TEST(BestF1Sweep, MatchesExhaustiveOracle) {
    std::mt19937_64 gen(2024);
    for (int instance = 0; instance < 200; ++instance) {
        const auto in = oracle::random_eval_instance(gen);
        const auto candidates = oracle::candidate_thresholds(in.scores);
        const auto oracle_best = oracle::exhaustive_best_f1(in.scores, in.labels);
        const auto& best = oracle_best.counts;
        const double best_alpha = oracle_best.threshold;
        const auto r = best_f1_sweep(in.scores, in.labels);
        EXPECT_EQ(r.f1, best.f1) << instance;
        EXPECT_EQ(r.precision, best.precision) << instance;
        EXPECT_EQ(r.recall, best.recall) << instance;
        EXPECT_EQ(r.true_positives, best.tp) << instance;
        EXPECT_EQ(r.false_positives, best.fp) << instance;
        EXPECT_EQ(r.threshold, best_alpha) << instance;

        for (double alpha : candidates) {
            const auto m = range_adjusted_metrics(in.scores, in.labels, alpha);
            const auto c = naive_adjusted(threshold(in.scores, alpha), in.labels);
            EXPECT_EQ(m.true_positives, c.tp);
            EXPECT_EQ(m.false_positives, c.fp);
            EXPECT_EQ(m.false_negatives, c.fn);
            EXPECT_EQ(m.f1, c.f1);
        }
    }
}

TEST(BestF1Sweep, Properties) {
    std::mt19937_64 gen(7);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u;
    for (int instance = 0; instance < 50; ++instance) {
        std::vector<double> scores;
        std::vector<int> labels;
        for (int i = 0; i < 200; ++i) {
            labels.push_back(u(gen) < 0.1 ? 1 : 0);
            scores.push_back(z(gen) + (labels.back() ? 1.0 : 0.0));
        }
        if (std::count(labels.begin(), labels.end(), 1) == 0) labels[5] = 1;
        const auto best = best_f1_sweep(scores, labels);

        std::vector<double> transformed;
        for (double s : scores) transformed.push_back(std::exp(2.0 * s) - 3.0);
        const auto again = best_f1_sweep(transformed, labels);
        EXPECT_EQ(again.f1, best.f1);
        EXPECT_EQ(again.true_positives, best.true_positives);
        EXPECT_EQ(again.false_positives, best.false_positives);

        for (double alpha : {-1.0, 0.0, 0.7, 1.5, 2.5}) {
            const auto fixed = range_adjusted_metrics(scores, labels, alpha);
            EXPECT_GE(best.f1, fixed.f1);
            long tp = 0, pos = 0;
            for (std::size_t i = 0; i < scores.size(); ++i) {
                pos += labels[i];
                tp += labels[i] && scores[i] > alpha;
            }
            EXPECT_GE(fixed.recall, double(tp) / double(pos));
        }
    }
}

TEST(BestF1Sweep, MultiSeriesEqualsSeparatedConcatenation) {
    std::mt19937_64 gen(9);
    std::normal_distribution<double> z;
    std::vector<std::vector<double>> scores(3);
    std::vector<std::vector<int>> labels(3);
    std::vector<double> all_scores;
    std::vector<int> all_labels;
    for (int s = 0; s < 3; ++s) {
        for (int i = 0; i < 30; ++i) {
            labels[s].push_back(i >= 10 && i < 14 ? 1 : 0);
            scores[s].push_back(z(gen) + 2.0 * labels[s].back());
        }
        all_scores.insert(all_scores.end(), scores[s].begin(), scores[s].end());
        all_labels.insert(all_labels.end(), labels[s].begin(), labels[s].end());
    }
    const std::vector<LabeledScores> series{{scores[0], labels[0]}, {scores[1], labels[1]}, {scores[2], labels[2]}};
    const auto a = best_f1_sweep(series);
    const auto b = best_f1_sweep(all_scores, all_labels);  // ranges are separated by normal points here
    EXPECT_EQ(a.f1, b.f1);
    EXPECT_EQ(a.threshold, b.threshold);
}

TEST(Standardize, Examples) {
    const auto r = standardize(MatrixXd{{0.0, 2.0}}, MatrixXd{{4.0}});
    EXPECT_EQ(r.mean(0), 1.0);
    EXPECT_EQ(r.scale(0), 1.0);
    EXPECT_EQ(r.train(0, 0), -1.0);
    EXPECT_EQ(r.train(0, 1), 1.0);
    EXPECT_EQ(r.test(0, 0), 3.0);
}

TEST(Standardize, ConstantDimensionIsClampedWithWarning) {
    testing::internal::CaptureStderr();
    const auto r = standardize(MatrixXd{{5.0, 5.0, 5.0}, {1.0, 2.0, 3.0}}, MatrixXd(2, 0));
    const std::string err = testing::internal::GetCapturedStderr();
    EXPECT_NE(err.find("constant"), std::string::npos);
    EXPECT_EQ(r.scale(0), 1.0);
    EXPECT_EQ(r.train.row(0).norm(), 0.0);
    EXPECT_NEAR(r.train.row(1).squaredNorm() / 3.0, 1.0, 1e-12);
}

TEST(Standardize, MissingValuesAndErrors) {
    const auto r = standardize(MatrixXd{{0.0, std::nan(""), 2.0}}, MatrixXd{{std::nan("")}});
    EXPECT_EQ(r.mean(0), 1.0);
    EXPECT_TRUE(std::isnan(r.train(0, 1)));
    EXPECT_TRUE(std::isnan(r.test(0, 0)));
    EXPECT_THROW(standardize(MatrixXd(2, 0), MatrixXd(2, 0)), InputError);
    EXPECT_THROW(standardize(MatrixXd::Ones(2, 3), MatrixXd::Ones(3, 1)), ShapeError);
}
