#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "ssgp/linalg.hpp"

namespace ssgp {

struct EvalReport {
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long true_positives = 0;
    long false_positives = 0;
    long false_negatives = 0;
};

/// One labeled score sequence; anomaly ranges never span two sequences.
struct LabeledScores {
    std::span<const double> scores;
    std::span<const int> labels;
};

namespace detail {

inline void finalize(EvalReport& r) {
    const long flagged = r.true_positives + r.false_positives;
    const long positives = r.true_positives + r.false_negatives;
    r.precision = flagged > 0 ? static_cast<double>(r.true_positives) / static_cast<double>(flagged) : 0.0;
    r.recall = positives > 0 ? static_cast<double>(r.true_positives) / static_cast<double>(positives) : 0.0;
    r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
}

inline void check_lengths(const LabeledScores& s) {
    if (s.scores.size() != s.labels.size())
        throw ShapeError("evaluation: " + std::to_string(s.scores.size()) + " scores vs " + std::to_string(s.labels.size()) +
                         " labels");
}

// NaN scores (unobserved points) are never flagged.
inline bool flagged(double score, double threshold) { return score > threshold; }

}  // namespace detail

/// Point-adjusted predictions: any detection inside a labeled range marks the whole range.
inline std::vector<int> point_adjust(std::span<const double> scores, std::span<const int> labels, double threshold) {
    detail::check_lengths({scores, labels});
    std::vector<int> pred(scores.size());
    for (std::size_t t = 0; t < scores.size(); ++t) pred[t] = detail::flagged(scores[t], threshold) ? 1 : 0;
    for (std::size_t start = 0; start < labels.size();) {
        if (labels[start] != 1) {
            ++start;
            continue;
        }
        std::size_t end = start;
        bool hit = false;
        for (; end < labels.size() && labels[end] == 1; ++end) hit = hit || pred[end] == 1;
        if (hit) std::fill(pred.begin() + static_cast<long>(start), pred.begin() + static_cast<long>(end), 1);
        start = end;
    }
    return pred;
}

inline EvalReport range_adjusted_metrics(std::span<const LabeledScores> series, double threshold) {
    EvalReport r;
    r.threshold = threshold;
    for (const auto& s : series) {
        const auto pred = point_adjust(s.scores, s.labels, threshold);
        for (std::size_t t = 0; t < pred.size(); ++t) {
            if (pred[t] == 1 && s.labels[t] == 1) ++r.true_positives;
            if (pred[t] == 1 && s.labels[t] != 1) ++r.false_positives;
            if (pred[t] == 0 && s.labels[t] == 1) ++r.false_negatives;
        }
    }
    detail::finalize(r);
    return r;
}

/// Precision/recall/F1 of the point-adjusted predictions I[s_t > threshold].
inline EvalReport range_adjusted_metrics(std::span<const double> scores, std::span<const int> labels, double threshold) {
    const LabeledScores one{scores, labels};
    return range_adjusted_metrics(std::span<const LabeledScores>(&one, 1), threshold);
}

/// Evaluates every unique score (strict threshold) plus +inf and returns the best F1;
/// ties go to higher precision, then to the lower threshold.
/// Runs in O(N log N) using per-range maxima instead of re-adjusting for every threshold.
inline EvalReport best_f1_sweep(std::span<const LabeledScores> series, std::vector<EvalReport>* curve = nullptr) {
    std::vector<double> range_max;
    std::vector<long> range_len;
    std::vector<double> normal;
    std::vector<double> candidates;
    long positives = 0;
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    for (const auto& s : series) {
        detail::check_lengths(s);
        for (std::size_t t = 0; t < s.scores.size();) {
            const double v = std::isnan(s.scores[t]) ? kNegInf : s.scores[t];
            if (!std::isnan(s.scores[t])) candidates.push_back(s.scores[t]);
            if (s.labels[t] != 1) {
                normal.push_back(v);
                ++t;
                continue;
            }
            double mx = kNegInf;
            long len = 0;
            while (t < s.scores.size() && s.labels[t] == 1) {
                if (!std::isnan(s.scores[t])) {
                    mx = std::max(mx, s.scores[t]);
                    candidates.push_back(s.scores[t]);
                }
                ++len;
                ++t;
            }
            range_max.push_back(mx);
            range_len.push_back(len);
            positives += len;
        }
    }
    if (positives == 0) throw EvaluationError("best_f1_sweep: no positive labels, recall is undefined");

    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    candidates.push_back(std::numeric_limits<double>::infinity());
    std::sort(normal.begin(), normal.end());

    std::vector<std::size_t> order(range_max.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return range_max[a] < range_max[b]; });
    std::vector<double> sorted_max(order.size());
    std::vector<long> suffix_len(order.size() + 1, 0);  // total length of ranges at sorted index >= i
    for (std::size_t i = 0; i < order.size(); ++i) sorted_max[i] = range_max[order[i]];
    for (std::size_t i = order.size(); i-- > 0;) suffix_len[i] = suffix_len[i + 1] + range_len[order[i]];

    EvalReport best;
    bool have_best = false;
    if (curve) curve->clear();
    for (double alpha : candidates) {
        EvalReport r;
        r.threshold = alpha;
        const auto first_hit = std::upper_bound(sorted_max.begin(), sorted_max.end(), alpha) - sorted_max.begin();
        r.true_positives = suffix_len[static_cast<std::size_t>(first_hit)];
        r.false_negatives = positives - r.true_positives;
        r.false_positives = static_cast<long>(normal.end() - std::upper_bound(normal.begin(), normal.end(), alpha));
        detail::finalize(r);
        if (curve) curve->push_back(r);
        if (!have_best || r.f1 > best.f1 || (r.f1 == best.f1 && r.precision > best.precision)) {
            best = r;
            have_best = true;
        }
    }
    return best;
}

inline EvalReport best_f1_sweep(std::span<const double> scores, std::span<const int> labels,
                                std::vector<EvalReport>* curve = nullptr) {
    const LabeledScores one{scores, labels};
    return best_f1_sweep(std::span<const LabeledScores>(&one, 1), curve);
}

struct StandardizeResult {
    MatrixXd train;
    MatrixXd test;
    VectorXd mean;
    VectorXd scale;
};

/// Per-dimension zero-mean/unit-variance transform estimated on train (D×T, NaN = missing)
/// and applied to both sequences. Constant dimensions keep scale 1.
inline StandardizeResult standardize(const MatrixXd& train, const MatrixXd& test) {
    if (train.cols() == 0) throw InputError("standardize: empty training sequence");
    if (test.size() > 0 && test.rows() != train.rows()) throw ShapeError("standardize: train/test dimension mismatch");
    StandardizeResult out;
    out.mean.resize(train.rows());
    out.scale.resize(train.rows());
    for (Index d = 0; d < train.rows(); ++d) {
        double sum = 0.0, count = 0.0;
        for (Index t = 0; t < train.cols(); ++t)
            if (!std::isnan(train(d, t))) {
                sum += train(d, t);
                count += 1.0;
            }
        if (count == 0.0) throw InputError("standardize: dimension " + std::to_string(d) + " has no training values");
        const double mean = sum / count;
        double ss = 0.0;
        for (Index t = 0; t < train.cols(); ++t)
            if (!std::isnan(train(d, t))) ss += (train(d, t) - mean) * (train(d, t) - mean);
        double scale = std::sqrt(ss / count);
        if (!(scale > 1e-12)) {
            log::warn("standardize: dimension " + std::to_string(d) + " is constant in training data, scale clamped to 1");
            scale = 1.0;
        }
        out.mean(d) = mean;
        out.scale(d) = scale;
    }
    out.train = (train.colwise() - out.mean).array().colwise() / out.scale.array();
    if (test.size() > 0) out.test = (test.colwise() - out.mean).array().colwise() / out.scale.array();
    else out.test = MatrixXd(train.rows(), 0);
    return out;
}

}  // namespace ssgp
