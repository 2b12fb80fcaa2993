#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "omem/geometry.hpp"
#include "omem/retrieval.hpp"

namespace omem {

/// One query's outcome: the (optional) predicted track with its retrieval
/// score, against the annotated ground truth.
struct QueryEvaluation {
    std::int64_t query_id = 0;
    std::optional<ResponseTrack> prediction;
    double score = 0.0;
    ResponseTrack ground_truth;
};

/// All percentages live in [0, 100].
struct MetricsReport {
    double tap25 = 0.0;
    double stap25 = 0.0;
    double success = 0.0;
    std::uint64_t mean_size_bytes = 0;
    double mean_retrieval_ops = 0.0;
    double mean_retrieval_time_s = 0.0;  // timing; excluded from digests
};

inline double track_temporal_iou(const ResponseTrack& a, const ResponseTrack& b) {
    return temporal_iou(a.interval(), b.interval());
}

using TrackOverlapFn = std::function<double(const ResponseTrack&, const ResponseTrack&)>;

/// Fraction of queries whose prediction reaches a 0.05 tube IoU with the
/// ground truth. Missing predictions count as failures.
inline double success_rate(const std::vector<QueryEvaluation>& evals) {
    if (evals.empty()) throw std::invalid_argument("success_rate: no evaluations");
    std::size_t hits = 0;
    for (const auto& e : evals) {
        if (e.prediction && tube_iou(*e.prediction, e.ground_truth) >= 0.05) ++hits;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(evals.size());
}

/// Detection-style average precision degenerated to one prediction per
/// query: rank by descending score (absent predictions last), count a
/// prediction as a true positive iff the overlap reaches the threshold,
/// and average precision-at-hit over the query count. Rank-only: any
/// strictly monotone rescoring leaves the value unchanged.
inline double average_precision_at(const std::vector<QueryEvaluation>& evals,
                                   const TrackOverlapFn& overlap, double threshold = 0.25) {
    if (evals.empty()) throw std::invalid_argument("average_precision_at: no evaluations");
    std::vector<std::size_t> order(evals.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const bool pa = evals[a].prediction.has_value();
        const bool pb = evals[b].prediction.has_value();
        if (pa != pb) return pa;
        return evals[a].score > evals[b].score;
    });
    double sum = 0.0;
    std::size_t true_positives = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const QueryEvaluation& e = evals[order[rank]];
        if (!e.prediction) continue;
        if (overlap(*e.prediction, e.ground_truth) >= threshold) {
            ++true_positives;
            sum += static_cast<double>(true_positives) / static_cast<double>(rank + 1);
        }
    }
    return 100.0 * sum / static_cast<double>(evals.size());
}

inline double tap25(const std::vector<QueryEvaluation>& evals) {
    return average_precision_at(evals, track_temporal_iou, 0.25);
}

inline double stap25(const std::vector<QueryEvaluation>& evals) {
    return average_precision_at(evals, tube_iou, 0.25);
}

/// Assembles the full report for one run: localization quality from the
/// evaluations, storage from the end-of-population memory size, and
/// retrieval cost averaged over the executed queries.
inline MetricsReport evaluate_run(const std::vector<QueryEvaluation>& evals,
                                  std::uint64_t final_size_bytes,
                                  const std::vector<RetrievalResult>& results) {
    MetricsReport report;
    report.tap25 = tap25(evals);
    report.stap25 = stap25(evals);
    report.success = success_rate(evals);
    report.mean_size_bytes = final_size_bytes;
    if (!results.empty()) {
        double ops = 0.0;
        double secs = 0.0;
        for (const auto& r : results) {
            ops += static_cast<double>(r.similarity_ops);
            secs += r.elapsed_seconds;
        }
        report.mean_retrieval_ops = ops / static_cast<double>(results.size());
        report.mean_retrieval_time_s = secs / static_cast<double>(results.size());
    }
    return report;
}

}  // namespace omem
