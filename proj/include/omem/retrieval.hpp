#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "omem/feature.hpp"
#include "omem/memory.hpp"

namespace omem {

/// Feature extraction stand-in. Deterministic for identical input.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual FeatureVector embed(const FeatureVector& content) const = 0;
};

/// The simulated world already hands out latent feature vectors, so the
/// default extractor is the identity.
class IdentityEmbedder final : public Embedder {
public:
    FeatureVector embed(const FeatureVector& content) const override { return content; }
};

class SimilarityFn {
public:
    virtual ~SimilarityFn() = default;
    /// Result must lie in [0, 1], with score(a, a) = 1 for non-degenerate a.
    virtual double score(const FeatureVector& a, const FeatureVector& b) const = 0;
};

/// Cosine similarity rescaled from [-1, 1] onto [0, 1]. Zero vectors have
/// no direction and are rejected.
inline double cosine_unit_similarity(const FeatureVector& a, const FeatureVector& b) {
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0)
        throw std::invalid_argument("cosine_unit_similarity: zero vector");
    const double cosine = dot(a, b) / (na * nb);
    return std::clamp(0.5 * (1.0 + cosine), 0.0, 1.0);
}

class CosineUnitSimilarity final : public SimilarityFn {
public:
    double score(const FeatureVector& a, const FeatureVector& b) const override {
        return cosine_unit_similarity(a, b);
    }
};

struct RetrievalResult {
    std::optional<ObjectId> object_id;
    double score = 0.0;                  // best per-object mean similarity
    std::optional<ResponseTrack> track;  // present iff object_id present
    std::uint64_t similarity_ops = 0;    // number of SimilarityFn calls made
    double elapsed_seconds = 0.0;        // wall clock; excluded from digests
};

/// A query scheduled at stream time t.
struct QueryInput {
    std::int64_t query_id = 0;
    FrameIndex t = 0;
    FeatureVector content;
};

/// Matches a query against every retained (relevant) patch, averages the
/// similarities per object, and returns the argmax object's most recent
/// contiguous segment when its mean strictly exceeds the threshold.
/// Operates on the snapshot alone; the stream is never consulted. Ties in
/// the mean resolve to the lowest object id.
inline RetrievalResult localize(const FeatureVector& query, const MemorySnapshot& snapshot,
                                const Embedder& embedder, const SimilarityFn& similarity,
                                double match_threshold = 0.5) {
    const auto started = std::chrono::steady_clock::now();
    const FeatureVector query_features = embedder.embed(query);

    RetrievalResult result;
    std::optional<ObjectId> best_id;
    double best_mean = 0.0;
    for (const auto& [id, entry] : snapshot.entries()) {
        double sum = 0.0;
        std::uint64_t count = 0;
        for (const ObjectRecord& rec : entry.records) {
            if (!rec.relevant) continue;
            sum += similarity.score(query_features, embedder.embed(rec.patch->features));
            ++count;
        }
        if (count == 0) continue;  // nothing retrievable for this object
        const double mean = sum / static_cast<double>(count);
        result.similarity_ops += count;
        if (!best_id || mean > best_mean) {
            best_id = id;
            best_mean = mean;
        }
    }

    result.score = best_id ? best_mean : 0.0;
    if (best_id && best_mean > match_threshold) {
        result.object_id = best_id;
        result.track = snapshot.latest_segment(*best_id);
    }
    result.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

}  // namespace omem
