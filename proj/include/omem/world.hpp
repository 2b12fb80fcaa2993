#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "omem/digest.hpp"
#include "omem/geometry.hpp"
#include "omem/population.hpp"
#include "omem/retrieval.hpp"
#include "omem/rng.hpp"

namespace omem {

struct WorldConfig {
    std::int64_t object_count = 10;
    FrameIndex frames = 600;
    double frame_width = 1280.0;
    double frame_height = 960.0;
    std::size_t appearance_dim = 16;

    /// orthogonal: appearance vectors are signed one-hot axes (pairwise
    /// cosine exactly 0), so an unrelated object can never clear a strict
    /// 0.5 rescaled-cosine threshold. Requires appearance_dim >= object
    /// count. gaussian: unit-normalized iid normals.
    enum class AppearanceMode { orthogonal, gaussian };
    AppearanceMode appearance_mode = AppearanceMode::orthogonal;

    std::int64_t segments_min = 1;
    std::int64_t segments_max = 3;
    FrameIndex segment_len_min = 20;
    FrameIndex segment_len_max = 60;
    FrameIndex gap_min = 3;
    FrameIndex gap_max = 40;
    double motion_sigma = 2.0;  // per-frame random-walk step of box centers, px
    double distinctiveness_lo = 0.55;
    double distinctiveness_hi = 0.95;

    void validate() const {
        if (object_count < 0) throw std::invalid_argument("world: negative object count");
        if (frames <= 0) throw std::invalid_argument("world: stream must have frames");
        if (frame_width <= 0.0 || frame_height <= 0.0)
            throw std::invalid_argument("world: non-positive frame size");
        if (appearance_dim == 0) throw std::invalid_argument("world: zero appearance dim");
        if (appearance_mode == AppearanceMode::orthogonal &&
            static_cast<std::int64_t>(appearance_dim) < object_count)
            throw std::invalid_argument("world: orthogonal appearance needs dim >= object count");
        if (segments_min < 1 || segments_max < segments_min)
            throw std::invalid_argument("world: bad segment count range");
        if (segment_len_min < 1 || segment_len_max < segment_len_min)
            throw std::invalid_argument("world: bad segment length range");
        if (segment_len_min > frames)
            throw std::invalid_argument("world: segment length exceeds stream");
        if (gap_min < 1 || gap_max < gap_min)
            throw std::invalid_argument("world: bad gap range (gaps must break contiguity)");
        if (motion_sigma < 0.0) throw std::invalid_argument("world: negative motion sigma");
        if (distinctiveness_lo < 0.0 || distinctiveness_hi > 1.0 ||
            distinctiveness_hi < distinctiveness_lo)
            throw std::invalid_argument("world: bad distinctiveness range");
    }
};

struct VisibilitySegment {
    FrameIndex start = 0;
    std::vector<BoundingBox> boxes;  // one per frame from start

    FrameIndex end() const { return start + static_cast<FrameIndex>(boxes.size()) - 1; }
};

struct WorldObject {
    std::int64_t gt_id = 0;
    FeatureVector appearance;
    double distinctiveness = 1.0;
    std::vector<VisibilitySegment> segments;  // ordered, non-overlapping

    FrameIndex first_visible() const { return segments.front().start; }

    const VisibilitySegment* segment_at(FrameIndex t) const {
        for (const auto& seg : segments) {
            if (t >= seg.start && t <= seg.end()) return &seg;
        }
        return nullptr;
    }

    std::optional<BoundingBox> box_at(FrameIndex t) const {
        if (const VisibilitySegment* seg = segment_at(t))
            return seg->boxes[static_cast<std::size_t>(t - seg->start)];
        return std::nullopt;
    }
};

class World;

/// Sequential view over a world's frames with an access audit: the engine
/// gets each observation exactly once and has no way back.
class WorldStream final : public FrameStream {
public:
    WorldStream(const World& world, FrameIndex frame_limit);
    std::optional<FrameObservation> next() override;
    const std::vector<std::uint32_t>& access_counts() const { return counts_; }

private:
    const World* world_;
    FrameIndex limit_;
    FrameIndex cursor_ = 0;
    std::vector<std::uint32_t> counts_;
};

/// Seedable synthetic ground truth: objects with latent appearance
/// vectors, visibility segments, and in-bounds box trajectories. Stands in
/// for real footage; pixels are represented only by per-frame digests.
class World {
public:
    WorldConfig config;
    std::uint64_t seed = 0;
    std::vector<WorldObject> objects;

    FrameIndex frames() const { return config.frames; }

    std::uint64_t frame_digest(FrameIndex t) const {
        return fnv1a64_mix(seed, static_cast<std::uint64_t>(t));
    }

    FrameObservation observation(FrameIndex t) const {
        FrameObservation obs;
        obs.t = t;
        obs.frame_width = config.frame_width;
        obs.frame_height = config.frame_height;
        obs.frame_digest = frame_digest(t);
        for (const WorldObject& obj : objects) {
            if (const VisibilitySegment* seg = obj.segment_at(t)) {
                obs.visible.push_back({obj.gt_id, seg->boxes[static_cast<std::size_t>(t - seg->start)],
                                       obj.appearance, obj.distinctiveness, seg->start});
            }
        }
        return obs;
    }

    WorldStream stream(FrameIndex frame_limit = -1) const {
        return WorldStream(*this, frame_limit < 0 ? frames() : frame_limit);
    }

    const WorldObject* find_object(std::int64_t gt_id) const {
        for (const auto& obj : objects)
            if (obj.gt_id == gt_id) return &obj;
        return nullptr;
    }

    /// Keeps only the first `frame_limit` frames, clipping segments and
    /// dropping objects that never appear in the prefix.
    World truncated(FrameIndex frame_limit) const {
        if (frame_limit <= 0 || frame_limit > frames())
            throw std::invalid_argument("truncated: limit outside stream");
        World out;
        out.config = config;
        out.config.frames = frame_limit;
        out.seed = seed;
        for (const WorldObject& obj : objects) {
            WorldObject clipped;
            clipped.gt_id = obj.gt_id;
            clipped.appearance = obj.appearance;
            clipped.distinctiveness = obj.distinctiveness;
            for (const auto& seg : obj.segments) {
                if (seg.start >= frame_limit) break;
                VisibilitySegment s;
                s.start = seg.start;
                const FrameIndex len = std::min<FrameIndex>(
                    static_cast<FrameIndex>(seg.boxes.size()), frame_limit - seg.start);
                s.boxes.assign(seg.boxes.begin(), seg.boxes.begin() + len);
                clipped.segments.push_back(std::move(s));
            }
            if (!clipped.segments.empty()) out.objects.push_back(std::move(clipped));
        }
        return out;
    }

    /// Structural invariants: in-bounds boxes, ordered non-overlapping
    /// segments separated by real gaps. Empty vector means clean.
    std::vector<std::string> audit() const {
        std::vector<std::string> issues;
        for (const WorldObject& obj : objects) {
            if (obj.segments.empty()) {
                issues.push_back("object " + std::to_string(obj.gt_id) + ": never visible");
                continue;
            }
            FrameIndex prev_end = -2;
            for (const auto& seg : obj.segments) {
                if (seg.boxes.empty()) {
                    issues.push_back("object " + std::to_string(obj.gt_id) + ": empty segment");
                    continue;
                }
                if (seg.start <= prev_end + 1)
                    issues.push_back("object " + std::to_string(obj.gt_id) + ": segments touch or overlap");
                prev_end = seg.end();
                if (seg.end() >= frames())
                    issues.push_back("object " + std::to_string(obj.gt_id) + ": segment beyond stream");
                for (const BoundingBox& box : seg.boxes) {
                    if (box.x < 0.0 || box.y < 0.0 || box.right() > config.frame_width ||
                        box.bottom() > config.frame_height)
                        issues.push_back("object " + std::to_string(obj.gt_id) + ": box out of bounds");
                }
            }
        }
        return issues;
    }
};

inline WorldStream::WorldStream(const World& world, FrameIndex frame_limit)
    : world_(&world), limit_(frame_limit), counts_(static_cast<std::size_t>(frame_limit), 0) {}

inline std::optional<FrameObservation> WorldStream::next() {
    if (cursor_ >= limit_) return std::nullopt;
    counts_[static_cast<std::size_t>(cursor_)] += 1;
    return world_->observation(cursor_++);
}

namespace detail {

inline FeatureVector orthogonal_appearance(std::size_t dim, std::size_t axis, double sign) {
    std::vector<double> v(dim, 0.0);
    v[axis] = sign;
    return FeatureVector(std::move(v));
}

inline FeatureVector gaussian_appearance(std::size_t dim, SeededRng& rng) {
    std::vector<double> v(dim);
    double n = 0.0;
    while (n == 0.0) {
        for (auto& x : v) x = rng.normal(0.0, 1.0);
        n = 0.0;
        for (double x : v) n += x * x;
    }
    n = std::sqrt(n);
    for (auto& x : v) x /= n;
    return FeatureVector(std::move(v));
}

}  // namespace detail

/// Deterministic world builder. Objects live in disjoint grid cells so
/// ground-truth boxes of different instances never overlap; cross-object
/// ambiguity is injected by the noise models, not by the geometry.
inline World generate_world(const WorldConfig& config, std::uint64_t seed) {
    config.validate();
    World world;
    world.config = config;
    world.seed = seed;

    SeededRng root(seed);
    SeededRng layout_rng = root.fork(1);
    SeededRng schedule_rng = root.fork(2);
    SeededRng motion_rng = root.fork(3);
    SeededRng appearance_rng = root.fork(4);

    const std::int64_t n = config.object_count;
    if (n == 0) return world;

    const auto cols = static_cast<std::int64_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    const auto rows = (n + cols - 1) / cols;
    const double cell_w = config.frame_width / static_cast<double>(cols);
    const double cell_h = config.frame_height / static_cast<double>(rows);

    // Axis assignment for orthogonal appearances: shuffled so ids do not
    // trivially equal axes.
    std::vector<std::size_t> axes(config.appearance_dim);
    for (std::size_t i = 0; i < axes.size(); ++i) axes[i] = i;
    for (std::size_t i = axes.size(); i > 1; --i)
        std::swap(axes[i - 1], axes[static_cast<std::size_t>(
                                   appearance_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);

    for (std::int64_t i = 0; i < n; ++i) {
        WorldObject obj;
        obj.gt_id = i;
        if (config.appearance_mode == WorldConfig::AppearanceMode::orthogonal) {
            const double sign = appearance_rng.bernoulli(0.5) ? 1.0 : -1.0;
            obj.appearance = detail::orthogonal_appearance(config.appearance_dim,
                                                           axes[static_cast<std::size_t>(i)], sign);
        } else {
            obj.appearance = detail::gaussian_appearance(config.appearance_dim, appearance_rng);
        }
        obj.distinctiveness =
            appearance_rng.uniform(config.distinctiveness_lo, config.distinctiveness_hi);

        // Home cell and box extent.
        const double cell_x = static_cast<double>(i % cols) * cell_w;
        const double cell_y = static_cast<double>(i / cols) * cell_h;
        const double bw = layout_rng.uniform(0.15, 0.3) * cell_w;
        const double bh = layout_rng.uniform(0.15, 0.3) * cell_h;
        double cx = cell_x + layout_rng.uniform(bw / 2.0, cell_w - bw / 2.0);
        double cy = cell_y + layout_rng.uniform(bh / 2.0, cell_h - bh / 2.0);

        // Visibility schedule.
        const std::int64_t segment_count =
            schedule_rng.uniform_int(config.segments_min, config.segments_max);
        FrameIndex cursor = schedule_rng.uniform_int(
            0, std::max<FrameIndex>(0, std::min(config.gap_max, config.frames - config.segment_len_min)));
        for (std::int64_t s = 0; s < segment_count && cursor < config.frames; ++s) {
            FrameIndex len = schedule_rng.uniform_int(config.segment_len_min, config.segment_len_max);
            len = std::min<FrameIndex>(len, config.frames - cursor);
            if (len <= 0) break;
            VisibilitySegment seg;
            seg.start = cursor;
            for (FrameIndex f = 0; f < len; ++f) {
                cx = std::clamp(cx + motion_rng.normal(0.0, config.motion_sigma),
                                cell_x + bw / 2.0, cell_x + cell_w - bw / 2.0);
                cy = std::clamp(cy + motion_rng.normal(0.0, config.motion_sigma),
                                cell_y + bh / 2.0, cell_y + cell_h - bh / 2.0);
                seg.boxes.emplace_back(cx - bw / 2.0, cy - bh / 2.0, bw, bh);
            }
            obj.segments.push_back(std::move(seg));
            cursor += len + schedule_rng.uniform_int(config.gap_min, config.gap_max);
        }
        if (obj.segments.empty()) {
            // Clamped schedules always leave room for one minimal segment.
            throw std::logic_error("world generation produced an invisible object");
        }
        world.objects.push_back(std::move(obj));
    }
    return world;
}

/// The spatio-temporal position of an object's last appearance at or
/// before t: its visible frames up to t, walked back from the most recent
/// one while contiguous. A query landing mid-segment truncates that
/// segment at t.
inline std::optional<ResponseTrack> ground_truth_track(const World& world, std::int64_t gt_id,
                                                       FrameIndex t) {
    const WorldObject* obj = world.find_object(gt_id);
    if (!obj) return std::nullopt;
    const VisibilitySegment* last = nullptr;
    for (const auto& seg : obj->segments) {
        if (seg.start > t) break;
        last = &seg;
    }
    if (!last) return std::nullopt;
    const FrameIndex end = std::min(t, last->end());
    std::vector<TrackEntry> entries;
    for (FrameIndex f = last->start; f <= end; ++f)
        entries.push_back({f, last->boxes[static_cast<std::size_t>(f - last->start)]});
    return ResponseTrack(std::move(entries));
}

struct QuerySample {
    std::int64_t query_id = 0;
    std::int64_t gt_object_id = 0;
    FrameIndex t = 0;            // when the query is asked
    FeatureVector content;       // appearance plus embedder noise
    ResponseTrack ground_truth;  // last appearance at or before t

    QuerySample(std::int64_t qid, std::int64_t gt, FrameIndex when, FeatureVector c,
                ResponseTrack track)
        : query_id(qid), gt_object_id(gt), t(when), content(std::move(c)),
          ground_truth(std::move(track)) {}
};

/// Draws (object, time) pairs uniformly, discarding times before the
/// object's first appearance, and attaches the ground-truth response
/// track. feature_sigma perturbs the query content per dimension.
inline std::vector<QuerySample> sample_queries(const World& world, std::size_t count,
                                               std::uint64_t seed, double feature_sigma = 0.0) {
    std::vector<QuerySample> out;
    if (count == 0 || world.objects.empty()) return out;
    SeededRng rng(seed);
    std::int64_t next_id = 0;
    while (out.size() < count) {
        const auto& obj = world.objects[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(world.objects.size()) - 1))];
        const FrameIndex t = rng.uniform_int(0, world.frames() - 1);
        if (t < obj.first_visible()) continue;  // nothing to recall yet
        auto gt = ground_truth_track(world, obj.gt_id, t);
        FeatureVector content = obj.appearance;
        if (feature_sigma > 0.0) {
            for (auto& v : content.values) v += rng.normal(0.0, feature_sigma);
        }
        out.emplace_back(next_id++, obj.gt_id, t, std::move(content), std::move(*gt));
    }
    return out;
}

/// The offline baseline the online engine replaces: walk the ground-truth
/// annotations backward from t until some instance's appearance clears the
/// match threshold, then return that instance's containing segment
/// (truncated at t). Brute force over annotations, for equivalence checks.
inline std::optional<ResponseTrack> offline_backward_scan(const FeatureVector& query,
                                                          const World& world, FrameIndex t,
                                                          const SimilarityFn& similarity,
                                                          double match_threshold = 0.5) {
    for (FrameIndex f = std::min(t, world.frames() - 1); f >= 0; --f) {
        const WorldObject* best = nullptr;
        double best_score = 0.0;
        for (const WorldObject& obj : world.objects) {
            if (!obj.segment_at(f)) continue;
            const double s = similarity.score(query, obj.appearance);
            if (s > match_threshold && (!best || s > best_score)) {
                best = &obj;
                best_score = s;
            }
        }
        if (best) return ground_truth_track(world, best->gt_id, t);
    }
    return std::nullopt;
}

}  // namespace omem
