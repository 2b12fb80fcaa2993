#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "omem/memory.hpp"
#include "omem/relevance.hpp"

namespace omem {

/// A ground-truth instance visible in the current frame. Carried by the
/// simulated stream so perception stand-ins can act without touching the
/// world behind it.
struct VisibleInstance {
    std::int64_t gt_id = 0;
    BoundingBox box;
    FeatureVector appearance;
    double distinctiveness = 1.0;
    FrameIndex segment_start_t = 0;  // first frame of the current visibility segment

    bool is_segment_start(FrameIndex t) const { return segment_start_t == t; }
};

/// One frame of the stream. Frames arrive in strict order and are seen
/// exactly once; the pixel payload is represented by its digest plus the
/// configured byte cost.
struct FrameObservation {
    FrameIndex t = 0;
    double frame_width = 0.0;
    double frame_height = 0.0;
    std::vector<VisibleInstance> visible;
    std::uint64_t frame_digest = 0;
};

struct Detection {
    BoundingBox box;
    double score = 0.0;
    std::optional<std::int64_t> source_gt_id;  // simulation bookkeeping only
    PatchData patch;
};

struct TrackUpdate {
    ObjectId object_id = 0;
    BoundingBox box;
    double score = 0.0;
    PatchData patch;
};

struct TrackContextEntry {
    ObjectId id = 0;
    FrameIndex discovery_t = 0;
    BoundingBox discovery_box;
    FrameIndex last_t = 0;
    BoundingBox last_box;
};

/// What a tracker gets to see: the last-known state of every live object.
struct TrackContext {
    FrameIndex t = 0;
    std::vector<TrackContextEntry> objects;
};

class ObjectTracker {
public:
    virtual ~ObjectTracker() = default;
    /// At most one update per tracked object per frame.
    virtual std::vector<TrackUpdate> track(const TrackContext& context,
                                           const FrameObservation& frame) = 0;
};

class ObjectDiscoverer {
public:
    virtual ~ObjectDiscoverer() = default;
    virtual std::vector<Detection> discover(const FrameObservation& frame) = 0;
};

struct PopulationConfig {
    double min_track_score = 0.5;      // tracker updates kept iff score strictly above
    double min_detection_score = 0.01; // detections kept iff score strictly above
    double max_new_object_iou = 0.5;   // detections overlapping memory beyond this are discarded
    double duplicate_track_iou = 0.5;  // same-frame track overlaps beyond this keep the older id
    PatchPolicy patch_policy = PatchPolicy::mr1_star;
    double assessor_threshold = 0.5;
    std::uint64_t budget_bytes = 0;    // 0 disables per-step pruning

    void validate() const {
        for (double v : {min_track_score, min_detection_score, max_new_object_iou,
                         duplicate_track_iou, assessor_threshold}) {
            if (v < 0.0 || v > 1.0)
                throw std::invalid_argument("PopulationConfig: threshold outside [0,1]");
        }
    }
};

struct StepReport {
    FrameIndex t = 0;
    std::uint32_t tracked = 0;                // tracker records written
    std::uint32_t suppressed_duplicates = 0;  // same-frame overlaps dropped (older id kept)
    std::uint32_t gated_updates = 0;          // tracker updates below the score gate
    std::uint32_t discovered = 0;             // fresh objects created
    std::uint32_t discarded_detections = 0;   // detections overlapping memorized objects
    std::uint32_t gated_detections = 0;       // detections below the score gate
    std::uint32_t frames_deleted = 0;
    std::uint64_t bytes_freed = 0;
    std::uint32_t evicted = 0;                // budget evictions after this step
    bool over_cap = false;
};

struct PopulationReport {
    std::vector<StepReport> steps;
    std::uint64_t frames_processed = 0;
    std::uint64_t objects_created = 0;
    std::uint64_t records_written = 0;
    std::uint64_t final_size_bytes = 0;
    bool any_over_cap = false;
};

/// Strictly sequential frame source. There is deliberately no random
/// access; the engine can only pull the next frame.
class FrameStream {
public:
    virtual ~FrameStream() = default;
    virtual std::optional<FrameObservation> next() = 0;
};

/// Called after each processed step (post-prune) with the frame index and
/// the live memory; used to answer queries mid-stream via snapshots.
using StepHook = std::function<void(FrameIndex, const ObjectMemory&)>;

/// Per-frame population loop: track known objects, suppress same-frame
/// duplicates (older id wins), write survivors, then discover new objects
/// that the memory does not already cover at this timestamp.
class PopulationEngine {
public:
    explicit PopulationEngine(PopulationConfig config = {})
        : config_(config),
          assessor_(config.assessor_threshold),
          labeler_(config.patch_policy, assessor_) {
        config_.validate();
    }

    const PopulationConfig& config() const { return config_; }

    StepReport step(ObjectMemory& memory, const FrameObservation& frame,
                    ObjectTracker& tracker, ObjectDiscoverer& discoverer) {
        if (frame.t != expected_t_)
            throw std::invalid_argument("step: out-of-order frame (expected t=" +
                                        std::to_string(expected_t_) + ")");
        StepReport report;
        report.t = frame.t;

        // With nothing memorized the context is empty and tracking is a
        // no-op, but the tracker still observes the frame (simulated
        // trackers cache it to bind objects discovered this step).
        auto updates = tracker.track(make_context(memory, frame.t), frame);
        validate_updates(memory, updates);
        if (!updates.empty()) run_tracking(memory, frame, std::move(updates), report);
        run_discovery(memory, frame, discoverer.discover(frame), report);

        expected_t_ = frame.t + 1;
        return report;
    }

    /// Folds step over the stream, pruning to the configured budget after
    /// every frame and invoking the hook once the frame is fully absorbed.
    PopulationReport run(ObjectMemory& memory, FrameStream& stream, ObjectTracker& tracker,
                         ObjectDiscoverer& discoverer, const StepHook& hook = {}) {
        PopulationReport report;
        while (auto frame = stream.next()) {
            StepReport step_report = step(memory, *frame, tracker, discoverer);
            if (config_.budget_bytes > 0) {
                PruneResult pruned = memory.prune_to_budget(config_.budget_bytes);
                step_report.evicted = static_cast<std::uint32_t>(pruned.evicted.size());
                step_report.over_cap = pruned.over_cap;
                for (ObjectId id : pruned.evicted) labeler_.forget(id);
                report.any_over_cap = report.any_over_cap || pruned.over_cap;
            }
            report.frames_processed += 1;
            report.objects_created += step_report.discovered;
            report.records_written += step_report.tracked + step_report.discovered;
            report.steps.push_back(step_report);
            if (hook) hook(frame->t, memory);
        }
        report.final_size_bytes = memory.size_bytes();
        return report;
    }

private:
    static TrackContext make_context(const ObjectMemory& memory, FrameIndex t) {
        TrackContext ctx;
        ctx.t = t;
        for (const auto& [id, entry] : memory.entries()) {
            ctx.objects.push_back({id, entry.discovery_t, entry.records.front().box,
                                   entry.records.back().t, entry.records.back().box});
        }
        return ctx;
    }

    static void validate_updates(const ObjectMemory& memory, const std::vector<TrackUpdate>& updates) {
        std::set<ObjectId> seen;
        for (const auto& u : updates) {
            if (!memory.contains(u.object_id))
                throw std::invalid_argument("tracker update for unknown object id");
            if (!seen.insert(u.object_id).second)
                throw std::invalid_argument("tracker produced two updates for one object");
            if (u.score < 0.0 || u.score > 1.0)
                throw std::invalid_argument("tracker score outside [0,1]");
        }
    }

    void run_tracking(ObjectMemory& memory, const FrameObservation& frame,
                      std::vector<TrackUpdate> updates, StepReport& report) {
        std::vector<TrackUpdate> kept;
        for (auto& u : updates) {
            if (u.score > config_.min_track_score) {
                kept.push_back(std::move(u));
            } else {
                report.gated_updates += 1;
            }
        }
        // Older (lower) ids win same-frame overlaps; the loser just skips
        // the frame, which shows up as a break at its next update.
        std::sort(kept.begin(), kept.end(),
                  [](const TrackUpdate& a, const TrackUpdate& b) { return a.object_id < b.object_id; });
        std::vector<const TrackUpdate*> survivors;
        for (const auto& u : kept) {
            bool duplicate = false;
            for (const TrackUpdate* s : survivors) {
                if (box_iou(u.box, s->box) > config_.duplicate_track_iou) {
                    duplicate = true;
                    break;
                }
            }
            if (duplicate) {
                report.suppressed_duplicates += 1;
            } else {
                survivors.push_back(&u);
            }
        }
        for (const TrackUpdate* u : survivors) {
            std::uint64_t freed = 0;
            const bool relevant = labeler_.label_update(memory, u->object_id, frame.t, u->patch, &freed);
            WriteRequest req;
            req.t = frame.t;
            req.box = u->box;
            req.frame_digest = frame.frame_digest;
            req.score = u->score;
            req.relevant = relevant;
            if (relevant) req.patch = u->patch;
            const WriteOutcome outcome = memory.write(u->object_id, req);
            report.tracked += 1;
            report.frames_deleted += outcome.frames_deleted;
            report.bytes_freed += outcome.bytes_freed + freed;
        }
    }

    void run_discovery(ObjectMemory& memory, const FrameObservation& frame,
                       std::vector<Detection> detections, StepReport& report) {
        std::vector<BoundingBox> occupied;
        for (const auto& [id, rec] : memory.read_time(frame.t)) occupied.push_back(rec.box);
        for (const auto& det : detections) {
            if (det.score < 0.0 || det.score > 1.0)
                throw std::invalid_argument("detection score outside [0,1]");
            if (!(det.score > config_.min_detection_score)) {
                report.gated_detections += 1;
                continue;
            }
            bool covered = false;
            for (const BoundingBox& box : occupied) {
                if (box_iou(det.box, box) > config_.max_new_object_iou) {
                    covered = true;
                    break;
                }
            }
            if (covered) {
                report.discarded_detections += 1;
                continue;
            }
            WriteRequest req;
            req.t = frame.t;
            req.box = det.box;
            req.frame_digest = frame.frame_digest;
            req.score = det.score;
            req.relevant = labeler_.label_discovery(det.patch);
            if (req.relevant) req.patch = det.patch;
            const ObjectId id = memory.create_object(req);
            labeler_.register_discovery(id, frame.t, det.patch);
            occupied.push_back(det.box);
            report.discovered += 1;
        }
    }

    PopulationConfig config_;
    ThresholdAssessor assessor_;
    RelevanceLabeler labeler_;
    FrameIndex expected_t_ = 0;
};

}  // namespace omem
