#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "omem/population.hpp"
#include "omem/rng.hpp"

namespace omem {

/// Perception degradation knobs. The all-default configuration is
/// noise-free: the noisy components then behave exactly like their oracle
/// counterparts, which is what lets ablations interpolate between the two.
struct NoiseConfig {
    // Discovery
    double p_det = 1.0;              // per visible object per frame, until found this segment
    double false_positive_rate = 0.0;  // chance of one spurious detection per frame
    double box_jitter_sigma = 0.0;   // px, applied to emitted detection corners
    double tp_score_lo = 1.0, tp_score_hi = 1.0;
    double fp_score_lo = 0.25, fp_score_hi = 0.75;

    // Tracking
    double p_persist = 1.0;          // chance per visible frame of keeping lock
    double p_reacquire = 0.25;       // chance per visible frame of recovering a lost target
    double drift_sigma = 0.0;        // px/frame random-walk offset while locked
    double id_switch_prob = 0.0;     // per crossing pair per frame
    double track_score_lo = 1.0, track_score_hi = 1.0;
    double loss_score_lo = 0.0, loss_score_hi = 0.45;

    // Features
    double feature_sigma = 0.0;      // sigma of per-dimension appearance noise

    void validate() const {
        for (double p : {p_det, false_positive_rate, p_persist, p_reacquire, id_switch_prob})
            if (p < 0.0 || p > 1.0) throw std::invalid_argument("noise: probability outside [0,1]");
        for (double s : {box_jitter_sigma, drift_sigma, feature_sigma})
            if (s < 0.0) throw std::invalid_argument("noise: negative sigma");
        for (auto [lo, hi] : {std::pair{tp_score_lo, tp_score_hi}, {fp_score_lo, fp_score_hi},
                              {track_score_lo, track_score_hi}, {loss_score_lo, loss_score_hi}})
            if (lo < 0.0 || hi > 1.0 || hi < lo)
                throw std::invalid_argument("noise: bad score range");
    }
};

/// Emits each instance's ground-truth box exactly once per visibility
/// segment, at its first frame, with score 1. Re-appearances of an object
/// the tracker still follows get discarded by the population gate.
class OracleDiscoverer final : public ObjectDiscoverer {
public:
    std::vector<Detection> discover(const FrameObservation& frame) override {
        std::vector<Detection> out;
        for (const VisibleInstance& inst : frame.visible) {
            if (!inst.is_segment_start(frame.t)) continue;
            out.push_back({inst.box, 1.0, inst.gt_id,
                           PatchData{inst.appearance, inst.distinctiveness, 0}});
        }
        return out;
    }
};

/// Follows each memorized object's ground-truth instance while visible,
/// score 1, silent otherwise. Instances are matched to memory objects by
/// the discovery box: the tracker keeps a one-frame cache of what it saw
/// so an object discovered at t binds at t+1 without re-reading the past.
class OracleTracker final : public ObjectTracker {
public:
    std::vector<TrackUpdate> track(const TrackContext& context,
                                   const FrameObservation& frame) override {
        bind_new(context, frame.t);
        std::vector<TrackUpdate> out;
        for (const TrackContextEntry& e : context.objects) {
            auto it = bindings_.find(e.id);
            if (it == bindings_.end() || it->second < 0) continue;
            for (const VisibleInstance& inst : frame.visible) {
                if (inst.gt_id != it->second) continue;
                out.push_back({e.id, inst.box, 1.0,
                               PatchData{inst.appearance, inst.distinctiveness, 0}});
                break;
            }
        }
        prev_visible_ = frame.visible;
        return out;
    }

private:
    void bind_new(const TrackContext& context, FrameIndex t) {
        for (const TrackContextEntry& e : context.objects) {
            if (bindings_.count(e.id)) continue;
            if (e.discovery_t != t - 1) {
                bindings_[e.id] = -1;  // discovery frame already gone; untrackable
                continue;
            }
            std::int64_t match = -1;
            double best = 0.5;  // bind only above 0.5 IoU
            for (const VisibleInstance& inst : prev_visible_) {
                const double iou = box_iou(e.discovery_box, inst.box);
                if (iou > best) {
                    best = iou;
                    match = inst.gt_id;
                }
            }
            bindings_[e.id] = match;
        }
    }

    std::map<ObjectId, std::int64_t> bindings_;
    std::vector<VisibleInstance> prev_visible_;
};

/// Oracle discovery degraded by NoiseConfig: per visible frame the untested
/// instance is found with probability p_det (one detection per visibility
/// segment, at the first successful draw), boxes are jittered, appearance
/// features perturbed, and spurious detections injected.
class NoisyDiscoverer final : public ObjectDiscoverer {
public:
    NoisyDiscoverer(NoiseConfig noise, std::uint64_t seed, std::size_t feature_dim)
        : noise_(noise), rng_(seed), feature_dim_(feature_dim) {
        noise_.validate();
    }

    std::vector<Detection> discover(const FrameObservation& frame) override {
        std::vector<Detection> out;
        for (const VisibleInstance& inst : frame.visible) {
            auto it = found_segment_.find(inst.gt_id);
            if (it != found_segment_.end() && it->second == inst.segment_start_t) continue;
            if (!rng_.bernoulli(noise_.p_det)) continue;
            found_segment_[inst.gt_id] = inst.segment_start_t;
            Detection det;
            det.box = jitter(inst.box);
            det.score = rng_.uniform(noise_.tp_score_lo, noise_.tp_score_hi);
            det.source_gt_id = inst.gt_id;
            det.patch = PatchData{perturb(inst.appearance), inst.distinctiveness, 0};
            out.push_back(std::move(det));
        }
        if (rng_.bernoulli(noise_.false_positive_rate)) out.push_back(false_positive(frame));
        return out;
    }

private:
    BoundingBox jitter(const BoundingBox& box) {
        if (noise_.box_jitter_sigma == 0.0) return box;
        return {box.x + rng_.normal(0.0, noise_.box_jitter_sigma),
                box.y + rng_.normal(0.0, noise_.box_jitter_sigma), box.w, box.h};
    }

    FeatureVector perturb(const FeatureVector& features) {
        if (noise_.feature_sigma == 0.0) return features;
        FeatureVector out = features;
        for (auto& v : out.values) v += rng_.normal(0.0, noise_.feature_sigma);
        return out;
    }

    Detection false_positive(const FrameObservation& frame) {
        Detection det;
        const double w = rng_.uniform(20.0, std::max(21.0, frame.frame_width / 4.0));
        const double h = rng_.uniform(20.0, std::max(21.0, frame.frame_height / 4.0));
        det.box = {rng_.uniform(0.0, std::max(1.0, frame.frame_width - w)),
                   rng_.uniform(0.0, std::max(1.0, frame.frame_height - h)), w, h};
        det.score = rng_.uniform(noise_.fp_score_lo, noise_.fp_score_hi);
        std::vector<double> v(feature_dim_);
        for (auto& x : v) x = rng_.normal(0.0, 1.0);
        det.patch = PatchData{FeatureVector(std::move(v)), rng_.uniform(0.0, 1.0), 0};
        return det;
    }

    NoiseConfig noise_;
    SeededRng rng_;
    std::size_t feature_dim_;
    std::map<std::int64_t, FrameIndex> found_segment_;  // gt id -> segment already detected
};

/// Oracle tracking degraded by NoiseConfig: a locked target is kept with
/// probability p_persist per visible frame and drifts by a random walk;
/// lost targets wander near their last position emitting low-confidence
/// boxes until reacquired. Crossing ground-truth instances may swap the
/// trackers' identities.
class NoisyTracker final : public ObjectTracker {
public:
    NoisyTracker(NoiseConfig noise, std::uint64_t seed) : noise_(noise), rng_(seed) {
        noise_.validate();
    }

    std::vector<TrackUpdate> track(const TrackContext& context,
                                   const FrameObservation& frame) override {
        bind_new(context, frame.t);
        apply_id_switches(frame);

        std::vector<TrackUpdate> out;
        for (const TrackContextEntry& e : context.objects) {
            auto it = bindings_.find(e.id);
            if (it == bindings_.end() || it->second.gt_id < 0) continue;
            Binding& b = it->second;
            const VisibleInstance* inst = find_instance(frame, b.gt_id);
            if (b.locked) {
                if (!inst) continue;  // holds the search region, emits nothing
                if (rng_.bernoulli(noise_.p_persist)) {
                    b.dx += rng_.normal(0.0, noise_.drift_sigma);
                    b.dy += rng_.normal(0.0, noise_.drift_sigma);
                    b.last_box = BoundingBox(inst->box.x + b.dx, inst->box.y + b.dy,
                                             inst->box.w, inst->box.h);
                    out.push_back({e.id, b.last_box,
                                   rng_.uniform(noise_.track_score_lo, noise_.track_score_hi),
                                   PatchData{perturb(inst->appearance), inst->distinctiveness, 0}});
                } else {
                    b.locked = false;
                    out.push_back(lost_update(e.id, b));
                }
            } else {
                if (inst && rng_.bernoulli(noise_.p_reacquire)) {
                    b.locked = true;
                    b.dx = 0.0;
                    b.dy = 0.0;
                    b.last_box = inst->box;
                    out.push_back({e.id, inst->box,
                                   rng_.uniform(noise_.track_score_lo, noise_.track_score_hi),
                                   PatchData{perturb(inst->appearance), inst->distinctiveness, 0}});
                } else {
                    out.push_back(lost_update(e.id, b));
                }
            }
        }
        prev_visible_ = frame.visible;
        return out;
    }

private:
    struct Binding {
        std::int64_t gt_id = -1;
        bool locked = true;
        double dx = 0.0, dy = 0.0;  // accumulated drift
        BoundingBox last_box;
        FeatureVector last_features;
    };

    static const VisibleInstance* find_instance(const FrameObservation& frame, std::int64_t gt_id) {
        for (const VisibleInstance& inst : frame.visible)
            if (inst.gt_id == gt_id) return &inst;
        return nullptr;
    }

    void bind_new(const TrackContext& context, FrameIndex t) {
        for (const TrackContextEntry& e : context.objects) {
            if (bindings_.count(e.id)) continue;
            Binding b;
            if (e.discovery_t == t - 1) {
                double best = 0.5;
                for (const VisibleInstance& inst : prev_visible_) {
                    const double iou = box_iou(e.discovery_box, inst.box);
                    if (iou > best) {
                        best = iou;
                        b.gt_id = inst.gt_id;
                        b.last_box = inst.box;
                        b.last_features = inst.appearance;
                    }
                }
            }
            bindings_[e.id] = b;
        }
    }

    /// Two locked trackers whose targets overlap this frame may trade
    /// identities, modelling association failure at crossings.
    void apply_id_switches(const FrameObservation& frame) {
        if (noise_.id_switch_prob == 0.0) return;
        std::vector<std::map<ObjectId, Binding>::iterator> locked;
        for (auto it = bindings_.begin(); it != bindings_.end(); ++it)
            if (it->second.locked && it->second.gt_id >= 0 &&
                find_instance(frame, it->second.gt_id))
                locked.push_back(it);
        for (std::size_t i = 0; i < locked.size(); ++i) {
            for (std::size_t j = i + 1; j < locked.size(); ++j) {
                const VisibleInstance* a = find_instance(frame, locked[i]->second.gt_id);
                const VisibleInstance* b = find_instance(frame, locked[j]->second.gt_id);
                if (box_iou(a->box, b->box) > 0.5 && rng_.bernoulli(noise_.id_switch_prob))
                    std::swap(locked[i]->second.gt_id, locked[j]->second.gt_id);
            }
        }
    }

    TrackUpdate lost_update(ObjectId id, Binding& b) {
        b.dx += rng_.normal(0.0, std::max(noise_.drift_sigma, 1.0));
        b.dy += rng_.normal(0.0, std::max(noise_.drift_sigma, 1.0));
        const BoundingBox wander(b.last_box.x + b.dx, b.last_box.y + b.dy, b.last_box.w,
                                 b.last_box.h);
        std::vector<double> junk(b.last_features.dim(), 0.0);
        for (auto& v : junk) v = rng_.normal(0.0, 1.0);
        return {id, wander, rng_.uniform(noise_.loss_score_lo, noise_.loss_score_hi),
                PatchData{FeatureVector(std::move(junk)), rng_.uniform(0.0, 0.5), 0}};
    }

    FeatureVector perturb(const FeatureVector& features) {
        if (noise_.feature_sigma == 0.0) return features;
        FeatureVector out = features;
        for (auto& v : out.values) v += rng_.normal(0.0, noise_.feature_sigma);
        return out;
    }

    NoiseConfig noise_;
    SeededRng rng_;
    std::map<ObjectId, Binding> bindings_;
    std::vector<VisibleInstance> prev_visible_;
};

}  // namespace omem
