#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "omem/memory.hpp"

namespace omem {

/// Patch-retention policies. They trade retrieval accuracy against the
/// number of similarity operations a query costs:
///   mr1_star — discovery patch plus the first and the current last
///              assessor-valid patch of the latest segment (at most 3 live
///              relevant records; 2 when discovery is the segment-first).
///   mr2      — discovery plus every assessor-valid patch of the latest
///              segment.
///   mr3      — discovery only.
///   mr4      — first/last-valid of the latest segment, no discovery
///              privilege.
///   none     — retention disabled: every record keeps its patch forever.
enum class PatchPolicy { mr1_star, mr2, mr3, mr4, none };

inline PatchPolicy parse_patch_policy(const std::string& name) {
    if (name == "mr1star") return PatchPolicy::mr1_star;
    if (name == "mr2") return PatchPolicy::mr2;
    if (name == "mr3") return PatchPolicy::mr3;
    if (name == "mr4") return PatchPolicy::mr4;
    if (name == "none") return PatchPolicy::none;
    throw std::invalid_argument("unknown patch policy: " + name);
}

inline std::string to_string(PatchPolicy policy) {
    switch (policy) {
        case PatchPolicy::mr1_star: return "mr1star";
        case PatchPolicy::mr2: return "mr2";
        case PatchPolicy::mr3: return "mr3";
        case PatchPolicy::mr4: return "mr4";
        case PatchPolicy::none: return "none";
    }
    throw std::logic_error("unhandled policy");
}

/// Decides whether a patch is distinctive enough to be useful at
/// retrieval. Stand-in for a trained quality classifier; must be
/// deterministic for identical input.
class PatchQualityAssessor {
public:
    virtual ~PatchQualityAssessor() = default;
    virtual bool suitable(const PatchData& patch) const = 0;
};

/// Suitable iff distinctiveness >= threshold (boundary counts as suitable).
class ThresholdAssessor final : public PatchQualityAssessor {
public:
    explicit ThresholdAssessor(double threshold = 0.5) : threshold_(threshold) {
        if (threshold < 0.0 || threshold > 1.0)
            throw std::invalid_argument("ThresholdAssessor: threshold outside [0,1]");
    }
    bool suitable(const PatchData& patch) const override {
        if (patch.distinctiveness < 0.0 || patch.distinctiveness > 1.0)
            throw std::invalid_argument("assess: distinctiveness outside [0,1]");
        return patch.distinctiveness >= threshold_;
    }

private:
    double threshold_;
};

/// Maintains relevance labels online as the population loop writes. Owns
/// the per-object first/last-valid pointers for the active segment and
/// demotes superseded records through the memory, so that at any instant
/// retained patches describe discovery + latest segment (policy
/// permitting).
class RelevanceLabeler {
public:
    RelevanceLabeler(PatchPolicy policy, const PatchQualityAssessor& assessor)
        : policy_(policy), assessor_(&assessor) {}

    PatchPolicy policy() const { return policy_; }

    /// Label for an object's very first record. Call register_discovery
    /// with the assigned id once the object is created.
    bool label_discovery(const PatchData& patch) const {
        switch (policy_) {
            case PatchPolicy::mr1_star:
            case PatchPolicy::mr2:
            case PatchPolicy::mr3:
                return true;
            case PatchPolicy::mr4:
                return assessor_->suitable(patch);
            case PatchPolicy::none:
                return true;
        }
        return true;
    }

    void register_discovery(ObjectId id, FrameIndex t, const PatchData& patch) {
        ObjectState state;
        state.discovery_t = t;
        if (assessor_->suitable(patch)) {
            state.first_valid = t;
            state.last_valid = t;
        }
        states_[id] = state;
    }

    /// Label for a subsequent record of `id` arriving at time t. Detects a
    /// segment break against the object's stored history and finalizes the
    /// closed segment first (releasing its non-privileged patches). Bytes
    /// freed by demotions are added to *bytes_freed when given.
    bool label_update(ObjectMemory& memory, ObjectId id, FrameIndex t, const PatchData& patch,
                      std::uint64_t* bytes_freed = nullptr) {
        if (policy_ == PatchPolicy::none) return true;
        if (policy_ == PatchPolicy::mr3) return false;  // nothing beyond discovery
        ObjectState& state = state_for(memory, id);
        std::uint64_t freed = 0;
        if (t - memory.last_time(id) > 1) freed += finalize_segment(memory, id, state);

        bool relevant = false;
        if (policy_ == PatchPolicy::mr2) {
            relevant = assessor_->suitable(patch);
        } else {  // mr1_star / mr4: maintain first + moving last valid
            if (assessor_->suitable(patch)) {
                if (!state.first_valid) {
                    state.first_valid = t;
                    state.last_valid = t;
                } else {
                    if (*state.last_valid != *state.first_valid)
                        freed += memory.set_relevance(id, *state.last_valid, false);
                    state.last_valid = t;
                }
                relevant = true;
            }
        }
        if (bytes_freed) *bytes_freed += freed;
        return relevant;
    }

    /// Releases retained patches of an object's latest (about-to-close)
    /// segment. The discovery patch survives under every policy except
    /// mr4, which grants it no privilege.
    std::uint64_t finalize_segment(ObjectMemory& memory, ObjectId id) {
        if (policy_ == PatchPolicy::none || policy_ == PatchPolicy::mr3) return 0;
        return finalize_segment(memory, id, state_for(memory, id));
    }

    void forget(ObjectId id) { states_.erase(id); }

private:
    struct ObjectState {
        FrameIndex discovery_t = 0;
        std::optional<FrameIndex> first_valid;
        std::optional<FrameIndex> last_valid;
    };

    /// Objects restored from a serialized memory have no labeler state;
    /// rebuild the minimum we need from the entry itself. The first/last
    /// pointers restart blank, which only delays retention until the next
    /// valid patch.
    ObjectState& state_for(const ObjectMemory& memory, ObjectId id) {
        auto it = states_.find(id);
        if (it == states_.end()) {
            ObjectState state;
            state.discovery_t = memory.read_object(id).discovery_t;
            it = states_.emplace(id, state).first;
        }
        return it->second;
    }

    std::uint64_t finalize_segment(ObjectMemory& memory, ObjectId id, ObjectState& state) {
        std::uint64_t freed = 0;
        const ObjectEntry& entry = memory.read_object(id);
        const ResponseTrack segment = detail::latest_segment_track(entry.records);
        for (FrameIndex t = segment.start(); t <= segment.end(); ++t) {
            if (policy_ != PatchPolicy::mr4 && t == state.discovery_t) continue;
            const bool retained =
                (state.first_valid && *state.first_valid == t) ||
                (state.last_valid && *state.last_valid == t) ||
                policy_ == PatchPolicy::mr2;
            if (retained) freed += memory.set_relevance(id, t, false);
        }
        state.first_valid.reset();
        state.last_valid.reset();
        return freed;
    }

    PatchPolicy policy_;
    const PatchQualityAssessor* assessor_;
    std::unordered_map<ObjectId, ObjectState> states_;
};

}  // namespace omem
