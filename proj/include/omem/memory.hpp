#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "omem/feature.hpp"
#include "omem/geometry.hpp"

namespace omem {

using ObjectId = std::uint64_t;

/// Synthetic storage costs. The engine never holds real pixels; payload
/// sizes are declared constants so size comparisons stay internally
/// consistent across runs. The full-frame default approximates a
/// compressed 1440x1080 frame.
struct ByteCosts {
    std::uint64_t full_frame_bytes = 1'185'000;
    std::uint64_t patch_bytes = 30'000;
    std::uint64_t record_bytes = 64;

    bool operator==(const ByteCosts&) const = default;
};

/// Stored object patch: the appearance features retrieval matches against,
/// plus the quality score the assessor saw. `bytes` is assigned by the
/// memory from its configured costs when the patch is stored.
struct PatchData {
    FeatureVector features;
    double distinctiveness = 1.0;
    std::uint64_t bytes = 0;

    bool operator==(const PatchData&) const = default;
};

struct FrameSlot {
    std::uint64_t bytes = 0;
    std::uint64_t digest = 0;
    std::uint32_t refcount = 0;

    bool operator==(const FrameSlot&) const = default;
};

/// One timestamped observation of an object. `frame_ref` is present while
/// the full frame for this timestamp is still retained (it is dropped when
/// a break closes the segment; the box itself is never deleted). A record
/// with `relevant` set always carries its patch.
struct ObjectRecord {
    FrameIndex t = 0;
    BoundingBox box;
    std::optional<FrameIndex> frame_ref;
    std::optional<PatchData> patch;
    bool relevant = false;

    bool operator==(const ObjectRecord&) const = default;
};

struct ObjectEntry {
    ObjectId id = 0;
    FrameIndex discovery_t = 0;
    double max_score = 0.0;  // highest write confidence seen; prune key
    std::vector<ObjectRecord> records;

    bool operator==(const ObjectEntry&) const = default;
};

struct WriteOutcome {
    bool created_object = false;
    bool break_detected = false;
    std::uint32_t frames_deleted = 0;
    std::uint64_t bytes_freed = 0;
};

struct PruneResult {
    std::vector<ObjectId> evicted;
    bool over_cap = false;  // a single remaining object alone exceeds the cap
};

struct WriteRequest {
    FrameIndex t = 0;
    BoundingBox box;
    std::uint64_t frame_digest = 0;
    double score = 1.0;
    bool relevant = false;
    std::optional<PatchData> patch;  // required iff relevant
};

namespace detail {

/// Index of the first record of the maximal contiguous suffix.
inline std::size_t latest_segment_begin(const std::vector<ObjectRecord>& records) {
    std::size_t i = records.size() - 1;
    while (i > 0 && records[i - 1].t + 1 == records[i].t) --i;
    return i;
}

inline ResponseTrack latest_segment_track(const std::vector<ObjectRecord>& records) {
    std::vector<TrackEntry> entries;
    for (std::size_t i = latest_segment_begin(records); i < records.size(); ++i)
        entries.push_back({records[i].t, records[i].box});
    return ResponseTrack(std::move(entries));
}

inline std::vector<std::pair<ObjectId, ObjectRecord>> records_at(
    const std::map<ObjectId, ObjectEntry>& entries, FrameIndex t) {
    std::vector<std::pair<ObjectId, ObjectRecord>> out;
    for (const auto& [id, entry] : entries) {
        const auto& recs = entry.records;
        auto it = std::lower_bound(recs.begin(), recs.end(), t,
                                   [](const ObjectRecord& r, FrameIndex v) { return r.t < v; });
        if (it != recs.end() && it->t == t) out.emplace_back(id, *it);
    }
    return out;
}

}  // namespace detail

/// Immutable copy of a memory's queryable state. Retrieval runs against
/// snapshots so population can continue mutating the live structure.
class MemorySnapshot {
public:
    MemorySnapshot() = default;
    MemorySnapshot(std::map<ObjectId, ObjectEntry> entries, ByteCosts costs,
                   std::uint64_t size_bytes)
        : entries_(std::move(entries)), costs_(costs), size_bytes_(size_bytes) {}

    const std::map<ObjectId, ObjectEntry>& entries() const { return entries_; }
    const ByteCosts& costs() const { return costs_; }
    std::uint64_t size_bytes() const { return size_bytes_; }
    std::size_t object_count() const { return entries_.size(); }
    bool contains(ObjectId id) const { return entries_.count(id) != 0; }

    const ObjectEntry& read_object(ObjectId id) const {
        auto it = entries_.find(id);
        if (it == entries_.end()) throw std::out_of_range("snapshot: unknown object id");
        return it->second;
    }

    std::vector<std::pair<ObjectId, ObjectRecord>> read_time(FrameIndex t) const {
        return detail::records_at(entries_, t);
    }

    ResponseTrack latest_segment(ObjectId id) const {
        return detail::latest_segment_track(read_object(id).records);
    }

private:
    std::map<ObjectId, ObjectEntry> entries_;
    ByteCosts costs_;
    std::uint64_t size_bytes_ = 0;
};

/// Streaming object store: per-object record histories plus a refcounted
/// full-frame store shared across objects. Frames are stored once per
/// timestamp no matter how many objects reference them; when a write finds
/// a temporal break (gap > 1) it releases the closed segment's frame
/// payloads, keeping the box records.
///
/// Single-writer: one population loop mutates a given instance. Snapshots
/// are safe for any number of concurrent readers.
class ObjectMemory {
public:
    explicit ObjectMemory(ByteCosts costs = {}) : costs_(costs) {}

    // -- write path ---------------------------------------------------------

    /// Inserts a brand-new object and returns its id. Ids are monotone and
    /// never reused, even after eviction.
    ObjectId create_object(const WriteRequest& req) {
        const ObjectId id = next_id_++;
        insert_entry(id, req);
        return id;
    }

    /// Restores an object under an explicit id (deserialization path).
    void create_object_with_id(ObjectId id, const WriteRequest& req) {
        if (entries_.count(id)) throw std::invalid_argument("create_object_with_id: id already present");
        insert_entry(id, req);
        if (id >= next_id_) next_id_ = id + 1;
    }

    /// Appends a record to an existing object. Timestamps must strictly
    /// increase (stream order). A gap > 1 from the previous timestamp is a
    /// break: the prior contiguous segment's frame payloads are released,
    /// except where another object still references them.
    WriteOutcome write(ObjectId id, const WriteRequest& req) {
        auto it = entries_.find(id);
        if (it == entries_.end()) throw std::out_of_range("write: unknown object id");
        ObjectEntry& entry = it->second;
        const FrameIndex prev_t = entry.records.back().t;
        if (req.t <= prev_t) throw std::invalid_argument("write: timestamp not increasing");

        WriteOutcome outcome;
        if (req.t - prev_t > 1) {
            outcome.break_detected = true;
            release_segment_frames(entry, outcome);
        }
        append_record(entry, req);
        return outcome;
    }

    /// Flips a record's relevance flag. Demoting to false frees the stored
    /// patch and returns the bytes released; promoting a record without a
    /// patch is rejected (patch content is gone once freed).
    std::uint64_t set_relevance(ObjectId id, FrameIndex t, bool relevant) {
        ObjectEntry& entry = mutable_entry(id);
        ObjectRecord& rec = record_at(entry, t);
        if (rec.relevant == relevant) return 0;
        if (relevant) {
            if (!rec.patch) throw std::invalid_argument("set_relevance: no stored patch to promote");
            rec.relevant = true;
            return 0;
        }
        rec.relevant = false;
        std::uint64_t freed = 0;
        if (rec.patch) {
            freed = rec.patch->bytes;
            patch_bytes_ -= rec.patch->bytes;
            rec.patch.reset();
        }
        return freed;
    }

    // -- read path ----------------------------------------------------------

    const ObjectEntry& read_object(ObjectId id) const {
        auto it = entries_.find(id);
        if (it == entries_.end()) throw std::out_of_range("read_object: unknown object id");
        return it->second;
    }

    std::vector<std::pair<ObjectId, ObjectRecord>> read_time(FrameIndex t) const {
        return detail::records_at(entries_, t);
    }

    ResponseTrack latest_segment(ObjectId id) const {
        return detail::latest_segment_track(read_object(id).records);
    }

    FrameIndex last_time(ObjectId id) const { return read_object(id).records.back().t; }

    bool contains(ObjectId id) const { return entries_.count(id) != 0; }
    bool empty() const { return entries_.empty(); }
    std::size_t object_count() const { return entries_.size(); }

    std::vector<ObjectId> ids() const {
        std::vector<ObjectId> out;
        out.reserve(entries_.size());
        for (const auto& [id, _] : entries_) out.push_back(id);
        return out;
    }

    /// Stored frame payloads + stored patches + flat per-record metadata.
    std::uint64_t size_bytes() const {
        return frame_bytes_ + patch_bytes_ + record_count_ * costs_.record_bytes;
    }

    // -- lifecycle ----------------------------------------------------------

    /// Evicts whole objects, lowest max confidence first (oldest discovery
    /// first among ties), until the memory fits the cap. A single remaining
    /// object larger than the cap is kept and flagged instead.
    PruneResult prune_to_budget(std::uint64_t cap_bytes) {
        if (cap_bytes == 0) throw std::invalid_argument("prune_to_budget: zero cap");
        PruneResult result;
        while (size_bytes() > cap_bytes && !entries_.empty()) {
            if (entries_.size() == 1) {
                result.over_cap = true;
                break;
            }
            const ObjectId victim = prune_victim();
            evict_object(victim);
            result.evicted.push_back(victim);
        }
        return result;
    }

    MemorySnapshot snapshot() const {
        return MemorySnapshot(entries_, costs_, size_bytes());
    }

    /// Rebuilds a memory from serialized state. Totals are recomputed and
    /// the result must pass a full audit (stored refcounts included), so a
    /// tampered or inconsistent dump is rejected.
    static ObjectMemory restore(ByteCosts costs, ObjectId next_id,
                                std::map<ObjectId, ObjectEntry> entries,
                                std::map<FrameIndex, FrameSlot> frames) {
        ObjectMemory memory(costs);
        memory.entries_ = std::move(entries);
        memory.frames_ = std::move(frames);
        memory.next_id_ = next_id;
        for (const auto& [t, slot] : memory.frames_) memory.frame_bytes_ += slot.bytes;
        for (const auto& [id, entry] : memory.entries_) {
            for (const ObjectRecord& rec : entry.records) {
                if (rec.patch) memory.patch_bytes_ += rec.patch->bytes;
                ++memory.record_count_;
            }
        }
        const auto issues = memory.audit();
        if (!issues.empty())
            throw std::invalid_argument("restore: inconsistent memory state: " + issues.front());
        return memory;
    }

    /// Full structural audit. Returns human-readable discrepancies; empty
    /// means every invariant holds: refcounts match live frame_refs, no
    /// orphan frames, per-object frames confined to the latest contiguous
    /// segment, relevance implies a stored patch, byte totals re-add.
    std::vector<std::string> audit() const {
        std::vector<std::string> issues;
        std::map<FrameIndex, std::uint32_t> expected_refs;
        std::uint64_t expected_patch_bytes = 0;
        std::uint64_t expected_records = 0;

        for (const auto& [id, entry] : entries_) {
            if (entry.records.empty()) {
                issues.push_back("object " + std::to_string(id) + ": no records");
                continue;
            }
            if (entry.discovery_t != entry.records.front().t)
                issues.push_back("object " + std::to_string(id) + ": discovery_t mismatch");
            if (id >= next_id_)
                issues.push_back("object " + std::to_string(id) + ": id beyond counter");
            const std::size_t seg_begin = detail::latest_segment_begin(entry.records);
            for (std::size_t i = 0; i < entry.records.size(); ++i) {
                const ObjectRecord& rec = entry.records[i];
                if (i > 0 && entry.records[i - 1].t >= rec.t)
                    issues.push_back("object " + std::to_string(id) + ": timestamps not increasing");
                if (rec.relevant && !rec.patch)
                    issues.push_back("object " + std::to_string(id) + ": relevant record without patch at t=" +
                                     std::to_string(rec.t));
                if (rec.patch && !rec.relevant)
                    issues.push_back("object " + std::to_string(id) + ": orphan patch at t=" +
                                     std::to_string(rec.t));
                if (rec.frame_ref) {
                    if (*rec.frame_ref != rec.t)
                        issues.push_back("object " + std::to_string(id) + ": frame_ref/timestamp mismatch");
                    if (i < seg_begin)
                        issues.push_back("object " + std::to_string(id) +
                                         ": retained frame outside latest segment at t=" + std::to_string(rec.t));
                    ++expected_refs[*rec.frame_ref];
                }
                if (rec.patch) expected_patch_bytes += rec.patch->bytes;
                ++expected_records;
            }
        }

        std::uint64_t expected_frame_bytes = 0;
        for (const auto& [t, slot] : frames_) {
            auto it = expected_refs.find(t);
            const std::uint32_t want = it == expected_refs.end() ? 0 : it->second;
            if (slot.refcount != want)
                issues.push_back("frame " + std::to_string(t) + ": refcount " +
                                 std::to_string(slot.refcount) + " != live refs " + std::to_string(want));
            if (slot.refcount == 0)
                issues.push_back("frame " + std::to_string(t) + ": orphan (refcount 0)");
            expected_frame_bytes += slot.bytes;
        }
        for (const auto& [t, n] : expected_refs) {
            if (!frames_.count(t))
                issues.push_back("frame " + std::to_string(t) + ": referenced but not stored");
        }
        if (expected_frame_bytes != frame_bytes_)
            issues.push_back("frame byte accounting drift");
        if (expected_patch_bytes != patch_bytes_)
            issues.push_back("patch byte accounting drift");
        if (expected_records != record_count_)
            issues.push_back("record count drift");
        return issues;
    }

    // -- introspection (serialization, tests) --------------------------------

    const std::map<ObjectId, ObjectEntry>& entries() const { return entries_; }
    const std::map<FrameIndex, FrameSlot>& frame_store() const { return frames_; }
    const ByteCosts& costs() const { return costs_; }
    ObjectId next_id() const { return next_id_; }

private:
    ObjectEntry& mutable_entry(ObjectId id) {
        auto it = entries_.find(id);
        if (it == entries_.end()) throw std::out_of_range("unknown object id");
        return it->second;
    }

    static ObjectRecord& record_at(ObjectEntry& entry, FrameIndex t) {
        auto it = std::lower_bound(entry.records.begin(), entry.records.end(), t,
                                   [](const ObjectRecord& r, FrameIndex v) { return r.t < v; });
        if (it == entry.records.end() || it->t != t)
            throw std::out_of_range("no record at requested timestamp");
        return *it;
    }

    void insert_entry(ObjectId id, const WriteRequest& req) {
        if (req.t < 0) throw std::invalid_argument("write: negative timestamp");
        ObjectEntry entry;
        entry.id = id;
        entry.discovery_t = req.t;
        auto [it, _] = entries_.emplace(id, std::move(entry));
        append_record(it->second, req);
    }

    void append_record(ObjectEntry& entry, const WriteRequest& req) {
        if (req.relevant && !req.patch)
            throw std::invalid_argument("write: relevant record requires a patch");
        ObjectRecord rec;
        rec.t = req.t;
        rec.box = req.box;
        rec.frame_ref = req.t;
        retain_frame(req.t, req.frame_digest);
        if (req.relevant) {
            rec.patch = *req.patch;
            rec.patch->bytes = costs_.patch_bytes;
            rec.relevant = true;
            patch_bytes_ += costs_.patch_bytes;
        }
        entry.records.push_back(std::move(rec));
        entry.max_score = std::max(entry.max_score, req.score);
        ++record_count_;
    }

    void retain_frame(FrameIndex t, std::uint64_t digest) {
        auto it = frames_.find(t);
        if (it != frames_.end()) {
            if (it->second.digest != digest)
                throw std::invalid_argument("write: conflicting payload digest for frame " + std::to_string(t));
            ++it->second.refcount;
            return;
        }
        frames_[t] = FrameSlot{costs_.full_frame_bytes, digest, 1};
        frame_bytes_ += costs_.full_frame_bytes;
    }

    void release_frame(FrameIndex t, WriteOutcome& outcome) {
        auto it = frames_.find(t);
        if (it == frames_.end()) throw std::logic_error("release of unstored frame");
        if (--it->second.refcount == 0) {
            outcome.frames_deleted += 1;
            outcome.bytes_freed += it->second.bytes;
            frame_bytes_ -= it->second.bytes;
            frames_.erase(it);
        }
    }

    void release_segment_frames(ObjectEntry& entry, WriteOutcome& outcome) {
        for (std::size_t i = detail::latest_segment_begin(entry.records); i < entry.records.size(); ++i) {
            ObjectRecord& rec = entry.records[i];
            if (!rec.frame_ref) continue;
            release_frame(*rec.frame_ref, outcome);
            rec.frame_ref.reset();
        }
    }

    ObjectId prune_victim() const {
        const ObjectEntry* best = nullptr;
        for (const auto& [id, entry] : entries_) {
            if (!best || entry.max_score < best->max_score ||
                (entry.max_score == best->max_score && entry.discovery_t < best->discovery_t))
                best = &entry;
        }
        return best->id;
    }

    void evict_object(ObjectId id) {
        ObjectEntry& entry = mutable_entry(id);
        WriteOutcome scratch;
        for (ObjectRecord& rec : entry.records) {
            if (rec.frame_ref) release_frame(*rec.frame_ref, scratch);
            if (rec.patch) patch_bytes_ -= rec.patch->bytes;
            --record_count_;
        }
        entries_.erase(id);
    }

    std::map<ObjectId, ObjectEntry> entries_;
    std::map<FrameIndex, FrameSlot> frames_;
    ObjectId next_id_ = 0;
    ByteCosts costs_;
    std::uint64_t frame_bytes_ = 0;
    std::uint64_t patch_bytes_ = 0;
    std::uint64_t record_count_ = 0;
};

}  // namespace omem
