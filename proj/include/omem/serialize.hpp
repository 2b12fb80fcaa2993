#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "omem/components.hpp"
#include "omem/digest.hpp"
#include "omem/memory.hpp"
#include "omem/metrics.hpp"
#include "omem/population.hpp"
#include "omem/retrieval.hpp"
#include "omem/world.hpp"

namespace omem {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Geometry / features

inline void to_json(json& j, const BoundingBox& b) { j = json::array({b.x, b.y, b.w, b.h}); }
inline void from_json(const json& j, BoundingBox& b) {
    b = BoundingBox(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(),
                    j.at(3).get<double>());
}

inline void to_json(json& j, const FeatureVector& f) { j = f.values; }
inline void from_json(const json& j, FeatureVector& f) {
    f = FeatureVector(j.get<std::vector<double>>());
}

inline json track_to_json(const ResponseTrack& track) {
    json j = json::array();
    for (const TrackEntry& e : track.entries()) j.push_back({{"t", e.frame}, {"box", e.box}});
    return j;
}

inline ResponseTrack track_from_json(const json& j) {
    std::vector<TrackEntry> entries;
    for (const auto& item : j)
        entries.push_back({item.at("t").get<FrameIndex>(), item.at("box").get<BoundingBox>()});
    return ResponseTrack(std::move(entries));
}

// ---------------------------------------------------------------------------
// Memory dump (format_version 1)

inline void to_json(json& j, const ByteCosts& c) {
    j = {{"full_frame_bytes", c.full_frame_bytes},
         {"patch_bytes", c.patch_bytes},
         {"record_bytes", c.record_bytes}};
}
inline void from_json(const json& j, ByteCosts& c) {
    j.at("full_frame_bytes").get_to(c.full_frame_bytes);
    j.at("patch_bytes").get_to(c.patch_bytes);
    j.at("record_bytes").get_to(c.record_bytes);
}

inline json memory_to_json(const ObjectMemory& memory) {
    json entries = json::array();
    for (const auto& [id, entry] : memory.entries()) {
        json records = json::array();
        for (const ObjectRecord& rec : entry.records) {
            json r = {{"t", rec.t}, {"box", rec.box}, {"relevant", rec.relevant}};
            r["frame"] = rec.frame_ref ? json(*rec.frame_ref) : json(nullptr);
            if (rec.patch) {
                r["patch"] = {{"features", rec.patch->features},
                              {"distinctiveness", rec.patch->distinctiveness},
                              {"bytes", rec.patch->bytes}};
            } else {
                r["patch"] = nullptr;
            }
            records.push_back(std::move(r));
        }
        entries.push_back({{"id", id},
                           {"discovery_t", entry.discovery_t},
                           {"max_score", entry.max_score},
                           {"records", std::move(records)}});
    }
    json frames = json::array();
    for (const auto& [t, slot] : memory.frame_store()) {
        frames.push_back(
            {{"t", t}, {"bytes", slot.bytes}, {"digest", slot.digest}, {"refcount", slot.refcount}});
    }
    return {{"format_version", 1},
            {"costs", memory.costs()},
            {"next_id", memory.next_id()},
            {"size_bytes", memory.size_bytes()},
            {"entries", std::move(entries)},
            {"frame_store", std::move(frames)}};
}

inline ObjectMemory memory_from_json(const json& j) {
    if (j.at("format_version").get<int>() != 1)
        throw std::invalid_argument("memory dump: unsupported format version");
    std::map<ObjectId, ObjectEntry> entries;
    for (const auto& e : j.at("entries")) {
        ObjectEntry entry;
        entry.id = e.at("id").get<ObjectId>();
        entry.discovery_t = e.at("discovery_t").get<FrameIndex>();
        entry.max_score = e.at("max_score").get<double>();
        for (const auto& r : e.at("records")) {
            ObjectRecord rec;
            rec.t = r.at("t").get<FrameIndex>();
            rec.box = r.at("box").get<BoundingBox>();
            rec.relevant = r.at("relevant").get<bool>();
            if (!r.at("frame").is_null()) rec.frame_ref = r.at("frame").get<FrameIndex>();
            if (!r.at("patch").is_null()) {
                PatchData patch;
                r.at("patch").at("features").get_to(patch.features);
                r.at("patch").at("distinctiveness").get_to(patch.distinctiveness);
                r.at("patch").at("bytes").get_to(patch.bytes);
                rec.patch = std::move(patch);
            }
            entry.records.push_back(std::move(rec));
        }
        entries.emplace(entry.id, std::move(entry));
    }
    std::map<FrameIndex, FrameSlot> frames;
    for (const auto& f : j.at("frame_store")) {
        frames[f.at("t").get<FrameIndex>()] = FrameSlot{f.at("bytes").get<std::uint64_t>(),
                                                        f.at("digest").get<std::uint64_t>(),
                                                        f.at("refcount").get<std::uint32_t>()};
    }
    ObjectMemory memory = ObjectMemory::restore(j.at("costs").get<ByteCosts>(),
                                                j.at("next_id").get<ObjectId>(),
                                                std::move(entries), std::move(frames));
    if (memory.size_bytes() != j.at("size_bytes").get<std::uint64_t>())
        throw std::invalid_argument("memory dump: size accounting mismatch");
    return memory;
}

// ---------------------------------------------------------------------------
// World

inline void to_json(json& j, const WorldConfig& c) {
    j = {{"object_count", c.object_count},
         {"frames", c.frames},
         {"frame_width", c.frame_width},
         {"frame_height", c.frame_height},
         {"appearance_dim", c.appearance_dim},
         {"appearance_mode",
          c.appearance_mode == WorldConfig::AppearanceMode::orthogonal ? "orthogonal" : "gaussian"},
         {"segments_min", c.segments_min},
         {"segments_max", c.segments_max},
         {"segment_len_min", c.segment_len_min},
         {"segment_len_max", c.segment_len_max},
         {"gap_min", c.gap_min},
         {"gap_max", c.gap_max},
         {"motion_sigma", c.motion_sigma},
         {"distinctiveness_lo", c.distinctiveness_lo},
         {"distinctiveness_hi", c.distinctiveness_hi}};
}

inline void from_json(const json& j, WorldConfig& c) {
    j.at("object_count").get_to(c.object_count);
    j.at("frames").get_to(c.frames);
    j.at("frame_width").get_to(c.frame_width);
    j.at("frame_height").get_to(c.frame_height);
    j.at("appearance_dim").get_to(c.appearance_dim);
    const std::string mode = j.at("appearance_mode").get<std::string>();
    if (mode == "orthogonal") {
        c.appearance_mode = WorldConfig::AppearanceMode::orthogonal;
    } else if (mode == "gaussian") {
        c.appearance_mode = WorldConfig::AppearanceMode::gaussian;
    } else {
        throw std::invalid_argument("world config: unknown appearance mode " + mode);
    }
    j.at("segments_min").get_to(c.segments_min);
    j.at("segments_max").get_to(c.segments_max);
    j.at("segment_len_min").get_to(c.segment_len_min);
    j.at("segment_len_max").get_to(c.segment_len_max);
    j.at("gap_min").get_to(c.gap_min);
    j.at("gap_max").get_to(c.gap_max);
    j.at("motion_sigma").get_to(c.motion_sigma);
    j.at("distinctiveness_lo").get_to(c.distinctiveness_lo);
    j.at("distinctiveness_hi").get_to(c.distinctiveness_hi);
}

inline json world_to_json(const World& world) {
    json objects = json::array();
    for (const WorldObject& obj : world.objects) {
        json segments = json::array();
        for (const auto& seg : obj.segments) {
            json boxes = json::array();
            for (const BoundingBox& b : seg.boxes) boxes.push_back(b);
            segments.push_back({{"start", seg.start}, {"boxes", std::move(boxes)}});
        }
        objects.push_back({{"gt_id", obj.gt_id},
                           {"appearance", obj.appearance},
                           {"distinctiveness", obj.distinctiveness},
                           {"segments", std::move(segments)}});
    }
    return {{"format_version", 1},
            {"seed", world.seed},
            {"config", world.config},
            {"objects", std::move(objects)}};
}

inline World world_from_json(const json& j) {
    if (j.at("format_version").get<int>() != 1)
        throw std::invalid_argument("world file: unsupported format version");
    World world;
    world.seed = j.at("seed").get<std::uint64_t>();
    j.at("config").get_to(world.config);
    for (const auto& o : j.at("objects")) {
        WorldObject obj;
        obj.gt_id = o.at("gt_id").get<std::int64_t>();
        o.at("appearance").get_to(obj.appearance);
        o.at("distinctiveness").get_to(obj.distinctiveness);
        for (const auto& s : o.at("segments")) {
            VisibilitySegment seg;
            seg.start = s.at("start").get<FrameIndex>();
            for (const auto& b : s.at("boxes")) seg.boxes.push_back(b.get<BoundingBox>());
            obj.segments.push_back(std::move(seg));
        }
        world.objects.push_back(std::move(obj));
    }
    return world;
}

/// Ingestion adapter for externally annotated clips: object tracks given
/// as flat per-frame boxes plus a query crop embedding per object. Boxes
/// are grouped into contiguous visibility segments. Lets real annotation
/// exports drive the engine without any code change.
inline World world_from_annotations(const json& j) {
    World world;
    world.config.frames = j.at("frame_count").get<FrameIndex>();
    world.config.frame_width = j.at("frame_width").get<double>();
    world.config.frame_height = j.at("frame_height").get<double>();
    world.config.appearance_mode = WorldConfig::AppearanceMode::gaussian;
    world.seed = fnv1a64(j.at("clip_id").get<std::string>());
    std::size_t dim = 0;
    for (const auto& o : j.at("objects")) {
        WorldObject obj;
        obj.gt_id = o.at("object_id").get<std::int64_t>();
        o.at("query_features").get_to(obj.appearance);
        obj.distinctiveness = o.value("distinctiveness", 1.0);
        dim = std::max(dim, obj.appearance.dim());

        std::map<FrameIndex, BoundingBox> by_frame;
        for (const auto& b : o.at("boxes")) {
            const auto t = b.at("frame").get<FrameIndex>();
            if (!by_frame.emplace(t, BoundingBox(b.at("x").get<double>(), b.at("y").get<double>(),
                                                 b.at("w").get<double>(), b.at("h").get<double>()))
                     .second)
                throw std::invalid_argument("annotations: duplicate frame for object " +
                                            std::to_string(obj.gt_id));
        }
        if (by_frame.empty())
            throw std::invalid_argument("annotations: object without boxes");
        VisibilitySegment current;
        FrameIndex prev = -2;
        for (const auto& [t, box] : by_frame) {
            if (t != prev + 1) {
                if (!current.boxes.empty()) obj.segments.push_back(std::move(current));
                current = VisibilitySegment{};
                current.start = t;
            }
            current.boxes.push_back(box);
            prev = t;
        }
        obj.segments.push_back(std::move(current));
        world.objects.push_back(std::move(obj));
    }
    world.config.object_count = static_cast<std::int64_t>(world.objects.size());
    world.config.appearance_dim = dim == 0 ? 1 : dim;
    const auto issues = world.audit();
    if (!issues.empty()) throw std::invalid_argument("annotations: " + issues.front());
    return world;
}

// ---------------------------------------------------------------------------
// Queries, results, reports

inline json queries_to_json(const std::vector<QuerySample>& queries) {
    json arr = json::array();
    for (const auto& q : queries)
        arr.push_back({{"query_id", q.query_id}, {"t", q.t}, {"content", q.content}});
    return {{"format_version", 1}, {"queries", std::move(arr)}};
}

inline std::vector<QueryInput> queries_from_json(const json& j) {
    std::vector<QueryInput> out;
    for (const auto& q : j.at("queries")) {
        out.push_back({q.at("query_id").get<std::int64_t>(), q.at("t").get<FrameIndex>(),
                       q.at("content").get<FeatureVector>()});
    }
    return out;
}

inline json ground_truth_to_json(const std::vector<QuerySample>& queries) {
    json arr = json::array();
    for (const auto& q : queries)
        arr.push_back({{"query_id", q.query_id}, {"track", track_to_json(q.ground_truth)}});
    return {{"format_version", 1}, {"ground_truth", std::move(arr)}};
}

inline json results_to_json(const std::vector<std::int64_t>& query_ids,
                            const std::vector<RetrievalResult>& results) {
    if (query_ids.size() != results.size())
        throw std::invalid_argument("results_to_json: id/result count mismatch");
    json arr = json::array();
    for (std::size_t i = 0; i < results.size(); ++i) {
        const RetrievalResult& r = results[i];
        json item = {{"query_id", query_ids[i]},
                     {"score", r.score},
                     {"similarity_ops", r.similarity_ops},
                     {"timing", {{"elapsed_seconds", r.elapsed_seconds}}}};
        item["object_id"] = r.object_id ? json(*r.object_id) : json(nullptr);
        item["track"] = r.track ? track_to_json(*r.track) : json(nullptr);
        arr.push_back(std::move(item));
    }
    return {{"format_version", 1}, {"results", std::move(arr)}};
}

struct ResultRow {
    std::int64_t query_id = 0;
    RetrievalResult result;
};

inline std::vector<ResultRow> results_from_json(const json& j) {
    std::vector<ResultRow> out;
    for (const auto& item : j.at("results")) {
        ResultRow row;
        row.query_id = item.at("query_id").get<std::int64_t>();
        row.result.score = item.at("score").get<double>();
        row.result.similarity_ops = item.at("similarity_ops").get<std::uint64_t>();
        row.result.elapsed_seconds = item.at("timing").at("elapsed_seconds").get<double>();
        if (!item.at("object_id").is_null())
            row.result.object_id = item.at("object_id").get<ObjectId>();
        if (!item.at("track").is_null()) row.result.track = track_from_json(item.at("track"));
        out.push_back(std::move(row));
    }
    return out;
}

inline void to_json(json& j, const StepReport& s) {
    j = {{"t", s.t},
         {"tracked", s.tracked},
         {"suppressed_duplicates", s.suppressed_duplicates},
         {"gated_updates", s.gated_updates},
         {"discovered", s.discovered},
         {"discarded_detections", s.discarded_detections},
         {"gated_detections", s.gated_detections},
         {"frames_deleted", s.frames_deleted},
         {"bytes_freed", s.bytes_freed},
         {"evicted", s.evicted},
         {"over_cap", s.over_cap}};
}

inline json population_report_to_json(const PopulationReport& report) {
    return {{"frames_processed", report.frames_processed},
            {"objects_created", report.objects_created},
            {"records_written", report.records_written},
            {"final_size_bytes", report.final_size_bytes},
            {"any_over_cap", report.any_over_cap}};
}

inline std::string step_reports_to_jsonl(const PopulationReport& report) {
    std::string out;
    for (const StepReport& s : report.steps) {
        out += json(s).dump();
        out += '\n';
    }
    return out;
}

inline void to_json(json& j, const MetricsReport& m) {
    j = {{"tap25", m.tap25},
         {"stap25", m.stap25},
         {"success", m.success},
         {"mean_size_bytes", m.mean_size_bytes},
         {"mean_retrieval_ops", m.mean_retrieval_ops},
         {"timing", {{"mean_retrieval_time_s", m.mean_retrieval_time_s}}}};
}

inline void from_json(const json& j, MetricsReport& m) {
    j.at("tap25").get_to(m.tap25);
    j.at("stap25").get_to(m.stap25);
    j.at("success").get_to(m.success);
    j.at("mean_size_bytes").get_to(m.mean_size_bytes);
    j.at("mean_retrieval_ops").get_to(m.mean_retrieval_ops);
    j.at("timing").at("mean_retrieval_time_s").get_to(m.mean_retrieval_time_s);
}

// ---------------------------------------------------------------------------
// Digests and files

/// Removes every "timing" member, recursively. Wall-clock fields live only
/// under such keys so fingerprints stay reproducible.
inline json strip_timing(json j) {
    if (j.is_object()) {
        j.erase("timing");
        for (auto& [key, value] : j.items()) value = strip_timing(value);
    } else if (j.is_array()) {
        for (auto& value : j) value = strip_timing(value);
    }
    return j;
}

inline std::uint64_t json_digest(const json& j) { return fnv1a64(strip_timing(j).dump()); }

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    in >> j;
    return j;
}

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

}  // namespace omem
