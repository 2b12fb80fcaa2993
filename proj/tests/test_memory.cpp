#include <catch2/catch_amalgamated.hpp>

#include "omem/memory.hpp"
#include "omem/rng.hpp"

using namespace omem;

namespace {

WriteRequest make_request(FrameIndex t, BoundingBox box = {0, 0, 10, 10}, double score = 1.0,
                          bool relevant = false) {
    WriteRequest req;
    req.t = t;
    req.box = box;
    req.frame_digest = static_cast<std::uint64_t>(t) * 1000 + 7;
    req.score = score;
    req.relevant = relevant;
    if (relevant) req.patch = PatchData{FeatureVector({1.0, 0.0}), 0.9, 0};
    return req;
}

}  // namespace

TEST_CASE("read_object returns full history in order") {
    ObjectMemory memory;
    const ObjectId id = memory.create_object(make_request(0));
    memory.write(id, make_request(1));
    memory.write(id, make_request(2));
    const ObjectEntry& entry = memory.read_object(id);
    REQUIRE(entry.records.size() == 3);
    CHECK(entry.records[0].t == 0);
    CHECK(entry.records[2].t == 2);
    CHECK(entry.discovery_t == 0);
}

TEST_CASE("read_object on empty memory is an error") {
    ObjectMemory memory;
    CHECK_THROWS_AS(memory.read_object(0), std::out_of_range);
}

TEST_CASE("boxes survive a break, frames do not") {
    ObjectMemory memory;
    const BoundingBox b0(0, 0, 4, 4), b1(1, 1, 4, 4), b5(2, 2, 4, 4);
    const ObjectId id = memory.create_object(make_request(0, b0));
    memory.write(id, make_request(1, b1));
    const WriteOutcome outcome = memory.write(id, make_request(5, b5));
    CHECK(outcome.break_detected);
    CHECK(outcome.frames_deleted == 2);

    const ObjectEntry& entry = memory.read_object(id);
    REQUIRE(entry.records.size() == 3);
    CHECK(entry.records[0].box == b0);
    CHECK(entry.records[1].box == b1);
    CHECK(entry.records[2].box == b5);
    CHECK_FALSE(entry.records[0].frame_ref.has_value());
    CHECK_FALSE(entry.records[1].frame_ref.has_value());
    CHECK(entry.records[2].frame_ref.has_value());
    CHECK(memory.audit().empty());
}

TEST_CASE("read_time returns exactly the records at t") {
    ObjectMemory memory;
    const ObjectId a = memory.create_object(make_request(3));
    memory.write(a, make_request(4));
    const ObjectId b = memory.create_object(make_request(4));
    CHECK(memory.read_time(3).size() == 1);
    const auto at4 = memory.read_time(4);
    REQUIRE(at4.size() == 2);
    CHECK(at4[0].first == a);
    CHECK(at4[1].first == b);
    CHECK(memory.read_time(99).empty());
}

TEST_CASE("shared frames are stored once") {
    ObjectMemory memory;
    memory.create_object(make_request(3));
    memory.create_object(make_request(3, {50, 50, 5, 5}));
    REQUIRE(memory.frame_store().size() == 1);
    CHECK(memory.frame_store().at(3).refcount == 2);
    // Frame bytes counted once despite two referencing records.
    CHECK(memory.size_bytes() ==
          memory.costs().full_frame_bytes + 2 * memory.costs().record_bytes);
}

TEST_CASE("break deletes only unshared frames") {
    ObjectMemory memory;
    const ObjectId a = memory.create_object(make_request(0));
    memory.write(a, make_request(1));
    memory.write(a, make_request(2));
    const ObjectId b = memory.create_object(make_request(2, {40, 40, 4, 4}));
    // Break on a: frames 0,1 deleted; frame 2 survives via b.
    const WriteOutcome outcome = memory.write(a, make_request(9));
    CHECK(outcome.break_detected);
    CHECK(outcome.frames_deleted == 2);
    CHECK(outcome.bytes_freed == 2 * memory.costs().full_frame_bytes);
    CHECK(memory.frame_store().count(2) == 1);
    CHECK(memory.frame_store().at(2).refcount == 1);
    CHECK(memory.audit().empty());
    (void)b;
}

TEST_CASE("single write to empty memory") {
    ObjectMemory memory;
    const ObjectId id = memory.create_object(make_request(0));
    CHECK(id == 0);
    CHECK(memory.object_count() == 1);
    CHECK(memory.frame_store().size() == 1);
}

TEST_CASE("write ordering and id errors") {
    ObjectMemory memory;
    const ObjectId id = memory.create_object(make_request(5));
    CHECK_THROWS_AS(memory.write(id, make_request(5)), std::invalid_argument);
    CHECK_THROWS_AS(memory.write(id, make_request(3)), std::invalid_argument);
    CHECK_THROWS_AS(memory.write(id + 1, make_request(6)), std::out_of_range);
    CHECK_THROWS_AS(memory.create_object_with_id(id, make_request(0)), std::invalid_argument);
}

TEST_CASE("latest_segment is the maximal contiguous suffix") {
    ObjectMemory memory;
    const ObjectId id = memory.create_object(make_request(1));
    memory.write(id, make_request(2));
    memory.write(id, make_request(3));
    memory.write(id, make_request(7));
    memory.write(id, make_request(8));
    const ResponseTrack track = memory.latest_segment(id);
    CHECK(track.interval() == TimeInterval{7, 8});

    const ObjectId single = memory.create_object(make_request(5, {30, 0, 2, 2}));
    CHECK(memory.latest_segment(single).interval() == TimeInterval{5, 5});

    ObjectMemory full;
    const ObjectId c = full.create_object(make_request(0));
    for (FrameIndex t = 1; t <= 9; ++t) full.write(c, make_request(t));
    CHECK(full.latest_segment(c).interval() == TimeInterval{0, 9});
}

TEST_CASE("size accounting") {
    ObjectMemory memory;
    CHECK(memory.size_bytes() == 0);
    memory.create_object(make_request(0, {0, 0, 2, 2}, 1.0, true));
    const ByteCosts& costs = memory.costs();
    CHECK(memory.size_bytes() ==
          costs.full_frame_bytes + costs.patch_bytes + costs.record_bytes);
}

TEST_CASE("set_relevance frees exactly the patch bytes") {
    ObjectMemory memory;
    const ObjectId id = memory.create_object(make_request(0, {0, 0, 2, 2}, 1.0, true));
    const std::uint64_t before = memory.size_bytes();
    const std::uint64_t freed = memory.set_relevance(id, 0, false);
    CHECK(freed == memory.costs().patch_bytes);
    CHECK(before - memory.size_bytes() == freed);
    CHECK(memory.set_relevance(id, 0, false) == 0);  // idempotent
    CHECK_THROWS_AS(memory.set_relevance(id, 0, true), std::invalid_argument);
    CHECK(memory.audit().empty());
}

TEST_CASE("relevant write requires a patch") {
    ObjectMemory memory;
    WriteRequest req = make_request(0);
    req.relevant = true;
    req.patch.reset();
    CHECK_THROWS_AS(memory.create_object(req), std::invalid_argument);
}

TEST_CASE("prune keeps everything under a large cap") {
    ObjectMemory memory;
    memory.create_object(make_request(0));
    memory.create_object(make_request(1, {30, 0, 2, 2}));
    const PruneResult result = memory.prune_to_budget(1ull << 40);
    CHECK(result.evicted.empty());
    CHECK_FALSE(result.over_cap);
    CHECK(memory.object_count() == 2);
}

TEST_CASE("prune evicts lowest-confidence, then oldest") {
    ObjectMemory memory;
    const ObjectId low = memory.create_object(make_request(0, {0, 0, 2, 2}, 0.4));
    const ObjectId high = memory.create_object(make_request(1, {30, 0, 2, 2}, 0.9));
    const std::uint64_t one_object =
        memory.costs().full_frame_bytes + memory.costs().record_bytes;
    const PruneResult result = memory.prune_to_budget(one_object);
    REQUIRE(result.evicted.size() == 1);
    CHECK(result.evicted[0] == low);
    CHECK(memory.contains(high));
    CHECK(memory.size_bytes() <= one_object);
    CHECK(memory.audit().empty());

    ObjectMemory tie;
    const ObjectId older = tie.create_object(make_request(0, {0, 0, 2, 2}, 0.7));
    const ObjectId newer = tie.create_object(make_request(4, {30, 0, 2, 2}, 0.7));
    const PruneResult tied = tie.prune_to_budget(one_object);
    REQUIRE(tied.evicted.size() == 1);
    CHECK(tied.evicted[0] == older);
    CHECK(tie.contains(newer));
}

TEST_CASE("prune keeps a single over-cap object with a warning") {
    ObjectMemory memory;
    const ObjectId id = memory.create_object(make_request(0));
    const PruneResult result = memory.prune_to_budget(16);
    CHECK(result.over_cap);
    CHECK(result.evicted.empty());
    CHECK(memory.contains(id));
    CHECK_THROWS_AS(memory.prune_to_budget(0), std::invalid_argument);
}

TEST_CASE("ids stay monotone across eviction") {
    ObjectMemory memory;
    memory.create_object(make_request(0, {0, 0, 2, 2}, 0.1));
    memory.create_object(make_request(1, {30, 0, 2, 2}, 0.9));
    memory.prune_to_budget(memory.costs().full_frame_bytes + memory.costs().record_bytes);
    const ObjectId fresh = memory.create_object(make_request(2, {60, 0, 2, 2}));
    CHECK(fresh == 2);
}

TEST_CASE("snapshot is isolated from later writes") {
    ObjectMemory memory;
    const ObjectId id = memory.create_object(make_request(0));
    const MemorySnapshot snap = memory.snapshot();
    memory.write(id, make_request(1));
    CHECK(snap.read_time(1).empty());
    CHECK(memory.read_time(1).size() == 1);

    const MemorySnapshot empty = ObjectMemory().snapshot();
    CHECK(empty.object_count() == 0);
}

TEST_CASE("snapshot equals a deep copy taken at the same instant") {
    ObjectMemory memory;
    const ObjectId id = memory.create_object(make_request(0, {0, 0, 3, 3}, 0.8, true));
    memory.write(id, make_request(1, {1, 0, 3, 3}));
    const MemorySnapshot snap = memory.snapshot();
    const ObjectMemory copy = memory;  // deep copy by value semantics
    memory.write(id, make_request(2, {2, 0, 3, 3}));

    REQUIRE(snap.entries().size() == copy.entries().size());
    CHECK(snap.entries().at(id) == copy.entries().at(id));
    CHECK(snap.size_bytes() == copy.size_bytes());
    CHECK(snap.latest_segment(id) == copy.latest_segment(id));
}

TEST_CASE("refcount audit holds over random operation sequences") {
    SeededRng rng(99);
    for (int round = 0; round < 30; ++round) {
        ObjectMemory memory;
        std::vector<ObjectId> live;
        FrameIndex t = 0;
        for (int op = 0; op < 200; ++op) {
            const double roll = rng.uniform();
            if (live.empty() || roll < 0.2) {
                live.push_back(memory.create_object(
                    make_request(t, {rng.uniform(0, 100), rng.uniform(0, 100), 5, 5},
                                 rng.uniform(0, 1), rng.bernoulli(0.5))));
            } else if (roll < 0.8) {
                const ObjectId id = live[static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<std::int64_t>(live.size()) - 1))];
                const FrameIndex gap = rng.bernoulli(0.25) ? rng.uniform_int(2, 6) : 1;
                const FrameIndex next = memory.last_time(id) + gap;
                memory.write(id, make_request(next, {rng.uniform(0, 100), rng.uniform(0, 100), 5, 5},
                                              rng.uniform(0, 1), rng.bernoulli(0.5)));
                t = std::max(t, next);
            } else if (roll < 0.9) {
                const ObjectId id = live[static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<std::int64_t>(live.size()) - 1))];
                const ObjectEntry& entry = memory.read_object(id);
                const auto& rec = entry.records[static_cast<std::size_t>(rng.uniform_int(
                    0, static_cast<std::int64_t>(entry.records.size()) - 1))];
                if (rec.relevant) memory.set_relevance(id, rec.t, false);
            } else {
                const auto cap = static_cast<std::uint64_t>(
                    rng.uniform(0.2, 1.2) * static_cast<double>(std::max<std::uint64_t>(
                                                1, memory.size_bytes())));
                const PruneResult pruned = memory.prune_to_budget(std::max<std::uint64_t>(cap, 1));
                for (ObjectId gone : pruned.evicted)
                    live.erase(std::find(live.begin(), live.end(), gone));
            }
            ++t;
            const auto issues = memory.audit();
            if (!issues.empty()) {
                CAPTURE(issues.front());
                REQUIRE(issues.empty());
            }
        }
    }
}
