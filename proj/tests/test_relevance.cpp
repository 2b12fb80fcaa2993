#include <algorithm>
#include <map>

#include <catch2/catch_amalgamated.hpp>

#include "omem/relevance.hpp"
#include "omem/rng.hpp"

using namespace omem;

namespace {

PatchData patch_with(double distinctiveness) {
    return PatchData{FeatureVector({1.0, 0.0}), distinctiveness, 0};
}

/// Drives labeler + memory the way the population loop does.
struct Writer {
    ObjectMemory memory;
    ThresholdAssessor assessor{0.5};
    RelevanceLabeler labeler;
    std::uint64_t bytes_freed = 0;

    explicit Writer(PatchPolicy policy) : labeler(policy, assessor) {}

    ObjectId discover(FrameIndex t, double distinctiveness) {
        const PatchData patch = patch_with(distinctiveness);
        WriteRequest req;
        req.t = t;
        req.box = {0, 0, 10, 10};
        req.frame_digest = static_cast<std::uint64_t>(t);
        req.relevant = labeler.label_discovery(patch);
        if (req.relevant) req.patch = patch;
        const ObjectId id = memory.create_object(req);
        labeler.register_discovery(id, t, patch);
        return id;
    }

    void update(ObjectId id, FrameIndex t, double distinctiveness) {
        const PatchData patch = patch_with(distinctiveness);
        WriteRequest req;
        req.t = t;
        req.box = {0, 0, 10, 10};
        req.frame_digest = static_cast<std::uint64_t>(t);
        req.relevant = labeler.label_update(memory, id, t, patch, &bytes_freed);
        if (req.relevant) req.patch = patch;
        memory.write(id, req);
    }
};

std::vector<FrameIndex> relevant_times(const ObjectMemory& memory, ObjectId id) {
    std::vector<FrameIndex> out;
    for (const ObjectRecord& rec : memory.read_object(id).records)
        if (rec.relevant) out.push_back(rec.t);
    return out;
}

}  // namespace

TEST_CASE("threshold assessor boundary convention") {
    const ThresholdAssessor assessor(0.5);
    CHECK(assessor.suitable(patch_with(1.0)));
    CHECK_FALSE(assessor.suitable(patch_with(0.0)));
    CHECK(assessor.suitable(patch_with(0.5)));  // exactly at threshold counts
    CHECK(parse_patch_policy("mr1star") == PatchPolicy::mr1_star);
    CHECK_THROWS_AS(parse_patch_policy("mr9"), std::invalid_argument);
}

TEST_CASE("mr3 keeps only the discovery patch") {
    Writer w(PatchPolicy::mr3);
    const ObjectId id = w.discover(0, 0.9);
    for (FrameIndex t = 1; t < 10; ++t) w.update(id, t, 0.9);
    CHECK(relevant_times(w.memory, id) == std::vector<FrameIndex>{0});
}

TEST_CASE("mr1star keeps discovery plus first and last valid of the segment") {
    // Discovery patch valid: it doubles as the segment-first valid patch.
    Writer w(PatchPolicy::mr1_star);
    const ObjectId id = w.discover(0, 0.9);
    for (FrameIndex t = 1; t < 10; ++t) w.update(id, t, 0.9);
    CHECK(relevant_times(w.memory, id) == std::vector<FrameIndex>{0, 9});

    // Discovery patch invalid: discovery keeps its privileged label and the
    // first/last pointers land on later records, giving three in total.
    Writer v(PatchPolicy::mr1_star);
    const ObjectId jd = v.discover(0, 0.1);
    for (FrameIndex t = 1; t < 10; ++t) v.update(jd, t, 0.9);
    CHECK(relevant_times(v.memory, jd) == std::vector<FrameIndex>{0, 1, 9});
}

TEST_CASE("mr1star demotes the moving last-valid pointer online") {
    Writer w(PatchPolicy::mr1_star);
    const ObjectId id = w.discover(0, 0.9);
    w.update(id, 1, 0.9);
    CHECK(relevant_times(w.memory, id) == std::vector<FrameIndex>{0, 1});
    w.update(id, 2, 0.9);
    CHECK(relevant_times(w.memory, id) == std::vector<FrameIndex>{0, 2});
    CHECK(w.bytes_freed == w.memory.costs().patch_bytes);  // t=1 patch released
    w.update(id, 3, 0.2);  // invalid patch moves nothing
    CHECK(relevant_times(w.memory, id) == std::vector<FrameIndex>{0, 2});
}

TEST_CASE("mr2 keeps every valid patch of the segment") {
    Writer w(PatchPolicy::mr2);
    const ObjectId id = w.discover(0, 0.9);
    w.update(id, 1, 0.9);
    w.update(id, 2, 0.1);
    w.update(id, 3, 0.9);
    CHECK(relevant_times(w.memory, id) == std::vector<FrameIndex>{0, 1, 3});
}

TEST_CASE("mr2 with an all-rejecting assessor keeps only discovery") {
    Writer w(PatchPolicy::mr2);
    const ObjectId id = w.discover(0, 0.1);
    for (FrameIndex t = 1; t < 6; ++t) w.update(id, t, 0.1);
    CHECK(relevant_times(w.memory, id) == std::vector<FrameIndex>{0});
}

TEST_CASE("segment close releases non-discovery patches") {
    Writer w(PatchPolicy::mr1_star);
    const ObjectId id = w.discover(0, 0.9);
    for (FrameIndex t = 1; t <= 4; ++t) w.update(id, t, 0.9);
    CHECK(relevant_times(w.memory, id) == std::vector<FrameIndex>{0, 4});

    const std::uint64_t before = w.memory.size_bytes();
    w.update(id, 10, 0.9);  // break: closes [0,4]
    CHECK(relevant_times(w.memory, id) == std::vector<FrameIndex>{0, 10});
    // t=4's patch came back as freed bytes (plus the break's frame bytes).
    CHECK(w.memory.size_bytes() <
          before + w.memory.costs().full_frame_bytes + w.memory.costs().patch_bytes);
    CHECK(w.memory.audit().empty());
}

TEST_CASE("single-segment object never finalizes") {
    Writer w(PatchPolicy::mr2);
    const ObjectId id = w.discover(0, 0.9);
    for (FrameIndex t = 1; t <= 5; ++t) w.update(id, t, 0.9);
    CHECK(relevant_times(w.memory, id).size() == 6);
    CHECK(w.bytes_freed == 0);
}

TEST_CASE("mr4 grants discovery no privilege") {
    Writer w(PatchPolicy::mr4);
    const ObjectId id = w.discover(0, 0.9);
    for (FrameIndex t = 1; t <= 4; ++t) w.update(id, t, 0.9);
    // Valid discovery still qualifies as the segment-first valid patch.
    CHECK(relevant_times(w.memory, id) == std::vector<FrameIndex>{0, 4});
    w.update(id, 10, 0.9);
    // Both pointers of the closed segment are released, discovery included.
    CHECK(relevant_times(w.memory, id) == std::vector<FrameIndex>{10});

    Writer v(PatchPolicy::mr4);
    const ObjectId jd = v.discover(0, 0.1);  // invalid discovery keeps c=0
    CHECK(relevant_times(v.memory, jd).empty());
}

TEST_CASE("policy none retains everything") {
    Writer w(PatchPolicy::none);
    const ObjectId id = w.discover(0, 0.1);
    for (FrameIndex t : {1, 2, 3, 9, 10}) w.update(id, t, 0.1);
    CHECK(relevant_times(w.memory, id).size() == 6);
    CHECK(w.bytes_freed == 0);
}

TEST_CASE("retained-count bounds and ordering across policies") {
    SeededRng rng(41);
    for (int round = 0; round < 50; ++round) {
        // One random write sequence, replayed under each policy.
        std::vector<std::pair<FrameIndex, double>> sequence;
        FrameIndex t = 0;
        const int writes = static_cast<int>(rng.uniform_int(2, 40));
        for (int i = 0; i < writes; ++i) {
            sequence.emplace_back(t, rng.uniform(0.0, 1.0));
            t += rng.bernoulli(0.15) ? rng.uniform_int(2, 5) : 1;
        }

        std::map<PatchPolicy, std::size_t> retained;
        for (PatchPolicy policy :
             {PatchPolicy::mr1_star, PatchPolicy::mr2, PatchPolicy::mr3, PatchPolicy::none}) {
            Writer w(policy);
            ObjectId id = 0;
            bool started = false;
            std::size_t max_live = 0;
            for (const auto& [when, dist] : sequence) {
                if (!started) {
                    id = w.discover(when, dist);
                    started = true;
                } else {
                    w.update(id, when, dist);
                }
                max_live = std::max(max_live, relevant_times(w.memory, id).size());
                if (policy == PatchPolicy::mr1_star)
                    REQUIRE(relevant_times(w.memory, id).size() <= 3);
                if (policy == PatchPolicy::mr3)
                    REQUIRE(relevant_times(w.memory, id).size() == 1);
            }
            retained[policy] = relevant_times(w.memory, id).size();
            REQUIRE(w.memory.audit().empty());
        }
        REQUIRE(retained[PatchPolicy::mr3] <= retained[PatchPolicy::mr1_star]);
        REQUIRE(retained[PatchPolicy::mr1_star] <= retained[PatchPolicy::mr2]);
        REQUIRE(retained[PatchPolicy::mr2] <= retained[PatchPolicy::none]);
    }
}
