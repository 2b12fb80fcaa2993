#include <catch2/catch_amalgamated.hpp>

#include "omem/geometry.hpp"
#include "omem/rng.hpp"

using namespace omem;

namespace {

BoundingBox random_box(SeededRng& rng) {
    return {rng.uniform(-50.0, 200.0), rng.uniform(-50.0, 200.0), rng.uniform(0.5, 120.0),
            rng.uniform(0.5, 120.0)};
}

ResponseTrack random_track(SeededRng& rng) {
    const FrameIndex start = rng.uniform_int(0, 30);
    const FrameIndex len = rng.uniform_int(1, 12);
    std::vector<TrackEntry> entries;
    for (FrameIndex f = 0; f < len; ++f) entries.push_back({start + f, random_box(rng)});
    return ResponseTrack(std::move(entries));
}

ResponseTrack constant_track(FrameIndex start, FrameIndex len, const BoundingBox& box) {
    std::vector<TrackEntry> entries;
    for (FrameIndex f = 0; f < len; ++f) entries.push_back({start + f, box});
    return ResponseTrack(std::move(entries));
}

}  // namespace

TEST_CASE("bounding box validation") {
    CHECK_THROWS_AS(BoundingBox(0, 0, 0, 5), std::invalid_argument);
    CHECK_THROWS_AS(BoundingBox(0, 0, 5, -1), std::invalid_argument);
    CHECK_THROWS_AS(BoundingBox(std::nan(""), 0, 5, 5), std::invalid_argument);
    CHECK_NOTHROW(BoundingBox(-3.5, 2.0, 0.1, 0.1));
}

TEST_CASE("box_iou hand values") {
    CHECK(box_iou({0, 0, 10, 10}, {0, 0, 10, 10}) == 1.0);
    CHECK(box_iou({0, 0, 5, 5}, {10, 10, 5, 5}) == 0.0);
    // 10x10 boxes offset by 5: overlap 50, union 150.
    CHECK(box_iou({0, 0, 10, 10}, {5, 0, 10, 10}) == Catch::Approx(1.0 / 3.0).epsilon(1e-12));
    // Touching edges do not intersect.
    CHECK(box_iou({0, 0, 5, 5}, {5, 0, 5, 5}) == 0.0);
}

TEST_CASE("temporal_iou hand values") {
    CHECK(temporal_iou({0, 9}, {0, 9}) == 1.0);
    CHECK(temporal_iou({0, 4}, {5, 9}) == 0.0);
    // Inclusive endpoints: overlap {5..9} = 5 frames, union {0..14} = 15.
    CHECK(temporal_iou({0, 9}, {5, 14}) == Catch::Approx(5.0 / 15.0).epsilon(1e-12));
    // Single-frame intervals have length 1.
    CHECK(temporal_iou({3, 3}, {3, 3}) == 1.0);
    CHECK(temporal_iou({3, 3}, {4, 4}) == 0.0);
    CHECK(temporal_iou({0, 1}, {1, 1}) == Catch::Approx(0.5));
}

TEST_CASE("interval validation") {
    CHECK_THROWS_AS(TimeInterval(5, 4), std::invalid_argument);
    CHECK_THROWS_AS(TimeInterval(-1, 4), std::invalid_argument);
}

TEST_CASE("response track contiguity") {
    CHECK_THROWS_AS(ResponseTrack({}), std::invalid_argument);
    CHECK_THROWS_AS(ResponseTrack({{0, {0, 0, 1, 1}}, {2, {0, 0, 1, 1}}}), std::invalid_argument);
    CHECK_THROWS_AS(ResponseTrack({{1, {0, 0, 1, 1}}, {1, {0, 0, 1, 1}}}), std::invalid_argument);
    const ResponseTrack t({{4, {0, 0, 1, 1}}, {5, {0, 0, 2, 2}}});
    CHECK(t.interval() == TimeInterval{4, 5});
}

TEST_CASE("tube_iou hand values") {
    const BoundingBox box(0, 0, 10, 10);
    const ResponseTrack a = constant_track(0, 10, box);
    CHECK(tube_iou(a, a) == 1.0);

    const ResponseTrack disjoint = constant_track(20, 10, box);
    CHECK(tube_iou(a, disjoint) == 0.0);

    // Same boxes shifted 5 frames: shared 5 frames contribute 500/500,
    // each exclusive span adds 500 to the union.
    const ResponseTrack b = constant_track(5, 10, box);
    CHECK(tube_iou(a, b) == Catch::Approx(500.0 / 1500.0).epsilon(1e-12));
}

TEST_CASE("tube_iou single-frame reduces to box_iou") {
    SeededRng rng(2024);
    for (int i = 0; i < 2000; ++i) {
        const BoundingBox a = random_box(rng);
        const BoundingBox b = random_box(rng);
        const FrameIndex t = rng.uniform_int(0, 100);
        const ResponseTrack ta({{t, a}});
        const ResponseTrack tb({{t, b}});
        REQUIRE(tube_iou(ta, tb) == Catch::Approx(box_iou(a, b)).margin(1e-12));
    }
}

TEST_CASE("iou range and symmetry properties") {
    SeededRng rng(7);
    constexpr int samples = 100000;
    for (int i = 0; i < samples; ++i) {
        const BoundingBox a = random_box(rng);
        const BoundingBox b = random_box(rng);
        const double ab = box_iou(a, b);
        REQUIRE(ab >= 0.0);
        REQUIRE(ab <= 1.0);
        REQUIRE(ab == box_iou(b, a));

        const TimeInterval ia(rng.uniform_int(0, 50), rng.uniform_int(50, 100));
        const TimeInterval ib(rng.uniform_int(0, 50), rng.uniform_int(50, 100));
        const double tio = temporal_iou(ia, ib);
        REQUIRE(tio >= 0.0);
        REQUIRE(tio <= 1.0);
        REQUIRE(tio == temporal_iou(ib, ia));
    }
    for (int i = 0; i < 20000; ++i) {
        const ResponseTrack ta = random_track(rng);
        const ResponseTrack tb = random_track(rng);
        const double tube = tube_iou(ta, tb);
        REQUIRE(tube >= 0.0);
        REQUIRE(tube <= 1.0);
        REQUIRE(tube == tube_iou(tb, ta));
        REQUIRE(tube_iou(ta, ta) == 1.0);
    }
}
