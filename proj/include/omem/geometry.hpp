#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace omem {

using FrameIndex = std::int64_t;

/// Axis-aligned box in pixel coordinates, top-left anchored. Real-valued:
/// no pixel-grid rasterization, so overlap math is exact.
struct BoundingBox {
    double x = 0.0;
    double y = 0.0;
    double w = 1.0;
    double h = 1.0;

    BoundingBox() = default;
    BoundingBox(double x_, double y_, double w_, double h_) : x(x_), y(y_), w(w_), h(h_) {
        if (!(w > 0.0) || !(h > 0.0)) throw std::invalid_argument("BoundingBox: non-positive extent");
        if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(w) || !std::isfinite(h))
            throw std::invalid_argument("BoundingBox: non-finite coordinate");
    }

    double right() const { return x + w; }
    double bottom() const { return y + h; }
    double area() const { return w * h; }

    bool operator==(const BoundingBox&) const = default;
};

inline double intersection_area(const BoundingBox& a, const BoundingBox& b) {
    const double iw = std::min(a.right(), b.right()) - std::max(a.x, b.x);
    const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    return iw * ih;
}

/// Intersection over union of two boxes, in [0, 1].
inline double box_iou(const BoundingBox& a, const BoundingBox& b) {
    const double inter = intersection_area(a, b);
    const double uni = a.area() + b.area() - inter;
    return inter / uni;
}

/// Closed frame range [start, end]; a single-frame interval has length 1.
struct TimeInterval {
    FrameIndex start = 0;
    FrameIndex end = 0;

    TimeInterval() = default;
    TimeInterval(FrameIndex s, FrameIndex e) : start(s), end(e) {
        if (s < 0) throw std::invalid_argument("TimeInterval: negative start");
        if (e < s) throw std::invalid_argument("TimeInterval: end before start");
    }

    FrameIndex length() const { return end - start + 1; }
    bool operator==(const TimeInterval&) const = default;
};

/// Overlap over union in whole frames, inclusive at both endpoints.
inline double temporal_iou(const TimeInterval& a, const TimeInterval& b) {
    const FrameIndex inter =
        std::min(a.end, b.end) - std::max(a.start, b.start) + 1;
    if (inter <= 0) return 0.0;
    const FrameIndex uni = a.length() + b.length() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

struct TrackEntry {
    FrameIndex frame = 0;
    BoundingBox box;

    bool operator==(const TrackEntry&) const = default;
};

/// Contiguous ordered run of (frame, box) pairs. Both predictions and
/// ground truth use this type; contiguity (step of exactly 1) and
/// non-emptiness are constructor-enforced.
class ResponseTrack {
public:
    explicit ResponseTrack(std::vector<TrackEntry> entries) : entries_(std::move(entries)) {
        if (entries_.empty()) throw std::invalid_argument("ResponseTrack: empty");
        for (std::size_t i = 0; i + 1 < entries_.size(); ++i) {
            if (entries_[i + 1].frame != entries_[i].frame + 1)
                throw std::invalid_argument("ResponseTrack: frames not contiguous");
        }
        if (entries_.front().frame < 0) throw std::invalid_argument("ResponseTrack: negative frame");
    }

    const std::vector<TrackEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    FrameIndex start() const { return entries_.front().frame; }
    FrameIndex end() const { return entries_.back().frame; }
    TimeInterval interval() const { return {start(), end()}; }

    bool operator==(const ResponseTrack&) const = default;

private:
    std::vector<TrackEntry> entries_;
};

/// Spatio-temporal tube overlap: per-frame intersection areas summed over
/// the union of both frame sets, divided by per-frame union areas. A frame
/// covered by only one track contributes that track's full box area to the
/// denominator.
inline double tube_iou(const ResponseTrack& a, const ResponseTrack& b) {
    double inter_sum = 0.0;
    double union_sum = 0.0;
    std::size_t i = 0;
    std::size_t j = 0;
    const auto& ea = a.entries();
    const auto& eb = b.entries();
    while (i < ea.size() || j < eb.size()) {
        if (j >= eb.size() || (i < ea.size() && ea[i].frame < eb[j].frame)) {
            union_sum += ea[i].box.area();
            ++i;
        } else if (i >= ea.size() || eb[j].frame < ea[i].frame) {
            union_sum += eb[j].box.area();
            ++j;
        } else {
            const double inter = intersection_area(ea[i].box, eb[j].box);
            inter_sum += inter;
            union_sum += ea[i].box.area() + eb[j].box.area() - inter;
            ++i;
            ++j;
        }
    }
    return inter_sum / union_sum;
}

}  // namespace omem
