#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace omem {

/// Fixed-dimension real appearance descriptor. The dimension is a run-wide
/// constant set by the active embedder; mixing dimensions is a usage error
/// surfaced by dot().
struct FeatureVector {
    std::vector<double> values;

    FeatureVector() = default;
    explicit FeatureVector(std::vector<double> v) : values(std::move(v)) {}

    std::size_t dim() const { return values.size(); }
    bool operator==(const FeatureVector&) const = default;
};

inline double dot(const FeatureVector& a, const FeatureVector& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
    return s;
}

inline double norm(const FeatureVector& a) {
    return std::sqrt(dot(a, a));
}

}  // namespace omem
