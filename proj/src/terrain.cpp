#include "evospring/terrain.hpp"

#include <algorithm>
#include <cmath>

namespace evospring {

namespace {

// Index of the segment under x, or -1 before the span / n past it.
int segment_index(const std::vector<TerrainSegment>& segments, double x) {
    if (segments.empty() || x < segments.front().start_x) return -1;
    if (x >= segments.back().end_x()) return static_cast<int>(segments.size());
    int lo = 0, hi = static_cast<int>(segments.size()) - 1;
    while (lo < hi) {
        const int mid = (lo + hi + 1) / 2;
        if (segments[static_cast<std::size_t>(mid)].start_x <= x)
            lo = mid;
        else
            hi = mid - 1;
    }
    return lo;
}

} // namespace

double Terrain::height(double x) const {
    if (kind == Kind::Flat || segments.empty()) return 0.0;
    const int idx = segment_index(segments, x);
    if (idx < 0) return segments.front().start_y;
    if (idx >= static_cast<int>(segments.size())) return segments.back().end_y();
    return segments[static_cast<std::size_t>(idx)].height_at(x);
}

double Terrain::slope_at(double x) const {
    if (kind == Kind::Flat || segments.empty()) return 0.0;
    const int idx = segment_index(segments, x);
    if (idx < 0 || idx >= static_cast<int>(segments.size())) return 0.0;
    return segments[static_cast<std::size_t>(idx)].slope;
}

std::pair<double, Vec2> Terrain::height_and_normal(double x) const {
    const double slope = slope_at(x);
    const double inv = 1.0 / std::sqrt(1.0 + slope * slope);
    return {height(x), Vec2{-slope * inv, inv}};
}

Terrain flat_terrain() {
    return Terrain{};
}

Terrain generate_rugged(Rng& rng, std::pair<double, double> slope_range,
                        std::pair<double, double> length_range, double max_extent) {
    Terrain terrain;
    terrain.kind = Terrain::Kind::Rugged;
    double x = 0.0, y = 0.0;
    while (x - 0.0 < max_extent) {
        TerrainSegment seg;
        seg.start_x = x;
        seg.start_y = y;
        seg.slope = rng.uniform(slope_range.first, slope_range.second);
        seg.length_x = rng.uniform(length_range.first, length_range.second);
        terrain.segments.push_back(seg);
        x = seg.end_x();
        y = seg.end_y();
    }
    return terrain;
}

} // namespace evospring
