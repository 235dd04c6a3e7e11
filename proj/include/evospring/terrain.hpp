#pragma once

#include "evospring/geometry.hpp"
#include "evospring/rng.hpp"

#include <utility>
#include <vector>

namespace evospring {

struct TerrainSegment {
    double start_x = 0.0;
    double start_y = 0.0;
    double slope = 0.0;
    double length_x = 0.0;

    double end_x() const { return start_x + length_x; }
    double end_y() const { return start_y + slope * length_x; }
    double height_at(double x) const { return start_y + slope * (x - start_x); }

    friend bool operator==(const TerrainSegment&, const TerrainSegment&) = default;
};

// Flat ground at y = 0, or piecewise-linear segments stitched endpoint to
// endpoint. Outside the generated span the boundary heights extend with slope
// zero so height queries are total.
struct Terrain {
    enum class Kind { Flat, Rugged };

    Kind kind = Kind::Flat;
    std::vector<TerrainSegment> segments;

    double height(double x) const;
    // (height, upward unit normal) of the local surface.
    std::pair<double, Vec2> height_and_normal(double x) const;
    // Slope of the surface under x (0 on flat ground and on the extensions).
    double slope_at(double x) const;

    double span_start() const { return segments.empty() ? 0.0 : segments.front().start_x; }
    double span_end() const { return segments.empty() ? 0.0 : segments.back().end_x(); }

    friend bool operator==(const Terrain&, const Terrain&) = default;
};

Terrain flat_terrain();

// Segments with slope ~ U(slope_range) and horizontal length ~ U(length_range)
// are appended from (0, 0) until the cumulative horizontal length reaches
// max_extent.
Terrain generate_rugged(Rng& rng, std::pair<double, double> slope_range,
                        std::pair<double, double> length_range, double max_extent = 1.25);

} // namespace evospring
