#pragma once

// Brute-force reference implementations used only by tests. These are kept
// independent of the library code paths they check: geometry is rebuilt from
// raw triangle coordinates and graph searches run on coordinate sets.

#include "evospring/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>
#include <vector>

namespace oracles {

using Coord = std::pair<int, int>; // (x, row)
using Edge = std::pair<Coord, Coord>;

inline Edge make_edge(Coord a, Coord b) {
    if (b < a) std::swap(a, b);
    return {a, b};
}

// The three corners of cell (r, c): up-pointing triangles (r+c even) have two
// corners on mass row r, down-pointing ones on mass row r+1.
inline std::vector<Coord> cell_corners(int r, int c) {
    if ((r + c) % 2 == 0) return {{c, r}, {c + 2, r}, {c + 1, r + 1}};
    return {{c, r + 1}, {c + 2, r + 1}, {c + 1, r}};
}

inline std::vector<Edge> cell_edge_list(int r, int c) {
    const auto corners = cell_corners(r, c);
    return {make_edge(corners[0], corners[1]), make_edge(corners[0], corners[2]),
            make_edge(corners[1], corners[2])};
}

struct LatticeCounts {
    int masses = 0;
    int springs = 0;
    std::set<Coord> vertex_set;
    std::set<Edge> edge_set;
};

// Enumerates every vertex and edge of the (a, b) lattice by walking all cells.
inline LatticeCounts enumerate_lattice(int a, int b) {
    LatticeCounts counts;
    for (int r = 0; r < b; ++r) {
        for (int c = 0; c < a; ++c) {
            for (const auto& corner : cell_corners(r, c)) counts.vertex_set.insert(corner);
            for (const auto& edge : cell_edge_list(r, c)) counts.edge_set.insert(edge);
        }
    }
    counts.masses = static_cast<int>(counts.vertex_set.size());
    counts.springs = static_cast<int>(counts.edge_set.size());
    return counts;
}

// Flood fill over set cells with 4-neighborhood, ties resolved toward the
// component containing the smallest (row, col) cell.
inline std::set<std::pair<int, int>> flood_fill_lcc(const evospring::GeometryMask& mask) {
    std::set<std::pair<int, int>> remaining;
    for (int r = 0; r < mask.rows; ++r)
        for (int c = 0; c < mask.cols; ++c)
            if (mask.at(r, c)) remaining.insert({r, c});

    std::set<std::pair<int, int>> best;
    std::pair<int, int> best_anchor{mask.rows, mask.cols};
    while (!remaining.empty()) {
        const auto anchor = *remaining.begin();
        std::set<std::pair<int, int>> component;
        std::vector<std::pair<int, int>> stack{anchor};
        remaining.erase(anchor);
        while (!stack.empty()) {
            const auto [r, c] = stack.back();
            stack.pop_back();
            component.insert({r, c});
            const std::pair<int, int> nbs[4] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
            for (const auto& nb : nbs) {
                auto it = remaining.find(nb);
                if (it == remaining.end()) continue;
                remaining.erase(it);
                stack.push_back(nb);
            }
        }
        const auto anchor_of = *component.begin();
        if (component.size() > best.size() ||
            (component.size() == best.size() && anchor_of < best_anchor)) {
            best = component;
            best_anchor = anchor_of;
        }
    }
    return best;
}

inline std::set<std::pair<int, int>> mask_cells(const evospring::GeometryMask& mask) {
    std::set<std::pair<int, int>> cells;
    for (int r = 0; r < mask.rows; ++r)
        for (int c = 0; c < mask.cols; ++c)
            if (mask.at(r, c)) cells.insert({r, c});
    return cells;
}

// Rank vector with average ranks for ties, built by explicit enumeration.
inline std::vector<double> rank_by_counting(const std::vector<double>& xs) {
    const int n = static_cast<int>(xs.size());
    std::vector<double> ranks(xs.size());
    for (int i = 0; i < n; ++i) {
        int less = 0, equal = 0;
        for (int j = 0; j < n; ++j) {
            if (xs[j] < xs[i]) ++less;
            if (xs[j] == xs[i]) ++equal;
        }
        // average of ranks (less+1) .. (less+equal), 1-based
        ranks[static_cast<std::size_t>(i)] = less + (equal + 1) / 2.0;
    }
    return ranks;
}

// Pearson correlation straight from the definition.
inline double pearson_by_definition(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

inline double spearman_oracle(const std::vector<double>& xs, const std::vector<double>& ys) {
    return pearson_by_definition(rank_by_counting(xs), rank_by_counting(ys));
}

} // namespace oracles
