#include "evospring/lattice.hpp"

#include "evospring/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace evospring {

namespace {

constexpr double kRowHeight = 1.7320508075688772; // sqrt(3), triangle side 2

// Masses in row r occupy x = r%2, r%2+2, ... while x <= a+1.
int masses_in_row(int a, int row) {
    const int offset = row % 2;
    return (a + 1 - offset) / 2 + 1;
}

} // namespace

int LatticeIndex::mass_at(int x, int row) const {
    if (row < 0 || row > dims.b) return -1;
    const int offset = row % 2;
    if (x < offset || x > dims.a + 1 || (x - offset) % 2 != 0) return -1;
    int id = 0;
    for (int r = 0; r < row; ++r) id += masses_in_row(dims.a, r);
    return id + (x - offset) / 2;
}

LatticeIndex build_lattice_index(LatticeDims dims) {
    LatticeIndex index;
    index.dims = dims;
    const int a = dims.a;
    const int b = dims.b;

    for (int row = 0; row <= b; ++row) {
        const int offset = row % 2;
        for (int x = offset; x <= a + 1; x += 2)
            index.mass_positions.emplace_back(static_cast<double>(x), row * kRowHeight);
    }

    // Horizontal springs, then zigzag diagonals; both keyed for cell lookup.
    std::map<std::pair<int, int>, int> horizontal; // (row, left x) -> spring id
    std::map<std::pair<int, int>, int> diagonal;   // (triangle row, left x) -> spring id
    for (int row = 0; row <= b; ++row) {
        const int offset = row % 2;
        for (int x = offset; x + 2 <= a + 1; x += 2) {
            horizontal[{row, x}] = index.spring_count();
            index.spring_endpoints.emplace_back(index.mass_at(x, row), index.mass_at(x + 2, row));
        }
    }
    for (int trow = 0; trow < b; ++trow) {
        for (int x = 0; x <= a; ++x) {
            const int row_of_x = (x % 2 == trow % 2) ? trow : trow + 1;
            const int row_of_next = (row_of_x == trow) ? trow + 1 : trow;
            diagonal[{trow, x}] = index.spring_count();
            int m0 = index.mass_at(x, row_of_x);
            int m1 = index.mass_at(x + 1, row_of_next);
            if (m0 > m1) std::swap(m0, m1);
            index.spring_endpoints.emplace_back(m0, m1);
        }
    }

    // Cell (r, c) spans x in [c, c+2]; it points up iff r+c is even, with its
    // horizontal edge on mass row r (up) or r+1 (down) and diagonals at c, c+1.
    index.cell_edges.resize(static_cast<std::size_t>(a) * b);
    index.cell_adjacency.resize(static_cast<std::size_t>(a) * b);
    for (int r = 0; r < b; ++r) {
        for (int c = 0; c < a; ++c) {
            const bool up = (r + c) % 2 == 0;
            const int cell = r * a + c;
            index.cell_edges[cell] = {horizontal.at({up ? r : r + 1, c}),
                                      diagonal.at({r, c}),
                                      diagonal.at({r, c + 1})};
            auto& adj = index.cell_adjacency[cell];
            adj[0] = (c > 0) ? cell - 1 : -1;
            adj[1] = (c + 1 < a) ? cell + 1 : -1;
            adj[2] = (r > 0) ? cell - a : -1;
            adj[3] = (r + 1 < b) ? cell + a : -1;
        }
    }
    return index;
}

GeometryMask fill_implied_cells(const GeometryMask& mask, const LatticeIndex& index) {
    std::vector<std::uint8_t> edge_present(static_cast<std::size_t>(index.spring_count()), 0);
    for (int cell = 0; cell < index.cell_count(); ++cell) {
        if (!mask.bits[static_cast<std::size_t>(cell)]) continue;
        for (int edge : index.cell_edges[static_cast<std::size_t>(cell)])
            edge_present[static_cast<std::size_t>(edge)] = 1;
    }
    GeometryMask filled = mask;
    for (int cell = 0; cell < index.cell_count(); ++cell) {
        if (filled.bits[static_cast<std::size_t>(cell)]) continue;
        const auto& edges = index.cell_edges[static_cast<std::size_t>(cell)];
        if (edge_present[static_cast<std::size_t>(edges[0])] &&
            edge_present[static_cast<std::size_t>(edges[1])] &&
            edge_present[static_cast<std::size_t>(edges[2])])
            filled.bits[static_cast<std::size_t>(cell)] = 1;
    }
    return filled;
}

GeometryMask largest_connected_component(const GeometryMask& mask, const LatticeIndex& index) {
    const int n = index.cell_count();
    std::vector<std::uint8_t> visited(static_cast<std::size_t>(n), 0);
    std::vector<int> best, stack, current;
    for (int start = 0; start < n; ++start) {
        if (!mask.bits[static_cast<std::size_t>(start)] || visited[static_cast<std::size_t>(start)])
            continue;
        current.clear();
        stack.assign(1, start);
        visited[static_cast<std::size_t>(start)] = 1;
        while (!stack.empty()) {
            const int cell = stack.back();
            stack.pop_back();
            current.push_back(cell);
            for (int nb : index.cell_adjacency[static_cast<std::size_t>(cell)]) {
                if (nb < 0 || visited[static_cast<std::size_t>(nb)]) continue;
                if (!mask.bits[static_cast<std::size_t>(nb)]) continue;
                visited[static_cast<std::size_t>(nb)] = 1;
                stack.push_back(nb);
            }
        }
        // Scan order is row-major, so the first component reaching the maximal
        // size is the one anchored at the smallest (row, col) cell.
        if (current.size() > best.size()) best = current;
    }
    GeometryMask out(mask.rows, mask.cols);
    for (int cell : best) out.bits[static_cast<std::size_t>(cell)] = 1;
    return out;
}

GeometryMask expressed_cells(const GeometryMask& mask, const LatticeIndex& index) {
    return largest_connected_component(fill_implied_cells(mask, index), index);
}

Morphology decode(const Genome& genome) {
    return decode(genome, build_lattice_index(genome.dims));
}

Morphology decode(const Genome& genome, const LatticeIndex& index) {
    if (genome.geometry.rows != genome.dims.b || genome.geometry.cols != genome.dims.a)
        throw ShapeMismatch("genome geometry mask does not match lattice dims");
    if (static_cast<int>(genome.springs.bits.size()) != index.spring_count())
        throw ShapeMismatch("genome spring vector does not match lattice spring count");

    Morphology morph;
    morph.cells = expressed_cells(genome.geometry, index);
    if (!morph.cells.any())
        throw EmptyMorphology("expressed morphology is empty");

    std::vector<int> mass_local(static_cast<std::size_t>(index.mass_count()), -1);
    std::vector<std::uint8_t> spring_used(static_cast<std::size_t>(index.spring_count()), 0);
    for (int cell = 0; cell < index.cell_count(); ++cell) {
        if (!morph.cells.bits[static_cast<std::size_t>(cell)]) continue;
        for (int edge : index.cell_edges[static_cast<std::size_t>(cell)]) {
            spring_used[static_cast<std::size_t>(edge)] = 1;
            const auto [mi, mj] = index.spring_endpoints[static_cast<std::size_t>(edge)];
            mass_local[static_cast<std::size_t>(mi)] = 0;
            mass_local[static_cast<std::size_t>(mj)] = 0;
        }
    }

    for (int id = 0; id < index.mass_count(); ++id) {
        if (mass_local[static_cast<std::size_t>(id)] < 0) continue;
        mass_local[static_cast<std::size_t>(id)] = morph.mass_count();
        morph.masses.push_back(index.mass_positions[static_cast<std::size_t>(id)]);
    }

    for (int id = 0; id < index.spring_count(); ++id) {
        if (!spring_used[static_cast<std::size_t>(id)]) continue;
        const auto [mi, mj] = index.spring_endpoints[static_cast<std::size_t>(id)];
        MorphSpring spring;
        spring.i = mass_local[static_cast<std::size_t>(mi)];
        spring.j = mass_local[static_cast<std::size_t>(mj)];
        spring.lattice_spring_id = id;
        spring.rest_length = (morph.masses[static_cast<std::size_t>(spring.j)] -
                              morph.masses[static_cast<std::size_t>(spring.i)])
                                 .norm();
        spring.active = genome.springs.bits[static_cast<std::size_t>(id)] != 0;
        morph.active_spring_count += spring.active ? 1 : 0;
        morph.springs.push_back(spring);
    }

    double min_x = morph.masses[0].x, min_y = morph.masses[0].y;
    for (const auto& p : morph.masses) {
        min_x = std::min(min_x, p.x);
        min_y = std::min(min_y, p.y);
    }
    for (auto& p : morph.masses) {
        p.x -= min_x;
        p.y -= min_y;
    }
    return morph;
}

Genome random_genome(Rng& rng, LatticeDims dims) {
    const LatticeIndex index = build_lattice_index(dims);
    Genome genome;
    genome.dims = dims;
    genome.geometry = GeometryMask(dims.b, dims.a);
    do {
        for (auto& bit : genome.geometry.bits) bit = rng.bernoulli(0.5) ? 1 : 0;
    } while (!genome.geometry.any());
    genome.springs.bits.assign(static_cast<std::size_t>(index.spring_count()), 0);
    do {
        for (auto& bit : genome.springs.bits) bit = rng.bernoulli(0.5) ? 1 : 0;
    } while (!genome.springs.any());
    return genome;
}

} // namespace evospring
