#pragma once

#include "evospring/geometry.hpp"
#include "evospring/rng.hpp"

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace evospring {

// Triangular design lattice: `a` triangles across, `b` triangle rows stacked
// vertically. Triangles are equilateral with side length 2, so mass row r sits
// at y = r*sqrt(3) and holds masses at x in {r%2, r%2+2, ...} up to a+1.
struct LatticeDims {
    int a = 1;
    int b = 1;

    friend bool operator==(const LatticeDims&, const LatticeDims&) = default;
};

// Binary matrix over lattice cells, shape (b, a), row-major.
struct GeometryMask {
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> bits;

    GeometryMask() = default;
    GeometryMask(int rows_, int cols_)
        : rows(rows_), cols(cols_), bits(static_cast<std::size_t>(rows_) * cols_, 0) {}

    bool at(int r, int c) const { return bits[static_cast<std::size_t>(r) * cols + c] != 0; }
    void set(int r, int c, bool v) { bits[static_cast<std::size_t>(r) * cols + c] = v ? 1 : 0; }

    bool any() const {
        for (auto bit : bits)
            if (bit) return true;
        return false;
    }

    int count() const {
        int n = 0;
        for (auto bit : bits) n += bit;
        return n;
    }

    friend bool operator==(const GeometryMask&, const GeometryMask&) = default;
};

// Binary activity vector over every possible spring of the lattice.
struct SpringVector {
    std::vector<std::uint8_t> bits;

    bool any() const {
        for (auto bit : bits)
            if (bit) return true;
        return false;
    }

    int count() const {
        int n = 0;
        for (auto bit : bits) n += bit;
        return n;
    }

    friend bool operator==(const SpringVector&, const SpringVector&) = default;
};

struct Genome {
    LatticeDims dims;
    GeometryMask geometry;
    SpringVector springs;

    friend bool operator==(const Genome&, const Genome&) = default;
};

// Deterministic enumeration of every mass and spring of the (a, b) lattice.
// Springs are numbered with all horizontal springs first (by mass row, then
// left to right), followed by the zigzag diagonals (by triangle row, then left
// to right). Cell ids are r*a + c.
struct LatticeIndex {
    LatticeDims dims;
    std::vector<Vec2> mass_positions;                  // lattice units, side length 2
    std::vector<std::pair<int, int>> spring_endpoints; // (mass_id, mass_id), first < second
    std::vector<std::array<int, 3>> cell_edges;        // 3 spring ids per cell
    std::vector<std::array<int, 4>> cell_adjacency;    // neighbor cell ids, -1 when absent

    int mass_count() const { return static_cast<int>(mass_positions.size()); }
    int spring_count() const { return static_cast<int>(spring_endpoints.size()); }
    int cell_count() const { return dims.a * dims.b; }

    // Mass id at lattice coordinate (x, row), or -1 when off-lattice.
    int mass_at(int x, int row) const;
};

LatticeIndex build_lattice_index(LatticeDims dims);

// Sets every cell whose three edges are already covered by set cells.
// Single pass; filling adds no new edges, so the operation is idempotent.
GeometryMask fill_implied_cells(const GeometryMask& mask, const LatticeIndex& index);

// Keeps the largest connected component of set cells. Edge-sharing neighbors
// and vertically stacked vertex-sharing pairs both count as connected, which
// reduces to 4-neighborhood on the (row, col) grid. Ties go to the component
// containing the lexicographically smallest (row, col) cell.
GeometryMask largest_connected_component(const GeometryMask& mask, const LatticeIndex& index);

// fill_implied_cells followed by largest_connected_component: the cell set a
// genome actually expresses. Empty input gives an empty result.
GeometryMask expressed_cells(const GeometryMask& mask, const LatticeIndex& index);

struct MorphSpring {
    int i = 0;
    int j = 0;
    double rest_length = 0.0;
    bool active = false;
    int lattice_spring_id = -1;
};

struct Morphology {
    std::vector<Vec2> masses; // lowest mass at y = 0, leftmost at x = 0
    std::vector<MorphSpring> springs;
    int active_spring_count = 0;
    GeometryMask cells; // expressed cell set, used for change detection

    int mass_count() const { return static_cast<int>(masses.size()); }
    int spring_count() const { return static_cast<int>(springs.size()); }
};

// Expands a genome into a simulatable morphology. Throws EmptyMorphology when
// the expressed cell set is empty.
Morphology decode(const Genome& genome);
Morphology decode(const Genome& genome, const LatticeIndex& index);

// i.i.d. Bernoulli(0.5) bits for both the geometry mask and the spring vector;
// all-zero draws are resampled.
Genome random_genome(Rng& rng, LatticeDims dims);

} // namespace evospring
