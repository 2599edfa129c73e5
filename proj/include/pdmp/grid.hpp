#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pdmp/common.hpp"

namespace pdmp {

// Uniform cell grid over a box. Linearization is row-major with dimension
// 0 slowest. Points on a shared face belong to the higher-index cell
// (floor convention); the upper box face is clamped into the last cell.
struct CellGrid {
    Box box;
    std::vector<double> h;    // edge length per dimension
    std::vector<int> counts;  // cells per dimension

    int dim() const { return box.dim(); }

    std::size_t size() const {
        std::size_t n = 1;
        for (int c : counts) n *= static_cast<std::size_t>(c);
        return n;
    }

    std::uint32_t cell_of(std::span<const double> x) const;
    std::vector<int> multi_index(std::uint32_t cell) const;
    std::uint32_t linear_index(std::span<const int> mi) const;

    Vec center(std::uint32_t cell) const;
    // Lower/upper corner of a cell in state coordinates.
    std::pair<Vec, Vec> cell_bounds(std::uint32_t cell) const;

    bool operator==(const CellGrid&) const = default;
};

CellGrid discretize(const Box& box, std::span<const double> h);
CellGrid discretize(const Box& box, double h_uniform);

// Sorted duplicate-free set of cell indices.
struct CellSet {
    std::vector<std::uint32_t> cells;

    CellSet() = default;
    explicit CellSet(std::vector<std::uint32_t> c);

    std::size_t size() const { return cells.size(); }
    bool empty() const { return cells.empty(); }
    bool contains(std::uint32_t c) const;
    bool intersects(const CellSet& other) const;

    bool operator==(const CellSet&) const = default;
};

CellSet set_union(const CellSet& a, const CellSet& b);
CellSet set_difference(const CellSet& a, const CellSet& b);

// All grid cells within `radius` cells (Chebyshev distance on
// multi-indices) of the set.
CellSet inflate(const CellSet& s, const CellGrid& grid, int radius);

// Axis-aligned bounding box of the set in state coordinates.
Box bounding_box(const CellSet& s, const CellGrid& grid);

}  // namespace pdmp
