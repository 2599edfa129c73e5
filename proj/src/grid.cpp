#include "pdmp/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pdmp {

std::uint32_t CellGrid::cell_of(std::span<const double> x) const {
    std::uint32_t lin = 0;
    for (int k = 0; k < dim(); ++k) {
        const auto ks = static_cast<std::size_t>(k);
        long i = static_cast<long>(std::floor((x[ks] - box.lo[ks]) / h[ks]));
        i = std::clamp(i, 0L, static_cast<long>(counts[ks]) - 1);
        lin = lin * static_cast<std::uint32_t>(counts[ks]) + static_cast<std::uint32_t>(i);
    }
    return lin;
}

std::vector<int> CellGrid::multi_index(std::uint32_t cell) const {
    std::vector<int> mi(static_cast<std::size_t>(dim()));
    for (int k = dim() - 1; k >= 0; --k) {
        const auto ks = static_cast<std::size_t>(k);
        mi[ks] = static_cast<int>(cell % static_cast<std::uint32_t>(counts[ks]));
        cell /= static_cast<std::uint32_t>(counts[ks]);
    }
    return mi;
}

std::uint32_t CellGrid::linear_index(std::span<const int> mi) const {
    std::uint32_t lin = 0;
    for (int k = 0; k < dim(); ++k)
        lin = lin * static_cast<std::uint32_t>(counts[static_cast<std::size_t>(k)]) +
              static_cast<std::uint32_t>(mi[static_cast<std::size_t>(k)]);
    return lin;
}

Vec CellGrid::center(std::uint32_t cell) const {
    const auto mi = multi_index(cell);
    Vec c(static_cast<std::size_t>(dim()));
    for (int k = 0; k < dim(); ++k) {
        const auto ks = static_cast<std::size_t>(k);
        c[ks] = box.lo[ks] + (mi[ks] + 0.5) * h[ks];
    }
    return c;
}

std::pair<Vec, Vec> CellGrid::cell_bounds(std::uint32_t cell) const {
    const auto mi = multi_index(cell);
    Vec lo(static_cast<std::size_t>(dim())), hi(static_cast<std::size_t>(dim()));
    for (int k = 0; k < dim(); ++k) {
        const auto ks = static_cast<std::size_t>(k);
        lo[ks] = box.lo[ks] + mi[ks] * h[ks];
        hi[ks] = box.lo[ks] + (mi[ks] + 1) * h[ks];
    }
    return {lo, hi};
}

CellGrid discretize(const Box& box, std::span<const double> h) {
    if (static_cast<int>(h.size()) != box.dim())
        throw ValidationError("h", "expected one edge length per dimension");
    CellGrid grid;
    grid.box = box;
    for (int k = 0; k < box.dim(); ++k) {
        const double hk = h[static_cast<std::size_t>(k)];
        if (!(hk > 0.0)) throw ValidationError("h", "must be > 0");
        // Tolerate the usual fp noise in extent/h before taking the ceiling.
        const double ratio = box.extent(k) / hk;
        const int n = std::max(1, static_cast<int>(std::ceil(ratio - 1e-9)));
        grid.h.push_back(hk);
        grid.counts.push_back(n);
    }
    return grid;
}

CellGrid discretize(const Box& box, double h_uniform) {
    Vec h(static_cast<std::size_t>(box.dim()), h_uniform);
    return discretize(box, h);
}

CellSet::CellSet(std::vector<std::uint32_t> c) : cells(std::move(c)) {
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
}

bool CellSet::contains(std::uint32_t c) const {
    return std::binary_search(cells.begin(), cells.end(), c);
}

bool CellSet::intersects(const CellSet& other) const {
    auto a = cells.begin();
    auto b = other.cells.begin();
    while (a != cells.end() && b != other.cells.end()) {
        if (*a == *b) return true;
        (*a < *b) ? ++a : ++b;
    }
    return false;
}

CellSet set_union(const CellSet& a, const CellSet& b) {
    std::vector<std::uint32_t> out;
    out.reserve(a.size() + b.size());
    std::set_union(a.cells.begin(), a.cells.end(), b.cells.begin(), b.cells.end(),
                   std::back_inserter(out));
    CellSet r;
    r.cells = std::move(out);
    return r;
}

CellSet set_difference(const CellSet& a, const CellSet& b) {
    std::vector<std::uint32_t> out;
    std::set_difference(a.cells.begin(), a.cells.end(), b.cells.begin(), b.cells.end(),
                        std::back_inserter(out));
    CellSet r;
    r.cells = std::move(out);
    return r;
}

CellSet inflate(const CellSet& s, const CellGrid& grid, int radius) {
    if (radius <= 0) return s;
    const int d = grid.dim();
    std::vector<std::uint32_t> out;
    std::vector<int> mi, probe(static_cast<std::size_t>(d));
    // Chebyshev ball around every member cell.
    std::size_t offsets = 1;
    for (int k = 0; k < d; ++k) offsets *= static_cast<std::size_t>(2 * radius + 1);
    for (std::uint32_t c : s.cells) {
        mi = grid.multi_index(c);
        for (std::size_t flat = 0; flat < offsets; ++flat) {
            std::size_t rest = flat;
            bool ok = true;
            for (int k = 0; k < d; ++k) {
                const int off = static_cast<int>(rest % static_cast<std::size_t>(2 * radius + 1)) - radius;
                rest /= static_cast<std::size_t>(2 * radius + 1);
                const int v = mi[static_cast<std::size_t>(k)] + off;
                if (v < 0 || v >= grid.counts[static_cast<std::size_t>(k)]) {
                    ok = false;
                    break;
                }
                probe[static_cast<std::size_t>(k)] = v;
            }
            if (ok) out.push_back(grid.linear_index(probe));
        }
    }
    return CellSet(std::move(out));
}

Box bounding_box(const CellSet& s, const CellGrid& grid) {
    Box b;
    if (s.empty()) return b;
    const int d = grid.dim();
    b.lo.assign(static_cast<std::size_t>(d), std::numeric_limits<double>::infinity());
    b.hi.assign(static_cast<std::size_t>(d), -std::numeric_limits<double>::infinity());
    for (std::uint32_t c : s.cells) {
        const auto [lo, hi] = grid.cell_bounds(c);
        for (int k = 0; k < d; ++k) {
            const auto ks = static_cast<std::size_t>(k);
            b.lo[ks] = std::min(b.lo[ks], lo[ks]);
            b.hi[ks] = std::max(b.hi[ks], hi[ks]);
        }
    }
    return b;
}

}  // namespace pdmp
