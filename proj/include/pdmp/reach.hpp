#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pdmp/grid.hpp"
#include "pdmp/ode.hpp"
#include "pdmp/system.hpp"

namespace pdmp {

// Mode-wise time-tau cell reachability. Edges record where the sample
// points of each cell land under each single-mode flow, at the sub-times
// {tau/4, tau/2, 3tau/4, tau} so thin cells are not tunnelled through.
struct ReachGraph {
    CellGrid grid;
    double tau = 0.0;
    int samples_per_cell = 1;  // as requested
    int sample_points = 1;     // actual points used per cell (1, or 1 + 2^d)

    // edges[mode][cell] = sorted unique target cells.
    std::vector<std::vector<std::vector<std::uint32_t>>> edges;
    std::vector<std::string> warnings;

    int modes() const { return static_cast<int>(edges.size()); }
    std::size_t cell_count() const { return grid.size(); }

    // Union-over-modes out-neighbours of a cell (sorted unique).
    std::vector<std::uint32_t> union_out(std::uint32_t cell) const;
};

ReachGraph build_reach_graph(const SwitchingSystem& sys, const CellGrid& grid, double tau,
                             int samples_per_cell, const OdeOptions& opts = {}, int workers = 1);

enum class ClassKind { Invariant, Variant };

struct ControlClass {
    CellSet cells;
    ClassKind kind = ClassKind::Variant;
    bool has_self_reach = true;
};

// Control-set candidates resolved by the graph: nontrivial strongly
// connected components of the union digraph, invariant iff forward-closed.
// Carries the grid metadata so downstream consumers can check resolution
// compatibility. Cell over-approximation can merge a non-closed invariant
// control set with its boundary; reports carry h so users can refine.
struct ControlSetReport {
    CellGrid grid;
    double tau = 0.0;
    int samples_per_cell = 1;
    std::vector<ControlClass> classes;  // ordered by smallest cell index
    std::vector<std::string> warnings;

    std::vector<std::size_t> invariant_indices() const;
};

ControlSetReport control_sets(const ReachGraph& graph);

struct AttractionDomain {
    CellSet weak;    // cells whose forward closure meets the target class
    CellSet strict;  // weak cells that cannot also reach another invariant class
};

AttractionDomain domain_of_attraction(const ReachGraph& graph, const ControlSetReport& report,
                                      std::size_t target_class);

// Gamma-hat: cells reachable from every cell of the grid.
CellSet accessible_set(const ReachGraph& graph);

// Intersection of forward closures over all cells within `inflation`
// cells of the target class.
CellSet local_accessible_set(const ReachGraph& graph, const CellSet& target, int inflation);

// Forward closure (including the seeds) under the union digraph.
CellSet forward_closure(const ReachGraph& graph, const CellSet& seeds);
// Backward closure: all cells that can reach `targets`.
CellSet backward_closure(const ReachGraph& graph, const CellSet& targets);

}  // namespace pdmp
