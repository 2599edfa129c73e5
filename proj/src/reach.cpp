#include "pdmp/reach.hpp"

#include <algorithm>
#include <atomic>

#include "pdmp/parallel.hpp"

namespace pdmp {

namespace {

// Sample layout: cell center, plus (for samples_per_cell > 1) the 2^d
// points offset by +-h/4 in every dimension. Center-only sampling
// under-approximates; the corner offsets catch shear.
std::vector<Vec> cell_samples(const CellGrid& grid, std::uint32_t cell, int samples_per_cell) {
    const int d = grid.dim();
    std::vector<Vec> pts;
    pts.push_back(grid.center(cell));
    if (samples_per_cell <= 1) return pts;
    const Vec c = pts[0];
    const std::size_t corners = std::size_t{1} << d;
    for (std::size_t mask = 0; mask < corners; ++mask) {
        Vec p = c;
        for (int k = 0; k < d; ++k)
            p[static_cast<std::size_t>(k)] +=
                ((mask >> k) & 1 ? 0.25 : -0.25) * grid.h[static_cast<std::size_t>(k)];
        pts.push_back(std::move(p));
    }
    return pts;
}

}  // namespace

std::vector<std::uint32_t> ReachGraph::union_out(std::uint32_t cell) const {
    std::vector<std::uint32_t> out;
    for (const auto& mode_edges : edges) {
        const auto& e = mode_edges[cell];
        out.insert(out.end(), e.begin(), e.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

ReachGraph build_reach_graph(const SwitchingSystem& sys, const CellGrid& grid, double tau,
                             int samples_per_cell, const OdeOptions& opts, int workers) {
    if (!(tau > 0.0)) throw ValidationError("tau", "must be > 0");
    if (samples_per_cell < 1) throw ValidationError("samples_per_cell", "must be >= 1");

    ReachGraph graph;
    graph.grid = grid;
    graph.tau = tau;
    graph.samples_per_cell = samples_per_cell;
    graph.sample_points = samples_per_cell <= 1 ? 1 : 1 + (1 << grid.dim());

    const std::size_t n_cells = grid.size();
    const int modes = sys.mode_count();
    graph.edges.assign(static_cast<std::size_t>(modes), {});
    for (auto& e : graph.edges) e.assign(n_cells, {});

    const double sub_times[4] = {tau / 4, tau / 2, 3 * tau / 4, tau};
    const double guard = guard_band(sys.box);
    std::atomic<int> guard_exits{0};
    std::atomic<int> integrator_failures{0};

    parallel_for(n_cells * static_cast<std::size_t>(modes), workers, [&](std::size_t job) {
        const auto cell = static_cast<std::uint32_t>(job % n_cells);
        const int mode = static_cast<int>(job / n_cells);
        auto& out = graph.edges[static_cast<std::size_t>(mode)][cell];
        Vec probe(static_cast<std::size_t>(grid.dim()));
        for (const Vec& x0 : cell_samples(grid, cell, samples_per_cell)) {
            try {
                Dopri5 ode(sys.dim, mode_rhs(sys, mode), opts);
                ode.start(0.0, x0);
                std::size_t next_sub = 0;
                while (next_sub < 4 && ode.step(tau)) {
                    while (next_sub < 4 && sub_times[next_sub] <= ode.t() + 1e-14 * tau) {
                        ode.eval_dense(std::min(sub_times[next_sub], ode.t()), probe);
                        if (!sys.box.contains(probe, guard)) guard_exits.fetch_add(1);
                        out.push_back(grid.cell_of(probe));
                        ++next_sub;
                    }
                }
            } catch (const IntegrationError&) {
                integrator_failures.fetch_add(1);
            }
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
    });

    if (guard_exits.load() > 0)
        graph.warnings.push_back("reach graph: " + std::to_string(guard_exits.load()) +
                                 " sample flow(s) left M beyond the guard band (clamped to grid)");
    if (integrator_failures.load() > 0)
        graph.warnings.push_back("reach graph: " + std::to_string(integrator_failures.load()) +
                                 " sample integration(s) failed; edges built from remaining samples");
    return graph;
}

namespace {

// Iterative Tarjan on the union digraph.
struct SccResult {
    std::vector<std::int32_t> comp;  // cell -> component id
    std::size_t count = 0;
};

SccResult tarjan_scc(const ReachGraph& g) {
    const std::size_t n = g.cell_count();
    SccResult res;
    res.comp.assign(n, -1);
    std::vector<std::int32_t> index(n, -1), lowlink(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<std::uint32_t> stack;
    std::int32_t next_index = 0;

    struct Frame {
        std::uint32_t v;
        std::vector<std::uint32_t> out;
        std::size_t child = 0;
    };
    std::vector<Frame> call;

    for (std::uint32_t root = 0; root < n; ++root) {
        if (index[root] != -1) continue;
        call.push_back({root, g.union_out(root)});
        index[root] = lowlink[root] = next_index++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!call.empty()) {
            Frame& f = call.back();
            if (f.child < f.out.size()) {
                const std::uint32_t w = f.out[f.child++];
                if (index[w] == -1) {
                    index[w] = lowlink[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.push_back({w, g.union_out(w)});
                } else if (on_stack[w]) {
                    lowlink[f.v] = std::min(lowlink[f.v], index[w]);
                }
                continue;
            }
            if (lowlink[f.v] == index[f.v]) {
                const auto id = static_cast<std::int32_t>(res.count++);
                for (;;) {
                    const std::uint32_t w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    res.comp[w] = id;
                    if (w == f.v) break;
                }
            }
            const std::uint32_t v = f.v;
            call.pop_back();
            if (!call.empty())
                lowlink[call.back().v] = std::min(lowlink[call.back().v], lowlink[v]);
        }
    }
    return res;
}

}  // namespace

std::vector<std::size_t> ControlSetReport::invariant_indices() const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < classes.size(); ++i)
        if (classes[i].kind == ClassKind::Invariant) idx.push_back(i);
    return idx;
}

ControlSetReport control_sets(const ReachGraph& graph) {
    const std::size_t n = graph.cell_count();
    const SccResult scc = tarjan_scc(graph);

    std::vector<std::vector<std::uint32_t>> members(scc.count);
    for (std::uint32_t c = 0; c < n; ++c)
        members[static_cast<std::size_t>(scc.comp[c])].push_back(c);

    // A component is a control-set candidate unless it is a singleton
    // without a self-loop (transient plumbing). It is invariant iff no
    // union edge leaves it.
    std::vector<bool> has_exit(scc.count, false), has_self(scc.count, false);
    for (std::uint32_t c = 0; c < n; ++c) {
        const auto id = static_cast<std::size_t>(scc.comp[c]);
        for (std::uint32_t to : graph.union_out(c)) {
            if (static_cast<std::size_t>(scc.comp[to]) != id)
                has_exit[id] = true;
            else if (to == c)
                has_self[id] = true;
        }
    }

    ControlSetReport report;
    report.grid = graph.grid;
    report.tau = graph.tau;
    report.samples_per_cell = graph.samples_per_cell;
    report.warnings = graph.warnings;
    for (std::size_t id = 0; id < scc.count; ++id) {
        const auto& cells = members[id];
        const bool qualifies = cells.size() > 1 || has_self[id];
        if (!qualifies) continue;
        ControlClass cls;
        cls.cells.cells = cells;  // members are collected in increasing order
        std::sort(cls.cells.cells.begin(), cls.cells.cells.end());
        cls.kind = has_exit[id] ? ClassKind::Variant : ClassKind::Invariant;
        cls.has_self_reach = cells.size() > 1 || has_self[id];
        report.classes.push_back(std::move(cls));
    }
    std::sort(report.classes.begin(), report.classes.end(),
              [](const ControlClass& a, const ControlClass& b) {
                  return a.cells.cells.front() < b.cells.cells.front();
              });
    return report;
}

CellSet forward_closure(const ReachGraph& graph, const CellSet& seeds) {
    std::vector<bool> seen(graph.cell_count(), false);
    std::vector<std::uint32_t> queue = seeds.cells;
    for (std::uint32_t c : queue) seen[c] = true;
    while (!queue.empty()) {
        const std::uint32_t c = queue.back();
        queue.pop_back();
        for (std::uint32_t to : graph.union_out(c))
            if (!seen[to]) {
                seen[to] = true;
                queue.push_back(to);
            }
    }
    std::vector<std::uint32_t> out;
    for (std::uint32_t c = 0; c < seen.size(); ++c)
        if (seen[c]) out.push_back(c);
    CellSet r;
    r.cells = std::move(out);
    return r;
}

CellSet backward_closure(const ReachGraph& graph, const CellSet& targets) {
    const std::size_t n = graph.cell_count();
    // Transpose adjacency, built once per query.
    std::vector<std::vector<std::uint32_t>> rev(n);
    for (std::uint32_t c = 0; c < n; ++c)
        for (std::uint32_t to : graph.union_out(c)) rev[to].push_back(c);
    std::vector<bool> seen(n, false);
    std::vector<std::uint32_t> queue = targets.cells;
    for (std::uint32_t c : queue) seen[c] = true;
    while (!queue.empty()) {
        const std::uint32_t c = queue.back();
        queue.pop_back();
        for (std::uint32_t from : rev[c])
            if (!seen[from]) {
                seen[from] = true;
                queue.push_back(from);
            }
    }
    std::vector<std::uint32_t> out;
    for (std::uint32_t c = 0; c < n; ++c)
        if (seen[c]) out.push_back(c);
    CellSet r;
    r.cells = std::move(out);
    return r;
}

AttractionDomain domain_of_attraction(const ReachGraph& graph, const ControlSetReport& report,
                                      std::size_t target_class) {
    const ControlClass& target = report.classes.at(target_class);
    if (target.kind != ClassKind::Invariant)
        throw ValidationError("target", "domain of attraction needs an invariant class");

    AttractionDomain dom;
    dom.weak = backward_closure(graph, target.cells);
    dom.strict = dom.weak;
    for (std::size_t i = 0; i < report.classes.size(); ++i) {
        if (i == target_class || report.classes[i].kind != ClassKind::Invariant) continue;
        dom.strict = set_difference(dom.strict, backward_closure(graph, report.classes[i].cells));
    }
    return dom;
}

CellSet accessible_set(const ReachGraph& graph) {
    const std::size_t n = graph.cell_count();
    const SccResult scc = tarjan_scc(graph);

    // Sinks of the condensation DAG.
    std::vector<bool> has_exit(scc.count, false);
    for (std::uint32_t c = 0; c < n; ++c)
        for (std::uint32_t to : graph.union_out(c))
            if (scc.comp[to] != scc.comp[c]) has_exit[static_cast<std::size_t>(scc.comp[c])] = true;
    std::vector<std::int32_t> sinks;
    for (std::size_t id = 0; id < scc.count; ++id)
        if (!has_exit[id]) sinks.push_back(static_cast<std::int32_t>(id));

    // A cell is reachable from everywhere only if it lies in the unique
    // sink component and that component drains the whole grid.
    if (sinks.size() != 1) return {};
    CellSet sink;
    for (std::uint32_t c = 0; c < n; ++c)
        if (scc.comp[c] == sinks[0]) sink.cells.push_back(c);
    if (backward_closure(graph, sink).size() != n) return {};
    return sink;
}

CellSet local_accessible_set(const ReachGraph& graph, const CellSet& target, int inflation) {
    const CellSet hood = inflate(target, graph.grid, inflation);
    if (hood.empty()) return {};

    // Cells in the same SCC share their forward closure; close over the
    // distinct components only.
    const SccResult scc = tarjan_scc(graph);
    std::vector<std::int32_t> distinct;
    for (std::uint32_t c : hood.cells) distinct.push_back(scc.comp[c]);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    CellSet result;
    bool first = true;
    for (std::int32_t id : distinct) {
        std::uint32_t rep = 0;
        for (std::uint32_t c : hood.cells)
            if (scc.comp[c] == id) {
                rep = c;
                break;
            }
        CellSet seed;
        seed.cells = {rep};
        const CellSet closure = forward_closure(graph, seed);
        if (first) {
            result = closure;
            first = false;
        } else {
            std::vector<std::uint32_t> inter;
            std::set_intersection(result.cells.begin(), result.cells.end(), closure.cells.begin(),
                                  closure.cells.end(), std::back_inserter(inter));
            result.cells = std::move(inter);
        }
        if (result.empty()) break;
    }
    return result;
}

}  // namespace pdmp
