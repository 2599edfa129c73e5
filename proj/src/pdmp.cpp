#include "pdmp/pdmp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "pdmp/parallel.hpp"

namespace pdmp {

int sample_mode_from_row(const Matrix& q, int row, double u) {
    double sum = 0.0;
    for (int c = 0; c < q.cols; ++c) sum += q(row, c);
    double acc = 0.0;
    for (int c = 0; c < q.cols; ++c) {
        acc += q(row, c) / sum;
        if (u <= acc) return c;
    }
    return q.cols - 1;
}

ChainState step_chain(const SwitchingSystem& sys, const ChainState& state, RngStream& rng,
                      const OdeOptions& opts) {
    const double u = rng.exponential(sys.lambda);
    ChainState next;
    next.n = state.n + 1;
    next.t = state.t + u;
    next.state.x = flow(sys, state.state.mode, u, state.state.x, opts);
    Matrix q;
    sys.q.eval(next.state.x, q);
    next.state.mode = sample_mode_from_row(q, state.state.mode, rng.uniform01());
    return next;
}

ChainState walk_pdmp(const SwitchingSystem& sys, const HybridState& z0, double horizon,
                     RngStream& rng, const OdeOptions& opts, const WalkCallbacks& cb) {
    ChainState st{0, z0, 0.0};
    if (cb.on_chain_state) cb.on_chain_state(st);

    // One integrator per mode, reused across segments.
    std::vector<Dopri5> odes;
    odes.reserve(static_cast<std::size_t>(sys.mode_count()));
    for (int i = 0; i < sys.mode_count(); ++i)
        odes.emplace_back(sys.dim, mode_rhs(sys, i), opts);

    Matrix q;
    while (st.t < horizon) {
        const double u = rng.exponential(sys.lambda);
        double jump_t = st.t + u;
        if (jump_t == st.t) jump_t = std::nextafter(st.t, std::numeric_limits<double>::infinity());
        const bool jumps = jump_t <= horizon;
        const double local_end = (jumps ? jump_t : horizon) - st.t;

        Dopri5& ode = odes[static_cast<std::size_t>(st.state.mode)];
        ode.start(0.0, st.state.x);
        while (ode.step(local_end))
            if (cb.on_step)
                cb.on_step({st.t + ode.t_prev(), st.t + ode.t(), st.state.mode, &ode, st.t});

        if (!jumps) {
            st.t = horizon;
            st.state.x.assign(ode.x().begin(), ode.x().end());
            return st;
        }
        st.state.x.assign(ode.x().begin(), ode.x().end());
        st.t = jump_t;
        st.n += 1;
        sys.q.eval(st.state.x, q);
        st.state.mode = sample_mode_from_row(q, st.state.mode, rng.uniform01());
        if (cb.on_chain_state) cb.on_chain_state(st);
    }
    return st;
}

PiecewisePath simulate(const SwitchingSystem& sys, const HybridState& z0, double horizon,
                       double sample_dt, RngStream& rng, const OdeOptions& opts) {
    if (!(horizon > 0.0)) throw ValidationError("horizon", "must be > 0");
    if (!(sample_dt > 0.0)) throw ValidationError("sample_dt", "must be > 0");
    const double guard = guard_band(sys.box);

    PiecewisePath path;
    path.dim = sys.dim;
    Vec probe(static_cast<std::size_t>(sys.dim));

    WalkCallbacks cb;
    cb.on_chain_state = [&](const ChainState& st) {
        // Drop a lattice sample colliding with the jump time.
        if (!path.samples.empty() && !path.samples.back().breakpoint &&
            std::abs(path.samples.back().t - st.t) < 1e-12 * std::max(1.0, st.t))
            path.samples.pop_back();
        path.breakpoints.push_back(st.t);
        path.samples.push_back({st.t, st.state.x, st.state.mode, true});
        if (!sys.box.contains(st.state.x, guard)) ++path.guard_exits;
    };
    cb.on_step = [&](const StepView& sv) {
        long k = static_cast<long>(std::floor(sv.t0 / sample_dt)) + 1;
        for (; k * sample_dt <= sv.t1 + 1e-15 * std::max(1.0, sv.t1); ++k) {
            const double t = k * sample_dt;
            if (t <= sv.t0) continue;
            sv.eval(t, probe);
            if (!sys.box.contains(probe, guard)) ++path.guard_exits;
            path.samples.push_back({t, probe, sv.mode, false});
        }
    };

    const ChainState final_state = walk_pdmp(sys, z0, horizon, rng, opts, cb);
    if (path.samples.empty() || path.samples.back().t < horizon)
        path.samples.push_back({horizon, final_state.state.x, final_state.state.mode, false});
    return path;
}

namespace {

// Shared by the PDMP and schedule samplers: consume the increasing time
// list inside each accepted step.
struct TimeCursor {
    std::span<const double> times;
    std::size_t next = 0;

    void consume_le(double t_limit, const std::function<void(std::size_t, double)>& emit) {
        const double slack = 1e-12 * std::max(1.0, std::abs(t_limit));
        while (next < times.size() && times[next] <= t_limit + slack) {
            emit(next, times[next]);
            ++next;
        }
    }
};

}  // namespace

void sample_pdmp_at(const SwitchingSystem& sys, const HybridState& z0,
                    std::span<const double> times, RngStream& rng, const OdeOptions& opts,
                    const std::function<void(std::size_t, double, std::span<const double>, int)>&
                        visitor) {
    if (times.empty()) return;
    TimeCursor cursor{times};
    cursor.consume_le(0.0, [&](std::size_t i, double t) { visitor(i, t, z0.x, z0.mode); });
    if (cursor.next >= times.size()) return;

    Vec probe(static_cast<std::size_t>(sys.dim));
    WalkCallbacks cb;
    cb.on_step = [&](const StepView& sv) {
        cursor.consume_le(sv.t1, [&](std::size_t i, double t) {
            sv.eval(std::min(t, sv.t1), probe);
            visitor(i, t, probe, sv.mode);
        });
    };
    walk_pdmp(sys, z0, times.back(), rng, opts, cb);
}

void sample_schedule_at(const SwitchingSystem& sys, const Vec& x0, const JumpSchedule& sched,
                        std::span<const double> times, const OdeOptions& opts,
                        const std::function<void(std::size_t, double, std::span<const double>,
                                                 int)>& visitor) {
    sched.validate(sys.mode_count());
    if (times.empty()) return;
    TimeCursor cursor{times};
    cursor.consume_le(0.0, [&](std::size_t i, double t) { visitor(i, t, x0, sched.modes[0]); });

    Vec x = x0, probe(static_cast<std::size_t>(sys.dim));
    double t_abs = 0.0;
    const double t_max = times.back();
    const int n_seg = sched.jumps();
    for (int seg = 0; seg <= n_seg && cursor.next < times.size(); ++seg) {
        // The trailing segment extends the final mode past t_n.
        const int mode = sched.modes[static_cast<std::size_t>(std::min(seg, n_seg))];
        const double u = seg < n_seg ? sched.durations[static_cast<std::size_t>(seg)]
                                     : std::max(0.0, t_max - t_abs);
        if (u <= 0.0) continue;
        Dopri5 ode(sys.dim, mode_rhs(sys, mode), opts);
        ode.start(0.0, x);
        const double local_end = std::min(u, std::max(0.0, t_max - t_abs));
        while (ode.step(local_end)) {
            const double hi = t_abs + ode.t();
            cursor.consume_le(hi, [&](std::size_t i, double t) {
                ode.eval_dense(std::min(t, hi) - t_abs, probe);
                visitor(i, t, probe, mode);
            });
        }
        if (local_end < u) {
            // Requested times end inside this segment.
            return;
        }
        x.assign(ode.x().begin(), ode.x().end());
        t_abs += u;
    }
}

double EmpiricalMeasure::weight_at(std::uint32_t cell, int mode) const {
    const auto it = std::lower_bound(entries.begin(), entries.end(), std::pair{cell, mode},
                                     [](const MeasureEntry& e, const std::pair<std::uint32_t, int>& k) {
                                         return std::pair{e.cell, e.mode} < k;
                                     });
    if (it != entries.end() && it->cell == cell && it->mode == mode) return it->weight;
    return 0.0;
}

namespace {

class MeasureAccumulator {
public:
    void add(std::uint32_t cell, int mode, double w) {
        weights_[{cell, mode}] += w;
        total_ += w;
    }

    EmpiricalMeasure finalize(const CellGrid& grid, MeasureKind kind, double burn_in, int modes,
                              int guard_exits) && {
        EmpiricalMeasure m;
        m.grid = grid;
        m.kind = kind;
        m.burn_in = burn_in;
        m.modes = modes;
        m.total_weight = total_;
        m.guard_exits = guard_exits;
        m.entries.reserve(weights_.size());
        for (const auto& [key, w] : weights_) m.entries.push_back({key.first, key.second, w});
        return m;
    }

private:
    std::map<std::pair<std::uint32_t, int>, double> weights_;
    double total_ = 0.0;
};

}  // namespace

EmpiricalMeasure occupation_measure(std::span<const PiecewisePath> paths, const CellGrid& grid,
                                    double burn_in) {
    MeasureAccumulator acc;
    int guard_exits = 0;
    int modes = 0;
    bool any = false;
    for (const auto& path : paths) {
        guard_exits += path.guard_exits;
        for (std::size_t k = 0; k + 1 < path.samples.size(); ++k) {
            const auto& s = path.samples[k];
            modes = std::max(modes, s.mode + 1);
            if (s.t < burn_in) continue;
            const double dt = path.samples[k + 1].t - s.t;
            if (dt <= 0.0) continue;
            any = true;
            acc.add(grid.cell_of(s.x), s.mode, dt);
        }
    }
    if (!any) throw ValidationError("burn_in", "empty post-burn-in window");
    return std::move(acc).finalize(grid, MeasureKind::ContinuousTime, burn_in, modes, guard_exits);
}

EmpiricalMeasure occupation_measure(std::span<const std::vector<ChainState>> runs,
                                    const CellGrid& grid, double burn_in) {
    MeasureAccumulator acc;
    int modes = 0;
    bool any = false;
    for (const auto& run : runs)
        for (const auto& st : run) {
            modes = std::max(modes, st.state.mode + 1);
            if (st.t < burn_in) continue;
            any = true;
            acc.add(grid.cell_of(st.state.x), st.state.mode, 1.0);
        }
    if (!any) throw ValidationError("burn_in", "empty post-burn-in window");
    return std::move(acc).finalize(grid, MeasureKind::DiscreteChain, burn_in, modes, 0);
}

EmpiricalMeasure run_occupation_measure(const SwitchingSystem& sys, const HybridState& z0,
                                        double horizon, double burn_in, const CellGrid& grid,
                                        double sample_dt, MeasureKind kind, RngStream& rng,
                                        const OdeOptions& opts) {
    if (!(horizon > 0.0)) throw ValidationError("horizon", "must be > 0");
    if (!(burn_in >= 0.0 && burn_in < horizon))
        throw ValidationError("burn_in", "must lie in [0, horizon)");

    MeasureAccumulator acc;
    const double guard = guard_band(sys.box);
    int guard_exits = 0;
    Vec probe(static_cast<std::size_t>(sys.dim));

    WalkCallbacks cb;
    if (kind == MeasureKind::ContinuousTime) {
        // Midpoint lattice over [burn_in, horizon): t_j = burn_in + (j+1/2) dt,
        // each carrying weight dt.
        cb.on_step = [&](const StepView& sv) {
            const double first = sv.t0 <= burn_in
                                     ? 0.0
                                     : std::ceil((sv.t0 - burn_in) / sample_dt - 0.5);
            for (long j = static_cast<long>(first);; ++j) {
                const double t = burn_in + (static_cast<double>(j) + 0.5) * sample_dt;
                if (t > sv.t1 || t >= horizon) break;
                if (t <= sv.t0) continue;
                sv.eval(t, probe);
                if (!sys.box.contains(probe, guard)) ++guard_exits;
                acc.add(grid.cell_of(probe), sv.mode, sample_dt);
            }
        };
    } else {
        cb.on_chain_state = [&](const ChainState& st) {
            if (st.t < burn_in) return;
            if (!sys.box.contains(st.state.x, guard)) ++guard_exits;
            acc.add(grid.cell_of(st.state.x), st.state.mode, 1.0);
        };
    }
    walk_pdmp(sys, z0, horizon, rng, opts, cb);
    return std::move(acc).finalize(grid, kind, burn_in, sys.mode_count(), guard_exits);
}

std::vector<std::pair<std::uint32_t, int>> support_estimate(const EmpiricalMeasure& measure,
                                                            double threshold) {
    if (!(threshold >= 0.0 && threshold < 1.0))
        throw ValidationError("threshold", "must lie in [0, 1)");
    std::vector<std::pair<std::uint32_t, int>> out;
    for (const auto& e : measure.entries)
        if (e.weight / measure.total_weight > threshold) out.emplace_back(e.cell, e.mode);
    return out;
}

SupportReport verify_support_inclusion(const EmpiricalMeasure& measure,
                                       const ControlSetReport& report, int inflation) {
    if (!(measure.grid == report.grid))
        throw ValidationError("grid", "measure and control-set report use different grids");

    SupportReport sr;
    sr.inflation = inflation;
    sr.threshold = 0.0;
    sr.support = support_estimate(measure, 0.0);
    sr.per_class_mass.assign(report.classes.size(), 0.0);
    sr.class_coverage.assign(report.classes.size(), 0.0);

    std::vector<CellSet> inflated;
    inflated.reserve(report.classes.size());
    for (const auto& cls : report.classes)
        inflated.push_back(cls.kind == ClassKind::Invariant
                               ? inflate(cls.cells, measure.grid, inflation)
                               : CellSet{});

    const int modes = std::max(1, measure.modes);

    double excess = 0.0;
    for (const auto& e : measure.entries) {
        const double w = e.weight / measure.total_weight;
        bool attributed = false;
        for (std::size_t i = 0; i < report.classes.size(); ++i) {
            if (report.classes[i].kind != ClassKind::Invariant) continue;
            if (inflated[i].contains(e.cell)) {
                sr.per_class_mass[i] += w;
                attributed = true;
                break;
            }
        }
        if (!attributed) excess += w;
    }
    sr.excess_mass = excess;

    for (std::size_t i = 0; i < report.classes.size(); ++i) {
        if (report.classes[i].kind != ClassKind::Invariant) continue;
        const auto& cells = report.classes[i].cells;
        long visited = 0;
        for (std::uint32_t c : cells.cells)
            for (int m = 0; m < modes; ++m)
                if (measure.weight_at(c, m) > 0.0) ++visited;
        sr.class_coverage[i] =
            cells.empty() ? 0.0
                          : static_cast<double>(visited) /
                                (static_cast<double>(cells.size()) * modes);
        if (sr.dominant_class < 0 ||
            sr.per_class_mass[i] > sr.per_class_mass[static_cast<std::size_t>(sr.dominant_class)])
            sr.dominant_class = static_cast<int>(i);
    }
    return sr;
}

TubeEstimate tube_probability(const SwitchingSystem& sys, const Vec& x, int mode,
                              const JumpSchedule& sched, double delta, long n_samples,
                              std::uint64_t seed, const OdeOptions& opts, int workers,
                              int n_check) {
    if (!(delta >= 0.0)) throw ValidationError("delta", "must be >= 0");
    const double T = sched.total_time();

    // Comparison lattice: 0, T/n, ..., T plus the schedule breakpoints.
    std::vector<double> times;
    for (int k = 0; k <= n_check; ++k) times.push_back(T * k / n_check);
    double acc_t = 0.0;
    for (double u : sched.durations) {
        acc_t += u;
        times.push_back(std::min(acc_t, T));
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    std::vector<Vec> reference(times.size());
    sample_schedule_at(sys, x, sched, times, opts,
                       [&](std::size_t i, double, std::span<const double> xs, int) {
                           reference[i].assign(xs.begin(), xs.end());
                       });

    std::atomic<long> successes{0};
    parallel_for(static_cast<std::size_t>(n_samples), workers, [&](std::size_t run) {
        RngStream rng(seed, run);
        bool inside = true;
        sample_pdmp_at(sys, {x, mode}, times, rng, opts,
                       [&](std::size_t i, double, std::span<const double> xs, int) {
                           if (!inside) return;
                           if (dist2(xs, reference[i]) > delta) inside = false;
                       });
        if (inside) successes.fetch_add(1);
    });

    TubeEstimate est;
    est.n = n_samples;
    est.delta = delta;
    est.horizon = T;
    est.ci = wilson_interval(successes.load(), n_samples);
    return est;
}

WilsonInterval entry_probability(const SwitchingSystem& sys, const Vec& x, const CellSet& cls,
                                 const CellGrid& grid, double T, long n_samples,
                                 std::uint64_t seed, int inflation, const OdeOptions& opts,
                                 int workers) {
    if (!(T >= 0.0)) throw ValidationError("T", "must be >= 0");
    const CellSet target = inflate(cls, grid, inflation);
    const double times[1] = {T};

    WilsonInterval worst;
    bool first = true;
    for (int mode = 0; mode < sys.mode_count(); ++mode) {
        std::atomic<long> successes{0};
        parallel_for(static_cast<std::size_t>(n_samples), workers, [&](std::size_t run) {
            RngStream rng(seed, static_cast<std::uint64_t>(mode) * static_cast<std::uint64_t>(n_samples) + run);
            sample_pdmp_at(sys, {x, mode}, times, rng, opts,
                           [&](std::size_t, double, std::span<const double> xs, int) {
                               if (target.contains(grid.cell_of(xs))) successes.fetch_add(1);
                           });
        });
        const WilsonInterval ci = wilson_interval(successes.load(), n_samples);
        if (first || ci.estimate < worst.estimate) worst = ci;
        first = false;
    }
    return worst;
}

MixingDiagnostic mixing_diagnostic(const SwitchingSystem& sys, const HybridState& z_a,
                                   const HybridState& z_b, const CellGrid& grid,
                                   std::span<const double> times, long runs_per_time,
                                   std::uint64_t seed, const OdeOptions& opts, int workers) {
    MixingDiagnostic diag;
    const double n = static_cast<double>(runs_per_time);

    for (std::size_t ti = 0; ti < times.size(); ++ti) {
        const double t = times[ti];
        const double at[1] = {t};
        // Per-slot count maps, merged in slot order afterwards.
        std::vector<std::map<std::pair<std::uint32_t, int>, std::pair<long, long>>> partial(
            static_cast<std::size_t>(std::max(1, workers)));
        std::atomic<std::size_t> next{0};
        parallel_for(static_cast<std::size_t>(std::max(1, workers)), workers,
                     [&](std::size_t slot) {
                         auto& local = partial[slot];
                         for (;;) {
                             const std::size_t run = next.fetch_add(1);
                             if (run >= static_cast<std::size_t>(2 * runs_per_time)) return;
                             const bool is_b = (run & 1) != 0;
                             const std::uint64_t id =
                                 (static_cast<std::uint64_t>(ti) * static_cast<std::uint64_t>(runs_per_time) +
                                  run / 2) * 2 + (is_b ? 1 : 0);
                             RngStream rng(seed, id);
                             const HybridState& z0 = is_b ? z_b : z_a;
                             sample_pdmp_at(sys, z0, at, rng, opts,
                                            [&](std::size_t, double, std::span<const double> xs,
                                                int mode) {
                                                auto& cnt = local[{grid.cell_of(xs), mode}];
                                                (is_b ? cnt.second : cnt.first) += 1;
                                            });
                         }
                     });
        std::map<std::pair<std::uint32_t, int>, std::pair<long, long>> merged;
        for (const auto& part : partial)
            for (const auto& [key, cnt] : part) {
                merged[key].first += cnt.first;
                merged[key].second += cnt.second;
            }

        double tv = 0.0, noise = 0.0;
        for (const auto& [key, cnt] : merged) {
            const double pa = static_cast<double>(cnt.first) / n;
            const double pb = static_cast<double>(cnt.second) / n;
            tv += std::abs(pa - pb);
            noise += std::sqrt((pa * (1.0 - pa) + pb * (1.0 - pb)) / n);
        }
        diag.rows.push_back({t, 0.5 * tv, 0.5 * noise});
    }

    std::vector<double> xs, ys;
    for (const auto& r : diag.rows)
        if (r.tv > 0.0) {
            xs.push_back(r.t);
            ys.push_back(std::log(r.tv));
        }
    if (xs.size() < 3)
        throw std::runtime_error("mixing_diagnostic: degenerate fit (fewer than 3 positive TV values)");
    const LineFit fit = fit_line(xs, ys);
    diag.alpha = -fit.slope;
    diag.alpha_lo = -fit.slope_hi;
    diag.alpha_hi = -fit.slope_lo;
    diag.c = std::exp(fit.intercept);
    return diag;
}

}  // namespace pdmp
