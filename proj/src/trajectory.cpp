#include "pdmp/trajectory.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

namespace pdmp {

double JumpSchedule::total_time() const {
    double s = 0.0;
    for (double u : durations) s += u;
    return s;
}

void JumpSchedule::validate(int mode_count) const {
    if (modes.size() != durations.size() + 1)
        throw ValidationError("schedule", "need len(modes) = len(durations) + 1");
    for (int i : modes)
        if (i < 0 || i >= mode_count) throw ValidationError("schedule.modes", "mode out of range");
    for (double u : durations)
        if (!(u > 0.0)) throw ValidationError("schedule.durations", "durations must be > 0");
}

namespace {

void append_dense_samples(Dopri5& ode, double seg_t0, double t_abs_begin, double t_abs_end,
                          double sample_dt, int mode, const Box& box, double guard,
                          PiecewisePath& path) {
    // Emit lattice samples k*sample_dt that fall inside (t_abs_begin, t_abs_end].
    long k = static_cast<long>(std::floor(t_abs_begin / sample_dt)) + 1;
    Vec x(static_cast<std::size_t>(path.dim));
    for (; k * sample_dt <= t_abs_end + 1e-15 * std::max(1.0, t_abs_end); ++k) {
        const double t_abs = k * sample_dt;
        if (t_abs <= t_abs_begin) continue;
        ode.eval_dense(t_abs - seg_t0, x);
        if (!box.contains(x, guard)) ++path.guard_exits;
        path.samples.push_back({t_abs, x, mode, false});
    }
}

}  // namespace

PiecewisePath piecewise_trajectory(const SwitchingSystem& sys, const Vec& x0,
                                   const JumpSchedule& sched, double sample_dt,
                                   const OdeOptions& opts) {
    sched.validate(sys.mode_count());
    if (!(sample_dt > 0.0)) throw ValidationError("sample_dt", "must be > 0");
    const double guard = guard_band(sys.box);

    PiecewisePath path;
    path.dim = sys.dim;
    path.breakpoints.push_back(0.0);
    path.samples.push_back({0.0, x0, sched.modes[0], true});

    Vec x = x0;
    double t_abs = 0.0;
    for (int seg = 0; seg < sched.jumps(); ++seg) {
        const int mode = sched.modes[static_cast<std::size_t>(seg)];
        const double u = sched.durations[static_cast<std::size_t>(seg)];
        Dopri5 ode(sys.dim, mode_rhs(sys, mode), opts);
        ode.start(0.0, x);
        while (ode.step(u))
            append_dense_samples(ode, t_abs, t_abs + ode.t_prev(), t_abs + ode.t(), sample_dt,
                                 mode, sys.box, guard, path);
        x.assign(ode.x().begin(), ode.x().end());
        t_abs += u;
        // Drop a lattice sample that collides with the breakpoint.
        if (!path.samples.empty() && !path.samples.back().breakpoint &&
            std::abs(path.samples.back().t - t_abs) < 1e-12 * std::max(1.0, t_abs))
            path.samples.pop_back();
        path.breakpoints.push_back(t_abs);
        path.samples.push_back({t_abs, x, sched.modes[static_cast<std::size_t>(seg) + 1], true});
        if (!sys.box.contains(x, guard)) ++path.guard_exits;
    }
    return path;
}

double path_probability(const SwitchingSystem& sys, const Vec& x0, const JumpSchedule& sched,
                        const OdeOptions& opts) {
    sched.validate(sys.mode_count());
    Vec x = x0;
    double p = 1.0;
    Matrix q;
    for (int seg = 0; seg < sched.jumps(); ++seg) {
        const int from = sched.modes[static_cast<std::size_t>(seg)];
        const int to = sched.modes[static_cast<std::size_t>(seg) + 1];
        x = flow(sys, from, sched.durations[static_cast<std::size_t>(seg)], x, opts);
        sys.q.eval(x, q);
        p *= q(from, to);
        if (p == 0.0) return 0.0;
    }
    return p;
}

InvarianceReport check_positive_invariance(const SwitchingSystem& sys, int n_boundary_samples,
                                           double horizon, const OdeOptions& opts) {
    InvarianceReport report;
    report.guard = guard_band(sys.box);
    const int d = sys.dim;

    // Deterministic boundary lattice: on each face, n_boundary_samples
    // points per free dimension.
    std::vector<Vec> starts;
    const int per_dim = std::max(1, n_boundary_samples);
    for (int k = 0; k < d; ++k) {
        std::size_t total = 1;
        for (int j = 0; j < d - 1; ++j) total *= static_cast<std::size_t>(per_dim);
        for (std::size_t flat = 0; flat < total; ++flat) {
            Vec x(static_cast<std::size_t>(d));
            std::size_t rest = flat;
            for (int j = 0; j < d; ++j) {
                if (j == k) continue;
                const int i = static_cast<int>(rest % static_cast<std::size_t>(per_dim));
                rest /= static_cast<std::size_t>(per_dim);
                const double frac = per_dim == 1 ? 0.5 : static_cast<double>(i) / (per_dim - 1);
                x[static_cast<std::size_t>(j)] =
                    sys.box.lo[static_cast<std::size_t>(j)] + frac * sys.box.extent(j);
            }
            Vec xl = x, xh = x;
            xl[static_cast<std::size_t>(k)] = sys.box.lo[static_cast<std::size_t>(k)];
            xh[static_cast<std::size_t>(k)] = sys.box.hi[static_cast<std::size_t>(k)];
            starts.push_back(std::move(xl));
            starts.push_back(std::move(xh));
        }
    }

    Vec probe(static_cast<std::size_t>(d));
    for (const Vec& x0 : starts) {
        for (int mode = 0; mode < sys.mode_count(); ++mode) {
            ++report.samples_checked;
            Dopri5 ode(sys.dim, mode_rhs(sys, mode), opts);
            ode.start(0.0, x0);
            bool exited = false;
            try {
                while (!exited && ode.step(horizon)) {
                    if (!sys.box.contains(ode.x(), report.guard)) {
                        // Bisect the offending step on the dense output to
                        // report a tight exit time.
                        double lo = ode.t_prev(), hi = ode.t();
                        for (int it = 0; it < 40; ++it) {
                            const double mid = 0.5 * (lo + hi);
                            ode.eval_dense(mid, probe);
                            (sys.box.contains(probe, report.guard) ? lo : hi) = mid;
                        }
                        ode.eval_dense(hi, probe);
                        report.violations.push_back({mode, x0, hi, probe});
                        exited = true;
                    }
                }
            } catch (const IntegrationError&) {
                report.violations.push_back({mode, x0, ode.t(), Vec(ode.x().begin(), ode.x().end())});
            }
        }
    }
    return report;
}

namespace {

void put_double(std::ostream& os, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    os.write(buf, res.ptr - buf);
}

}  // namespace

void write_csv(const PiecewisePath& path, std::ostream& os) {
    os << "t";
    for (int k = 0; k < path.dim; ++k) os << ",x" << k;
    os << ",mode,is_breakpoint\n";
    for (const auto& s : path.samples) {
        put_double(os, s.t);
        for (int k = 0; k < path.dim; ++k) {
            os << ',';
            put_double(os, s.x[static_cast<std::size_t>(k)]);
        }
        os << ',' << s.mode << ',' << (s.breakpoint ? 1 : 0) << '\n';
    }
}

}  // namespace pdmp
