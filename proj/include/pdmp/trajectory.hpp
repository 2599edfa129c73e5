#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "pdmp/ode.hpp"
#include "pdmp/system.hpp"

namespace pdmp {

// A mode sequence (i_0..i_n) with inter-jump durations (u_1..u_n).
struct JumpSchedule {
    std::vector<int> modes;
    std::vector<double> durations;

    int jumps() const { return static_cast<int>(durations.size()); }
    double total_time() const;
    void validate(int mode_count) const;
};

struct PathSample {
    double t;
    Vec x;
    int mode;            // mode active from this sample onward (right-continuous)
    bool breakpoint;     // true at jump times (and at t=0)
};

// Sampled trajectory with mode-constant segments. Position is continuous
// across breakpoints; only the mode changes there.
struct PiecewisePath {
    int dim = 0;
    std::vector<PathSample> samples;
    std::vector<double> breakpoints;  // t_0 = 0 < t_1 < ... < t_n
    int guard_exits = 0;              // samples outside M beyond the guard band
};

// eta_{x,i,u}: concatenated single-mode flows, sampled every sample_dt
// plus at every breakpoint.
PiecewisePath piecewise_trajectory(const SwitchingSystem& sys, const Vec& x0,
                                   const JumpSchedule& sched, double sample_dt,
                                   const OdeOptions& opts = {});

// p(x, i, u) = prod_j Q(x_j, i_{j-1}, i_j) with x_j the integrator's
// positions at the breakpoints. Zero iff the schedule is not adapted.
double path_probability(const SwitchingSystem& sys, const Vec& x0, const JumpSchedule& sched,
                        const OdeOptions& opts = {});

struct InvarianceViolation {
    int mode;
    Vec start;
    double t_exit;
    Vec x_exit;
};

struct InvarianceReport {
    std::vector<InvarianceViolation> violations;
    int samples_checked = 0;
    double guard = 0.0;
};

// Integrates every mode from boundary samples of M over the horizon and
// records exits beyond the guard band. Report-only.
InvarianceReport check_positive_invariance(const SwitchingSystem& sys, int n_boundary_samples,
                                           double horizon, const OdeOptions& opts = {});

// CSV: t, x_0..x_{d-1}, mode, is_breakpoint.
void write_csv(const PiecewisePath& path, std::ostream& os);

}  // namespace pdmp
