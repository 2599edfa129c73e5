#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pdmp/grid.hpp"
#include "pdmp/ode.hpp"
#include "pdmp/reach.hpp"
#include "pdmp/rng.hpp"
#include "pdmp/stats.hpp"
#include "pdmp/system.hpp"
#include "pdmp/trajectory.hpp"

namespace pdmp {

// State of the discrete chain after n jumps.
struct ChainState {
    long n = 0;
    HybridState state;
    double t = 0.0;  // accumulated jump time T_n
};

// One chain step. Normative draw order: duration first (inverse-CDF
// exponential from one uniform), then the new mode from the Q row at the
// landed position (cumulative-sum inversion of a second uniform).
ChainState step_chain(const SwitchingSystem& sys, const ChainState& state, RngStream& rng,
                      const OdeOptions& opts = {});

// Cumulative-sum inversion over a Q row; the row is renormalized by its
// own sum and ties resolve to the lower index.
int sample_mode_from_row(const Matrix& q, int row, double u);

// One accepted integrator step of a mode-constant segment, with dense
// access to the interior.
struct StepView {
    double t0 = 0.0, t1 = 0.0;  // absolute times
    int mode = 0;
    const Dopri5* ode = nullptr;
    double seg_origin = 0.0;  // absolute time of the segment start

    void eval(double t_abs, std::span<double> out) const {
        ode->eval_dense(t_abs - seg_origin, out);
    }
};

struct WalkCallbacks {
    // Called for the initial state and after every jump (the (X_n, Y_n)
    // sequence of the chain).
    std::function<void(const ChainState&)> on_chain_state;
    // Called once per accepted ODE step of every flow segment.
    std::function<void(const StepView&)> on_step;
};

// Drives the PDMP from z0 to the horizon; returns the final state (t =
// horizon; n = jumps taken).
ChainState walk_pdmp(const SwitchingSystem& sys, const HybridState& z0, double horizon,
                     RngStream& rng, const OdeOptions& opts, const WalkCallbacks& cb);

// Continuous interpolation Z_t sampled every sample_dt plus at all jump
// times.
PiecewisePath simulate(const SwitchingSystem& sys, const HybridState& z0, double horizon,
                       double sample_dt, RngStream& rng, const OdeOptions& opts = {});

// Evaluate the process at the given increasing times (one run).
void sample_pdmp_at(const SwitchingSystem& sys, const HybridState& z0,
                    std::span<const double> times, RngStream& rng, const OdeOptions& opts,
                    const std::function<void(std::size_t, double, std::span<const double>, int)>&
                        visitor);

// Evaluate the deterministic schedule trajectory eta at the given
// increasing times.
void sample_schedule_at(const SwitchingSystem& sys, const Vec& x0, const JumpSchedule& sched,
                        std::span<const double> times, const OdeOptions& opts,
                        const std::function<void(std::size_t, double, std::span<const double>,
                                                 int)>& visitor);

enum class MeasureKind { DiscreteChain, ContinuousTime };

struct MeasureEntry {
    std::uint32_t cell = 0;
    int mode = 0;
    double weight = 0.0;
};

// Occupation measure on (cell, mode) pairs.
struct EmpiricalMeasure {
    CellGrid grid;
    MeasureKind kind = MeasureKind::ContinuousTime;
    double burn_in = 0.0;
    int modes = 0;  // mode count of the generating system
    std::vector<MeasureEntry> entries;  // sorted by (cell, mode)
    double total_weight = 0.0;
    int guard_exits = 0;

    double weight_at(std::uint32_t cell, int mode) const;
};

// From stored paths (continuous-time weighting by sample spacing).
EmpiricalMeasure occupation_measure(std::span<const PiecewisePath> paths, const CellGrid& grid,
                                    double burn_in);
// From stored chain runs (equal weight per post-burn-in state).
EmpiricalMeasure occupation_measure(std::span<const std::vector<ChainState>> runs,
                                    const CellGrid& grid, double burn_in);

// Streaming single-run driver for long horizons.
EmpiricalMeasure run_occupation_measure(const SwitchingSystem& sys, const HybridState& z0,
                                        double horizon, double burn_in, const CellGrid& grid,
                                        double sample_dt, MeasureKind kind, RngStream& rng,
                                        const OdeOptions& opts = {});

// All (cell, mode) pairs with normalized weight > threshold.
std::vector<std::pair<std::uint32_t, int>> support_estimate(const EmpiricalMeasure& measure,
                                                            double threshold);

struct SupportReport {
    std::vector<std::pair<std::uint32_t, int>> support;  // threshold-0 support
    double excess_mass = 0.0;  // normalized mass outside the inflated invariant-class union
    std::vector<double> per_class_mass;  // per report class; variant classes get 0
    std::vector<double> class_coverage;  // visited fraction of (class cell, mode) pairs
    int dominant_class = -1;             // invariant class holding the most mass
    int inflation = 1;
    double threshold = 0.0;
};

SupportReport verify_support_inclusion(const EmpiricalMeasure& measure,
                                       const ControlSetReport& report, int inflation);

struct TubeEstimate {
    WilsonInterval ci;
    long n = 0;
    double delta = 0.0;
    double horizon = 0.0;
};

// Monte Carlo probability that the process stays delta-close to the
// schedule trajectory up to its end time.
TubeEstimate tube_probability(const SwitchingSystem& sys, const Vec& x, int mode,
                              const JumpSchedule& sched, double delta, long n_samples,
                              std::uint64_t seed, const OdeOptions& opts = {}, int workers = 1,
                              int n_check = 256);

// Worst case over starting modes of the probability that X_T lies in the
// inflated class.
WilsonInterval entry_probability(const SwitchingSystem& sys, const Vec& x, const CellSet& cls,
                                 const CellGrid& grid, double T, long n_samples,
                                 std::uint64_t seed, int inflation = 1,
                                 const OdeOptions& opts = {}, int workers = 1);

struct MixingRow {
    double t = 0.0;
    double tv = 0.0;     // empirical total variation between the two histograms
    double noise = 0.0;  // aggregated binomial standard error of tv
};

struct MixingDiagnostic {
    std::vector<MixingRow> rows;
    double alpha = 0.0;  // fitted decay rate of log TV
    double alpha_lo = 0.0, alpha_hi = 0.0;
    double c = 0.0;  // fitted prefactor
};

// Empirical TV distance between cell-mode histograms of Z_t started at
// z_a and z_b, with a least-squares decay fit of log TV against t.
MixingDiagnostic mixing_diagnostic(const SwitchingSystem& sys, const HybridState& z_a,
                                   const HybridState& z_b, const CellGrid& grid,
                                   std::span<const double> times, long runs_per_time,
                                   std::uint64_t seed, const OdeOptions& opts = {},
                                   int workers = 1);

}  // namespace pdmp
