#pragma once

#include <functional>
#include <span>

#include "pdmp/common.hpp"
#include "pdmp/system.hpp"

namespace pdmp {

struct OdeOptions {
    double abs_tol = 1e-9;
    double rel_tol = 1e-9;
    std::size_t max_steps = 50'000'000;
};

// Adaptive Dormand-Prince 5(4): embedded error estimate, PI step-size
// control, FSAL, and the classic order-4 continuous extension so callers
// can sample accepted steps densely without constraining the step size.
class Dopri5 {
public:
    using Rhs = std::function<void(std::span<const double>, std::span<double>)>;

    Dopri5(int dim, Rhs rhs, OdeOptions opts = {});

    void start(double t0, std::span<const double> x0);

    // Advance one accepted step, never past t_end. Returns false when the
    // current time already equals t_end.
    bool step(double t_end);

    double t() const { return t_; }
    double t_prev() const { return t_prev_; }
    std::span<const double> x() const { return x_; }

    // Interpolate inside the last accepted step [t_prev, t].
    void eval_dense(double t, std::span<double> out) const;

    std::size_t steps_taken() const { return n_steps_; }

private:
    double error_norm() const;
    double initial_step(double t_end) const;

    int dim_;
    Rhs rhs_;
    OdeOptions opts_;

    double t_ = 0.0, t_prev_ = 0.0, h_ = 0.0, fac_old_ = 1e-4;
    bool have_k1_ = false;
    std::size_t n_steps_ = 0;

    Vec x_, x_prev_, x_new_, err_;
    Vec k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_;
    Vec rc1_, rc2_, rc3_, rc4_, rc5_;  // dense-output coefficients
};

// Solution map of a single mode: Phi^i(t, x).
Vec flow(const SwitchingSystem& sys, int mode, double t, const Vec& x,
         const OdeOptions& opts = {});

// RHS adapter for one mode of a system.
Dopri5::Rhs mode_rhs(const SwitchingSystem& sys, int mode);

}  // namespace pdmp
