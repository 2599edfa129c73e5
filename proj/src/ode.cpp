#include "pdmp/ode.hpp"

#include <algorithm>
#include <cmath>

namespace pdmp {

namespace {

// Dormand-Prince 5(4) tableau (Hairer/Norsett/Wanner notation).
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
// y1 - yhat1 coefficients.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// Dense-output d coefficients.
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

constexpr double kSafe = 0.9, kFacMin = 0.2, kFacMax = 10.0, kBeta = 0.04;
constexpr double kExpo = 0.2 - kBeta * 0.75;
constexpr double kUround = 2.220446049250313e-16;

}  // namespace

Dopri5::Dopri5(int dim, Rhs rhs, OdeOptions opts)
    : dim_(dim), rhs_(std::move(rhs)), opts_(opts) {
    const auto n = static_cast<std::size_t>(dim);
    for (Vec* v : {&x_, &x_prev_, &x_new_, &err_, &k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_,
                   &tmp_, &rc1_, &rc2_, &rc3_, &rc4_, &rc5_})
        v->assign(n, 0.0);
}

void Dopri5::start(double t0, std::span<const double> x0) {
    t_ = t_prev_ = t0;
    std::copy(x0.begin(), x0.end(), x_.begin());
    std::copy(x0.begin(), x0.end(), x_prev_.begin());
    have_k1_ = false;
    h_ = 0.0;
    fac_old_ = 1e-4;
    n_steps_ = 0;
}

double Dopri5::error_norm() const {
    double s = 0.0;
    for (int i = 0; i < dim_; ++i) {
        const double sc = opts_.abs_tol +
                          opts_.rel_tol * std::max(std::abs(x_[static_cast<std::size_t>(i)]),
                                                   std::abs(x_new_[static_cast<std::size_t>(i)]));
        const double e = err_[static_cast<std::size_t>(i)] / sc;
        s += e * e;
    }
    return std::sqrt(s / dim_);
}

double Dopri5::initial_step(double t_end) const {
    // Hairer's hinit, simplified for autonomous systems.
    double dnf = 0.0, dny = 0.0;
    for (int i = 0; i < dim_; ++i) {
        const double sc = opts_.abs_tol + opts_.rel_tol * std::abs(x_[static_cast<std::size_t>(i)]);
        dnf += (k1_[static_cast<std::size_t>(i)] / sc) * (k1_[static_cast<std::size_t>(i)] / sc);
        dny += (x_[static_cast<std::size_t>(i)] / sc) * (x_[static_cast<std::size_t>(i)] / sc);
    }
    double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * std::sqrt(dny / dnf);
    h = std::min(h, t_end - t_);
    // One explicit Euler probe to bound the second derivative.
    Vec x1(x_), f1(static_cast<std::size_t>(dim_));
    for (int i = 0; i < dim_; ++i) x1[static_cast<std::size_t>(i)] += h * k1_[static_cast<std::size_t>(i)];
    rhs_(x1, f1);
    double der2 = 0.0;
    for (int i = 0; i < dim_; ++i) {
        const double sc = opts_.abs_tol + opts_.rel_tol * std::abs(x_[static_cast<std::size_t>(i)]);
        const double d = (f1[static_cast<std::size_t>(i)] - k1_[static_cast<std::size_t>(i)]) / sc;
        der2 += d * d;
    }
    der2 = std::sqrt(der2) / h;
    const double der12 = std::max(der2, std::sqrt(dnf));
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3)
                                     : std::pow(0.01 / der12, 1.0 / 5.0);
    return std::max(1e-300, std::min({100.0 * h, h1, t_end - t_}));
}

bool Dopri5::step(double t_end) {
    if (t_ >= t_end) return false;
    const auto n = static_cast<std::size_t>(dim_);
    if (!have_k1_) {
        rhs_(x_, k1_);
        have_k1_ = true;
    }
    if (h_ <= 0.0) h_ = initial_step(t_end);
    bool rejected = false;
    for (;;) {
        if (++n_steps_ > opts_.max_steps)
            throw IntegrationError("step limit exceeded", t_);
        h_ = std::min(h_, t_end - t_);
        if (t_ + 0.1 * h_ == t_ || h_ <= std::abs(t_) * kUround)
            throw IntegrationError("step size underflow", t_);

        for (std::size_t i = 0; i < n; ++i) tmp_[i] = x_[i] + h_ * a21 * k1_[i];
        rhs_(tmp_, k2_);
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = x_[i] + h_ * (a31 * k1_[i] + a32 * k2_[i]);
        rhs_(tmp_, k3_);
        for (std::size_t i = 0; i < n; ++i)
            tmp_[i] = x_[i] + h_ * (a41 * k1_[i] + a42 * k2_[i] + a43 * k3_[i]);
        rhs_(tmp_, k4_);
        for (std::size_t i = 0; i < n; ++i)
            tmp_[i] = x_[i] + h_ * (a51 * k1_[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
        rhs_(tmp_, k5_);
        for (std::size_t i = 0; i < n; ++i)
            tmp_[i] = x_[i] + h_ * (a61 * k1_[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] +
                                    a65 * k5_[i]);
        rhs_(tmp_, k6_);
        for (std::size_t i = 0; i < n; ++i)
            x_new_[i] = x_[i] + h_ * (a71 * k1_[i] + a73 * k3_[i] + a74 * k4_[i] + a75 * k5_[i] +
                                      a76 * k6_[i]);
        rhs_(x_new_, k7_);
        for (std::size_t i = 0; i < n; ++i)
            err_[i] = h_ * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] +
                            e7 * k7_[i]);

        const double err = error_norm();
        const double fac11 = std::pow(std::max(err, 1e-32), kExpo);
        if (err <= 1.0) {
            // Accept; prepare dense coefficients for [t, t+h].
            for (std::size_t i = 0; i < n; ++i) {
                const double ydiff = x_new_[i] - x_[i];
                const double bspl = h_ * k1_[i] - ydiff;
                rc1_[i] = x_[i];
                rc2_[i] = ydiff;
                rc3_[i] = bspl;
                rc4_[i] = ydiff - h_ * k7_[i] - bspl;
                rc5_[i] = h_ * (d1 * k1_[i] + d3 * k3_[i] + d4 * k4_[i] + d5 * k5_[i] +
                                d6 * k6_[i] + d7 * k7_[i]);
            }
            t_prev_ = t_;
            x_prev_ = x_;
            t_ += h_;
            x_.swap(x_new_);
            k1_.swap(k7_);  // FSAL
            double fac = fac11 / std::pow(fac_old_, kBeta);
            fac = std::max(1.0 / kFacMax, std::min(1.0 / kFacMin, fac / kSafe));
            double h_next = h_ / fac;
            if (rejected) h_next = std::min(h_next, h_);
            fac_old_ = std::max(err, 1e-4);
            h_ = h_next;
            return true;
        }
        rejected = true;
        h_ /= std::min(1.0 / kFacMin, fac11 / kSafe);
    }
}

void Dopri5::eval_dense(double t, std::span<double> out) const {
    const double h = t_ - t_prev_;
    const double theta = h == 0.0 ? 0.0 : (t - t_prev_) / h;
    const double th1 = 1.0 - theta;
    for (int i = 0; i < dim_; ++i) {
        const auto k = static_cast<std::size_t>(i);
        out[static_cast<std::size_t>(i)] =
            rc1_[k] + theta * (rc2_[k] + th1 * (rc3_[k] + theta * (rc4_[k] + th1 * rc5_[k])));
    }
}

Dopri5::Rhs mode_rhs(const SwitchingSystem& sys, int mode) {
    const VectorField* f = &sys.fields[static_cast<std::size_t>(mode)];
    return [f](std::span<const double> x, std::span<double> dx) { f->eval(x, dx); };
}

Vec flow(const SwitchingSystem& sys, int mode, double t, const Vec& x, const OdeOptions& opts) {
    if (t == 0.0) return x;
    Dopri5 ode(sys.dim, mode_rhs(sys, mode), opts);
    ode.start(0.0, x);
    while (ode.step(t)) {
    }
    return Vec(ode.x().begin(), ode.x().end());
}

}  // namespace pdmp
