#pragma once

#include <span>
#include <vector>

namespace pdmp {

// One-sample Kolmogorov-Smirnov statistic against Exponential(lambda).
double ks_statistic_exponential(std::span<const double> samples, double lambda);

// Asymptotic Kolmogorov distribution K(x) = P(sqrt(n) D_n <= x).
double kolmogorov_cdf(double x);

struct WilsonInterval {
    double estimate = 0.0;
    double lo = 0.0;
    double hi = 1.0;
};

WilsonInterval wilson_interval(long successes, long n, double z = 1.96);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double slope_lo = 0.0;  // 95% confidence band (Student t)
    double slope_hi = 0.0;
    int n = 0;
};

LineFit fit_line(std::span<const double> xs, std::span<const double> ys);

}  // namespace pdmp
