#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pdmp {

using Vec = std::vector<double>;

// Configuration / input validation failure. `path` names the offending
// field (e.g. "q.matrices[0].row0") so CLI messages can point at it.
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string path, const std::string& what)
        : std::runtime_error(path.empty() ? what : path + ": " + what),
          path_(std::move(path)) {}

    const std::string& path() const { return path_; }

private:
    std::string path_;
};

// ODE step failure; carries the time actually reached.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double t_reached)
        : std::runtime_error(what + " (t reached: " + std::to_string(t_reached) + ")"),
          t_reached_(t_reached) {}

    double t_reached() const { return t_reached_; }

private:
    double t_reached_;
};

// Dense row-major matrix, minimal on purpose.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }

    void resize(int r, int c) {
        rows = r;
        cols = c;
        a.assign(static_cast<std::size_t>(r) * c, 0.0);
    }

    bool operator==(const Matrix&) const = default;
};

// Axis-aligned compact box; the state space M.
struct Box {
    Vec lo;
    Vec hi;

    int dim() const { return static_cast<int>(lo.size()); }

    double extent(int k) const { return hi[k] - lo[k]; }

    double diameter() const {
        double s = 0.0;
        for (int k = 0; k < dim(); ++k) s += extent(k) * extent(k);
        return std::sqrt(s);
    }

    bool contains(std::span<const double> x, double slack = 0.0) const {
        for (int k = 0; k < dim(); ++k)
            if (x[k] < lo[k] - slack || x[k] > hi[k] + slack) return false;
        return true;
    }

    Vec center() const {
        Vec c(lo.size());
        for (int k = 0; k < dim(); ++k) c[k] = 0.5 * (lo[k] + hi[k]);
        return c;
    }

    bool operator==(const Box&) const = default;
};

inline double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double dist2(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return std::sqrt(s);
}

// Numerical slack allowed outside M before an exit is flagged.
inline double guard_band(const Box& box) { return 1e-6 * box.diameter(); }

}  // namespace pdmp
