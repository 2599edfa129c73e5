#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pdmp/common.hpp"

namespace pdmp {

// Closed registry of vector-field families. Every family ships an exact
// Jacobian; the Lie-bracket machinery depends on that.
enum class FieldFamily {
    LinearAffine,   // F(x) = A x + b            params: A row-major (d*d), then b (d)
    Polynomial1d,   // F(x) = sum c_k x^k, d=1   params: c_0..c_n ascending
    TwoWellAffine,  // F(x) = a - x              params: a (d)
    CubicBistable,  // F(x) = x - x^3 + eps, d=1 params: eps
    RotationAffine  // F(x) = [[0,w],[-w,0]] x + b, d=2   params: w, b_0, b_1
};

const char* field_family_name(FieldFamily f);
std::optional<FieldFamily> parse_field_family(const std::string& name);

struct VectorField {
    FieldFamily family = FieldFamily::LinearAffine;
    std::vector<double> params;
    int dim = 0;

    void eval(std::span<const double> x, std::span<double> out) const;
    void jacobian(std::span<const double> x, Matrix& out) const;

    Vec eval(const Vec& x) const {
        Vec out(x.size());
        eval(std::span<const double>(x), std::span<double>(out));
        return out;
    }

    // Expected params length for this family at dimension d.
    static std::size_t arity(FieldFamily f, int d, std::size_t given);
    void validate(const std::string& path) const;
};

enum class QFamily { Constant, Interpolated };

struct BlendSpec {
    double center = 0.0;
    double slope = 1.0;
    int coord = 0;  // state coordinate fed to the sigmoid

    bool operator==(const BlendSpec&) const = default;
};

// x -> Q(x), a row-stochastic (m+1)x(m+1) matrix. The interpolated family
// blends two endpoint matrices through a logistic sigmoid of one state
// coordinate; at the blend center the output is the entrywise midpoint.
struct TransitionMatrixField {
    QFamily family = QFamily::Constant;
    std::vector<Matrix> matrices;  // one (constant) or two (interpolated)
    std::optional<BlendSpec> blend;

    void eval(std::span<const double> x, Matrix& out) const;
    Matrix eval(const Vec& x) const {
        Matrix out;
        eval(std::span<const double>(x), out);
        return out;
    }
};

// Full problem instance. Immutable after construction; all operations on
// it are pure, so instances are safely shared across worker threads.
struct SwitchingSystem {
    int dim = 0;
    std::vector<VectorField> fields;  // one per mode, E = {0..m}
    TransitionMatrixField q;
    double lambda = 1.0;  // jump intensity of the Poisson clock
    Box box;              // the compact positively invariant candidate M

    // Non-fatal findings recorded at validation time (e.g. a boundary
    // point where some field points outward).
    std::vector<std::string> warnings;

    int mode_count() const { return static_cast<int>(fields.size()); }
};

struct HybridState {
    Vec x;
    int mode = 0;
};

// Eager full validation; appends warnings, throws ValidationError on hard
// violations. load_system calls this; tests may build systems directly to
// bypass it (e.g. periodic Q matrices).
void validate_system(SwitchingSystem& sys);

SwitchingSystem load_system(const std::string& config_text);
SwitchingSystem load_system_file(const std::string& path);
std::string serialize_system(const SwitchingSystem& sys);

inline Vec eval_field(const SwitchingSystem& sys, int mode, const Vec& x) {
    return sys.fields[static_cast<std::size_t>(mode)].eval(x);
}

inline Matrix eval_q(const SwitchingSystem& sys, const Vec& x) { return sys.q.eval(x); }

// True iff the positivity pattern of Q^n is all-ones for some n <= dim^2
// (irreducible + aperiodic).
bool primitive_pattern(const Matrix& q);

}  // namespace pdmp
