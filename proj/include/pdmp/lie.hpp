#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pdmp/system.hpp"

namespace pdmp {

// A field that can be evaluated together with its Jacobian. Registry
// fields and differences carry exact Jacobians; bracket fields fall back
// to central finite differences of their own evaluation, which keeps
// nesting depth <= 3 accurate to about 1e-6.
class FieldExpr {
public:
    virtual ~FieldExpr() = default;
    virtual int dim() const = 0;
    virtual void eval(std::span<const double> x, std::span<double> out) const = 0;
    virtual void jacobian(std::span<const double> x, Matrix& out) const = 0;

    Vec eval(const Vec& x) const {
        Vec out(x.size());
        eval(std::span<const double>(x), std::span<double>(out));
        return out;
    }
};

using FieldExprPtr = std::shared_ptr<const FieldExpr>;

FieldExprPtr make_field_expr(const VectorField& f);                       // exact Jacobian
FieldExprPtr make_difference(FieldExprPtr f, FieldExprPtr g);             // f - g
FieldExprPtr make_bracket(FieldExprPtr f, FieldExprPtr g);                // [f, g]

// [f,g](x) = Jg(x) f(x) - Jf(x) g(x).
Vec lie_bracket(const FieldExpr& f, const FieldExpr& g, const Vec& x);
Vec lie_bracket(const VectorField& f, const VectorField& g, const Vec& x);

// Which generating family spans the algebra:
//   Full    - the system fields F^0..F^m themselves.
//   Control - the differences F^i - F^0 (i >= 1), closed under brackets
//             with every field F^j.
enum class GeneratorForm { Full, Control };

struct BracketEntry {
    std::string word;   // e.g. "[f0,[f0,f1]]"
    int depth = 0;      // word length - 1; depth 0 entries are the generators
    FieldExprPtr field;
    Vec value;          // evaluated at the table's base point
};

struct BracketTable {
    Vec x;
    int depth = 0;
    GeneratorForm form = GeneratorForm::Full;
    std::vector<BracketEntry> entries;
};

BracketTable bracket_table(const SwitchingSystem& sys, const Vec& x, int depth,
                           GeneratorForm form = GeneratorForm::Full);

struct RankReport {
    Vec x;
    int rank = 0;
    int depth = 0;
    std::vector<double> singular_values;  // descending
    double tolerance = 0.0;               // relative to max(1, largest)
};

RankReport larc_rank(const SwitchingSystem& sys, const Vec& x, int depth,
                     GeneratorForm form = GeneratorForm::Full);

struct LarcSummary {
    bool all_full_rank = false;
    std::vector<RankReport> reports;
};

LarcSummary check_larc(const SwitchingSystem& sys, const std::vector<Vec>& points, int depth,
                       GeneratorForm form = GeneratorForm::Full);

}  // namespace pdmp
