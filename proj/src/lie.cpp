#include "pdmp/lie.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

namespace pdmp {

namespace {

class RegistryExpr final : public FieldExpr {
public:
    explicit RegistryExpr(VectorField f) : f_(std::move(f)) {}
    int dim() const override { return f_.dim; }
    void eval(std::span<const double> x, std::span<double> out) const override { f_.eval(x, out); }
    void jacobian(std::span<const double> x, Matrix& out) const override { f_.jacobian(x, out); }

private:
    VectorField f_;
};

class DifferenceExpr final : public FieldExpr {
public:
    DifferenceExpr(FieldExprPtr f, FieldExprPtr g) : f_(std::move(f)), g_(std::move(g)) {}
    int dim() const override { return f_->dim(); }

    void eval(std::span<const double> x, std::span<double> out) const override {
        Vec tmp(out.size());
        f_->eval(x, out);
        g_->eval(x, tmp);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] -= tmp[i];
    }

    void jacobian(std::span<const double> x, Matrix& out) const override {
        Matrix jg;
        f_->jacobian(x, out);
        g_->jacobian(x, jg);
        for (std::size_t i = 0; i < out.a.size(); ++i) out.a[i] -= jg.a[i];
    }

private:
    FieldExprPtr f_, g_;
};

class BracketExpr final : public FieldExpr {
public:
    BracketExpr(FieldExprPtr f, FieldExprPtr g) : f_(std::move(f)), g_(std::move(g)) {}
    int dim() const override { return f_->dim(); }

    void eval(std::span<const double> x, std::span<double> out) const override {
        const int d = dim();
        Vec fx(static_cast<std::size_t>(d)), gx(static_cast<std::size_t>(d));
        Matrix jf, jg;
        f_->eval(x, fx);
        g_->eval(x, gx);
        f_->jacobian(x, jf);
        g_->jacobian(x, jg);
        for (int r = 0; r < d; ++r) {
            double s = 0.0;
            for (int c = 0; c < d; ++c)
                s += jg(r, c) * fx[static_cast<std::size_t>(c)] -
                     jf(r, c) * gx[static_cast<std::size_t>(c)];
            out[static_cast<std::size_t>(r)] = s;
        }
    }

    // Central finite differences of eval; the children carry the analytic
    // information one level down.
    void jacobian(std::span<const double> x, Matrix& out) const override {
        const int d = dim();
        out.resize(d, d);
        const double step = 1e-5 * (1.0 + norm2(x));
        Vec xp(x.begin(), x.end()), xm(x.begin(), x.end());
        Vec fp(static_cast<std::size_t>(d)), fm(static_cast<std::size_t>(d));
        for (int c = 0; c < d; ++c) {
            const auto cs = static_cast<std::size_t>(c);
            xp[cs] = x[cs] + step;
            xm[cs] = x[cs] - step;
            eval(xp, fp);
            eval(xm, fm);
            for (int r = 0; r < d; ++r)
                out(r, c) = (fp[static_cast<std::size_t>(r)] - fm[static_cast<std::size_t>(r)]) /
                            (2.0 * step);
            xp[cs] = x[cs];
            xm[cs] = x[cs];
        }
    }

private:
    FieldExprPtr f_, g_;
};

}  // namespace

FieldExprPtr make_field_expr(const VectorField& f) { return std::make_shared<RegistryExpr>(f); }

FieldExprPtr make_difference(FieldExprPtr f, FieldExprPtr g) {
    return std::make_shared<DifferenceExpr>(std::move(f), std::move(g));
}

FieldExprPtr make_bracket(FieldExprPtr f, FieldExprPtr g) {
    return std::make_shared<BracketExpr>(std::move(f), std::move(g));
}

Vec lie_bracket(const FieldExpr& f, const FieldExpr& g, const Vec& x) {
    const int d = f.dim();
    Vec out(static_cast<std::size_t>(d));
    Vec fx(static_cast<std::size_t>(d)), gx(static_cast<std::size_t>(d));
    Matrix jf, jg;
    f.eval(std::span<const double>(x), fx);
    g.eval(std::span<const double>(x), gx);
    f.jacobian(x, jf);
    g.jacobian(x, jg);
    for (int r = 0; r < d; ++r) {
        double s = 0.0;
        for (int c = 0; c < d; ++c)
            s += jg(r, c) * fx[static_cast<std::size_t>(c)] -
                 jf(r, c) * gx[static_cast<std::size_t>(c)];
        out[static_cast<std::size_t>(r)] = s;
    }
    return out;
}

Vec lie_bracket(const VectorField& f, const VectorField& g, const Vec& x) {
    return lie_bracket(*make_field_expr(f), *make_field_expr(g), x);
}

namespace {

struct HallElem {
    std::string word;
    int length = 1;
    int order = 0;  // position in the Hall ordering
    FieldExprPtr field;
    int left = -1, right = -1;  // indices into the Hall list; -1 for generators
};

// Hall set over the generator list, all words of length <= max_len. The
// standard condition bounds the basis: [u,v] is admitted iff u < v and,
// when v = [a,b], a <= u.
std::vector<HallElem> hall_set(const std::vector<std::pair<std::string, FieldExprPtr>>& gens,
                               int max_len) {
    std::vector<HallElem> hall;
    for (const auto& [name, field] : gens) {
        HallElem e;
        e.word = name;
        e.length = 1;
        e.order = static_cast<int>(hall.size());
        e.field = field;
        hall.push_back(std::move(e));
    }
    for (int len = 2; len <= max_len; ++len) {
        const std::size_t existing = hall.size();
        for (std::size_t u = 0; u < existing; ++u) {
            for (std::size_t v = 0; v < existing; ++v) {
                if (hall[u].length + hall[v].length != len) continue;
                if (hall[u].order >= hall[v].order) continue;
                if (hall[v].left != -1 &&
                    hall[static_cast<std::size_t>(hall[v].left)].order > hall[u].order)
                    continue;
                HallElem e;
                e.word = "[" + hall[u].word + "," + hall[v].word + "]";
                e.length = len;
                e.order = static_cast<int>(hall.size());
                e.field = make_bracket(hall[u].field, hall[v].field);
                e.left = static_cast<int>(u);
                e.right = static_cast<int>(v);
                hall.push_back(std::move(e));
            }
        }
    }
    return hall;
}

}  // namespace

BracketTable bracket_table(const SwitchingSystem& sys, const Vec& x, int depth,
                           GeneratorForm form) {
    if (depth < 0) throw ValidationError("depth", "must be >= 0");
    BracketTable table;
    table.x = x;
    table.depth = depth;
    table.form = form;

    std::vector<FieldExprPtr> fields;
    for (const auto& f : sys.fields) fields.push_back(make_field_expr(f));

    if (form == GeneratorForm::Full) {
        std::vector<std::pair<std::string, FieldExprPtr>> gens;
        for (std::size_t i = 0; i < fields.size(); ++i)
            gens.emplace_back("f" + std::to_string(i), fields[i]);
        for (const auto& e : hall_set(gens, depth + 1))
            table.entries.push_back({e.word, e.length - 1, e.field, e.field->eval(x)});
        return table;
    }

    // Control form: differences f_i - f_0 at depth 0, then brackets of any
    // system field with any previous entry. Words are deduplicated.
    std::vector<BracketEntry> prev;
    for (std::size_t i = 1; i < fields.size(); ++i) {
        BracketEntry e;
        e.word = "f" + std::to_string(i) + "-f0";
        e.depth = 0;
        e.field = make_difference(fields[i], fields[0]);
        e.value = e.field->eval(x);
        table.entries.push_back(e);
        prev.push_back(std::move(e));
    }
    for (int d = 1; d <= depth; ++d) {
        std::vector<BracketEntry> next;
        for (std::size_t j = 0; j < fields.size(); ++j) {
            for (const auto& e : prev) {
                BracketEntry b;
                b.word = "[f" + std::to_string(j) + "," + e.word + "]";
                b.depth = d;
                b.field = make_bracket(fields[j], e.field);
                b.value = b.field->eval(x);
                table.entries.push_back(b);
                next.push_back(std::move(b));
            }
        }
        prev = std::move(next);
    }
    return table;
}

RankReport larc_rank(const SwitchingSystem& sys, const Vec& x, int depth, GeneratorForm form) {
    const BracketTable table = bracket_table(sys, x, depth, form);
    const int d = sys.dim;
    const int cols = static_cast<int>(table.entries.size());

    RankReport report;
    report.x = x;
    report.depth = depth;
    report.tolerance = 1e-8;
    if (cols == 0) return report;

    Eigen::MatrixXd m(d, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < d; ++r)
            m(r, c) = table.entries[static_cast<std::size_t>(c)].value[static_cast<std::size_t>(r)];

    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& sv = svd.singularValues();
    for (Eigen::Index i = 0; i < sv.size(); ++i) report.singular_values.push_back(sv(i));
    const double cut = report.tolerance * std::max(1.0, report.singular_values.empty()
                                                            ? 0.0
                                                            : report.singular_values.front());
    for (double s : report.singular_values)
        if (s > cut) ++report.rank;
    return report;
}

LarcSummary check_larc(const SwitchingSystem& sys, const std::vector<Vec>& points, int depth,
                       GeneratorForm form) {
    LarcSummary summary;
    summary.all_full_rank = true;
    for (const auto& p : points) {
        summary.reports.push_back(larc_rank(sys, p, depth, form));
        if (summary.reports.back().rank != sys.dim) summary.all_full_rank = false;
    }
    return summary;
}

}  // namespace pdmp
