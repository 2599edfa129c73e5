#include "pdmp/system.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace pdmp {

using nlohmann::json;

const char* field_family_name(FieldFamily f) {
    switch (f) {
        case FieldFamily::LinearAffine: return "linear-affine";
        case FieldFamily::Polynomial1d: return "polynomial-1d";
        case FieldFamily::TwoWellAffine: return "two-well-affine";
        case FieldFamily::CubicBistable: return "cubic-bistable";
        case FieldFamily::RotationAffine: return "rotation-affine";
    }
    return "?";
}

std::optional<FieldFamily> parse_field_family(const std::string& name) {
    for (FieldFamily f : {FieldFamily::LinearAffine, FieldFamily::Polynomial1d,
                          FieldFamily::TwoWellAffine, FieldFamily::CubicBistable,
                          FieldFamily::RotationAffine})
        if (name == field_family_name(f)) return f;
    return std::nullopt;
}

std::size_t VectorField::arity(FieldFamily f, int d, std::size_t given) {
    switch (f) {
        case FieldFamily::LinearAffine: return static_cast<std::size_t>(d) * d + d;
        case FieldFamily::Polynomial1d: return given >= 1 ? given : 1;  // any degree
        case FieldFamily::TwoWellAffine: return static_cast<std::size_t>(d);
        case FieldFamily::CubicBistable: return 1;
        case FieldFamily::RotationAffine: return 3;
    }
    return 0;
}

void VectorField::validate(const std::string& path) const {
    if (dim < 1) throw ValidationError(path, "dimension must be >= 1");
    if (family == FieldFamily::Polynomial1d || family == FieldFamily::CubicBistable) {
        if (dim != 1)
            throw ValidationError(path, std::string(field_family_name(family)) +
                                            " requires dim = 1");
    }
    if (family == FieldFamily::RotationAffine && dim != 2)
        throw ValidationError(path, "rotation-affine requires dim = 2");
    const std::size_t expect = arity(family, dim, params.size());
    if (params.size() != expect)
        throw ValidationError(path, "expected " + std::to_string(expect) + " params for " +
                                        field_family_name(family) + ", got " +
                                        std::to_string(params.size()));
    for (double p : params)
        if (!std::isfinite(p)) throw ValidationError(path, "non-finite parameter");
}

void VectorField::eval(std::span<const double> x, std::span<double> out) const {
    const int d = dim;
    switch (family) {
        case FieldFamily::LinearAffine: {
            // params = A (row-major d*d), b (d)
            for (int r = 0; r < d; ++r) {
                double s = params[static_cast<std::size_t>(d) * d + r];
                for (int c = 0; c < d; ++c) s += params[static_cast<std::size_t>(r) * d + c] * x[c];
                out[r] = s;
            }
            break;
        }
        case FieldFamily::Polynomial1d: {
            // Horner
            double s = 0.0;
            for (std::size_t k = params.size(); k-- > 0;) s = s * x[0] + params[k];
            out[0] = s;
            break;
        }
        case FieldFamily::TwoWellAffine: {
            for (int r = 0; r < d; ++r) out[r] = params[static_cast<std::size_t>(r)] - x[r];
            break;
        }
        case FieldFamily::CubicBistable: {
            out[0] = x[0] - x[0] * x[0] * x[0] + params[0];
            break;
        }
        case FieldFamily::RotationAffine: {
            const double w = params[0];
            out[0] = w * x[1] + params[1];
            out[1] = -w * x[0] + params[2];
            break;
        }
    }
}

void VectorField::jacobian(std::span<const double> x, Matrix& out) const {
    const int d = dim;
    out.resize(d, d);
    switch (family) {
        case FieldFamily::LinearAffine:
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c) out(r, c) = params[static_cast<std::size_t>(r) * d + c];
            break;
        case FieldFamily::Polynomial1d: {
            double s = 0.0;
            for (std::size_t k = params.size(); k-- > 1;)
                s = s * x[0] + static_cast<double>(k) * params[k];
            out(0, 0) = s;
            break;
        }
        case FieldFamily::TwoWellAffine:
            for (int r = 0; r < d; ++r) out(r, r) = -1.0;
            break;
        case FieldFamily::CubicBistable:
            out(0, 0) = 1.0 - 3.0 * x[0] * x[0];
            break;
        case FieldFamily::RotationAffine:
            out(0, 1) = params[0];
            out(1, 0) = -params[0];
            break;
    }
}

void TransitionMatrixField::eval(std::span<const double> x, Matrix& out) const {
    if (family == QFamily::Constant) {
        out = matrices[0];
        return;
    }
    const BlendSpec& b = *blend;
    const double s = 1.0 / (1.0 + std::exp(-b.slope * (x[static_cast<std::size_t>(b.coord)] - b.center)));
    const Matrix& q0 = matrices[0];
    const Matrix& q1 = matrices[1];
    out.resize(q0.rows, q0.cols);
    for (std::size_t k = 0; k < out.a.size(); ++k) out.a[k] = (1.0 - s) * q0.a[k] + s * q1.a[k];
}

bool primitive_pattern(const Matrix& q) {
    const int n = q.rows;
    // Boolean matrix powers of the positivity pattern.
    std::vector<bool> p(static_cast<std::size_t>(n) * n), next(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) p[k] = q.a[k] > 0.0;
    const auto all_positive = [&](const std::vector<bool>& m) {
        return std::all_of(m.begin(), m.end(), [](bool b) { return b; });
    };
    if (all_positive(p)) return true;
    for (int step = 1; step < n * n; ++step) {
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) {
                bool v = false;
                for (int k = 0; k < n && !v; ++k)
                    v = p[static_cast<std::size_t>(r) * n + k] && q.a[static_cast<std::size_t>(k) * n + c] > 0.0;
                next[static_cast<std::size_t>(r) * n + c] = v;
            }
        p.swap(next);
        if (all_positive(p)) return true;
    }
    return false;
}

namespace {

void validate_stochastic(const Matrix& q, int modes, const std::string& path) {
    if (q.rows != modes || q.cols != modes)
        throw ValidationError(path, "expected " + std::to_string(modes) + "x" +
                                        std::to_string(modes) + " matrix");
    for (int r = 0; r < q.rows; ++r) {
        double sum = 0.0;
        for (int c = 0; c < q.cols; ++c) {
            const double v = q(r, c);
            if (!(v >= 0.0))
                throw ValidationError(path + ".row" + std::to_string(r), "negative entry");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw ValidationError(path + ".row" + std::to_string(r),
                                  "row sum " + std::to_string(sum) + " != 1");
    }
}

// Lattice points on the boundary faces of the box, paired with the
// outward axis (+/-(k+1) encodes face hi_k / lo_k).
std::vector<std::pair<Vec, int>> boundary_lattice(const Box& box, int per_dim) {
    std::vector<std::pair<Vec, int>> pts;
    const int d = box.dim();
    for (int k = 0; k < d; ++k) {
        // Enumerate a lattice over the remaining d-1 coordinates.
        std::vector<int> idx(static_cast<std::size_t>(d), 0);
        const int rep = per_dim;
        std::size_t total = 1;
        for (int j = 0; j < d - 1; ++j) total *= static_cast<std::size_t>(rep);
        for (std::size_t flat = 0; flat < total; ++flat) {
            Vec x(static_cast<std::size_t>(d));
            std::size_t rest = flat;
            for (int j = 0; j < d; ++j) {
                if (j == k) continue;
                const int i = static_cast<int>(rest % static_cast<std::size_t>(rep));
                rest /= static_cast<std::size_t>(rep);
                const double frac = rep == 1 ? 0.5 : static_cast<double>(i) / (rep - 1);
                x[static_cast<std::size_t>(j)] = box.lo[static_cast<std::size_t>(j)] +
                                                 frac * box.extent(j);
            }
            Vec xl = x, xh = x;
            xl[static_cast<std::size_t>(k)] = box.lo[static_cast<std::size_t>(k)];
            xh[static_cast<std::size_t>(k)] = box.hi[static_cast<std::size_t>(k)];
            pts.emplace_back(std::move(xl), -(k + 1));
            pts.emplace_back(std::move(xh), k + 1);
        }
        (void)idx;
    }
    return pts;
}

}  // namespace

void validate_system(SwitchingSystem& sys) {
    if (sys.dim < 1) throw ValidationError("dim", "must be >= 1");
    if (!(sys.lambda > 0.0)) throw ValidationError("lambda", "must be > 0");
    if (static_cast<int>(sys.box.lo.size()) != sys.dim)
        throw ValidationError("box", "expected " + std::to_string(sys.dim) + " intervals");
    for (int k = 0; k < sys.dim; ++k) {
        if (!(sys.box.lo[static_cast<std::size_t>(k)] < sys.box.hi[static_cast<std::size_t>(k)]))
            throw ValidationError("box[" + std::to_string(k) + "]", "lo must be < hi");
    }
    if (sys.fields.size() < 1) throw ValidationError("modes", "at least one mode required");
    const int modes = sys.mode_count();
    for (int i = 0; i < modes; ++i) {
        const std::string path = "modes[" + std::to_string(i) + "]";
        if (sys.fields[static_cast<std::size_t>(i)].dim != sys.dim)
            throw ValidationError(path, "field dimension != system dim");
        sys.fields[static_cast<std::size_t>(i)].validate(path);
    }

    // Q validation: stochastic rows, then primitivity of the stored
    // matrices. For the interpolated family only the endpoints are
    // checked; intermediate x are convex combinations, which preserve the
    // union of the endpoint positivity patterns.
    const std::size_t want = sys.q.family == QFamily::Constant ? 1 : 2;
    if (sys.q.matrices.size() != want)
        throw ValidationError("q.matrices", "expected " + std::to_string(want) + " matrix(es)");
    for (std::size_t m = 0; m < sys.q.matrices.size(); ++m)
        validate_stochastic(sys.q.matrices[m], modes, "q.matrices[" + std::to_string(m) + "]");
    for (std::size_t m = 0; m < sys.q.matrices.size(); ++m)
        if (!primitive_pattern(sys.q.matrices[m]))
            throw ValidationError("q.matrices[" + std::to_string(m) + "]",
                                  "not irreducible and aperiodic (no n <= (m+1)^2 with Q^n > 0)");
    if (sys.q.family == QFamily::Interpolated) {
        if (!sys.q.blend) throw ValidationError("q.blend", "required for interpolated family");
        if (sys.q.blend->coord < 0 || sys.q.blend->coord >= sys.dim)
            throw ValidationError("q.blend.coord", "coordinate index out of range");
        if (!std::isfinite(sys.q.blend->center) || !std::isfinite(sys.q.blend->slope))
            throw ValidationError("q.blend", "non-finite blend parameter");
    }

    // Boundedness of each field over a sampling lattice of M.
    const int per_dim = sys.dim == 1 ? 65 : (sys.dim == 2 ? 17 : 9);
    Vec x(static_cast<std::size_t>(sys.dim)), fx(static_cast<std::size_t>(sys.dim));
    std::size_t total = 1;
    for (int k = 0; k < sys.dim; ++k) total *= static_cast<std::size_t>(per_dim);
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rest = flat;
        for (int k = 0; k < sys.dim; ++k) {
            const int i = static_cast<int>(rest % static_cast<std::size_t>(per_dim));
            rest /= static_cast<std::size_t>(per_dim);
            x[static_cast<std::size_t>(k)] =
                sys.box.lo[static_cast<std::size_t>(k)] +
                sys.box.extent(k) * static_cast<double>(i) / (per_dim - 1);
        }
        for (int i = 0; i < modes; ++i) {
            sys.fields[static_cast<std::size_t>(i)].eval(x, fx);
            for (double v : fx)
                if (!std::isfinite(v))
                    throw ValidationError("modes[" + std::to_string(i) + "]",
                                          "field unbounded on M");
        }
    }

    // Positive invariance is checked, not assumed: outward components at
    // boundary samples beyond tolerance are recorded as warnings.
    const double tol = 1e-9;
    int outward = 0;
    std::string first;
    for (const auto& [pt, face] : boundary_lattice(sys.box, sys.dim == 1 ? 1 : 9)) {
        const int k = std::abs(face) - 1;
        const double sign = face > 0 ? 1.0 : -1.0;
        for (int i = 0; i < modes; ++i) {
            sys.fields[static_cast<std::size_t>(i)].eval(pt, fx);
            const double out_comp = sign * fx[static_cast<std::size_t>(k)];
            if (out_comp > tol) {
                ++outward;
                if (first.empty()) {
                    std::ostringstream os;
                    os << "mode " << i << " points outward at box face "
                       << (face > 0 ? "hi" : "lo") << k << " (component " << out_comp << ")";
                    first = os.str();
                }
            }
        }
    }
    if (outward > 0)
        sys.warnings.push_back("positive invariance check: " + std::to_string(outward) +
                               " outward boundary sample(s); first: " + first);
}

namespace {

double require_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ValidationError(path, "expected a number");
    return j.get<double>();
}

Matrix parse_matrix(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw ValidationError(path, "expected an array of rows");
    Matrix m(static_cast<int>(j.size()), static_cast<int>(j[0].size()));
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != j[0].size())
            throw ValidationError(path + ".row" + std::to_string(r), "ragged matrix");
        for (std::size_t c = 0; c < j[r].size(); ++c)
            m(static_cast<int>(r), static_cast<int>(c)) =
                require_number(j[r][c], path + ".row" + std::to_string(r));
    }
    return m;
}

}  // namespace

SwitchingSystem load_system(const std::string& config_text) {
    json j;
    try {
        j = json::parse(config_text);
    } catch (const json::parse_error& e) {
        throw ValidationError("", std::string("config parse error: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("", "config must be an object");

    SwitchingSystem sys;
    if (!j.contains("dim")) throw ValidationError("dim", "missing");
    if (!j["dim"].is_number_integer() || j["dim"].get<int>() < 1)
        throw ValidationError("dim", "expected a positive integer");
    sys.dim = j["dim"].get<int>();

    if (!j.contains("lambda")) throw ValidationError("lambda", "missing");
    sys.lambda = require_number(j["lambda"], "lambda");

    if (!j.contains("box") || !j["box"].is_array())
        throw ValidationError("box", "expected an array of [lo,hi] pairs");
    for (std::size_t k = 0; k < j["box"].size(); ++k) {
        const auto& pair = j["box"][k];
        if (!pair.is_array() || pair.size() != 2)
            throw ValidationError("box[" + std::to_string(k) + "]", "expected [lo,hi]");
        sys.box.lo.push_back(require_number(pair[0], "box[" + std::to_string(k) + "]"));
        sys.box.hi.push_back(require_number(pair[1], "box[" + std::to_string(k) + "]"));
    }

    if (!j.contains("modes") || !j["modes"].is_array())
        throw ValidationError("modes", "expected an array");
    for (std::size_t i = 0; i < j["modes"].size(); ++i) {
        const std::string path = "modes[" + std::to_string(i) + "]";
        const auto& mj = j["modes"][i];
        if (!mj.is_object() || !mj.contains("family") || !mj.contains("params"))
            throw ValidationError(path, "expected {family, params}");
        const auto fam = parse_field_family(mj["family"].get<std::string>());
        if (!fam)
            throw ValidationError(path + ".family",
                                  "unknown family '" + mj["family"].get<std::string>() + "'");
        VectorField f;
        f.family = *fam;
        f.dim = sys.dim;
        if (!mj["params"].is_array()) throw ValidationError(path + ".params", "expected an array");
        for (std::size_t p = 0; p < mj["params"].size(); ++p)
            f.params.push_back(require_number(mj["params"][p], path + ".params"));
        sys.fields.push_back(std::move(f));
    }

    if (!j.contains("q") || !j["q"].is_object())
        throw ValidationError("q", "expected an object {family, matrices, blend?}");
    const auto& qj = j["q"];
    const std::string qfam = qj.value("family", std::string());
    if (qfam == "constant")
        sys.q.family = QFamily::Constant;
    else if (qfam == "interpolated")
        sys.q.family = QFamily::Interpolated;
    else
        throw ValidationError("q.family", "expected 'constant' or 'interpolated'");
    if (!qj.contains("matrices") || !qj["matrices"].is_array())
        throw ValidationError("q.matrices", "expected an array of matrices");
    for (std::size_t m = 0; m < qj["matrices"].size(); ++m)
        sys.q.matrices.push_back(
            parse_matrix(qj["matrices"][m], "q.matrices[" + std::to_string(m) + "]"));
    if (qj.contains("blend")) {
        const auto& bj = qj["blend"];
        if (!bj.is_object()) throw ValidationError("q.blend", "expected an object");
        BlendSpec b;
        b.center = require_number(bj.at("center"), "q.blend.center");
        b.slope = require_number(bj.at("slope"), "q.blend.slope");
        b.coord = bj.value("coord", 0);
        sys.q.blend = b;
    }

    validate_system(sys);
    return sys;
}

SwitchingSystem load_system_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("", "cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_system(ss.str());
}

std::string serialize_system(const SwitchingSystem& sys) {
    json j;
    j["dim"] = sys.dim;
    j["lambda"] = sys.lambda;
    json box = json::array();
    for (int k = 0; k < sys.dim; ++k)
        box.push_back({sys.box.lo[static_cast<std::size_t>(k)], sys.box.hi[static_cast<std::size_t>(k)]});
    j["box"] = box;
    json modes = json::array();
    for (const auto& f : sys.fields)
        modes.push_back({{"family", field_family_name(f.family)}, {"params", f.params}});
    j["modes"] = modes;
    json q;
    q["family"] = sys.q.family == QFamily::Constant ? "constant" : "interpolated";
    json mats = json::array();
    for (const auto& m : sys.q.matrices) {
        json rows = json::array();
        for (int r = 0; r < m.rows; ++r) {
            json row = json::array();
            for (int c = 0; c < m.cols; ++c) row.push_back(m(r, c));
            rows.push_back(row);
        }
        mats.push_back(rows);
    }
    q["matrices"] = mats;
    if (sys.q.blend)
        q["blend"] = {{"center", sys.q.blend->center},
                      {"slope", sys.q.blend->slope},
                      {"coord", sys.q.blend->coord}};
    j["q"] = q;
    return j.dump(2);
}

}  // namespace pdmp
