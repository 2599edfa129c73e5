#include "pdmp/serialize.hpp"

#include <cmath>
#include <fstream>

namespace pdmp {

using nlohmann::json;

std::string config_hash(const std::string& bytes) {
    std::uint64_t h = UINT64_C(0xcbf29ce484222325);
    for (unsigned char c : bytes) {
        h ^= c;
        h *= UINT64_C(0x100000001b3);
    }
    static const char* hex = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = hex[h & 0xF];
        h >>= 4;
    }
    return out;
}

json grid_to_json(const CellGrid& grid) {
    json box = json::array();
    for (int k = 0; k < grid.dim(); ++k)
        box.push_back({grid.box.lo[static_cast<std::size_t>(k)],
                       grid.box.hi[static_cast<std::size_t>(k)]});
    return {{"box", box}, {"h", grid.h}, {"counts", grid.counts}};
}

CellGrid grid_from_json(const json& j) {
    CellGrid g;
    for (const auto& pair : j.at("box")) {
        g.box.lo.push_back(pair.at(0).get<double>());
        g.box.hi.push_back(pair.at(1).get<double>());
    }
    g.h = j.at("h").get<std::vector<double>>();
    g.counts = j.at("counts").get<std::vector<int>>();
    return g;
}

namespace {

json meta_to_json(const ArtifactMeta& meta) {
    return {{"seed", meta.seed}, {"config_hash", meta.config_hash}};
}

json box_to_json(const Box& b) {
    json out = json::array();
    for (int k = 0; k < b.dim(); ++k)
        out.push_back({b.lo[static_cast<std::size_t>(k)], b.hi[static_cast<std::size_t>(k)]});
    return out;
}

}  // namespace

json report_to_json(const ControlSetReport& report, const ArtifactMeta& meta) {
    json classes = json::array();
    for (const auto& cls : report.classes) {
        classes.push_back({{"cells", cls.cells.cells},
                           {"classification",
                            cls.kind == ClassKind::Invariant ? "invariant" : "variant"},
                           {"has_self_reach", cls.has_self_reach},
                           {"bbox", box_to_json(bounding_box(cls.cells, report.grid))}});
    }
    return {{"kind", "control-sets"},
            {"meta", meta_to_json(meta)},
            {"grid", grid_to_json(report.grid)},
            {"tau", report.tau},
            {"samples_per_cell", report.samples_per_cell},
            {"classes", classes},
            {"warnings", report.warnings}};
}

json measure_to_json(const EmpiricalMeasure& measure, const ArtifactMeta& meta) {
    json entries = json::array();
    for (const auto& e : measure.entries) entries.push_back({e.cell, e.mode, e.weight});
    return {{"kind", measure.kind == MeasureKind::ContinuousTime ? "continuous-time"
                                                                 : "discrete-chain"},
            {"meta", meta_to_json(meta)},
            {"grid", grid_to_json(measure.grid)},
            {"burn_in", measure.burn_in},
            {"modes", measure.modes},
            {"total_weight", measure.total_weight},
            {"guard_exits", measure.guard_exits},
            {"entries", entries}};
}

json support_to_json(const SupportReport& report, const ArtifactMeta& meta) {
    json support = json::array();
    for (const auto& [cell, mode] : report.support) support.push_back({cell, mode});
    return {{"kind", "support"},
            {"meta", meta_to_json(meta)},
            {"support", support},
            {"excess_mass", report.excess_mass},
            {"per_class_mass", report.per_class_mass},
            {"class_coverage", report.class_coverage},
            {"dominant_class", report.dominant_class},
            {"inflation", report.inflation},
            {"threshold", report.threshold}};
}

json rank_report_to_json(const RankReport& report) {
    return {{"x", report.x},
            {"rank", report.rank},
            {"depth", report.depth},
            {"singular_values", report.singular_values},
            {"tolerance", report.tolerance}};
}

json larc_to_json(const LarcSummary& summary, const ArtifactMeta& meta) {
    json reports = json::array();
    for (const auto& r : summary.reports) reports.push_back(rank_report_to_json(r));
    return {{"kind", "lie-rank"},
            {"meta", meta_to_json(meta)},
            {"all_full_rank", summary.all_full_rank},
            {"reports", reports}};
}

json invariance_to_json(const InvarianceReport& report, const ArtifactMeta& meta) {
    json violations = json::array();
    for (const auto& v : report.violations)
        violations.push_back(
            {{"mode", v.mode}, {"start", v.start}, {"t_exit", v.t_exit}, {"x_exit", v.x_exit}});
    return {{"kind", "invariance-audit"},
            {"meta", meta_to_json(meta)},
            {"samples_checked", report.samples_checked},
            {"guard", report.guard},
            {"violations", violations}};
}

json mixing_to_json(const MixingDiagnostic& diag, const ArtifactMeta& meta) {
    json rows = json::array();
    for (const auto& r : diag.rows)
        rows.push_back({{"t", r.t}, {"tv", r.tv}, {"noise", r.noise}});
    return {{"kind", "mixing"},
            {"meta", meta_to_json(meta)},
            {"rows", rows},
            {"alpha", diag.alpha},
            {"alpha_lo", diag.alpha_lo},
            {"alpha_hi", diag.alpha_hi},
            {"c", diag.c}};
}

namespace {

void need(const json& j, const char* key, const std::string& kind) {
    if (!j.contains(key))
        throw ValidationError(std::string(kind) + "." + key, "missing in artifact");
}

}  // namespace

void validate_artifact(const json& j, const std::string& kind) {
    if (!j.is_object()) throw ValidationError(kind, "artifact must be an object");
    if (kind == "manifest") {
        need(j, "command", kind);
        need(j, "config_hash", kind);
        need(j, "parameters", kind);
        need(j, "artifacts", kind);
        need(j, "tool_version", kind);
        return;
    }
    need(j, "kind", kind);
    need(j, "meta", kind);
    need(j.at("meta"), "seed", kind + ".meta");
    need(j.at("meta"), "config_hash", kind + ".meta");
    const std::string k = j.at("kind").get<std::string>();
    if (kind == "report") {
        if (k == "control-sets") {
            need(j, "grid", kind);
            need(j, "classes", kind);
            for (const auto& cls : j.at("classes")) {
                need(cls, "cells", "report.classes[]");
                need(cls, "classification", "report.classes[]");
                need(cls, "bbox", "report.classes[]");
            }
        } else if (k == "support") {
            need(j, "excess_mass", kind);
            need(j, "per_class_mass", kind);
            need(j, "support", kind);
        } else if (k == "verify-support") {
            need(j, "control_sets", kind);
            need(j, "support", kind);
            validate_artifact(j.at("control_sets"), "report");
            validate_artifact(j.at("support"), "report");
        } else if (k == "lie-rank") {
            need(j, "all_full_rank", kind);
            need(j, "reports", kind);
            for (const auto& r : j.at("reports")) {
                need(r, "rank", "report.reports[]");
                need(r, "singular_values", "report.reports[]");
            }
        } else if (k == "invariance-audit") {
            need(j, "violations", kind);
            need(j, "samples_checked", kind);
        } else if (k == "mixing") {
            need(j, "rows", kind);
            need(j, "alpha", kind);
        } else {
            throw ValidationError(kind + ".kind", "unknown artifact kind '" + k + "'");
        }
    } else if (kind == "measure") {
        need(j, "grid", kind);
        need(j, "entries", kind);
        need(j, "total_weight", kind);
        double sum = 0.0;
        for (const auto& e : j.at("entries")) {
            if (!e.is_array() || e.size() != 3)
                throw ValidationError("measure.entries", "expected [cell, mode, weight] triples");
            sum += e.at(2).get<double>();
        }
        const double total = j.at("total_weight").get<double>();
        if (total > 0.0 && std::abs(sum / total - 1.0) > 1e-12)
            throw ValidationError("measure.total_weight", "weights do not sum to total_weight");
    } else {
        throw ValidationError(kind, "unknown artifact family");
    }
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    json j;
    in >> j;
    return j;
}

}  // namespace pdmp
