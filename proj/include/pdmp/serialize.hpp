#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "pdmp/lie.hpp"
#include "pdmp/pdmp.hpp"
#include "pdmp/reach.hpp"
#include "pdmp/trajectory.hpp"

namespace pdmp {

// FNV-1a over the raw config bytes, hex-encoded.
std::string config_hash(const std::string& bytes);

struct ArtifactMeta {
    std::uint64_t seed = 0;
    std::string config_hash;
};

nlohmann::json grid_to_json(const CellGrid& grid);
CellGrid grid_from_json(const nlohmann::json& j);

nlohmann::json report_to_json(const ControlSetReport& report, const ArtifactMeta& meta);
nlohmann::json measure_to_json(const EmpiricalMeasure& measure, const ArtifactMeta& meta);
nlohmann::json support_to_json(const SupportReport& report, const ArtifactMeta& meta);
nlohmann::json rank_report_to_json(const RankReport& report);
nlohmann::json larc_to_json(const LarcSummary& summary, const ArtifactMeta& meta);
nlohmann::json invariance_to_json(const InvarianceReport& report, const ArtifactMeta& meta);
nlohmann::json mixing_to_json(const MixingDiagnostic& diag, const ArtifactMeta& meta);

// Minimal structural validation of emitted artifact documents; throws
// ValidationError naming the missing or ill-typed field.
void validate_artifact(const nlohmann::json& j, const std::string& kind);

void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

}  // namespace pdmp
