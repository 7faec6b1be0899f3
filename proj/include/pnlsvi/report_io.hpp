#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>

#include "pnlsvi/experiment.hpp"

namespace pnlsvi {

/// JSON document schema (see README): nested [h][s][a] reward and
/// [h][s][a][s'] transition arrays plus the initial distribution.
nlohmann::json mdp_to_json(const EpisodicMdp& mdp);
EpisodicMdp mdp_from_json(const nlohmann::json& doc);

/// Config documents carry the same keys as ExperimentConfig; flags given on
/// the command line override file values.
ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& config);

nlohmann::json run_record_to_json(const RunRecord& record);
/// Full single-cell report: record, radii, and per-stage output tables.
nlohmann::json run_report_json(const RunRecord& record, const PnlsviOutput& output);
nlohmann::json sweep_summary_json(const SweepResult& result, const ExperimentConfig& config);
nlohmann::json verify_report_json(const VerifyReport& report);

nlohmann::json load_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace pnlsvi
