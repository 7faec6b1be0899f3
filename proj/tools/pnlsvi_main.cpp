#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "pnlsvi/experiment.hpp"
#include "pnlsvi/report_io.hpp"

namespace {

using pnlsvi::ExperimentConfig;

struct CommonFlags {
  std::string config_path;
  std::string scenario;
  std::string profile;
  std::string out;
  std::vector<int> k_values;
  std::vector<std::uint64_t> seeds;
  double delta = -1.0;
  double radius_multiplier = -1.0;
  int threads = -1;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON config document");
  cmd->add_option("--scenario", flags.scenario,
                  "default | default-grid | two-state | random | custom");
  cmd->add_option("--profile", flags.profile, "paper | practical");
  cmd->add_option("-K,--K", flags.k_values, "episode counts per half");
  cmd->add_option("--seed", flags.seeds, "seed list");
  cmd->add_option("--delta", flags.delta, "failure probability");
  cmd->add_option("--radius-multiplier", flags.radius_multiplier,
                  "practical-profile radius scale");
  cmd->add_option("--threads", flags.threads, "worker threads (0 = auto)");
  cmd->add_option("--out", flags.out, "output path");
}

ExperimentConfig resolve_config(const CommonFlags& flags, bool need_seed_and_profile = false,
                                bool need_out = false) {
  ExperimentConfig config;
  if (!flags.config_path.empty())
    config = pnlsvi::config_from_json(pnlsvi::load_json_file(flags.config_path));
  else if (need_seed_and_profile && (flags.seeds.empty() || flags.profile.empty()))
    throw std::runtime_error("--seed and --profile are required without --config");
  if (need_out && flags.out.empty() && config.out_csv.empty())
    throw std::runtime_error("--out is required for sweep");
  if (!flags.scenario.empty()) config.scenario = flags.scenario;
  if (!flags.profile.empty()) config.profile = flags.profile;
  if (!flags.k_values.empty()) config.k_values = flags.k_values;
  if (!flags.seeds.empty()) config.seeds = flags.seeds;
  if (flags.delta > 0.0) config.delta = flags.delta;
  if (flags.radius_multiplier >= 0.0) config.practical_multiplier = flags.radius_multiplier;
  if (flags.threads >= 0) config.threads = flags.threads;
  if (!flags.out.empty()) config.out_csv = flags.out;
  config.validate();
  return config;
}

int cmd_run(const CommonFlags& flags, const std::string& dump_data) {
  ExperimentConfig config = resolve_config(flags, /*need_seed_and_profile=*/true);
  const pnlsvi::Scenario scenario = pnlsvi::build_scenario(config);
  pnlsvi::PnlsviOutput output;
  pnlsvi::RunRecord record =
      pnlsvi::run_cell(scenario, config, config.k_values.front(), config.seeds.front(), &output);
  if (!dump_data.empty()) {
    pnlsvi::OfflineDataset data =
        pnlsvi::rollout_dataset(scenario.mdp, scenario.behavior, 2 * config.k_values.front(),
                                config.seeds.front(), scenario.behavior_id);
    std::ofstream out(dump_data);
    pnlsvi::write_csv(data, out);
  }
  const std::string report = pnlsvi::run_report_json(record, output).dump(2);
  if (!config.out_csv.empty())
    pnlsvi::write_text_file(config.out_csv, report + "\n");
  std::cout << report << "\n";
  return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::string& json_out) {
  ExperimentConfig config =
      resolve_config(flags, /*need_seed_and_profile=*/true, /*need_out=*/true);
  pnlsvi::SweepResult result = pnlsvi::sweep(config);

  std::ostringstream csv;
  csv << pnlsvi::run_record_csv_header() << "\n";
  for (const pnlsvi::RunRecord& row : result.rows) csv << pnlsvi::run_record_csv_row(row) << "\n";
  if (!config.out_csv.empty())
    pnlsvi::write_text_file(config.out_csv, csv.str());
  else
    std::cout << csv.str();

  const std::string summary = pnlsvi::sweep_summary_json(result, config).dump(2);
  if (!json_out.empty())
    pnlsvi::write_text_file(json_out, summary + "\n");
  else
    std::cout << summary << "\n";
  return 0;
}

int cmd_verify(const CommonFlags& flags) {
  ExperimentConfig config = resolve_config(flags);
  pnlsvi::VerifyReport report = pnlsvi::verify(config);
  const std::string doc = pnlsvi::verify_report_json(report).dump(2);
  if (!config.out_csv.empty()) pnlsvi::write_text_file(config.out_csv, doc + "\n");
  std::cout << doc << "\n";
  for (const pnlsvi::CheckResult& check : report.checks)
    std::cerr << (check.passed ? "[PASS] " : "[FAIL] ") << check.name << ": " << check.detail
              << "\n";
  return report.all_passed() ? 0 : 1;
}

int cmd_show_mdp(const CommonFlags& flags) {
  ExperimentConfig config = resolve_config(flags);
  const pnlsvi::Scenario scenario = pnlsvi::build_scenario(config);
  std::cout << pnlsvi::mdp_to_json(scenario.mdp).dump(2) << "\n";
  const pnlsvi::OptimalSolution& opt = scenario.optimal;
  std::cout << "V*_1:";
  for (double v : opt.v[0].values) std::cout << ' ' << v;
  std::cout << "\nkappa: " << scenario.kappa << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pessimistic nonlinear least-squares value iteration for offline RL"};
  app.require_subcommand(1);

  CommonFlags run_flags, sweep_flags, verify_flags, show_flags;
  std::string dump_data, sweep_json;

  CLI::App* run = app.add_subcommand("run", "single (K, seed) cell, prints a JSON report");
  add_common_flags(run, run_flags);
  run->add_option("--dump-data", dump_data, "also export the rolled-out dataset as CSV");

  CLI::App* sweep = app.add_subcommand("sweep", "full (K, seed) grid: CSV rows + JSON summary");
  add_common_flags(sweep, sweep_flags);
  sweep->add_option("--json", sweep_json, "summary JSON path");

  CLI::App* verify = app.add_subcommand("verify", "invariant suite; exit code 0 iff all pass");
  add_common_flags(verify, verify_flags);

  CLI::App* show = app.add_subcommand("show-mdp", "pretty-print a scenario MDP");
  add_common_flags(show, show_flags);

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed()) return cmd_run(run_flags, dump_data);
    if (sweep->parsed()) return cmd_sweep(sweep_flags, sweep_json);
    if (verify->parsed()) return cmd_verify(verify_flags);
    if (show->parsed()) return cmd_show_mdp(show_flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
