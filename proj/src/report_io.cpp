#include "pnlsvi/report_io.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace pnlsvi {

using nlohmann::json;

json mdp_to_json(const EpisodicMdp& mdp) {
  json doc;
  doc["num_states"] = mdp.num_states;
  doc["num_actions"] = mdp.num_actions;
  doc["horizon"] = mdp.horizon;
  json rewards = json::array();
  json transitions = json::array();
  for (int h = 0; h < mdp.horizon; ++h) {
    json r_h = json::array();
    json t_h = json::array();
    for (int s = 0; s < mdp.num_states; ++s) {
      json r_s = json::array();
      json t_s = json::array();
      for (int a = 0; a < mdp.num_actions; ++a) {
        r_s.push_back(mdp.reward(h, s, a));
        json row = json::array();
        for (double p : mdp.transition_row(h, s, a)) row.push_back(p);
        t_s.push_back(std::move(row));
      }
      r_h.push_back(std::move(r_s));
      t_h.push_back(std::move(t_s));
    }
    rewards.push_back(std::move(r_h));
    transitions.push_back(std::move(t_h));
  }
  doc["rewards"] = std::move(rewards);
  doc["transitions"] = std::move(transitions);
  doc["initial_distribution"] = mdp.initial_distribution;
  return doc;
}

EpisodicMdp mdp_from_json(const json& doc) {
  EpisodicMdp mdp;
  mdp.num_states = doc.at("num_states").get<int>();
  mdp.num_actions = doc.at("num_actions").get<int>();
  mdp.horizon = doc.at("horizon").get<int>();
  const auto& rewards = doc.at("rewards");
  const auto& transitions = doc.at("transitions");
  for (int h = 0; h < mdp.horizon; ++h) {
    std::vector<double> r(static_cast<std::size_t>(mdp.cells()));
    std::vector<double> t(static_cast<std::size_t>(mdp.cells()) * mdp.num_states);
    for (int s = 0; s < mdp.num_states; ++s)
      for (int a = 0; a < mdp.num_actions; ++a) {
        r[static_cast<std::size_t>(s * mdp.num_actions + a)] =
            rewards.at(h).at(s).at(a).get<double>();
        for (int sp = 0; sp < mdp.num_states; ++sp)
          t[static_cast<std::size_t>((s * mdp.num_actions + a) * mdp.num_states + sp)] =
              transitions.at(h).at(s).at(a).at(sp).get<double>();
      }
    mdp.rewards.push_back(std::move(r));
    mdp.transitions.push_back(std::move(t));
  }
  mdp.initial_distribution = doc.at("initial_distribution").get<std::vector<double>>();
  mdp.validate();
  return mdp;
}

ExperimentConfig config_from_json(const json& doc) {
  ExperimentConfig config;
  if (doc.contains("schema_version")) config.schema_version = doc["schema_version"].get<int>();
  if (config.schema_version != 1)
    throw std::invalid_argument("config: unsupported schema_version");
  if (doc.contains("scenario")) config.scenario = doc["scenario"].get<std::string>();
  if (doc.contains("mdp_seed")) config.mdp_seed = doc["mdp_seed"].get<std::uint64_t>();
  if (doc.contains("mdp")) config.custom_mdp = mdp_from_json(doc["mdp"]);
  if (doc.contains("K")) config.k_values = doc["K"].get<std::vector<int>>();
  if (doc.contains("seeds")) config.seeds = doc["seeds"].get<std::vector<std::uint64_t>>();
  if (doc.contains("delta")) config.delta = doc["delta"].get<double>();
  if (doc.contains("lambda")) config.lambda = doc["lambda"].get<double>();
  if (doc.contains("c_var")) config.c_var = doc["c_var"].get<double>();
  if (doc.contains("profile")) config.profile = doc["profile"].get<std::string>();
  if (doc.contains("radius_multiplier"))
    config.practical_multiplier = doc["radius_multiplier"].get<double>();
  if (doc.contains("behavior")) {
    const auto& b = doc["behavior"];
    const std::string type = b.value("type", "epsilon_greedy");
    if (type == "uniform")
      config.behavior.kind = BehaviorSpec::Kind::Uniform;
    else if (type == "epsilon_greedy")
      config.behavior.kind = BehaviorSpec::Kind::EpsilonGreedyOptimal;
    else
      throw std::invalid_argument("config: unknown behavior type");
    if (b.contains("epsilon")) config.behavior.epsilon = b["epsilon"].get<double>();
  }
  if (doc.contains("class")) {
    const auto& c = doc["class"];
    const std::string type = c.value("type", "tabular");
    if (type == "tabular")
      config.cls.kind = ClassSpec::Kind::TabularComplete;
    else if (type == "grid")
      config.cls.kind = ClassSpec::Kind::Grid;
    else if (type == "dense")
      config.cls.kind = ClassSpec::Kind::Dense;
    else
      throw std::invalid_argument("config: unknown class type");
    if (c.contains("levels")) config.cls.levels = c["levels"].get<int>();
    if (c.contains("net_eps")) config.cls.net_eps = c["net_eps"].get<double>();
    if (c.contains("members"))
      config.cls.dense_members =
          c["members"].get<std::vector<std::vector<std::vector<double>>>>();
  }
  if (doc.contains("out")) config.out_csv = doc["out"].get<std::string>();
  if (doc.contains("out_json")) config.out_json = doc["out_json"].get<std::string>();
  if (doc.contains("threads")) config.threads = doc["threads"].get<int>();
  return config;
}

json config_to_json(const ExperimentConfig& config) {
  json doc;
  doc["schema_version"] = config.schema_version;
  doc["scenario"] = config.scenario;
  doc["K"] = config.k_values;
  doc["seeds"] = config.seeds;
  doc["delta"] = config.delta;
  doc["lambda"] = config.lambda;
  doc["c_var"] = config.c_var;
  doc["profile"] = config.profile;
  doc["radius_multiplier"] = config.practical_multiplier;
  doc["behavior"] = {
      {"type",
       config.behavior.kind == BehaviorSpec::Kind::Uniform ? "uniform" : "epsilon_greedy"},
      {"epsilon", config.behavior.epsilon}};
  json cls;
  switch (config.cls.kind) {
    case ClassSpec::Kind::TabularComplete:
      cls["type"] = "tabular";
      break;
    case ClassSpec::Kind::Grid:
      cls["type"] = "grid";
      cls["levels"] = config.cls.levels;
      break;
    case ClassSpec::Kind::Dense:
      cls["type"] = "dense";
      break;
  }
  cls["net_eps"] = config.cls.net_eps;
  doc["class"] = std::move(cls);
  return doc;
}

json run_record_to_json(const RunRecord& r) {
  json doc{{"scenario", r.scenario},
           {"K", r.num_episodes},
           {"seed", r.seed},
           {"gap", r.gap},
           {"bound_rhs", r.bound_rhs},
           {"pess_viol", r.pessimism_violations},
           {"sandwich_viol", r.sandwich_violations},
           {"eps", r.epsilon},
           {"kappa", r.kappa},
           {"ms", r.ms},
           {"premise_holds", r.premise_holds},
           {"decomposition_rhs", r.decomposition_rhs}};
  if (!r.error.empty()) doc["error"] = r.error;
  return doc;
}

json run_report_json(const RunRecord& record, const PnlsviOutput& output) {
  json doc;
  doc["schema_version"] = 1;
  doc["record"] = run_record_to_json(record);
  json radii;
  radii["beta_bar1"] = output.params.beta_bar1;
  radii["beta_bar2"] = output.params.beta_bar2;
  radii["beta"] = output.params.beta;
  radii["variance_offset"] = output.params.variance_offset;
  radii["i_delta"] = output.params.i_delta;
  radii["i_prime_delta"] = output.params.i_prime_delta;
  radii["v_delta"] = output.params.v_delta;
  radii["iota_delta"] = output.params.iota_delta;
  doc["radii"] = std::move(radii);

  json stages = json::array();
  const int horizon = static_cast<int>(output.weighted_fit.size());
  for (int h = 0; h < horizon; ++h) {
    const std::size_t idx = static_cast<std::size_t>(h);
    json stage;
    stage["h"] = h;
    stage["f_hat"] = output.pessimistic[idx];
    stage["f_tilde"] = output.weighted_fit[idx];
    stage["bonus"] = output.bonus[idx].values;
    stage["sigma_hat"] = output.variance.sigma_hat[idx];
    stage["crude_fit"] = output.variance.crude_values[idx];
    stage["policy"] = output.policy.probs[idx];
    stages.push_back(std::move(stage));
  }
  doc["stages"] = std::move(stages);
  return doc;
}

json sweep_summary_json(const SweepResult& result, const ExperimentConfig& config) {
  json doc;
  doc["schema_version"] = 1;
  doc["config"] = config_to_json(config);
  doc["rows"] = json::array();
  for (const RunRecord& r : result.rows) doc["rows"].push_back(run_record_to_json(r));
  doc["median_gap_by_k"] = json::object();
  for (const auto& [k, gap] : result.median_gap_by_k)
    doc["median_gap_by_k"][std::to_string(k)] = gap;
  doc["rate_slope"] = result.rate.slope;
  doc["fitted_c"] = result.fitted_c;
  doc["bound_coverage"] = result.bound_coverage;
  char hash_buf[32];
  std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                static_cast<unsigned long long>(result.determinism_hash));
  doc["determinism_hash"] = hash_buf;
  return doc;
}

json verify_report_json(const VerifyReport& report) {
  json doc;
  doc["schema_version"] = 1;
  doc["all_passed"] = report.all_passed();
  doc["checks"] = json::array();
  for (const CheckResult& check : report.checks)
    doc["checks"].push_back(
        json{{"name", check.name}, {"passed", check.passed}, {"detail", check.detail}});
  return doc;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json doc;
  in >> doc;
  return doc;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
}

}  // namespace pnlsvi
