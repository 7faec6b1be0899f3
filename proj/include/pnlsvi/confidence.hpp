#pragma once

#include <vector>

namespace pnlsvi {

/// Multipliers applied on top of the closed-form radii. The paper profile is
/// all ones; the practical profile scales every radius down by a common
/// factor for the rate experiments.
struct RadiusOverrides {
  double beta_bar1 = 1.0;
  double beta_bar2 = 1.0;
  double beta = 1.0;

  static RadiusOverrides paper() { return {}; }
  static RadiusOverrides practical(double factor = 0.1) { return {factor, factor, factor}; }
};

/// Everything the closed-form radii depend on. Class sizes enter only
/// through logs, so they are carried in log space (finite classes:
/// ln(member count); linear classes: ln of the covering-net size).
struct ConfidenceInputs {
  double delta = 0.1;
  double lambda = 1.0;
  int horizon = 0;
  int num_episodes = 0;  // K, per half
  double log_class_size = 0.0;        // ln N
  double log_bonus_class_size = 0.0;  // ln N_b
  double kappa = 1.0;
  double c_var = 1.0;
  std::vector<double> range;           // L_h per stage (0-based)
  std::vector<double> epsilon_first;   // first-moment misspecification per stage
  std::vector<double> epsilon_second;  // second-moment misspecification per stage
  RadiusOverrides overrides;
};

struct ConfidenceParams {
  ConfidenceInputs inputs;
  std::vector<double> i_delta;       // per stage
  std::vector<double> i_prime_delta;
  std::vector<double> v_delta;
  std::vector<double> iota_delta;
  std::vector<double> beta_bar1;  // variance-phase first-moment radius
  std::vector<double> beta_bar2;  // variance-phase second-moment radius
  std::vector<double> beta;       // planning-phase weighted radius
  double variance_offset = 0.0;   // subtracted inside the sigma-hat formula
};

/// Individual radius formulas, exposed so tests can re-evaluate them
/// independently. All logs are natural; log_nnb = ln(N * N_b).
double radius_i(double log_nnb, int horizon, int num_episodes, double range, double delta);
double radius_i_prime(double log_nnb, int horizon, int num_episodes, double range, double delta);
double radius_v(double log_n, int horizon, int num_episodes, double range, double delta);
double radius_iota(double log_nnb, int horizon, int num_episodes, double range, double delta);

/// Evaluates every radius from the printed closed forms. Throws on
/// delta outside (0,1) or a non-positive episode count.
ConfidenceParams compute_confidence_params(const ConfidenceInputs& inputs);

}  // namespace pnlsvi
