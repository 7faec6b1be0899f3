#include "pnlsvi/confidence.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pnlsvi {

namespace {

// ln of the shared bracket (2 ln(a) + 2)(ln(b) + 2); throws when the inner
// logs are out of the formula's domain.
double log_bracket(double a, double b) {
  const double f1 = 2.0 * std::log(a) + 2.0;
  const double f2 = std::log(b) + 2.0;
  if (!(f1 > 0.0) || !(f2 > 0.0))
    throw std::domain_error("confidence radius: log bracket out of domain");
  return std::log(f1) + std::log(f2);
}

void check_common(int horizon, int num_episodes, double range, double delta) {
  if (delta <= 0.0 || delta >= 1.0) throw std::invalid_argument("confidence: delta outside (0,1)");
  if (num_episodes < 1) throw std::invalid_argument("confidence: need at least one episode");
  if (horizon < 1 || range <= 0.0) throw std::invalid_argument("confidence: bad horizon or range");
}

}  // namespace

double radius_i(double log_nnb, int horizon, int num_episodes, double range, double delta) {
  check_common(horizon, num_episodes, range, delta);
  const double inner = log_nnb + std::log(static_cast<double>(horizon)) +
                       log_bracket(4.0 * num_episodes, 2.0 * range) - std::log(delta);
  return std::sqrt(2.0 * inner);
}

double radius_i_prime(double log_nnb, int horizon, int num_episodes, double range, double delta) {
  check_common(horizon, num_episodes, range, delta);
  const double inner = log_nnb + std::log(static_cast<double>(horizon)) +
                       log_bracket(4.0 * range * num_episodes, 4.0 * range) - std::log(delta);
  return std::sqrt(4.0 * inner);
}

double radius_v(double log_n, int horizon, int num_episodes, double range, double delta) {
  check_common(horizon, num_episodes, range, delta);
  // T is the per-half sample count K * H.
  const double t = static_cast<double>(num_episodes) * horizon;
  const double inner = log_n + std::log(static_cast<double>(horizon)) +
                       log_bracket(18.0 * range * t, 18.0 * range) - std::log(delta);
  return std::sqrt(2.0 * inner);
}

double radius_iota(double log_nnb, int horizon, int num_episodes, double range, double delta) {
  check_common(horizon, num_episodes, range, delta);
  const double t = static_cast<double>(num_episodes) * horizon;
  const double inner = log_nnb + std::log(static_cast<double>(horizon)) +
                       log_bracket(18.0 * range * t, 18.0 * range) - std::log(delta);
  return std::sqrt(3.0 * inner);
}

ConfidenceParams compute_confidence_params(const ConfidenceInputs& inputs) {
  const int h_count = inputs.horizon;
  if (static_cast<int>(inputs.range.size()) != h_count ||
      static_cast<int>(inputs.epsilon_first.size()) != h_count ||
      static_cast<int>(inputs.epsilon_second.size()) != h_count)
    throw std::invalid_argument("compute_confidence_params: per-stage field size mismatch");
  if (inputs.lambda < 0.0) throw std::invalid_argument("compute_confidence_params: negative lambda");
  if (inputs.overrides.beta_bar1 < 0.0 || inputs.overrides.beta_bar2 < 0.0 ||
      inputs.overrides.beta < 0.0)
    throw std::invalid_argument("compute_confidence_params: negative override multipliers");

  ConfidenceParams params;
  params.inputs = inputs;
  params.i_delta.resize(static_cast<std::size_t>(h_count));
  params.i_prime_delta.resize(static_cast<std::size_t>(h_count));
  params.v_delta.resize(static_cast<std::size_t>(h_count));
  params.iota_delta.resize(static_cast<std::size_t>(h_count));
  params.beta_bar1.resize(static_cast<std::size_t>(h_count));
  params.beta_bar2.resize(static_cast<std::size_t>(h_count));
  params.beta.resize(static_cast<std::size_t>(h_count));

  const double h_real = static_cast<double>(inputs.horizon);
  const double k_real = static_cast<double>(inputs.num_episodes);
  const double log_nnb = inputs.log_class_size + inputs.log_bonus_class_size;
  const double log_nb_floor = std::max(inputs.log_bonus_class_size, std::log(2.0));

  for (int h = 0; h < h_count; ++h) {
    const std::size_t idx = static_cast<std::size_t>(h);
    const double range = inputs.range[idx];
    const double eps1 = inputs.epsilon_first[idx];
    const double eps2 = inputs.epsilon_second[idx];

    const double i_h = radius_i(log_nnb, inputs.horizon, inputs.num_episodes, range, inputs.delta);
    const double ip_h =
        radius_i_prime(log_nnb, inputs.horizon, inputs.num_episodes, range, inputs.delta);
    const double v_h = radius_v(inputs.log_class_size, inputs.horizon, inputs.num_episodes, range,
                                inputs.delta);
    const double iota_h =
        radius_iota(log_nnb, inputs.horizon, inputs.num_episodes, range, inputs.delta);

    params.i_delta[idx] = i_h;
    params.i_prime_delta[idx] = ip_h;
    params.v_delta[idx] = v_h;
    params.iota_delta[idx] = iota_h;

    params.beta_bar1[idx] =
        inputs.overrides.beta_bar1 *
        std::sqrt(2.0 * (24.0 * h_real * h_real + 5.0) * i_h * i_h + 16.0 * k_real * h_real * eps1);
    params.beta_bar2[idx] =
        inputs.overrides.beta_bar2 *
        std::sqrt((40.0 * h_real * h_real * h_real * h_real + 10.0) * ip_h * ip_h +
                  16.0 * k_real * range * eps2);
    params.beta[idx] =
        inputs.overrides.beta *
        std::sqrt(2.0 * ((4.0 / 3.0) * v_h * std::sqrt(inputs.lambda) + std::sqrt(2.0) * v_h +
                         30.0 * v_h * v_h + (2.0 / 3.0) * iota_h * iota_h / log_nb_floor +
                         8.0 * k_real * range * eps1));
  }

  if (std::isinf(inputs.kappa)) {
    params.variance_offset = 0.0;  // singleton-class sentinel: no coverage term
  } else {
    if (inputs.kappa <= 0.0)
      throw std::invalid_argument("compute_confidence_params: kappa must be positive");
    params.variance_offset = inputs.c_var * std::sqrt(log_nnb) * h_real * h_real * h_real /
                             std::sqrt(k_real * inputs.kappa);
  }
  return params;
}

}  // namespace pnlsvi
