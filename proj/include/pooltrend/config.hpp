#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace pooltrend {

// Resolved run configuration shared by fit-like commands. Loadable from a
// flat `key = value` file with dotted section keys, or from a previously
// emitted manifest JSON; command-line flags override file values.
struct RunConfig {
  std::string data_path;
  std::string layout = "ideal";  // general | ideal | efficient-general | individual
  std::string out_dir = "out";
  int window_days = 10;  // records aggregation window when layout=individual

  double prior_mu_sd = 2.0;
  double prior_sigma_sd = 1.0;
  double prior_ell_tail_prob = 0.01;
  std::optional<double> prior_ell_shape;
  std::optional<double> prior_ell_rate;

  int chains = 4;
  int warmup = 1000;
  int draws = 1000;
  std::optional<std::uint64_t> seed;  // required; no nondeterministic default
  double target_accept = 0.3;
  double jitter_rel = 1e-8;
  int latent_updates = 1;
  int scalar_updates = 1;

  int predict_grid = 200;
  int threads = 0;
  bool strict = false;
};

// Autodetects the format: a leading '{' means manifest JSON, anything else is
// parsed as the flat key=value document.
RunConfig load_run_config(const std::string& path);

nlohmann::ordered_json config_to_manifest(const RunConfig& config, const std::string& command);
RunConfig config_from_manifest(const nlohmann::json& doc);

bool known_layout(const std::string& layout);

}  // namespace pooltrend
