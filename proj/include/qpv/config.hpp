#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "qpv/decoy.hpp"
#include "qpv/optics.hpp"

namespace qpv {

enum class RunMode { bounds, qubit, decoy, figure3, attack_bench };

const char* to_string(RunMode mode);
RunMode run_mode_from_string(const std::string& name);

// Raised by config parsing/validation with the offending field named.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error("config field '" + field + "': " + what), field_name(field) {}
  std::string field_name;
};

// Flat, typed run configuration. File values are overridden by flags; every
// default matches the reference parameter set where one exists (64% detector
// efficiency, 2.5e-6 dark counts, 0.1% baseline misalignment error, nu = 10).
struct RunConfig {
  RunMode mode = RunMode::bounds;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int threads = 1;

  // bounds
  double eta = 1.0;

  // geometry: verifier-to-claim distance (light speed normalized; the
  // statistics are scale-invariant, the timing checks are ratio-based)
  double tau_distance = 1.0;

  // channel
  double channel_loss_db = 0.0;  // both arms combined, excluding the BSM
  double misalignment = 0.001;
  double det_eff = 0.64;
  double dark_count = 2.5e-6;

  // decoy intensities
  double mu1 = 0.3, mu2 = 0.1, mu3 = 0.001;
  double p_mu1 = 0.5, p_mu2 = 0.25, p_mu3 = 0.25;
  double nu = 10.0;

  // protocol
  std::int64_t rounds = 10000;
  std::int64_t n_th = 4000;
  double delta_th = 0.1;
  std::int64_t trials = 100;
  std::string responder = "honest";  // honest | honest-flipped | attack-x | attack-y | attack-xy
  double attack_eta = 1.0;

  // figure3
  double pulses = 1e13;  // N
  double loss_db_min = 0.0;  // 0 = start at the intrinsic BSM loss
  double loss_db_max = 60.0;
  double loss_db_step = 0.25;
  bool run_grid_search = false;

  void validate() const;  // throws ConfigError naming the field

  ChannelModel channel() const;
  IntensityConfig intensities() const;

  // Flat "key = value" document; unknown keys are an error.
  static RunConfig from_kv_text(const std::string& text);
  static RunConfig from_kv_file(const std::string& path);
  void set_field(const std::string& key, const std::string& value);

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

}  // namespace qpv
