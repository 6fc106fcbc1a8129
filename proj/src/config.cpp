#include "qpv/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace qpv {

const char* to_string(RunMode mode) {
  switch (mode) {
    case RunMode::bounds: return "bounds";
    case RunMode::qubit: return "qubit";
    case RunMode::decoy: return "decoy";
    case RunMode::figure3: return "figure3";
    case RunMode::attack_bench: return "attack-bench";
  }
  return "unknown";
}

RunMode run_mode_from_string(const std::string& name) {
  if (name == "bounds") return RunMode::bounds;
  if (name == "qubit") return RunMode::qubit;
  if (name == "decoy") return RunMode::decoy;
  if (name == "figure3") return RunMode::figure3;
  if (name == "attack-bench") return RunMode::attack_bench;
  throw ConfigError("mode", "unknown mode '" + name + "'");
}

void RunConfig::validate() const {
  if (!(eta > 0.0 && eta <= 1.0)) throw ConfigError("eta", "must be in (0, 1]");
  if (!(tau_distance > 0.0)) throw ConfigError("tau", "must be positive");
  if (channel_loss_db < 0.0) throw ConfigError("channel_loss_db", "must be >= 0");
  if (!(misalignment >= 0.0 && misalignment <= 0.5))
    throw ConfigError("misalignment", "must be in [0, 0.5]");
  if (!(det_eff > 0.0 && det_eff <= 1.0)) throw ConfigError("det_eff", "must be in (0, 1]");
  if (!(dark_count >= 0.0 && dark_count < 1.0)) throw ConfigError("dark_count", "must be in [0, 1)");
  try {
    intensities().validate();
  } catch (const std::exception& e) {
    throw ConfigError("mu1/mu2/mu3/p_mu*", e.what());
  }
  if (!(nu > 0.0)) throw ConfigError("nu", "must be positive");
  if (rounds < 1) throw ConfigError("rounds", "must be >= 1");
  if (n_th < 1 || n_th > rounds) throw ConfigError("n_th", "must satisfy 1 <= n_th <= rounds");
  if (!(delta_th >= 0.0 && delta_th < 0.25)) throw ConfigError("delta_th", "must be in [0, 1/4)");
  if (trials < 1) throw ConfigError("trials", "must be >= 1");
  if (threads < 1) throw ConfigError("threads", "must be >= 1");
  if (responder != "honest" && responder != "honest-flipped" && responder != "attack-x" &&
      responder != "attack-y" && responder != "attack-xy")
    throw ConfigError("responder", "unknown responder '" + responder + "'");
  if (!(attack_eta >= 0.0 && attack_eta <= 1.0)) throw ConfigError("attack_eta", "must be in [0, 1]");
  if (!(pulses >= 1.0)) throw ConfigError("N", "must be >= 1");
  if (loss_db_min < 0.0) throw ConfigError("loss_db_min", "must be >= 0");
  if (!(loss_db_step > 0.0)) throw ConfigError("loss_db_step", "must be positive");
  if (loss_db_max < loss_db_min) throw ConfigError("loss_db_max", "must be >= loss_db_min");
}

ChannelModel RunConfig::channel() const {
  ChannelModel model;
  const double per_arm_db = channel_loss_db / 2.0;
  model.transmittance_v1 = std::pow(10.0, -per_arm_db / 10.0);
  model.transmittance_v2 = model.transmittance_v1;
  model.misalignment_error = misalignment;
  model.detector_efficiency = det_eff;
  model.dark_count_prob = dark_count;
  return model;
}

IntensityConfig RunConfig::intensities() const {
  IntensityConfig cfg;
  cfg.mu = {mu1, mu2, mu3};
  cfg.p = {p_mu1, p_mu2, p_mu3};
  return cfg;
}

void RunConfig::set_field(const std::string& key, const std::string& value) {
  auto as_double = [&](double& slot) {
    try {
      slot = std::stod(value);
    } catch (const std::exception&) {
      throw ConfigError(key, "expected a number, got '" + value + "'");
    }
  };
  auto as_int = [&](std::int64_t& slot) {
    try {
      slot = std::stoll(value);
    } catch (const std::exception&) {
      throw ConfigError(key, "expected an integer, got '" + value + "'");
    }
  };

  if (key == "mode") mode = run_mode_from_string(value);
  else if (key == "seed") {
    try {
      seed = std::stoull(value);
    } catch (const std::exception&) {
      throw ConfigError(key, "expected an unsigned integer, got '" + value + "'");
    }
  }
  else if (key == "out_dir") out_dir = value;
  else if (key == "threads") { std::int64_t v; as_int(v); threads = static_cast<int>(v); }
  else if (key == "eta") as_double(eta);
  else if (key == "tau") as_double(tau_distance);
  else if (key == "channel_loss_db") as_double(channel_loss_db);
  else if (key == "misalignment") as_double(misalignment);
  else if (key == "det_eff") as_double(det_eff);
  else if (key == "dark_count") as_double(dark_count);
  else if (key == "mu1") as_double(mu1);
  else if (key == "mu2") as_double(mu2);
  else if (key == "mu3") as_double(mu3);
  else if (key == "p_mu1") as_double(p_mu1);
  else if (key == "p_mu2") as_double(p_mu2);
  else if (key == "p_mu3") as_double(p_mu3);
  else if (key == "nu") as_double(nu);
  else if (key == "rounds") as_int(rounds);
  else if (key == "n_th") as_int(n_th);
  else if (key == "delta_th") as_double(delta_th);
  else if (key == "trials") as_int(trials);
  else if (key == "responder") responder = value;
  else if (key == "attack_eta") as_double(attack_eta);
  else if (key == "N") as_double(pulses);
  else if (key == "loss_db_min") as_double(loss_db_min);
  else if (key == "loss_db_max") as_double(loss_db_max);
  else if (key == "loss_db_step") as_double(loss_db_step);
  else if (key == "grid_search") run_grid_search = (value == "1" || value == "true");
  else throw ConfigError(key, "unknown key");
}

RunConfig RunConfig::from_kv_text(const std::string& text) {
  RunConfig config;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw ConfigError(line, "expected 'key = value'");
      continue;
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(line, "missing key");
    config.set_field(key, value);
  }
  return config;
}

RunConfig RunConfig::from_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_kv_text(buf.str());
}

nlohmann::json RunConfig::to_json() const {
  // out_dir is runtime environment, not part of the reproducible run
  // description (replays re-derive results into a fresh directory).
  return nlohmann::json{
      {"mode", to_string(mode)},
      {"seed", seed},
      {"threads", threads},
      {"eta", eta},
      {"tau", tau_distance},
      {"channel_loss_db", channel_loss_db},
      {"misalignment", misalignment},
      {"det_eff", det_eff},
      {"dark_count", dark_count},
      {"mu1", mu1},
      {"mu2", mu2},
      {"mu3", mu3},
      {"p_mu1", p_mu1},
      {"p_mu2", p_mu2},
      {"p_mu3", p_mu3},
      {"nu", nu},
      {"rounds", rounds},
      {"n_th", n_th},
      {"delta_th", delta_th},
      {"trials", trials},
      {"responder", responder},
      {"attack_eta", attack_eta},
      {"N", pulses},
      {"loss_db_min", loss_db_min},
      {"loss_db_max", loss_db_max},
      {"loss_db_step", loss_db_step},
      {"grid_search", run_grid_search},
  };
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  c.mode = run_mode_from_string(j.at("mode").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  c.threads = j.at("threads").get<int>();
  c.eta = j.at("eta").get<double>();
  c.tau_distance = j.at("tau").get<double>();
  c.channel_loss_db = j.at("channel_loss_db").get<double>();
  c.misalignment = j.at("misalignment").get<double>();
  c.det_eff = j.at("det_eff").get<double>();
  c.dark_count = j.at("dark_count").get<double>();
  c.mu1 = j.at("mu1").get<double>();
  c.mu2 = j.at("mu2").get<double>();
  c.mu3 = j.at("mu3").get<double>();
  c.p_mu1 = j.at("p_mu1").get<double>();
  c.p_mu2 = j.at("p_mu2").get<double>();
  c.p_mu3 = j.at("p_mu3").get<double>();
  c.nu = j.at("nu").get<double>();
  c.rounds = j.at("rounds").get<std::int64_t>();
  c.n_th = j.at("n_th").get<std::int64_t>();
  c.delta_th = j.at("delta_th").get<double>();
  c.trials = j.at("trials").get<std::int64_t>();
  c.responder = j.at("responder").get<std::string>();
  c.attack_eta = j.at("attack_eta").get<double>();
  c.pulses = j.at("N").get<double>();
  c.loss_db_min = j.at("loss_db_min").get<double>();
  c.loss_db_max = j.at("loss_db_max").get<double>();
  c.loss_db_step = j.at("loss_db_step").get<double>();
  c.run_grid_search = j.at("grid_search").get<bool>();
  return c;
}

}  // namespace qpv
