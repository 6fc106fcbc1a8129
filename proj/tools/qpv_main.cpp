#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "qpv/config.hpp"
#include "qpv/experiments.hpp"
#include "qpv/manifest.hpp"

namespace {

using namespace qpv;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Responder make_responder(const RunConfig& config, const Geometry& geometry) {
  const double e1 = geometry.pos_v1 + 0.1 * geometry.tau();
  const double e2 = geometry.pos_v2 - 0.1 * geometry.tau();
  if (config.responder == "honest") return honest_ideal_responder(geometry);
  if (config.responder == "honest-flipped") return honest_flipped_responder(geometry);
  if (config.responder == "attack-x")
    return adversary_responder(locc_xbasis_strategy(config.attack_eta), e1, e2);
  if (config.responder == "attack-y")
    return adversary_responder(locc_ybasis_strategy(config.attack_eta), e1, e2);
  if (config.responder == "attack-xy")
    return adversary_responder(locc_mixed_strategy(config.attack_eta), e1, e2);
  throw ConfigError("responder", "unknown responder '" + config.responder + "'");
}

struct OutputWriter {
  std::filesystem::path dir;
  Manifest manifest;

  void emit(const std::string& name, const std::string& content) {
    write_file((dir / name).string(), content);
    manifest.record_output(name, content);
  }

  void finalize() {
    write_file((dir / "manifest.json").string(), manifest.to_json().dump(2) + "\n");
  }
};

std::string certificate_text(const CertificateReport& report) {
  std::ostringstream out;
  out << "PPT certificate verification at eta = " << fmt(report.eta) << "\n";
  out << "  primal objective: " << fmt(report.primal_value) << "\n";
  out << "  dual objective:   " << fmt(report.dual_value) << "\n";
  out << "  duality gap:      " << fmt(report.duality_gap) << "\n";
  out << "  primal feasible:  " << (report.primal_feasible ? "yes" : "no") << "\n";
  out << "  dual feasible:    " << (report.dual_feasible ? "yes" : "no") << "\n";
  out << "  violations:       " << report.violations.size() << "\n";
  for (const auto& check : report.checks) {
    out << "    [" << (check.ok ? "ok" : "VIOLATED") << "] " << check.name
        << "  residual=" << fmt(check.residual) << " tol=" << fmt(check.tolerance) << "\n";
  }
  return out.str();
}

nlohmann::json certificate_json(const CertificateReport& report) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& check : report.checks)
    checks.push_back({{"name", check.name},
                      {"residual", check.residual},
                      {"tolerance", check.tolerance},
                      {"ok", check.ok}});
  return nlohmann::json{{"eta", report.eta},
                        {"primal_value", report.primal_value},
                        {"dual_value", report.dual_value},
                        {"duality_gap", report.duality_gap},
                        {"primal_feasible", report.primal_feasible},
                        {"dual_feasible", report.dual_feasible},
                        {"violations", report.violations.size()},
                        {"checks", checks}};
}

int run_bounds(const RunConfig& config, OutputWriter& out) {
  const CertificateReport report = verify_ppt_certificates(config.eta);
  std::cout << certificate_text(report);
  const auto [rho0, rho1] = parity_mixtures();
  nlohmann::json j = certificate_json(report);
  j["helstrom_guess"] = helstrom_guess(rho0, rho1);
  const DecoySoundness ds = soundness_decoy({config.n_th, config.delta_th, config.nu});
  j["eps_qubit"] = soundness_qubit({config.n_th, config.delta_th, config.nu});
  j["eps1"] = ds.eps1;
  j["eps2"] = ds.eps2;
  j["eps_decoy"] = ds.eps_decoy;
  out.emit("bounds.json", j.dump(2) + "\n");
  return (report.primal_feasible && report.dual_feasible) ? kExitOk : kExitRuntime;
}

std::string report_summary_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "metric,value,std_error,samples\n";
  auto row = [&](const char* name, const Aggregate& a) {
    out << name << ',' << fmt(a.value) << ',' << fmt(a.std_error) << ',' << a.samples << '\n';
  };
  row("acceptance", report.acceptance);
  row("detection_rate", report.detection_rate);
  row("error_rate", report.error_rate);
  row("guessing_probability", report.guessing_probability);
  row("coverage_s", report.coverage_s);
  row("coverage_r", report.coverage_r);
  out << "soundness_bound," << fmt(report.soundness_bound) << ",,\n";
  out << "eps_decoy," << fmt(report.decoy_soundness.eps_decoy) << ",,\n";
  return out.str();
}

int run_qubit(const RunConfig& config, OutputWriter& out) {
  ProtocolParams params;
  params.rounds = config.rounds;
  params.n_th = config.n_th;
  params.delta_th = config.delta_th;
  params.mode = ProtocolMode::qubit;
  const Geometry geometry = Geometry::symmetric(config.tau_distance);
  const Responder responder = make_responder(config, geometry);

  ExperimentReport report = run_qubit_mc(params, responder, geometry, config.trials,
                                         config.seed, config.threads);
  report.config_echo = config.to_json();
  report.output_files = {"transcript_trial0.txt", "summary.csv", "report.json"};

  // One transcript for audit/replay of the per-round record format.
  RngStream rng(derive_seed(config.seed, "qubit-trial", 0));
  const QubitRunResult first = run_protocol_qubit(params, responder, geometry, rng);
  out.emit("transcript_trial0.txt", to_transcript(first.records));
  out.emit("summary.csv", report_summary_csv(report));
  out.emit("report.json", report_to_json(report).dump(2) + "\n");
  std::cout << "qubit: trials=" << report.trials << " acceptance=" << fmt(report.acceptance.value)
            << " detection=" << fmt(report.detection_rate.value)
            << " error=" << fmt(report.error_rate.value)
            << " soundness_bound=" << fmt(report.soundness_bound) << "\n";
  return kExitOk;
}

int run_decoy(const RunConfig& config, OutputWriter& out) {
  ProtocolParams params;
  params.rounds = config.rounds;
  params.n_th = config.n_th;
  params.delta_th = config.delta_th;
  params.mode = ProtocolMode::decoy;
  params.decoy_cfg = config.intensities();

  ExperimentReport report = run_decoy_mc(params, config.channel(), config.intensities(),
                                         config.nu, config.trials, config.seed, config.threads);
  report.config_echo = config.to_json();
  report.output_files = {"counts_trial0.csv", "summary.csv", "report.json"};

  // Counts of trial 0, serialized for interoperability.
  const int cutoff = photon_cutoff(config.intensities(), 1e-12);
  const FockBsmTable bsm(config.channel(), cutoff);
  RngStream rng(derive_seed(config.seed, "decoy-trial", 0));
  const DecoyRunResult first = run_protocol_decoy(params, config.intensities(), bsm,
                                                  Geometry::symmetric(1.0), config.nu, rng);
  out.emit("counts_trial0.csv", first.counts.to_csv(config.intensities()));
  out.emit("summary.csv", report_summary_csv(report));
  out.emit("report.json", report_to_json(report).dump(2) + "\n");
  std::cout << "decoy: trials=" << report.trials << " acceptance=" << fmt(report.acceptance.value)
            << " coverage_s=" << fmt(report.coverage_s.value)
            << " coverage_r=" << fmt(report.coverage_r.value) << "\n";
  return kExitOk;
}

int run_figure3(const RunConfig& config, OutputWriter& out) {
  ChannelModel channel = config.channel();
  IntensityConfig cfg = config.intensities();
  nlohmann::json extra;
  if (config.run_grid_search) {
    const GridSearchResult search = grid_search_intensities(
        config.pulses, channel, config.nu, config.intensities().p, config.threads);
    cfg = search.config;
    extra["grid_search"] = {{"mu1", cfg.mu[0]}, {"mu2", cfg.mu[1]}, {"mu3", cfg.mu[2]},
                            {"cutoff_db", search.cutoff_db}, {"evaluated", search.evaluated}};
    std::cout << "grid search: mu=(" << fmt(cfg.mu[0]) << ", " << fmt(cfg.mu[1]) << ", "
              << fmt(cfg.mu[2]) << ") cutoff=" << fmt(search.cutoff_db) << " dB\n";
  }

  const double start = config.loss_db_min > 0.0 ? config.loss_db_min
                                                : channel.bsm_intrinsic_loss_db() + 1e-3;
  const auto grid = make_loss_grid(start, config.loss_db_max, config.loss_db_step);
  const auto points = figure3_curve(config.pulses, channel, cfg, config.nu, grid, config.threads);
  const CutoffResult cutoff = find_cutoff(points);

  std::ostringstream csv;
  csv << "loss_db,ratio,s_lb,r_ub,N\n";
  for (const auto& p : points)
    csv << fmt(p.loss_db) << ',' << fmt(p.ratio) << ',' << p.s_lb << ',' << p.r_ub << ','
        << fmt(p.pulses) << '\n';
  out.emit("figure3.csv", csv.str());

  nlohmann::json j;
  j["config"] = config.to_json();
  j["intensities"] = {{"mu1", cfg.mu[0]}, {"mu2", cfg.mu[1]}, {"mu3", cfg.mu[2]},
                      {"p_mu1", cfg.p[0]}, {"p_mu2", cfg.p[1]}, {"p_mu3", cfg.p[2]}};
  j["bsm_intrinsic_loss_db"] = channel.bsm_intrinsic_loss_db();
  j["cutoff_db"] = cutoff.loss_db ? nlohmann::json(*cutoff.loss_db) : nlohmann::json();
  j["crossings"] = cutoff.crossings;
  j["ambiguous"] = cutoff.ambiguous;
  if (!extra.empty()) j["extra"] = extra;
  out.emit("figure3_summary.json", j.dump(2) + "\n");

  std::cout << "figure3: N=" << fmt(config.pulses) << " points=" << points.size();
  if (cutoff.loss_db) std::cout << " cutoff=" << fmt(*cutoff.loss_db) << " dB";
  else std::cout << " cutoff=none";
  std::cout << "\n";
  return kExitOk;
}

int run_attack_bench(const RunConfig& config, OutputWriter& out) {
  std::ostringstream csv;
  csv << "strategy,eta,guess_probability,std_error,samples,bound\n";
  const std::int64_t rounds = config.rounds;
  int line = 0;
  for (double eta : {0.05, 0.5, 1.0}) {
    for (const AttackStrategy& strategy :
         {locc_xbasis_strategy(eta), locc_ybasis_strategy(eta), locc_mixed_strategy(eta)}) {
      const AttackRoundStats stats = attack_round_statistics(
          strategy, rounds, derive_seed(config.seed, "attack-bench", line++));
      csv << strategy.name << ',' << fmt(eta) << ',' << fmt(stats.guess_probability.value) << ','
          << fmt(stats.guess_probability.std_error) << ',' << stats.guess_probability.samples
          << ",0.75\n";
      std::cout << strategy.name << " eta=" << fmt(eta)
                << " guess=" << fmt(stats.guess_probability.value)
                << " (se=" << fmt(stats.guess_probability.std_error) << ")\n";
    }
  }
  const ProductSearchResult search = product_measurement_search(6, 200, config.seed);
  std::cout << "product-measurement search: best=" << fmt(search.best_guess) << " over "
            << search.candidates << " candidates (bound 0.75)\n";
  csv << "product-search-best,," << fmt(search.best_guess) << ",," << search.candidates
      << ",0.75\n";
  out.emit("attack_bench.csv", csv.str());
  return kExitOk;
}

int dispatch(const RunConfig& config) {
  config.validate();
  std::filesystem::create_directories(config.out_dir);
  OutputWriter out{config.out_dir, Manifest{config.to_json(), to_string(config.mode), config.seed, {}}};
  int code = kExitRuntime;
  switch (config.mode) {
    case RunMode::bounds: code = run_bounds(config, out); break;
    case RunMode::qubit: code = run_qubit(config, out); break;
    case RunMode::decoy: code = run_decoy(config, out); break;
    case RunMode::figure3: code = run_figure3(config, out); break;
    case RunMode::attack_bench: code = run_attack_bench(config, out); break;
  }
  out.finalize();
  return code;
}

int run_replay(const std::string& manifest_path) {
  const Manifest recorded = Manifest::from_json(nlohmann::json::parse(read_file(manifest_path)));
  RunConfig config = RunConfig::from_json(recorded.config);
  const std::filesystem::path replay_dir =
      std::filesystem::path(manifest_path).parent_path().string() + "_replay";
  config.out_dir = replay_dir.string();
  const int code = dispatch(config);
  if (code != kExitOk) return code;

  const Manifest replayed =
      Manifest::from_json(nlohmann::json::parse(read_file((replay_dir / "manifest.json").string())));
  bool identical = recorded.outputs.size() == replayed.outputs.size();
  for (const auto& [name, hash] : recorded.outputs) {
    const auto it = replayed.outputs.find(name);
    const bool match = it != replayed.outputs.end() && it->second == hash;
    std::cout << (match ? "match    " : "MISMATCH ") << name << "\n";
    identical = identical && match;
  }
  std::cout << (identical ? "replay identical" : "replay diverged") << "\n";
  return identical ? kExitOk : kExitRuntime;
}

void add_common_flags(CLI::App* cmd, RunConfig& config, std::string& config_path) {
  cmd->add_option("--config", config_path, "key = value config file (flags override)");
  cmd->add_option("--seed", config.seed, "master seed; all streams derive from it");
  cmd->add_option("--tau", config.tau_distance, "verifier-to-claim distance");
  cmd->add_option("--out", config.out_dir, "output directory");
  cmd->add_option("--threads", config.threads, "worker threads");
  cmd->add_option("--nu", config.nu, "decoy security parameter");
  cmd->add_option("--trials", config.trials, "number of protocol runs");
  cmd->add_option("--N", config.pulses, "pulse count for the deterministic pipeline");
  cmd->add_option("--loss-db", config.channel_loss_db, "channel loss in dB (both arms)");
  cmd->add_option("--rounds", config.rounds, "rounds per protocol run (m)");
  cmd->add_option("--n-th", config.n_th, "detection quota n_th");
  cmd->add_option("--delta-th", config.delta_th, "tolerated error rate");
  cmd->add_option("--misalignment", config.misalignment, "baseline polarization error");
  cmd->add_option("--det-eff", config.det_eff, "detector efficiency");
  cmd->add_option("--dark-count", config.dark_count, "dark count probability per gate");
  cmd->add_option("--mu1", config.mu1, "signal intensity");
  cmd->add_option("--mu2", config.mu2, "decoy intensity");
  cmd->add_option("--mu3", config.mu3, "weakest decoy intensity");
  cmd->add_option("--p-mu1", config.p_mu1, "probability of mu1");
  cmd->add_option("--p-mu2", config.p_mu2, "probability of mu2");
  cmd->add_option("--p-mu3", config.p_mu3, "probability of mu3");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loss-tolerant quantum position verification: simulator and analysis toolkit"};
  app.require_subcommand(1);

  RunConfig config;
  std::string config_path;
  std::string manifest_path;

  auto* bounds = app.add_subcommand("bounds", "verify the PPT guessing-probability certificates");
  bounds->add_option("--eta", config.eta, "conclusive rate in (0, 1]");
  add_common_flags(bounds, config, config_path);

  auto* qubit = app.add_subcommand("simulate-qubit", "Monte Carlo runs of the qubit protocol");
  qubit->add_option("--responder", config.responder,
                    "honest | honest-flipped | attack-x | attack-y | attack-xy");
  qubit->add_option("--attack-eta", config.attack_eta, "attack detection efficiency");
  add_common_flags(qubit, config, config_path);

  auto* decoy = app.add_subcommand("simulate-decoy", "Monte Carlo runs of the decoy protocol");
  add_common_flags(decoy, config, config_path);

  auto* figure3 = app.add_subcommand("figure3", "deterministic error-rate-vs-loss curve");
  figure3->add_flag("--grid-search", config.run_grid_search,
                    "search intensities maximizing the loss cutoff");
  figure3->add_option("--loss-db-min", config.loss_db_min, "grid start (0 = BSM intrinsic loss)");
  figure3->add_option("--loss-db-max", config.loss_db_max, "grid end");
  figure3->add_option("--loss-db-step", config.loss_db_step, "grid step");
  add_common_flags(figure3, config, config_path);

  auto* bench = app.add_subcommand("attack-bench", "attack strategies vs the 3/4 bound");
  add_common_flags(bench, config, config_path);

  auto* replay = app.add_subcommand("replay", "re-run a manifest and compare output hashes");
  replay->add_option("--manifest", manifest_path, "path to manifest.json")->required();

  // Precedence is flags > config file > defaults: the file (if any) is loaded
  // into `config` before CLI11 writes the explicitly-passed flags over it.
  try {
    for (int i = 1; i < argc; ++i) {
      const std::string arg = argv[i];
      if (arg == "--config" && i + 1 < argc) config = RunConfig::from_kv_file(argv[i + 1]);
      else if (arg.rfind("--config=", 0) == 0) config = RunConfig::from_kv_file(arg.substr(9));
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int app_code = app.exit(e);
    return app_code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (replay->parsed()) return run_replay(manifest_path);
    if (bounds->parsed()) config.mode = RunMode::bounds;
    if (qubit->parsed()) config.mode = RunMode::qubit;
    if (decoy->parsed()) config.mode = RunMode::decoy;
    if (figure3->parsed()) config.mode = RunMode::figure3;
    if (bench->parsed()) config.mode = RunMode::attack_bench;
    return dispatch(config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
