#pragma once
//! \file
//! Command-line front end. Angles are degrees here and radians everywhere
//! else.
//!
//! Exit codes: 0 success, 1 solver or runtime failure, 2 usage or config
//! failure.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "vpa/error.hpp"
#include "vpa/harness.hpp"
#include "vpa/scene_io.hpp"
#include "vpa/solver.hpp"

namespace vpa::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr const char* kOutDirEnv = "VPA_OUT_DIR";

enum class Command { Solve, Run, SweepNoise, SweepRadius, Cdf, SceneValidate };

struct CliConfig {
  Command command = Command::Run;
  std::filesystem::path config;
  std::filesystem::path out;
  std::filesystem::path scene;
  std::filesystem::path observations;
  std::filesystem::path records;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  std::optional<double> sigma;
  std::optional<double> radius;  // cm on the command line, m here
  std::optional<std::string> arc_mode;
  std::optional<std::vector<std::string>> algorithms;
  std::optional<unsigned> threads;
  std::string format = "table";
  int verbosity = 0;
};

/// Thrown by parse_args for --help; carries the help text.
struct HelpRequested {
  std::string text;
};

namespace detail {

inline void require_file(const std::filesystem::path& p, const char* flag) {
  if (p.empty()) throw Error(ErrorCode::UsageError, std::string(flag) + " is required");
  if (!std::filesystem::exists(p)) throw Error(ErrorCode::FileNotFound, p.string());
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace detail

inline CliConfig parse_args(int argc, const char* const* argv) {
  CLI::App app{"Visible-light positioning with circular luminaires: solver, simulator and Monte Carlo harness."};
  app.name("vpa_cli");
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Help for every command");

  CliConfig c;
  int verbose = 0;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  double sigma = 0.0;
  double radius_cm = 0.0;
  std::string arc_mode;
  std::string algorithms;
  unsigned threads = 0;
  app.add_flag("-v,--verbose", verbose, "More output (repeatable)");

  auto* solve = app.add_subcommand("solve", "Estimate a pose from one observation file");
  auto* run = app.add_subcommand("run", "Monte Carlo run; writes records.csv, summary.csv, cdf.csv, manifest.json");
  auto* sweep_noise = app.add_subcommand("sweep-noise", "Run once per value of the config's sigma_sweep");
  auto* sweep_radius = app.add_subcommand("sweep-radius", "Run once per value of the config's radius_sweep");
  auto* cdf = app.add_subcommand("cdf", "Summary and CDF of an existing records.csv");
  auto* validate = app.add_subcommand("scene-validate", "Check a scene file");

  solve->add_option("--scene", c.scene, "Scene JSON")->required();
  solve->add_option("--observations", c.observations, "Observation JSON")->required();
  solve->add_option("--format", c.format,
                    "table, or csv: one row algorithm,x_m,y_m,z_m,phi_deg,theta_deg,psi_deg")
      ->check(CLI::IsMember({"table", "csv"}));

  for (auto* sub : {run, sweep_noise, sweep_radius}) {
    sub->add_option("--config", c.config, "Experiment config JSON")->required();
    sub->add_option("--out", c.out, std::string("Output directory (default: $") + kOutDirEnv + " or ./results)");
    sub->add_option("--seed", seed, "Override the seed");
    sub->add_option("--samples", samples, "Override the sample count")->check(CLI::PositiveNumber);
    sub->add_option("--arc-mode", arc_mode,
                    "Capture scenario: natural, circle+circle, circle+semicircle, semicircle+semicircle, "
                    "superior+superior");
    sub->add_option("--algorithms", algorithms, "Comma-separated subset of VPA,VPCA,OAVPA,PNP");
    sub->add_option("--threads", threads, "Worker threads (0: all cores)");
    sub->add_option("--format", c.format, "Summary format: table or csv")->check(CLI::IsMember({"table", "csv"}));
  }
  for (auto* sub : {run, sweep_radius}) sub->add_option("--sigma", sigma, "Override the noise sigma (px)");
  for (auto* sub : {run, sweep_noise}) sub->add_option("--radius", radius_cm, "Override the luminaire radius (cm)");

  cdf->add_option("--records", c.records, "records.csv from a run")->required();
  cdf->add_option("--out", c.out, "Write summary.csv and cdf.csv here instead of printing");
  cdf->add_option("--format", c.format, "table or csv")->check(CLI::IsMember({"table", "csv"}));

  validate->add_option("--scene", c.scene, "Scene JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested{app.help("", CLI::AppFormatMode::All)};
  } catch (const CLI::ParseError& e) {
    throw Error(ErrorCode::UsageError, e.what());
  }

  c.verbosity = verbose;
  auto given = [](CLI::App* sub, const char* name) { return sub->parsed() && sub->count(name) > 0; };
  CLI::App* active = app.get_subcommands().front();
  if (active == solve) {
    c.command = Command::Solve;
    detail::require_file(c.scene, "--scene");
    detail::require_file(c.observations, "--observations");
  } else if (active == cdf) {
    c.command = Command::Cdf;
    detail::require_file(c.records, "--records");
  } else if (active == validate) {
    c.command = Command::SceneValidate;
    detail::require_file(c.scene, "--scene");
  } else {
    c.command = active == run ? Command::Run : active == sweep_noise ? Command::SweepNoise : Command::SweepRadius;
    detail::require_file(c.config, "--config");
    if (given(active, "--seed")) c.seed = seed;
    if (given(active, "--samples")) c.samples = samples;
    if (active != sweep_noise && given(active, "--sigma")) c.sigma = sigma;
    if (active != sweep_radius && given(active, "--radius")) c.radius = radius_cm / 100.0;
    if (given(active, "--arc-mode")) c.arc_mode = arc_mode;
    if (given(active, "--algorithms")) c.algorithms = detail::split_list(algorithms);
    if (given(active, "--threads")) c.threads = threads;
    if (c.out.empty()) {
      const char* env = std::getenv(kOutDirEnv);
      c.out = env && *env ? std::filesystem::path(env) : std::filesystem::path("results");
    }
  }
  return c;
}

/// Config file plus command-line overrides, validated.
inline harness::ExperimentConfig experiment_config(const CliConfig& c) {
  harness::ExperimentConfig cfg = harness::load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.samples) cfg.samples = *c.samples;
  if (c.sigma) cfg.sigma_px = *c.sigma;
  if (c.radius) cfg.radius_m = *c.radius;
  if (c.arc_mode) cfg.scenario = harness::ArcScenario::from_name(*c.arc_mode);
  if (c.algorithms) {
    cfg.algorithms.clear();
    for (const auto& a : *c.algorithms) cfg.algorithms.push_back(harness::method_from_string(a));
  }
  if (c.threads) cfg.threads = *c.threads;
  cfg.validate();
  return cfg;
}

inline void print_summary(std::ostream& out, const std::map<harness::Method, harness::SummaryStats>& stats,
                          const std::string& format) {
  if (format == "csv") {
    out << harness::summary_to_csv(stats);
    return;
  }
  fmt::print(out, "{:<6} {:>7} {:>6} {:>16} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}\n", "method", "ok", "failed",
             "mean (cm)", "p50", "p78", "p86", "p90", "p95", "p97");
  for (const auto& [m, s] : stats) {
    fmt::print(out, "{:<6} {:>7} {:>6} {:>8.2f} +- {:<5.2f}", harness::to_string(m), s.successes, s.failures,
               100.0 * s.mean, 100.0 * s.std_error);
    for (const int p : {50, 78, 86, 90, 95, 97}) fmt::print(out, " {:>8.2f}", 100.0 * s.percentiles.at(p));
    out << '\n';
  }
}

inline int cmd_solve(const CliConfig& c, std::ostream& out) {
  const sim::Scene scene = io::load_scene(c.scene);
  const io::ObservationSet set = io::load_observations(c.observations);
  const PoseEstimate est = solve_vpa(set.observations, scene.map(), set.intrinsics);
  const EulerAngles e = rotation_to_euler(est.pose.rotation);
  const Vec3& t = est.pose.translation.xyz;
  if (c.format == "csv") {
    fmt::print(out, "{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", to_string(est.algorithm), t.x(), t.y(),
               t.z(), rad2deg(e.phi), rad2deg(e.theta), rad2deg(e.psi));
  } else {
    fmt::print(out, "algorithm       {}\n", to_string(est.algorithm));
    fmt::print(out, "translation (m) {:.6f} {:.6f} {:.6f}\n", t.x(), t.y(), t.z());
    fmt::print(out, "euler (deg)     phi {:.6f}  theta {:.6f}  psi {:.6f}\n", rad2deg(e.phi), rad2deg(e.theta),
               rad2deg(e.psi));
    if (c.verbosity > 0) fmt::print(out, "disambiguation gap {:.3e}\n", est.diagnostics.disambiguation_gap);
  }
  return kExitOk;
}

inline int cmd_run(const CliConfig& c, std::ostream& out) {
  const harness::ExperimentConfig cfg = experiment_config(c);
  const auto records = harness::run_monte_carlo(cfg);
  const auto stats = harness::summarize_by_method(records, cfg.algorithms);
  harness::write_results(c.out, records, stats, cfg, "run");
  print_summary(out, stats, c.format);
  if (c.verbosity > 0) fmt::print(out, "results written to {}\n", c.out.string());
  if (stats.empty()) throw Error(ErrorCode::NoSuccessfulRecords, "no method produced a successful record");
  return kExitOk;
}

inline int cmd_sweep(const CliConfig& c, std::ostream& out) {
  const harness::ExperimentConfig cfg = experiment_config(c);
  const bool noise = c.command == Command::SweepNoise;
  const auto& values = noise ? cfg.sigma_sweep : cfg.radius_sweep;
  std::map<double, std::vector<harness::ResultRecord>> raw;
  const auto result = harness::sweep(cfg, noise ? harness::SweepParameter::Noise : harness::SweepParameter::Radius,
                                     values, &raw);

  harness::detail::ensure_dir(c.out);
  std::ostringstream csv;
  const char* param = noise ? "sigma_px" : "radius_m";
  csv << param << ",method,successes,failures,mean_e_loc_m,std_error_m,median_m,p90_m,p97_m,mean_e_pos\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    const std::filesystem::path dir = c.out / fmt::format("{}_{:02d}", noise ? "sigma" : "radius", i);
    harness::detail::ensure_dir(dir);
    harness::detail::write_text(dir / "records.csv", harness::records_to_csv(raw.at(v)));
    harness::detail::write_text(dir / "cdf.csv", harness::cdf_to_csv(result.at(v)));
    for (const auto& [m, s] : result.at(v)) {
      csv << fmt::format("{:.17g},{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", v, harness::to_string(m),
                         s.successes, s.failures, s.mean, s.std_error, s.median, s.percentiles.at(90),
                         s.percentiles.at(97), s.mean_e_pos);
    }
    if (c.format == "table") {
      fmt::print(out, "{} = {}\n", param, v);
      print_summary(out, result.at(v), c.format);
    }
  }
  harness::detail::write_text(c.out / "sweep.csv", csv.str());
  harness::write_manifest(c.out, cfg, noise ? "sweep-noise" : "sweep-radius", {{"sweep_parameter", param}});
  if (c.format == "csv") out << csv.str();
  return kExitOk;
}

inline int cmd_cdf(const CliConfig& c, std::ostream& out) {
  std::ifstream in(c.records);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + c.records.string());
  const auto records = harness::records_from_csv(in);
  std::vector<harness::Method> methods;
  for (const auto& r : records) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
  }
  const auto stats = harness::summarize_by_method(records, methods);
  if (stats.empty()) throw Error(ErrorCode::NoSuccessfulRecords, "no successful records in " + c.records.string());
  if (!c.out.empty()) {
    harness::detail::ensure_dir(c.out);
    harness::detail::write_text(c.out / "summary.csv", harness::summary_to_csv(stats));
    harness::detail::write_text(c.out / "cdf.csv", harness::cdf_to_csv(stats));
  }
  if (c.format == "csv") {
    out << harness::cdf_to_csv(stats);
  } else {
    print_summary(out, stats, c.format);
  }
  return kExitOk;
}

inline int cmd_scene_validate(const CliConfig& c, std::ostream& out) {
  const sim::Scene scene = io::load_scene(c.scene);
  fmt::print(out, "ok: {} luminaires, room {} x {} x {} m\n", scene.luminaires.size(), scene.room.length,
             scene.room.width, scene.room.height);
  return kExitOk;
}

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UsageError:
    case ErrorCode::FileNotFound:
    case ErrorCode::ConfigInvalid: return kExitUsage;
    default: return kExitFailure;
  }
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CliConfig c;
  try {
    c = parse_args(argc, argv);
  } catch (const HelpRequested& h) {
    out << h.text;
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  }
  try {
    switch (c.command) {
      case Command::Solve: return cmd_solve(c, out);
      case Command::Run: return cmd_run(c, out);
      case Command::SweepNoise:
      case Command::SweepRadius: return cmd_sweep(c, out);
      case Command::Cdf: return cmd_cdf(c, out);
      case Command::SceneValidate: return cmd_scene_validate(c, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace vpa::cli
