#pragma once
//! \file
//! Monte Carlo experiments: metrics, sample execution, sweeps, summaries
//! and result files.
//!
//! Every sample draws from its own RNG stream derived from (seed, index), so
//! results do not depend on the number of worker threads.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "vpa/error.hpp"
#include "vpa/frames.hpp"
#include "vpa/scene_io.hpp"
#include "vpa/sim.hpp"
#include "vpa/solver.hpp"

namespace vpa::harness {

inline constexpr std::string_view kVersion = "1.0.0";

// ---------------------------------------------------------------------------
// Metrics

inline double e_loc(const WorldPoint& truth, const WorldPoint& est) { return (truth.xyz - est.xyz).norm(); }

/// ||q_true - q_est|| / ||q_est|| on canonicalised unit quaternions.
///
/// q and -q are the same rotation; the sign of q_est is matched to q_true so
/// the metric measures rotation distance only.
inline double e_pos(const Rotation& r_true, const Rotation& r_est) {
  const Eigen::Vector4d qt = rotation_to_quaternion(r_true).coeffs();
  Eigen::Vector4d qe = rotation_to_quaternion(r_est).coeffs();
  if (qt.dot(qe) < 0.0) qe = -qe;
  return (qt - qe).norm() / qe.norm();
}

// ---------------------------------------------------------------------------
// Configuration

enum class Method { VPA, VPCA, OAVPA, PNP };

constexpr std::string_view to_string(Method m) {
  switch (m) {
    case Method::VPA: return "VPA";
    case Method::VPCA: return "VPCA";
    case Method::OAVPA: return "OAVPA";
    case Method::PNP: return "PNP";
  }
  return "?";
}

inline Method method_from_string(std::string_view s) {
  for (const Method m : {Method::VPA, Method::VPCA, Method::OAVPA, Method::PNP})
    if (s == to_string(m)) return m;
  throw Error(ErrorCode::ConfigInvalid, "unknown algorithm '" + std::string(s) + "'");
}

/// How the luminaires of a sample are captured.
///
/// `natural`: every luminaire with at least min_visible_fraction of its rim
/// in view is observed, truncated by the image border only; fully visible
/// ones are complete captures.
/// Fixed scenarios pick the two nearest fully visible luminaires and impose
/// the listed angular truncations (occlusion).
struct ArcScenario {
  std::string name = "natural";
  std::vector<sim::ArcMode> modes;  // empty for natural

  [[nodiscard]] bool natural() const { return modes.empty(); }

  static ArcScenario from_name(std::string_view name) {
    using sim::ArcMode;
    if (name == "natural") return {"natural", {}};
    if (name == "circle+circle") return {std::string(name), {ArcMode::Complete, ArcMode::Complete}};
    if (name == "circle+semicircle") return {std::string(name), {ArcMode::Complete, ArcMode::Semicircle}};
    if (name == "semicircle+semicircle") return {std::string(name), {ArcMode::Semicircle, ArcMode::Semicircle}};
    if (name == "superior+superior") return {std::string(name), {ArcMode::SuperiorArc, ArcMode::SuperiorArc}};
    throw Error(ErrorCode::ConfigInvalid, "unknown arc scenario '" + std::string(name) + "'");
  }
};

struct ExperimentConfig {
  sim::Scene scene = sim::table_iii_scene();
  CameraIntrinsics intrinsics = CameraIntrinsics::table_iii();
  double sigma_px = 2.0;
  double radius_m = 0.15;
  ArcScenario scenario;
  std::size_t samples = 10000;
  int images_per_location = 20;
  int contour_samples = 360;
  double arc_fraction = 0.6;
  double min_visible_fraction = 0.5;
  double max_tilt_deg = 45.0;
  double min_height_m = 0.5;
  double max_height_m = 2.0;
  std::vector<Method> algorithms = {Method::VPA, Method::PNP};
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: hardware concurrency
  std::vector<double> sigma_sweep = {0.0, 1.0, 2.0, 3.0, 4.0};
  std::vector<double> radius_sweep = {0.06, 0.08, 0.10, 0.12, 0.14, 0.16};

  void validate() const {
    if (samples < 1) throw Error(ErrorCode::ConfigInvalid, "samples must be >= 1");
    if (algorithms.empty()) throw Error(ErrorCode::ConfigInvalid, "algorithms must not be empty");
    if (!(sigma_px >= 0.0)) throw Error(ErrorCode::ConfigInvalid, "sigma_px must be >= 0");
    if (!(radius_m > 0.0)) throw Error(ErrorCode::ConfigInvalid, "radius_m must be > 0");
    if (!(min_visible_fraction > 0.0 && min_visible_fraction <= 1.0))
      throw Error(ErrorCode::ConfigInvalid, "min_visible_fraction must be in (0, 1]");
    if (!(max_tilt_deg >= 0.0 && max_tilt_deg < 90.0))
      throw Error(ErrorCode::ConfigInvalid, "max_tilt_deg must be in [0, 90)");
    if (!(min_height_m < max_height_m)) throw Error(ErrorCode::ConfigInvalid, "min_height_m must be < max_height_m");
    for (const auto* sweep : {&sigma_sweep, &radius_sweep}) {
      if (sweep->empty() || !std::is_sorted(sweep->begin(), sweep->end()))
        throw Error(ErrorCode::ConfigInvalid, "sweep lists must be nonempty and sorted");
    }
    if (sigma_sweep.front() < 0.0) throw Error(ErrorCode::ConfigInvalid, "sigma_sweep values must be >= 0");
    if (radius_sweep.front() <= 0.0) throw Error(ErrorCode::ConfigInvalid, "radius_sweep values must be > 0");
    sim::CaptureConfig{contour_samples, images_per_location, sim::ArcMode::Complete, arc_fraction}.validate();
    try {
      intrinsics.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigInvalid, e.what());
    }
    scene.validate();
    if (scene.luminaires.size() < 2) throw Error(ErrorCode::ConfigInvalid, "scene needs at least two luminaires");
  }

  [[nodiscard]] sim::Scene effective_scene() const { return scene.with_radius(radius_m); }
};

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json algs = nlohmann::json::array();
  for (const Method m : c.algorithms) algs.push_back(std::string(to_string(m)));
  return {{"schema_version", io::kSchemaVersion},
          {"scene", io::scene_to_json(c.scene)},
          {"intrinsics", io::intrinsics_to_json(c.intrinsics)},
          {"sigma_px", c.sigma_px},
          {"radius_m", c.radius_m},
          {"scenario", c.scenario.name},
          {"samples", c.samples},
          {"images_per_location", c.images_per_location},
          {"contour_samples", c.contour_samples},
          {"arc_fraction", c.arc_fraction},
          {"min_visible_fraction", c.min_visible_fraction},
          {"max_tilt_deg", c.max_tilt_deg},
          {"min_height_m", c.min_height_m},
          {"max_height_m", c.max_height_m},
          {"algorithms", algs},
          {"seed", c.seed},
          {"threads", c.threads},
          {"sigma_sweep", c.sigma_sweep},
          {"radius_sweep", c.radius_sweep}};
}

/// Parses an experiment config. `scene` is an inline scene object or a path
/// relative to `base_dir`. Unknown fields are rejected.
inline ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  using io::field;
  const std::string w = "config";
  io::reject_unknown_keys(j,
                          {"schema_version", "scene", "intrinsics", "sigma_px", "radius_m", "scenario", "samples",
                           "images_per_location", "contour_samples", "arc_fraction", "min_visible_fraction",
                           "max_tilt_deg", "min_height_m", "max_height_m", "algorithms", "seed", "threads",
                           "sigma_sweep", "radius_sweep"},
                          w);
  io::check_schema(j, w);
  ExperimentConfig c;
  if (j.contains("scene")) {
    if (j["scene"].is_string()) {
      c.scene = io::load_scene(base_dir / j["scene"].get<std::string>());
    } else {
      c.scene = io::scene_from_json(j["scene"]);
    }
  }
  if (j.contains("intrinsics")) c.intrinsics = io::intrinsics_from_json(j["intrinsics"]);
  if (j.contains("sigma_px")) c.sigma_px = field<double>(j, "sigma_px", w);
  if (j.contains("radius_m")) c.radius_m = field<double>(j, "radius_m", w);
  if (j.contains("scenario")) c.scenario = ArcScenario::from_name(field<std::string>(j, "scenario", w));
  if (j.contains("samples")) c.samples = field<std::size_t>(j, "samples", w);
  if (j.contains("images_per_location")) c.images_per_location = field<int>(j, "images_per_location", w);
  if (j.contains("contour_samples")) c.contour_samples = field<int>(j, "contour_samples", w);
  if (j.contains("arc_fraction")) c.arc_fraction = field<double>(j, "arc_fraction", w);
  if (j.contains("min_visible_fraction")) c.min_visible_fraction = field<double>(j, "min_visible_fraction", w);
  if (j.contains("max_tilt_deg")) c.max_tilt_deg = field<double>(j, "max_tilt_deg", w);
  if (j.contains("min_height_m")) c.min_height_m = field<double>(j, "min_height_m", w);
  if (j.contains("max_height_m")) c.max_height_m = field<double>(j, "max_height_m", w);
  if (j.contains("algorithms")) {
    c.algorithms.clear();
    for (const auto& a : field<std::vector<std::string>>(j, "algorithms", w)) c.algorithms.push_back(method_from_string(a));
  }
  if (j.contains("seed")) c.seed = field<std::uint64_t>(j, "seed", w);
  if (j.contains("threads")) c.threads = field<unsigned>(j, "threads", w);
  if (j.contains("sigma_sweep")) c.sigma_sweep = field<std::vector<double>>(j, "sigma_sweep", w);
  if (j.contains("radius_sweep")) c.radius_sweep = field<std::vector<double>>(j, "radius_sweep", w);
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  return config_from_json(io::read_json_file(path), path.parent_path());
}

// ---------------------------------------------------------------------------
// One sample

struct SampleData {
  std::size_t index = 0;
  sim::GroundTruth truth;
  std::vector<sim::AveragedCapture> captures;
  std::optional<std::string> failure;  // capture-stage failure, applies to every method
};

struct ResultRecord {
  std::size_t sample = 0;
  Method method = Method::VPA;
  bool ok = false;
  std::string algorithm;  // tag actually used, empty on failure
  double e_loc = 0.0;     // m
  double e_pos = 0.0;
  Pose truth;
  std::optional<Pose> estimate;
  std::string reason;  // failure reason
};

namespace detail {

inline sim::VisibilityConstraint constraint_for(const ExperimentConfig& cfg) {
  sim::VisibilityConstraint c;
  c.min_luminaires = 2;
  c.min_fraction = cfg.scenario.natural() ? cfg.min_visible_fraction : 1.0;
  c.contour_samples = cfg.contour_samples;
  c.max_tilt_rad = deg2rad(cfg.max_tilt_deg);
  c.min_height = cfg.min_height_m;
  c.max_height = cfg.max_height_m;
  return c;
}

}  // namespace detail

/// Pose, captures and averaged observations of one sample.
///
/// Draw order inside the sample stream: pose, then one arc window per
/// captured luminaire, then the image noise. Changing sigma therefore
/// leaves pose and truncation untouched.
inline SampleData simulate_sample(const ExperimentConfig& cfg, const sim::Scene& scene, std::size_t index) {
  auto rng = sim::sample_rng(cfg.seed, index);
  SampleData out;
  out.index = index;
  const auto& k = cfg.intrinsics;
  try {
    out.truth = sim::sample_pose(scene, k, rng, detail::constraint_for(cfg));
  } catch (const Error& e) {
    out.failure = e.what();
    return out;
  }

  struct Planned {
    const LuminaireInfo* lum;
    sim::ArcMode mode;
    sim::ArcWindow window;
  };
  std::vector<Planned> plan;
  if (cfg.scenario.natural()) {
    for (const auto& lum : scene.luminaires) {
      if (sim::visible_fraction(lum, out.truth.pose, k, cfg.contour_samples) >= cfg.min_visible_fraction - 1e-12)
        plan.push_back({&lum, sim::ArcMode::ImageBounds, {}});
    }
  } else {
    std::vector<const LuminaireInfo*> full;
    for (const auto& lum : scene.luminaires) {
      if (sim::visible_fraction(lum, out.truth.pose, k, cfg.contour_samples) >= 1.0 - 1e-12) full.push_back(&lum);
    }
    std::stable_sort(full.begin(), full.end(), [&](const LuminaireInfo* a, const LuminaireInfo* b) {
      return world_to_camera(a->center, out.truth.pose).z() < world_to_camera(b->center, out.truth.pose).z();
    });
    for (std::size_t i = 0; i < cfg.scenario.modes.size() && i < full.size(); ++i)
      plan.push_back({full[i], cfg.scenario.modes[i], {}});
  }
  for (auto& p : plan) p.window = sim::draw_arc_window(p.mode, cfg.contour_samples, cfg.arc_fraction, rng);

  const sim::CaptureConfig cap{cfg.contour_samples, cfg.images_per_location, sim::ArcMode::Complete, cfg.arc_fraction};
  for (const auto& p : plan) {
    std::vector<sim::RawCapture> images;
    images.reserve(static_cast<std::size_t>(cfg.images_per_location));
    std::optional<std::string> failed;
    for (int img = 0; img < cfg.images_per_location; ++img) {
      try {
        images.push_back(sim::truncate_arc(sim::project_luminaire(*p.lum, out.truth, k, cfg.sigma_px, cap, rng),
                                           p.mode, p.window));
      } catch (const Error& e) {
        failed = e.what();
      }
    }
    if (!failed) {
      try {
        out.captures.push_back(sim::average_observations(images, k));
      } catch (const Error& e) {
        failed = e.what();
      }
    }
    if (failed && !cfg.scenario.natural()) {
      out.failure = *failed;
      return out;
    }
  }
  if (out.captures.size() < 2) out.failure = std::string(to_string(ErrorCode::TooFewLuminaires)) + ": fewer than two usable captures";
  return out;
}

/// Four correspondences, two per arc: a quarter and three quarters along
/// the first retained contour, its start and midpoint on the second. The two
/// chords then differ in direction, so the points are never collinear.
inline std::vector<Correspondence> pnp_correspondences(const sim::AveragedCapture& a, const sim::AveragedCapture& b,
                                                       const LuminaireMap& lums) {
  std::vector<Correspondence> out;
  auto add = [&](const sim::AveragedCapture& c, std::size_t j) {
    const LuminaireInfo& lum = lums.at(c.observation.luminaire_id);
    out.push_back({sim::contour_point(lum, c.indices[j], c.contour_samples), c.contour[j]});
  };
  add(a, a.contour.size() / 4);
  add(a, (3 * a.contour.size()) / 4);
  add(b, 0);
  add(b, b.contour.size() / 2);
  return out;
}

inline ResultRecord solve_sample(const SampleData& s, Method method, const LuminaireMap& lums,
                                 const CameraIntrinsics& k) {
  ResultRecord rec;
  rec.sample = s.index;
  rec.method = method;
  rec.truth = s.truth.pose;
  if (s.failure) {
    rec.reason = *s.failure;
    return rec;
  }
  std::vector<Observation> obs;
  obs.reserve(s.captures.size());
  for (const auto& c : s.captures) obs.push_back(c.observation);

  try {
    PoseEstimate est;
    const DispatchChoice choice = choose_dispatch(obs);
    switch (method) {
      case Method::VPA: est = solve_vpa(obs, lums, k); break;
      case Method::VPCA:
        if (choice.algorithm != Algorithm::VPCA)
          throw Error(ErrorCode::PreconditionViolated, "no complete capture for V-PCA");
        est = solve_vpca(obs[choice.lead], obs[choice.partner], lums, k);
        break;
      case Method::OAVPA: {
        std::vector<std::size_t> order(obs.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t l, std::size_t r) { return longer_contour(obs[l], obs[r]); });
        est = solve_oavpa(obs[order[0]], obs[order[1]], lums, k);
        break;
      }
      case Method::PNP: {
        const auto corr = pnp_correspondences(s.captures[choice.lead], s.captures[choice.partner], lums);
        est = pnp_multistart(corr, k);
        break;
      }
    }
    rec.ok = true;
    rec.algorithm = std::string(to_string(est.algorithm));
    rec.estimate = est.pose;
    rec.e_loc = e_loc(s.truth.pose.translation, est.pose.translation);
    rec.e_pos = e_pos(s.truth.pose.rotation, est.pose.rotation);
  } catch (const Error& e) {
    rec.reason = e.what();
  }
  return rec;
}

/// Runs every sample with every requested method. Records are ordered by
/// sample, then by the order of cfg.algorithms. Solver failures are recorded,
/// never thrown.
inline std::vector<ResultRecord> run_monte_carlo(const ExperimentConfig& cfg) {
  cfg.validate();
  const sim::Scene scene = cfg.effective_scene();
  const LuminaireMap lums = scene.map();
  const std::size_t n_alg = cfg.algorithms.size();
  std::vector<ResultRecord> records(cfg.samples * n_alg);

  auto work = [&](std::size_t i) {
    const SampleData s = simulate_sample(cfg, scene, i);
    for (std::size_t a = 0; a < n_alg; ++a) records[i * n_alg + a] = solve_sample(s, cfg.algorithms[a], lums, cfg.intrinsics);
  };

  unsigned threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, cfg.samples));
  if (threads <= 1) {
    for (std::size_t i = 0; i < cfg.samples; ++i) work(i);
    return records;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < cfg.samples; i = next.fetch_add(1)) work(i);
    });
  }
  for (auto& th : pool) th.join();
  return records;
}

// ---------------------------------------------------------------------------
// Statistics

struct CdfPoint {
  double e_loc = 0.0;    // m
  double fraction = 0.0;
};

struct SummaryStats {
  std::size_t successes = 0;
  std::size_t failures = 0;
  double mean = 0.0;     // E_loc, m
  double std_error = 0.0;
  double median = 0.0;
  double mean_e_pos = 0.0;
  std::map<int, double> percentiles;  // 50/78/86/90/95/97
  std::vector<CdfPoint> cdf;
};

inline std::vector<double> default_cdf_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 200; ++i) g.push_back(0.005 * i);  // 0 .. 1 m in 0.5 cm steps
  return g;
}

/// Linear interpolation between order statistics; p in [0, 100].
inline double percentile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw Error(ErrorCode::NoSuccessfulRecords, "no values");
  const double pos = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Fraction of successes with E_loc <= each grid point.
inline std::vector<CdfPoint> cdf(const std::vector<ResultRecord>& records, const std::vector<double>& grid) {
  std::vector<double> v;
  for (const auto& r : records)
    if (r.ok) v.push_back(r.e_loc);
  if (v.empty()) throw Error(ErrorCode::NoSuccessfulRecords, "no successful records");
  std::sort(v.begin(), v.end());
  std::vector<CdfPoint> out;
  out.reserve(grid.size());
  for (const double x : grid) {
    const auto count = std::upper_bound(v.begin(), v.end(), x) - v.begin();
    out.push_back({x, static_cast<double>(count) / static_cast<double>(v.size())});
  }
  return out;
}

inline SummaryStats summarize(const std::vector<ResultRecord>& records,
                              const std::vector<double>& grid = default_cdf_grid()) {
  SummaryStats s;
  std::vector<double> v;
  double pos_sum = 0.0;
  for (const auto& r : records) {
    if (r.ok) {
      v.push_back(r.e_loc);
      pos_sum += r.e_pos;
    } else {
      ++s.failures;
    }
  }
  if (v.empty()) throw Error(ErrorCode::NoSuccessfulRecords, "no successful records");
  std::sort(v.begin(), v.end());
  s.successes = v.size();
  const double n = static_cast<double>(v.size());
  double sum = 0.0;
  for (const double x : v) sum += x;
  s.mean = sum / n;
  double ss = 0.0;
  for (const double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std_error = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
  s.median = percentile(v, 50.0);
  s.mean_e_pos = pos_sum / n;
  for (const int p : {50, 78, 86, 90, 95, 97}) s.percentiles[p] = percentile(v, p);
  s.cdf = cdf(records, grid);
  return s;
}

inline std::vector<ResultRecord> filter(const std::vector<ResultRecord>& records, Method m) {
  std::vector<ResultRecord> out;
  for (const auto& r : records)
    if (r.method == m) out.push_back(r);
  return out;
}

/// Per-method summaries; methods without any success are omitted.
inline std::map<Method, SummaryStats> summarize_by_method(const std::vector<ResultRecord>& records,
                                                          const std::vector<Method>& methods) {
  std::map<Method, SummaryStats> out;
  for (const Method m : methods) {
    try {
      out.emplace(m, summarize(filter(records, m)));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoSuccessfulRecords) throw;
    }
  }
  return out;
}

enum class SweepParameter { Noise, Radius };

using SweepResult = std::map<double, std::map<Method, SummaryStats>>;

/// One run per value. All values share cfg.seed, so poses and noise draws are
/// common across the sweep (sigma only scales the same unit-normal draws).
inline SweepResult sweep(const ExperimentConfig& cfg, SweepParameter parameter, const std::vector<double>& values,
                         std::map<double, std::vector<ResultRecord>>* raw = nullptr) {
  if (values.empty() || !std::is_sorted(values.begin(), values.end()))
    throw Error(ErrorCode::ConfigInvalid, "sweep values must be nonempty and sorted");
  SweepResult out;
  for (const double v : values) {
    ExperimentConfig c = cfg;
    if (parameter == SweepParameter::Noise) {
      c.sigma_px = v;
    } else {
      c.radius_m = v;
    }
    auto records = run_monte_carlo(c);
    out[v] = summarize_by_method(records, c.algorithms);
    if (raw) (*raw)[v] = std::move(records);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Result files

/// records.csv column order.
inline constexpr std::string_view kRecordsHeader =
    "sample,method,status,algorithm,e_loc_m,e_pos,true_x,true_y,true_z,true_phi,true_theta,true_psi,"
    "est_x,est_y,est_z,est_phi,est_theta,est_psi,reason";

namespace detail {

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline std::string num(double x) { return fmt::format("{:.17g}", x); }

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

inline std::string records_to_csv(const std::vector<ResultRecord>& records) {
  std::ostringstream os;
  os << kRecordsHeader << '\n';
  for (const auto& r : records) {
    const EulerAngles te = rotation_to_euler(r.truth.rotation);
    os << r.sample << ',' << to_string(r.method) << ',' << (r.ok ? "ok" : "failed") << ',' << r.algorithm << ',';
    if (r.ok) {
      os << detail::num(r.e_loc) << ',' << detail::num(r.e_pos) << ',';
    } else {
      os << ",,";
    }
    os << detail::num(r.truth.translation.x()) << ',' << detail::num(r.truth.translation.y()) << ','
       << detail::num(r.truth.translation.z()) << ',' << detail::num(te.phi) << ',' << detail::num(te.theta) << ','
       << detail::num(te.psi) << ',';
    if (r.estimate) {
      EulerAngles ee{};
      try {
        ee = rotation_to_euler(r.estimate->rotation);
      } catch (const Error&) {
        ee = {std::nan(""), std::nan(""), std::nan("")};
      }
      os << detail::num(r.estimate->translation.x()) << ',' << detail::num(r.estimate->translation.y()) << ','
         << detail::num(r.estimate->translation.z()) << ',' << detail::num(ee.phi) << ',' << detail::num(ee.theta)
         << ',' << detail::num(ee.psi) << ',';
    } else {
      os << ",,,,,,";
    }
    os << detail::csv_escape(r.reason) << '\n';
  }
  return os.str();
}

inline std::vector<ResultRecord> records_from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kRecordsHeader)
    throw Error(ErrorCode::ConfigInvalid, "records CSV: unexpected header");
  std::vector<ResultRecord> out;
  auto d = [](const std::string& s) { return std::stod(s); };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 19) throw Error(ErrorCode::ConfigInvalid, "records CSV: expected 19 columns");
    try {
      ResultRecord r;
      r.sample = std::stoull(f[0]);
      r.method = method_from_string(f[1]);
      r.ok = f[2] == "ok";
      r.algorithm = f[3];
      if (r.ok) {
        r.e_loc = d(f[4]);
        r.e_pos = d(f[5]);
      }
      r.truth = {euler_to_rotation({d(f[9]), d(f[10]), d(f[11])}), WorldPoint(d(f[6]), d(f[7]), d(f[8]))};
      if (!f[12].empty())
        r.estimate = Pose{euler_to_rotation({d(f[15]), d(f[16]), d(f[17])}), WorldPoint(d(f[12]), d(f[13]), d(f[14]))};
      r.reason = f[18];
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::ConfigInvalid, "records CSV: bad number in line: " + line);
    }
  }
  return out;
}

inline std::string cdf_to_csv(const std::map<Method, SummaryStats>& stats) {
  std::ostringstream os;
  os << "method,e_loc_m,fraction\n";
  for (const auto& [m, s] : stats)
    for (const auto& p : s.cdf) os << to_string(m) << ',' << detail::num(p.e_loc) << ',' << detail::num(p.fraction) << '\n';
  return os.str();
}

inline std::string summary_to_csv(const std::map<Method, SummaryStats>& stats) {
  std::ostringstream os;
  os << "method,successes,failures,mean_e_loc_m,std_error_m,median_m,p50_m,p78_m,p86_m,p90_m,p95_m,p97_m,mean_e_pos\n";
  for (const auto& [m, s] : stats) {
    os << to_string(m) << ',' << s.successes << ',' << s.failures << ',' << detail::num(s.mean) << ','
       << detail::num(s.std_error) << ',' << detail::num(s.median);
    for (const int p : {50, 78, 86, 90, 95, 97}) os << ',' << detail::num(s.percentiles.at(p));
    os << ',' << detail::num(s.mean_e_pos) << '\n';
  }
  return os.str();
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string());
}

}  // namespace detail

/// Writes the run manifest (config echo, seed, version, UTC timestamp).
inline void write_manifest(const std::filesystem::path& dir, const ExperimentConfig& cfg, const std::string& command,
                           const nlohmann::json& extra = nlohmann::json::object()) {
  detail::ensure_dir(dir);
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  nlohmann::json m = {{"command", command},
                      {"code_version", std::string(kVersion)},
                      {"seed", cfg.seed},
                      {"timestamp_utc", stamp},
                      {"config", config_to_json(cfg)}};
  for (const auto& [key, value] : extra.items()) m[key] = value;
  detail::write_text(dir / "manifest.json", m.dump(2) + "\n");
}

/// records.csv, summary.csv, cdf.csv and manifest.json under `dir`.
inline void write_results(const std::filesystem::path& dir, const std::vector<ResultRecord>& records,
                          const std::map<Method, SummaryStats>& stats, const ExperimentConfig& cfg,
                          const std::string& command = "run") {
  detail::ensure_dir(dir);
  detail::write_text(dir / "records.csv", records_to_csv(records));
  detail::write_text(dir / "summary.csv", summary_to_csv(stats));
  detail::write_text(dir / "cdf.csv", cdf_to_csv(stats));
  write_manifest(dir, cfg, command);
}

}  // namespace vpa::harness
