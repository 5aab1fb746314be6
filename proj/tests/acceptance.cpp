// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (capped at 1 for ctest).
//
// Usage: vpa_acceptance [--threads N] [--only 1,2,...]

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "vpa/conic.hpp"
#include "vpa/harness.hpp"

using namespace vpa;
using namespace vpa::harness;

namespace {

constexpr std::uint64_t kSeed = 20230612;
constexpr std::size_t kSamples = 10000;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExperimentConfig base(const std::string& scenario, double sigma, std::vector<Method> methods, std::size_t samples,
                      unsigned threads) {
  ExperimentConfig c;
  c.scenario = ArcScenario::from_name(scenario);
  c.sigma_px = sigma;
  c.algorithms = std::move(methods);
  c.samples = samples;
  c.seed = kSeed;
  c.threads = threads;
  return c;
}

struct Extremes {
  std::size_t ok = 0;
  std::size_t failed = 0;
  double max_e_loc = 0.0;
  double max_e_pos = 0.0;
};

Extremes extremes(const std::vector<ResultRecord>& records) {
  Extremes x;
  for (const auto& r : records) {
    if (!r.ok) {
      ++x.failed;
      continue;
    }
    ++x.ok;
    x.max_e_loc = std::max(x.max_e_loc, r.e_loc);
    x.max_e_pos = std::max(x.max_e_pos, r.e_pos);
  }
  return x;
}

Verdict criterion1(unsigned) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto records = run_monte_carlo(base("circle+semicircle", 0.0, {Method::VPCA, Method::PNP}, 1000, 1));
  const double secs = seconds_since(t0);
  const Extremes v = extremes(filter(records, Method::VPCA));
  const Extremes p = extremes(filter(records, Method::PNP));
  const bool pass = v.failed == 0 && v.max_e_loc < 1e-6 && v.max_e_pos < 1e-8 && p.failed == 0 &&
                    p.max_e_loc < 1e-4 && secs < 30.0;
  return {pass, fmt::format("VPCA max E_loc {:.2e} m, max E_pos {:.2e}, failures {}; PnP max E_loc {:.2e} m, "
                            "failures {}; {:.1f} s",
                            v.max_e_loc, v.max_e_pos, v.failed, p.max_e_loc, p.failed, secs)};
}

Verdict criterion2(unsigned) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto records = run_monte_carlo(base("semicircle+semicircle", 0.0, {Method::OAVPA}, 1000, 1));
  const double secs = seconds_since(t0);
  const SummaryStats s = summarize(records);
  const bool pass = s.mean > 0.0 && s.mean <= 0.02 && secs < 30.0;
  return {pass, fmt::format("OAVPA mean E_loc {:.3f} cm (+- {:.3f}), failures {}; {:.1f} s", 100.0 * s.mean,
                            100.0 * s.std_error, s.failures, secs)};
}

std::string criterion3_csv;

Verdict criterion3(unsigned) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto records = run_monte_carlo(base("natural", 2.0, {Method::VPA}, kSamples, 1));
  const double secs = seconds_since(t0);
  criterion3_csv = records_to_csv(records);
  const SummaryStats s = summarize(records);
  std::size_t vpca = 0;
  for (const auto& r : records) vpca += r.ok && r.algorithm == "VPCA" ? 1 : 0;

  std::vector<ResultRecord> smoke(records.begin(), records.begin() + 1000);
  const double p90_smoke = summarize(smoke).percentiles.at(90);
  const double p90 = s.percentiles.at(90);
  const bool pass = p90 >= 0.05 && p90 <= 0.15 && p90_smoke >= 0.04 && p90_smoke <= 0.18 && secs < 600.0;
  return {pass, fmt::format("VPA p90 {:.2f} cm over {} samples (band [5, 15]); first 1000: p90 {:.2f} cm (band "
                            "[4, 18]); mean {:.2f} cm, median {:.2f} cm; {} V-PCA / {} OA-V-PA, failures {}; "
                            "{:.1f} s single-threaded",
                            100.0 * p90, kSamples, 100.0 * p90_smoke, 100.0 * s.mean, 100.0 * s.median, vpca,
                            s.successes - vpca, s.failures, secs)};
}

Verdict criterion4(unsigned threads) {
  bool pass = true;
  std::string detail;
  for (const char* scenario : {"circle+circle", "circle+semicircle"}) {
    const SummaryStats s = summarize(run_monte_carlo(base(scenario, 2.0, {Method::VPCA}, kSamples, threads)));
    const double p97 = s.percentiles.at(97);
    pass = pass && p97 >= 0.05 && p97 <= 0.15;
    detail += fmt::format("{}{}: VPCA p97 {:.2f} cm, p90 {:.2f} cm, median {:.2f} cm, failures {}",
                          detail.empty() ? "" : "; ", scenario, 100.0 * p97, 100.0 * s.percentiles.at(90),
                          100.0 * s.median, s.failures);
  }
  return {pass, detail + " (band [5, 15])"};
}

Verdict criterion5(unsigned threads) {
  const auto cfg = base("natural", 2.0, {Method::VPA, Method::PNP}, kSamples, threads);
  const std::vector<double> sigmas{0.0, 1.0, 2.0, 3.0, 4.0};
  const SweepResult r = sweep(cfg, SweepParameter::Noise, sigmas);
  bool monotone = true;
  std::string means;
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    const auto& s = r.at(sigmas[i]).at(Method::VPA);
    means += fmt::format("{}{:.2f}", i ? ", " : "", 100.0 * s.mean);
    if (i > 0 && s.mean < r.at(sigmas[i - 1]).at(Method::VPA).mean) monotone = false;
  }
  const double vpa4 = r.at(4.0).at(Method::VPA).mean;
  const double pnp4 = r.at(4.0).at(Method::PNP).mean;
  const bool pass = monotone && vpa4 <= 0.20 && pnp4 >= 2.0 * vpa4;
  return {pass, fmt::format("VPA mean E_loc (cm) at sigma 0..4: [{}], monotone {}; at sigma 4: VPA {:.2f} cm, "
                            "PnP {:.2f} cm, ratio {:.2f} (need >= 2)",
                            means, monotone ? "yes" : "no", 100.0 * vpa4, 100.0 * pnp4, pnp4 / vpa4)};
}

Verdict criterion6(unsigned threads) {
  const auto cfg = base("natural", 2.0, {Method::VPCA, Method::OAVPA}, kSamples, threads);
  const std::vector<double> radii{0.06, 0.08, 0.10, 0.12, 0.14, 0.16};
  const SweepResult r = sweep(cfg, SweepParameter::Radius, radii);
  bool nonincreasing = true;
  bool ordered = true;
  std::string table;
  for (const Method m : {Method::VPCA, Method::OAVPA}) {
    table += fmt::format("{}{} [", table.empty() ? "" : "; ", to_string(m));
    for (std::size_t i = 0; i < radii.size(); ++i) {
      const auto& s = r.at(radii[i]).at(m);
      table += fmt::format("{}{:.2f}+-{:.2f}", i ? ", " : "", 100.0 * s.mean, 100.0 * s.std_error);
      if (i > 0) {
        const auto& prev = r.at(radii[i - 1]).at(m);
        const double slack = 3.0 * std::hypot(s.std_error, prev.std_error);
        if (s.mean > prev.mean + slack) nonincreasing = false;
      }
    }
    table += "]";
  }
  for (const double radius : radii)
    if (r.at(radius).at(Method::VPCA).mean > r.at(radius).at(Method::OAVPA).mean) ordered = false;
  return {nonincreasing && ordered,
          fmt::format("mean E_loc (cm) for R = 6..16 cm: {}; nonincreasing within 3 SE {}; VPCA <= OAVPA at every R {}",
                      table, nonincreasing ? "yes" : "no", ordered ? "yes" : "no")};
}

Verdict criterion7(unsigned) {
  std::mt19937_64 rng(kSeed);
  std::uniform_real_distribution<double> ux(0.5, 7.5), uy(0.5, 5.5), ur(0.06, 0.16);
  const CameraIntrinsics k;
  double worst_normal = 0.0;
  double worst_probe = 0.0;
  int checked = 0;
  int scenes = 0;
  while (scenes < 500) {
    sim::Scene scene;
    for (int id = 1; id <= 4; ++id) scene.luminaires.push_back(LuminaireInfo::make(id, {ux(rng), uy(rng), 3.0}, ur(rng)));
    try {
      scene.validate();
    } catch (const Error&) {
      continue;
    }
    sim::VisibilityConstraint vc;
    vc.min_fraction = 1.0;
    sim::GroundTruth truth;
    try {
      truth = sim::sample_pose(scene, k, rng, vc);
    } catch (const Error&) {
      continue;
    }
    ++scenes;
    const Vec3 n_true = truth.pose.rotation.matrix().transpose() * LuminaireInfo::normal_world();
    for (const auto& lum : scene.luminaires) {
      if (sim::visible_fraction(lum, truth.pose, k, 360) < 1.0) continue;
      std::vector<ImagePoint> pts;
      for (int i = 0; i < 360; ++i)
        pts.push_back(project_to_image(world_to_camera(sim::contour_point(lum, i, 360), truth.pose), k));
      const auto d = decompose_cone(cone_from_ellipse(fit_ellipse(pts), k.focal_cm));
      const auto c = candidate_normals(d);
      worst_normal = std::max(worst_normal, std::min((c[0].normal_ccs - n_true).norm(), (c[1].normal_ccs - n_true).norm()));
      for (const auto& cand : c) {
        const double ref = luminaire_plane(d, cand.k, lum.radius, 1.0).b_led;
        for (const double probe : {0.01, 0.5, 7.0, 250.0})
          worst_probe = std::max(worst_probe, std::abs(luminaire_plane(d, cand.k, lum.radius, probe).b_led - ref));
      }
      ++checked;
    }
  }
  const bool pass = worst_normal < 1e-6 && worst_probe < 1e-10;
  return {pass, fmt::format("{} scenes, {} luminaire views: worst normal miss {:.2e}, worst b_LED probe spread {:.2e} m",
                            scenes, checked, worst_normal, worst_probe)};
}

Verdict criterion8(unsigned) {
  const double ep = e_pos(Rotation::identity(), Rotation::from_matrix(rotation_z(std::numbers::pi / 2.0)));
  const double el = e_loc(WorldPoint(0.0, 0.0, 0.0), WorldPoint(0.06, 0.08, 0.0));
  const double el2 = e_loc(WorldPoint(1.0, 1.0, 1.0), WorldPoint(4.0, 5.0, 1.0));
  const bool pass = std::abs(ep - 0.7654) <= 1e-4 && el == 0.1 && el2 == 5.0;
  return {pass, fmt::format("e_pos(I, R_Z(pi/2)) = {:.6f}; e_loc 3-4-5 cases = {:.17g} m, {:.17g} m", ep, el, el2)};
}

Verdict criterion9(unsigned threads) {
  if (criterion3_csv.empty()) criterion3_csv = records_to_csv(run_monte_carlo(base("natural", 2.0, {Method::VPA}, kSamples, 1)));
  const unsigned other = std::max(4u, threads);
  const std::string again = records_to_csv(run_monte_carlo(base("natural", 2.0, {Method::VPA}, kSamples, other)));
  const bool pass = again == criterion3_csv;
  return {pass, fmt::format("criterion 3 records with 1 thread vs {} threads: {} ({} bytes)", other,
                            pass ? "byte-identical" : "DIFFER", again.size())};
}

}  // namespace

int main(int argc, char** argv) {
  unsigned threads = 0;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--threads" && i + 1 < argc) {
      threads = static_cast<unsigned>(std::stoul(argv[++i]));
    } else if (a == "--only" && i + 1 < argc) {
      std::string list = argv[++i];
      for (std::size_t p = 0; p < list.size();) {
        const std::size_t q = list.find(',', p);
        only.insert(std::stoi(list.substr(p, q - p)));
        p = q == std::string::npos ? list.size() : q + 1;
      }
    } else {
      std::cerr << "usage: vpa_acceptance [--threads N] [--only 1,2,...]\n";
      return 2;
    }
  }

  const std::vector<std::function<Verdict(unsigned)>> criteria{criterion1, criterion2, criterion3,
                                                               criterion4, criterion5, criterion6,
                                                               criterion7, criterion8, criterion9};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.contains(id)) continue;
    Verdict v;
    try {
      v = criteria[i](threads);
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failed;
    fmt::print("criterion {}: {}  {}\n", id, v.pass ? "PASS" : "FAIL", v.detail);
    std::fflush(stdout);
  }
  fmt::print("{} criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
