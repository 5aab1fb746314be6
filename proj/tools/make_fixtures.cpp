// Regenerates tests/fixtures from the simulator (seed 0, sample 0, no noise).
#include <filesystem>
#include <fstream>
#include <iostream>

#include "vpa/harness.hpp"
#include "vpa/scene_io.hpp"

int main(int argc, char** argv) {
  namespace fs = std::filesystem;
  const fs::path dir = argc > 1 ? fs::path(argv[1]) : fs::path("tests/fixtures");
  fs::create_directories(dir);

  vpa::harness::ExperimentConfig cfg;
  cfg.seed = 0;
  cfg.sigma_px = 0.0;
  cfg.images_per_location = 1;
  cfg.scenario = vpa::harness::ArcScenario::from_name("circle+semicircle");
  const auto scene = cfg.effective_scene();
  const auto sample = vpa::harness::simulate_sample(cfg, scene, 0);
  if (sample.failure) {
    std::cerr << *sample.failure << '\n';
    return 1;
  }

  vpa::io::ObservationSet set{cfg.intrinsics, {}};
  for (const auto& c : sample.captures) set.observations.push_back(c.observation);
  std::ofstream(dir / "scene.json") << vpa::io::scene_to_json(scene).dump(2) << '\n';
  std::ofstream(dir / "observations_zero_noise.json") << vpa::io::observation_set_to_json(set).dump(2) << '\n';
  set.observations.resize(1);
  std::ofstream(dir / "observations_single.json") << vpa::io::observation_set_to_json(set).dump(2) << '\n';

  const auto& pose = sample.truth.pose;
  const auto e = vpa::rotation_to_euler(pose.rotation);
  const nlohmann::json truth = {
      {"translation_m", {pose.translation.x(), pose.translation.y(), pose.translation.z()}},
      {"euler_deg", {vpa::rad2deg(e.phi), vpa::rad2deg(e.theta), vpa::rad2deg(e.psi)}}};
  std::ofstream(dir / "truth_zero_noise.json") << truth.dump(2) << '\n';
  return 0;
}
