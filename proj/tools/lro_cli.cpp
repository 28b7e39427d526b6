#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "lro/config.hpp"
#include "lro/io.hpp"
#include "lro/pipeline.hpp"
#include "lro/scenarios.hpp"
#include "lro/verify.hpp"

namespace {

using json = nlohmann::json;
using namespace lro;

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitBadConfig = 2;
constexpr int kExitInitFailed = 3;
constexpr int kExitNoOverlap = 4;

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

json sim_config_json(const sim::SensorSimConfig& c) {
  return json{{"seed", c.seed},
              {"duration", c.duration},
              {"imu_rate", c.imu_rate},
              {"imu_noise_enabled", c.imu_noise_enabled},
              {"gyro_noise_density", c.imu_noise.gyro_noise_density},
              {"accel_noise_density", c.imu_noise.accel_noise_density},
              {"gyro_bias_walk", c.imu_noise.gyro_bias_walk},
              {"accel_bias_walk", c.imu_noise.accel_bias_walk},
              {"initial_accel_bias", {c.initial_accel_bias.x(), c.initial_accel_bias.y(),
                                      c.initial_accel_bias.z()}},
              {"initial_gyro_bias", {c.initial_gyro_bias.x(), c.initial_gyro_bias.y(),
                                     c.initial_gyro_bias.z()}},
              {"gravity_magnitude", c.gravity_magnitude},
              {"lidar_rings", c.lidar_rings},
              {"lidar_points_per_ring", c.lidar_points_per_ring},
              {"lidar_period", c.lidar_period},
              {"lidar_vertical_fov_deg", c.lidar_vertical_fov_deg},
              {"lidar_range_sigma", c.lidar_range_sigma},
              {"lidar_max_range", c.lidar_max_range},
              {"radar_max_targets", c.radar_max_targets},
              {"radar_max_range", c.radar_max_range},
              {"radar_max_doppler", c.radar_max_doppler},
              {"radar_doppler_sigma", c.radar_doppler_sigma},
              {"radar_azimuth_fov_deg", c.radar_azimuth_fov_deg},
              {"radar_elevation_fov_deg", c.radar_elevation_fov_deg},
              {"radar_dynamic_fraction", c.radar_dynamic_fraction},
              {"fog_range_limit", c.fog_range_limit},
              {"fog_dropout", c.fog_dropout},
              {"fog_noise_inflation", c.fog_noise_inflation}};
}

int cmd_simulate(const std::string& preset, const std::string& out_dir,
                 const sim::ScenarioOptions& opts) {
  const sim::Scenario scenario = sim::make_scenario(preset, opts);
  const sim::Dataset data = sim::generate(scenario);
  sim::write_dataset(out_dir, data);

  json manifest;
  manifest["command"] = "simulate";
  manifest["preset"] = preset;
  manifest["seed"] = opts.seed;
  manifest["noiseless"] = opts.noiseless;
  manifest["trajectory_duration"] = scenario.trajectory.duration();
  manifest["sensor_config"] = sim_config_json(scenario.config);
  manifest["files"] = {"imu.csv",           "radar.csv", "lidar.csv",
                       "ground_truth.tum",  "calib.yaml", "ground_truth_vel.csv"};
  std::ofstream(out_dir + "/manifest.json") << manifest.dump(2) << "\n";

  std::cout << "wrote " << data.imu.size() << " imu samples, " << data.radar.size()
            << " radar scans, " << data.lidar.size() << " lidar scans to " << out_dir
            << "\n";
  return kExitOk;
}

int cmd_run(const std::string& dataset, const std::string& out_dir,
            const std::string& config_path, const std::vector<std::string>& overrides) {
  const PipelineConfig cfg = load_pipeline_config(config_path, overrides);

  const double t_load0 = now_seconds();
  const auto imu = read_imu_csv(dataset + "/imu.csv");
  const auto radar = read_radar_csv(dataset + "/radar.csv");
  const auto lidar = read_lidar_csv(dataset + "/lidar.csv");
  const Calibration calib = read_calibration(dataset + "/calib.yaml");
  const double t_load1 = now_seconds();

  const RunResult res = run_dataset(imu, radar, lidar, cfg, calib.extrinsics);
  const double t_run = now_seconds();

  if (res.trajectory.empty()) {
    std::cerr << "initialization failed: no static interval accepted, no poses emitted\n";
    return kExitInitFailed;
  }

  std::filesystem::create_directories(out_dir);
  write_tum(out_dir + "/trajectory.tum", res.trajectory);
  write_velocity_csv(out_dir + "/velocity.csv", res.velocities);
  std::ofstream(out_dir + "/config.yaml") << dump_pipeline_config(cfg);

  std::ofstream diag(out_dir + "/diagnostics.jsonl");
  for (const auto& d : res.diagnostics) {
    diag << json{{"t", d.t},
                 {"factor_count", d.factor_count},
                 {"plane_factors", d.plane_factors},
                 {"line_factors", d.line_factors},
                 {"radar_inliers", d.radar_inliers},
                 {"radar_factor", d.radar_factor},
                 {"radar_degenerate", d.radar_degenerate},
                 {"cost", d.cost},
                 {"iterations", d.iterations},
                 {"diverged", d.diverged},
                 {"degeneracy_ratio", d.degeneracy_ratio}}
                .dump()
         << "\n";
  }
  const double t_write = now_seconds();

  const double data_span = imu.empty() ? 0.0 : imu.back().t - imu.front().t;
  json manifest;
  manifest["command"] = "run";
  manifest["dataset"] = dataset;
  manifest["mode"] = to_string(cfg.mode);
  manifest["poses"] = res.trajectory.size();
  manifest["timing"] = {{"load_s", t_load1 - t_load0},
                        {"replay_s", t_run - t_load1},
                        {"write_s", t_write - t_run},
                        {"dataset_span_s", data_span}};
  std::ofstream(out_dir + "/manifest.json") << manifest.dump(2) << "\n";

  std::printf("emitted %zu poses (%zu diagnostics records)\n", res.trajectory.size(),
              res.diagnostics.size());
  std::printf("timing: load %.2f s, replay %.2f s, write %.2f s\n", t_load1 - t_load0,
              t_run - t_load1, t_write - t_run);
  if (data_span > 0) {
    std::printf("realtime factor: %.2fx (%.1f s of data)\n",
                data_span / (t_run - t_load1), data_span);
  }
  return kExitOk;
}

int cmd_eval(const std::string& est_path, const std::string& truth_path,
             const std::string& est_vel, const std::string& truth_vel,
             const std::string& csv_out) {
  const auto est = read_tum(est_path);
  const auto truth = read_tum(truth_path);
  const sim::ApeResult ape = sim::compute_ape(est, truth);

  std::printf("%-24s %.6f\n", "ape_aligned_rmse_m", ape.rmse_aligned);
  std::printf("%-24s %.6f\n", "ape_unaligned_rmse_m", ape.rmse_unaligned);
  std::printf("%-24s %zu\n", "matched_poses", ape.matched);

  if (!est_vel.empty() && !truth_vel.empty()) {
    const auto ve = read_velocity_csv(est_vel);
    const auto vt = read_velocity_csv(truth_vel);
    const sim::VelocityErrorStats st = sim::velocity_error_stats(ve, vt);
    const char* axes = "xyz";
    for (int d = 0; d < 3; ++d) {
      std::printf("vel_err_mean_%c           %.6f\n", axes[d], st.mean(d));
      std::printf("vel_err_std_%c            %.6f\n", axes[d], st.stddev(d));
    }
    std::printf("%-24s %zu\n", "vel_matched", st.matched);
  }

  if (!csv_out.empty()) {
    // per-sample unaligned errors for external plotting
    std::ofstream csv(csv_out);
    csv << "t,err_x,err_y,err_z,err_norm\n";
    for (const auto& e : est) {
      const StampedPose* best = nullptr;
      double best_dt = 0.01;
      for (const auto& g : truth) {
        if (std::abs(g.t - e.t) <= best_dt) {
          best_dt = std::abs(g.t - e.t);
          best = &g;
        }
      }
      if (!best) continue;
      const Vec3 d = e.T.p - best->T.p;
      char line[160];
      std::snprintf(line, sizeof(line), "%.9f,%.6f,%.6f,%.6f,%.6f\n", e.t, d.x(), d.y(),
                    d.z(), d.norm());
      csv << line;
    }
  }
  return kExitOk;
}

int cmd_verify() {
  const auto results = verify_all();
  bool ok = true;
  for (const auto& r : results) {
    std::printf("[%s] %-32s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                r.detail.c_str());
    ok = ok && r.passed;
  }
  std::printf("%s\n", ok ? "all checks passed" : "FAILURES present");
  return ok ? kExitOk : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LiDAR-radar-inertial odometry toolkit"};
  app.require_subcommand(1);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic dataset");
  std::string preset, sim_out;
  sim::ScenarioOptions opts;
  sim_cmd->add_option("preset", preset, "room, tunnel, or fog")->required();
  sim_cmd->add_option("--out", sim_out, "output directory")->required();
  sim_cmd->add_option("--seed", opts.seed, "RNG seed");
  sim_cmd->add_option("--duration", opts.duration, "room trajectory duration [s]");
  sim_cmd->add_option("--length", opts.length, "tunnel length / fog corridor length [m]");
  sim_cmd->add_option("--fog-range", opts.fog_range, "LiDAR range limit inside fog [m]");
  sim_cmd->add_flag("--noiseless", opts.noiseless, "disable sensor noise and IMU biases");

  // run
  auto* run_cmd = app.add_subcommand("run", "Replay a dataset through the estimator");
  std::string dataset, run_out, config_path, mode_flag;
  std::vector<std::string> overrides;
  run_cmd->add_option("dataset", dataset, "dataset directory")->required();
  run_cmd->add_option("--out", run_out, "output directory")->required();
  run_cmd->add_option("--config", config_path, "pipeline config YAML");
  run_cmd->add_option("--mode", mode_flag, "fused, lio, or rio");
  run_cmd->add_option("--set", overrides, "config override key=value (repeatable)");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Compare a trajectory against ground truth");
  std::string est_path, truth_path, est_vel, truth_vel, csv_out;
  eval_cmd->add_option("--est", est_path, "estimated trajectory (TUM)")->required();
  eval_cmd->add_option("--truth", truth_path, "ground-truth trajectory (TUM)")->required();
  eval_cmd->add_option("--est-vel", est_vel, "estimated velocity CSV");
  eval_cmd->add_option("--truth-vel", truth_vel, "ground-truth velocity CSV");
  eval_cmd->add_option("--csv", csv_out, "per-sample error CSV output");

  // verify
  app.add_subcommand("verify", "Run the estimation-core property suites");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitBadConfig;
  }

  try {
    if (sim_cmd->parsed()) return cmd_simulate(preset, sim_out, opts);
    if (run_cmd->parsed()) {
      if (!mode_flag.empty()) overrides.push_back("mode=" + mode_flag);
      return cmd_run(dataset, run_out, config_path, overrides);
    }
    if (eval_cmd->parsed()) return cmd_eval(est_path, truth_path, est_vel, truth_vel, csv_out);
    return cmd_verify();
  } catch (const NoOverlap& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoOverlap;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBadConfig;
  }
}
