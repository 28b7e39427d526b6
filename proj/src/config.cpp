#include "lro/config.hpp"

#include <yaml-cpp/yaml.h>

#include <set>
#include <sstream>

#include "lro/errors.hpp"

namespace lro {

namespace {

class Section {
 public:
  Section(const YAML::Node& node, std::string name) : node_(node), name_(std::move(name)) {}

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (node_ && node_[key]) out = node_[key].as<T>();
  }

  Section sub(const char* key) {
    seen_.insert(key);
    return Section(node_ ? node_[key] : YAML::Node(YAML::NodeType::Undefined),
                   name_.empty() ? key : name_ + "." + key);
  }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (!seen_.count(key)) {
        throw Error("unknown config key: " + (name_.empty() ? key : name_ + "." + key));
      }
    }
  }

 private:
  YAML::Node node_;
  std::string name_;
  std::set<std::string> seen_;
};

void apply_override(YAML::Node root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error("override must look like key=value: " + assignment);
  }
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);

  YAML::Node node = root;
  size_t start = 0;
  while (true) {
    const size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) throw Error("bad override key: " + path);
    if (dot == std::string::npos) {
      node[key] = YAML::Load(value);  // re-parse so numbers stay numbers
      return;
    }
    YAML::Node child = node[key];
    node.reset(child);
    start = dot + 1;
  }
}

}  // namespace

PipelineConfig load_pipeline_config(const std::string& path,
                                    const std::vector<std::string>& overrides) {
  YAML::Node root(YAML::NodeType::Map);
  if (!path.empty()) {
    try {
      root = YAML::LoadFile(path);
    } catch (const YAML::Exception& e) {
      throw Error(std::string("failed to load config: ") + e.what());
    }
  }
  for (const std::string& o : overrides) apply_override(root, o);

  PipelineConfig cfg;
  Section top(root, "");

  std::string mode = to_string(cfg.mode);
  top.get("mode", mode);
  cfg.mode = mode_from_string(mode);
  top.get("lag", cfg.lag);
  top.get("lidar_sigma", cfg.lidar_sigma);
  top.get("init_duration", cfg.init_duration);
  top.get("accel_variance_gate", cfg.accel_variance_gate);
  top.get("init_yaw_sigma", cfg.init_yaw_sigma);
  top.get("init_pos_sigma", cfg.init_pos_sigma);

  Section opt = top.sub("optimizer");
  opt.get("max_iterations", cfg.optimizer.max_iterations);
  opt.get("step_tolerance", cfg.optimizer.step_tolerance);
  opt.get("lambda_init", cfg.optimizer.lambda_init);
  opt.get("lambda_up", cfg.optimizer.lambda_up);
  opt.get("lambda_down", cfg.optimizer.lambda_down);
  opt.get("max_retries", cfg.optimizer.max_retries);
  opt.get("huber_delta", cfg.optimizer.huber_delta);
  opt.finish();

  Section lid = top.sub("lidar");
  lid.get("curvature_window", cfg.lidar.curvature_window);
  lid.get("corner_threshold", cfg.lidar.corner_threshold);
  lid.get("surface_threshold", cfg.lidar.surface_threshold);
  lid.get("sectors_per_ring", cfg.lidar.sectors_per_ring);
  lid.get("max_corners_per_sector", cfg.lidar.max_corners_per_sector);
  lid.get("max_surfaces_per_sector", cfg.lidar.max_surfaces_per_sector);
  lid.get("feature_voxel", cfg.lidar.feature_voxel);
  lid.get("plane_ratio", cfg.lidar.plane_ratio);
  lid.get("line_ratio", cfg.lidar.line_ratio);
  lid.get("fit_gate", cfg.lidar.fit_gate);
  lid.get("max_corr_dist", cfg.lidar.max_corr_dist);
  lid.get("map_resolution", cfg.lidar.map_resolution);
  lid.get("max_range", cfg.lidar.max_range);
  lid.get("submap_half_width", cfg.lidar.submap_half_width);
  lid.get("ground_heuristic", cfg.lidar.ground_heuristic);
  lid.finish();

  Section ran = top.sub("radar_ransac");
  ran.get("inlier_threshold", cfg.ransac.inlier_threshold);
  ran.get("max_iterations", cfg.ransac.max_iterations);
  ran.get("min_inliers_abs", cfg.ransac.min_inliers_abs);
  ran.get("min_inliers_frac", cfg.ransac.min_inliers_frac);
  ran.get("condition_limit", cfg.ransac.condition_limit);
  ran.get("covariance_floor", cfg.ransac.covariance_floor);
  ran.finish();

  Section imu = top.sub("imu_noise");
  imu.get("gyro_noise_density", cfg.imu_noise.gyro_noise_density);
  imu.get("accel_noise_density", cfg.imu_noise.accel_noise_density);
  imu.get("gyro_bias_walk", cfg.imu_noise.gyro_bias_walk);
  imu.get("accel_bias_walk", cfg.imu_noise.accel_bias_walk);
  imu.get("init_bias_cov", cfg.imu_noise.init_bias_cov);
  imu.finish();

  top.finish();
  return cfg;
}

std::string dump_pipeline_config(const PipelineConfig& cfg) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "mode" << YAML::Value << to_string(cfg.mode);
  out << YAML::Key << "lag" << YAML::Value << cfg.lag;
  out << YAML::Key << "lidar_sigma" << YAML::Value << cfg.lidar_sigma;
  out << YAML::Key << "init_duration" << YAML::Value << cfg.init_duration;
  out << YAML::Key << "accel_variance_gate" << YAML::Value << cfg.accel_variance_gate;
  out << YAML::Key << "init_yaw_sigma" << YAML::Value << cfg.init_yaw_sigma;
  out << YAML::Key << "init_pos_sigma" << YAML::Value << cfg.init_pos_sigma;

  out << YAML::Key << "optimizer" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "max_iterations" << YAML::Value << cfg.optimizer.max_iterations;
  out << YAML::Key << "step_tolerance" << YAML::Value << cfg.optimizer.step_tolerance;
  out << YAML::Key << "lambda_init" << YAML::Value << cfg.optimizer.lambda_init;
  out << YAML::Key << "lambda_up" << YAML::Value << cfg.optimizer.lambda_up;
  out << YAML::Key << "lambda_down" << YAML::Value << cfg.optimizer.lambda_down;
  out << YAML::Key << "max_retries" << YAML::Value << cfg.optimizer.max_retries;
  out << YAML::Key << "huber_delta" << YAML::Value << cfg.optimizer.huber_delta;
  out << YAML::EndMap;

  out << YAML::Key << "lidar" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "curvature_window" << YAML::Value << cfg.lidar.curvature_window;
  out << YAML::Key << "corner_threshold" << YAML::Value << cfg.lidar.corner_threshold;
  out << YAML::Key << "surface_threshold" << YAML::Value << cfg.lidar.surface_threshold;
  out << YAML::Key << "sectors_per_ring" << YAML::Value << cfg.lidar.sectors_per_ring;
  out << YAML::Key << "max_corners_per_sector" << YAML::Value
      << cfg.lidar.max_corners_per_sector;
  out << YAML::Key << "max_surfaces_per_sector" << YAML::Value
      << cfg.lidar.max_surfaces_per_sector;
  out << YAML::Key << "feature_voxel" << YAML::Value << cfg.lidar.feature_voxel;
  out << YAML::Key << "plane_ratio" << YAML::Value << cfg.lidar.plane_ratio;
  out << YAML::Key << "line_ratio" << YAML::Value << cfg.lidar.line_ratio;
  out << YAML::Key << "fit_gate" << YAML::Value << cfg.lidar.fit_gate;
  out << YAML::Key << "max_corr_dist" << YAML::Value << cfg.lidar.max_corr_dist;
  out << YAML::Key << "map_resolution" << YAML::Value << cfg.lidar.map_resolution;
  out << YAML::Key << "max_range" << YAML::Value << cfg.lidar.max_range;
  out << YAML::Key << "submap_half_width" << YAML::Value << cfg.lidar.submap_half_width;
  out << YAML::Key << "ground_heuristic" << YAML::Value << cfg.lidar.ground_heuristic;
  out << YAML::EndMap;

  out << YAML::Key << "radar_ransac" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "inlier_threshold" << YAML::Value << cfg.ransac.inlier_threshold;
  out << YAML::Key << "max_iterations" << YAML::Value << cfg.ransac.max_iterations;
  out << YAML::Key << "min_inliers_abs" << YAML::Value << cfg.ransac.min_inliers_abs;
  out << YAML::Key << "min_inliers_frac" << YAML::Value << cfg.ransac.min_inliers_frac;
  out << YAML::Key << "condition_limit" << YAML::Value << cfg.ransac.condition_limit;
  out << YAML::Key << "covariance_floor" << YAML::Value << cfg.ransac.covariance_floor;
  out << YAML::EndMap;

  out << YAML::Key << "imu_noise" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "gyro_noise_density" << YAML::Value << cfg.imu_noise.gyro_noise_density;
  out << YAML::Key << "accel_noise_density" << YAML::Value
      << cfg.imu_noise.accel_noise_density;
  out << YAML::Key << "gyro_bias_walk" << YAML::Value << cfg.imu_noise.gyro_bias_walk;
  out << YAML::Key << "accel_bias_walk" << YAML::Value << cfg.imu_noise.accel_bias_walk;
  out << YAML::Key << "init_bias_cov" << YAML::Value << cfg.imu_noise.init_bias_cov;
  out << YAML::EndMap;

  out << YAML::EndMap;
  std::ostringstream ss;
  ss << out.c_str() << "\n";
  return ss.str();
}

}  // namespace lro
