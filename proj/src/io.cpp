#include "lro/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace lro {

namespace {

std::FILE* open_write(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot open for writing: " + path);
  return f;
}

std::ifstream open_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open for reading: " + path);
  return in;
}

std::vector<double> parse_row(const std::string& line, size_t expected,
                              const std::string& path) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw Error("malformed value '" + tok + "' in " + path);
    }
  }
  if (out.size() != expected) {
    throw Error("expected " + std::to_string(expected) + " fields, got " +
                std::to_string(out.size()) + " in " + path);
  }
  return out;
}

/// Reads non-empty data lines, skipping one leading header line if present.
std::vector<std::string> data_lines(std::ifstream& in) {
  std::vector<std::string> lines;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first && (line.find_first_not_of("-+.,0123456789eE \t") != std::string::npos)) {
      first = false;
      continue;  // header
    }
    first = false;
    lines.push_back(line);
  }
  return lines;
}

Eigen::Quaterniond to_quaternion(const Mat3& R) {
  Eigen::Quaterniond q(R);
  if (q.w() < 0) q.coeffs() *= -1.0;
  return q;
}

}  // namespace

void write_imu_csv(const std::string& path, const std::vector<ImuSample>& samples) {
  std::FILE* f = open_write(path);
  std::fprintf(f, "t,wx,wy,wz,ax,ay,az\n");
  for (const ImuSample& s : samples) {
    std::fprintf(f, "%.9f,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t,
                 s.angular_velocity.x(), s.angular_velocity.y(), s.angular_velocity.z(),
                 s.specific_force.x(), s.specific_force.y(), s.specific_force.z());
  }
  std::fclose(f);
}

std::vector<ImuSample> read_imu_csv(const std::string& path) {
  auto in = open_read(path);
  std::vector<ImuSample> out;
  for (const std::string& line : data_lines(in)) {
    const auto v = parse_row(line, 7, path);
    out.push_back({v[0], Vec3(v[1], v[2], v[3]), Vec3(v[4], v[5], v[6])});
  }
  return out;
}

void write_radar_csv(const std::string& path, const std::vector<RadarScan>& scans) {
  std::FILE* f = open_write(path);
  std::fprintf(f, "scan_id,t,x,y,z,v_r,rcs\n");
  for (size_t id = 0; id < scans.size(); ++id) {
    for (const RadarPoint& p : scans[id].points) {
      std::fprintf(f, "%zu,%.9f,%.17g,%.17g,%.17g,%.17g,%.17g\n", id, scans[id].t,
                   p.position.x(), p.position.y(), p.position.z(), p.radial_speed, p.rcs);
    }
    if (scans[id].points.empty()) {
      // keep empty scans visible in the log as a timestamp-only row
      std::fprintf(f, "%zu,%.9f,nan,nan,nan,nan,nan\n", id, scans[id].t);
    }
  }
  std::fclose(f);
}

std::vector<RadarScan> read_radar_csv(const std::string& path) {
  auto in = open_read(path);
  std::map<int64_t, RadarScan> by_id;
  for (const std::string& line : data_lines(in)) {
    const auto v = parse_row(line, 7, path);
    const auto id = static_cast<int64_t>(v[0]);
    RadarScan& scan = by_id[id];
    scan.t = v[1];
    if (std::isnan(v[2])) continue;  // empty-scan marker
    RadarPoint p;
    p.position = Vec3(v[2], v[3], v[4]);
    p.radial_speed = v[5];
    p.rcs = v[6];
    scan.points.push_back(p);
  }
  std::vector<RadarScan> out;
  out.reserve(by_id.size());
  for (auto& [id, scan] : by_id) out.push_back(std::move(scan));
  return out;
}

void write_lidar_csv(const std::string& path, const std::vector<LidarScan>& scans) {
  std::FILE* f = open_write(path);
  std::fprintf(f, "scan_id,t_start,dt,ring,x,y,z,intensity\n");
  for (size_t id = 0; id < scans.size(); ++id) {
    for (const LidarPoint& p : scans[id].points) {
      std::fprintf(f, "%zu,%.9f,%.9f,%d,%.17g,%.17g,%.17g,%.17g\n", id, scans[id].t_start,
                   p.dt, p.ring, p.position.x(), p.position.y(), p.position.z(), p.intensity);
    }
    if (scans[id].points.empty()) {
      std::fprintf(f, "%zu,%.9f,0,0,nan,nan,nan,nan\n", id, scans[id].t_start);
    }
  }
  std::fclose(f);
}

std::vector<LidarScan> read_lidar_csv(const std::string& path) {
  auto in = open_read(path);
  std::map<int64_t, LidarScan> by_id;
  for (const std::string& line : data_lines(in)) {
    const auto v = parse_row(line, 8, path);
    const auto id = static_cast<int64_t>(v[0]);
    LidarScan& scan = by_id[id];
    scan.t_start = v[1];
    if (std::isnan(v[4])) continue;
    LidarPoint p;
    p.dt = v[2];
    p.ring = static_cast<int>(v[3]);
    p.position = Vec3(v[4], v[5], v[6]);
    p.intensity = v[7];
    scan.points.push_back(p);
  }
  std::vector<LidarScan> out;
  out.reserve(by_id.size());
  for (auto& [id, scan] : by_id) out.push_back(std::move(scan));
  return out;
}

void write_tum(const std::string& path, const std::vector<StampedPose>& traj) {
  std::FILE* f = open_write(path);
  for (const StampedPose& s : traj) {
    const Eigen::Quaterniond q = to_quaternion(s.T.R);
    std::fprintf(f, "%.9f %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", s.t, s.T.p.x(),
                 s.T.p.y(), s.T.p.z(), q.x(), q.y(), q.z(), q.w());
  }
  std::fclose(f);
}

std::vector<StampedPose> read_tum(const std::string& path) {
  auto in = open_read(path);
  std::vector<StampedPose> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    double t, tx, ty, tz, qx, qy, qz, qw;
    if (!(ss >> t >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) {
      throw Error("malformed trajectory row in " + path);
    }
    StampedPose s;
    s.t = t;
    s.T.p = Vec3(tx, ty, tz);
    s.T.R = Eigen::Quaterniond(qw, qx, qy, qz).normalized().toRotationMatrix();
    out.push_back(s);
  }
  return out;
}

namespace {

YAML::Node pose_node(const Pose& T) {
  const Eigen::Quaterniond q = to_quaternion(T.R);
  YAML::Node n;
  n["translation"] = std::vector<double>{T.p.x(), T.p.y(), T.p.z()};
  n["rotation_wxyz"] = std::vector<double>{q.w(), q.x(), q.y(), q.z()};
  return n;
}

Pose parse_pose(const YAML::Node& n) {
  const auto t = n["translation"].as<std::vector<double>>();
  const auto q = n["rotation_wxyz"].as<std::vector<double>>();
  if (t.size() != 3 || q.size() != 4) throw Error("malformed pose in calibration");
  Pose T;
  T.p = Vec3(t[0], t[1], t[2]);
  T.R = Eigen::Quaterniond(q[0], q[1], q[2], q[3]).normalized().toRotationMatrix();
  return T;
}

}  // namespace

void write_calibration(const std::string& path, const Calibration& calib) {
  YAML::Node root;
  root["T_I_L"] = pose_node(calib.extrinsics.T_I_L);
  root["T_I_R"] = pose_node(calib.extrinsics.T_I_R);
  root["gravity_magnitude"] = calib.gravity_magnitude;
  root["gyro_noise_density"] = calib.imu_noise.gyro_noise_density;
  root["accel_noise_density"] = calib.imu_noise.accel_noise_density;
  root["gyro_bias_walk"] = calib.imu_noise.gyro_bias_walk;
  root["accel_bias_walk"] = calib.imu_noise.accel_bias_walk;
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  out << root << "\n";
}

Calibration read_calibration(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::Exception& e) {
    throw Error("cannot parse calibration " + path + ": " + e.what());
  }
  Calibration c;
  c.extrinsics.T_I_L = parse_pose(root["T_I_L"]);
  c.extrinsics.T_I_R = parse_pose(root["T_I_R"]);
  c.gravity_magnitude = root["gravity_magnitude"].as<double>();
  c.imu_noise.gyro_noise_density = root["gyro_noise_density"].as<double>();
  c.imu_noise.accel_noise_density = root["accel_noise_density"].as<double>();
  c.imu_noise.gyro_bias_walk = root["gyro_bias_walk"].as<double>();
  c.imu_noise.accel_bias_walk = root["accel_bias_walk"].as<double>();
  return c;
}

void write_velocity_csv(const std::string& path,
                        const std::vector<std::pair<double, Vec3>>& velocities) {
  std::FILE* f = open_write(path);
  std::fprintf(f, "t,vx,vy,vz\n");
  for (const auto& [t, v] : velocities) {
    std::fprintf(f, "%.9f,%.17g,%.17g,%.17g\n", t, v.x(), v.y(), v.z());
  }
  std::fclose(f);
}

std::vector<std::pair<double, Vec3>> read_velocity_csv(const std::string& path) {
  auto in = open_read(path);
  std::vector<std::pair<double, Vec3>> out;
  for (const std::string& line : data_lines(in)) {
    const auto v = parse_row(line, 4, path);
    out.push_back({v[0], Vec3(v[1], v[2], v[3])});
  }
  return out;
}

}  // namespace lro
