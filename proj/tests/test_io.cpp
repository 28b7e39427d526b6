#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "lro/io.hpp"

using namespace lro;

namespace {

struct TempDir {
  std::string path;
  TempDir() {
    path = (std::filesystem::temp_directory_path() / "lro_io_test").string();
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return path + "/" + name; }
};

std::mt19937_64 rng(2);

Vec3 random_vec(double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  return Vec3(n(rng), n(rng), n(rng));
}

}  // namespace

TEST_CASE("imu csv round trip is exact") {
  TempDir tmp;
  std::vector<ImuSample> samples;
  for (int k = 0; k < 50; ++k) samples.push_back({0.005 * k, random_vec(0.3), random_vec(5.0)});
  write_imu_csv(tmp.file("imu.csv"), samples);
  const auto back = read_imu_csv(tmp.file("imu.csv"));
  REQUIRE(back.size() == samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    CHECK(back[i].t == doctest::Approx(samples[i].t).epsilon(1e-9));
    CHECK((back[i].angular_velocity - samples[i].angular_velocity).norm() == 0.0);
    CHECK((back[i].specific_force - samples[i].specific_force).norm() == 0.0);
  }
}

TEST_CASE("radar csv round trip preserves scans, including empty ones") {
  TempDir tmp;
  std::vector<RadarScan> scans(3);
  scans[0].t = 0.05;
  for (int i = 0; i < 10; ++i) {
    RadarPoint p;
    p.position = random_vec(5.0);
    p.radial_speed = random_vec(1.0).x();
    p.rcs = 10.0 + i;
    scans[0].points.push_back(p);
  }
  scans[1].t = 0.15;  // empty scan
  scans[2].t = 0.25;
  scans[2].points.push_back({Vec3(1, 2, 3), -0.5, 7.0});

  write_radar_csv(tmp.file("radar.csv"), scans);
  const auto back = read_radar_csv(tmp.file("radar.csv"));
  REQUIRE(back.size() == 3);
  CHECK(back[0].points.size() == 10);
  CHECK(back[1].points.empty());
  CHECK(back[1].t == doctest::Approx(0.15));
  CHECK(back[2].points.size() == 1);
  CHECK((back[0].points[3].position - scans[0].points[3].position).norm() == 0.0);
  CHECK(back[0].points[3].radial_speed == scans[0].points[3].radial_speed);
  CHECK(back[0].points[3].rcs == scans[0].points[3].rcs);
}

TEST_CASE("lidar csv round trip preserves metadata") {
  TempDir tmp;
  std::vector<LidarScan> scans(2);
  scans[0].t_start = 0.0;
  for (int i = 0; i < 20; ++i) {
    LidarPoint p;
    p.position = random_vec(8.0);
    p.dt = 0.005 * i;
    p.ring = i % 4;
    p.intensity = 0.5;
    scans[0].points.push_back(p);
  }
  scans[1].t_start = 0.1;
  scans[1].points.push_back({Vec3(2, 0, 1), 0.03, 7, 1.0});

  write_lidar_csv(tmp.file("lidar.csv"), scans);
  const auto back = read_lidar_csv(tmp.file("lidar.csv"));
  REQUIRE(back.size() == 2);
  REQUIRE(back[0].points.size() == 20);
  CHECK((back[0].points[7].position - scans[0].points[7].position).norm() == 0.0);
  CHECK(back[0].points[7].ring == scans[0].points[7].ring);
  CHECK(back[0].points[7].dt == doctest::Approx(scans[0].points[7].dt).epsilon(1e-9));
  CHECK(back[1].points[0].ring == 7);
}

TEST_CASE("tum trajectory round trip") {
  TempDir tmp;
  std::vector<StampedPose> traj;
  for (int k = 0; k < 30; ++k) {
    StampedPose s;
    s.t = 0.1 * k;
    Vec3 theta = random_vec();
    if (theta.norm() > 3.0) theta *= 3.0 / theta.norm();
    s.T.R = exp_so3(theta);
    s.T.p = random_vec(10.0);
    traj.push_back(s);
  }
  write_tum(tmp.file("traj.tum"), traj);
  const auto back = read_tum(tmp.file("traj.tum"));
  REQUIRE(back.size() == traj.size());
  for (size_t i = 0; i < traj.size(); ++i) {
    CHECK((back[i].T.R - traj[i].T.R).norm() < 1e-12);
    CHECK((back[i].T.p - traj[i].T.p).norm() == 0.0);
  }
}

TEST_CASE("calibration round trip") {
  TempDir tmp;
  Calibration c;
  c.extrinsics.T_I_L = Pose{exp_so3(Vec3(0.1, -0.2, 0.3)), Vec3(0.05, 0.01, -0.02)};
  c.extrinsics.T_I_R = Pose{exp_so3(Vec3(0, 0, 1.2)), Vec3(0.1, 0, 0.03)};
  c.gravity_magnitude = 9.80665;
  c.imu_noise.gyro_noise_density = 2e-4;
  c.imu_noise.accel_bias_walk = 5e-4;
  write_calibration(tmp.file("calib.yaml"), c);
  const Calibration back = read_calibration(tmp.file("calib.yaml"));
  CHECK((back.extrinsics.T_I_L.R - c.extrinsics.T_I_L.R).norm() < 1e-12);
  CHECK((back.extrinsics.T_I_L.p - c.extrinsics.T_I_L.p).norm() < 1e-15);
  CHECK((back.extrinsics.T_I_R.R - c.extrinsics.T_I_R.R).norm() < 1e-12);
  CHECK(back.gravity_magnitude == c.gravity_magnitude);
  CHECK(back.imu_noise.gyro_noise_density == c.imu_noise.gyro_noise_density);
  CHECK(back.imu_noise.accel_bias_walk == c.imu_noise.accel_bias_walk);
}

TEST_CASE("missing and malformed files raise errors") {
  TempDir tmp;
  CHECK_THROWS_AS(read_imu_csv(tmp.file("nope.csv")), Error);
  std::FILE* f = std::fopen(tmp.file("bad.csv").c_str(), "w");
  std::fprintf(f, "t,wx,wy,wz,ax,ay,az\n1.0,2.0\n");
  std::fclose(f);
  CHECK_THROWS_AS(read_imu_csv(tmp.file("bad.csv")), Error);
  CHECK_THROWS_AS(read_calibration(tmp.file("nope.yaml")), Error);
}
