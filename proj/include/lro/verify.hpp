#pragma once

#include <string>
#include <vector>

namespace lro {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Self-contained property suites over the estimation core. Each returns one
// result per named check; suites are deterministic for a given seed.
std::vector<CheckResult> verify_factor_jacobians(uint64_t seed = 7, int trials = 500);
std::vector<CheckResult> verify_radar_velocity(uint64_t seed = 11);
std::vector<CheckResult> verify_preintegration(uint64_t seed = 13);
std::vector<CheckResult> verify_deskew();
std::vector<CheckResult> verify_fixed_lag(uint64_t seed = 17);

std::vector<CheckResult> verify_all();

}  // namespace lro
