#pragma once

#include <stdexcept>
#include <string>

namespace lro {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// sensor-data-model
struct ZeroRangePoint : Error {
  ZeroRangePoint() : Error("radar point with near-zero range, bearing undefined") {}
};
struct EmptyInterval : Error {
  explicit EmptyInterval(const std::string& m) : Error("empty IMU interval: " + m) {}
};

// radar-ego-velocity
struct RadarEstimationError : Error {
  using Error::Error;
};
struct TooFewPoints : RadarEstimationError {
  explicit TooFewPoints(int n)
      : RadarEstimationError("too few usable radar points: " + std::to_string(n)) {}
};
struct NoConsensus : RadarEstimationError {
  NoConsensus() : RadarEstimationError("RANSAC found no consensus set of sufficient size") {}
};
struct DegenerateGeometry : RadarEstimationError {
  explicit DegenerateGeometry(double cond)
      : RadarEstimationError("bearing geometry degenerate, cond=" + std::to_string(cond)) {}
};
struct InsufficientResidualDof : RadarEstimationError {
  InsufficientResidualDof() : RadarEstimationError("N <= 3, no residual degrees of freedom") {}
};

// lidar-pipeline
struct MissingPoseCoverage : Error {
  explicit MissingPoseCoverage(const std::string& m) : Error("pose samples do not cover scan: " + m) {}
};

// factors
struct EmptySampleSet : Error {
  EmptySampleSet() : Error("no IMU samples to preintegrate") {}
};

// sliding-window-smoother
struct MotionDetected : Error {
  explicit MotionDetected(double var)
      : Error("motion during static initialization, accel variance " + std::to_string(var)) {}
};
struct OutOfOrderScan : Error {
  explicit OutOfOrderScan(double t) : Error("scan timestamp out of order: " + std::to_string(t)) {}
};
struct NoMatchingNode : Error {
  explicit NoMatchingNode(double t)
      : Error("no graph node inside lidar scan interval starting " + std::to_string(t)) {}
};
struct NotInitialized : Error {
  NotInitialized() : Error("pipeline not initialized") {}
};
struct OptimizerDiverged : Error {
  OptimizerDiverged() : Error("optimizer cost increased across damping retries") {}
};

// evaluation
struct NoOverlap : Error {
  NoOverlap() : Error("trajectories share no associable timestamps") {}
};

}  // namespace lro
