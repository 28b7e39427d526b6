#include "lro/sensor_types.hpp"

#include <algorithm>

namespace lro {

Vec3 bearing(const RadarPoint& p) {
  const double range = p.position.norm();
  if (range <= 1e-6) throw ZeroRangePoint();
  return p.position / range;
}

void ImuBuffer::append(const ImuSample& s) {
  if (!samples_.empty() && s.t <= samples_.back().t) {
    throw Error("IMU timestamps must be strictly increasing");
  }
  samples_.push_back(s);
}

ImuSample ImuBuffer::at(double t) const {
  // callers guarantee non-empty
  if (t <= samples_.front().t) {
    ImuSample s = samples_.front();
    s.t = t;
    return s;
  }
  if (t >= samples_.back().t) {
    ImuSample s = samples_.back();
    s.t = t;
    return s;
  }
  auto it = std::lower_bound(samples_.begin(), samples_.end(), t,
                             [](const ImuSample& s, double tt) { return s.t < tt; });
  const ImuSample& hi = *it;
  if (hi.t == t) return hi;
  const ImuSample& lo = *(it - 1);
  const double a = (t - lo.t) / (hi.t - lo.t);
  ImuSample s;
  s.t = t;
  s.angular_velocity = (1.0 - a) * lo.angular_velocity + a * hi.angular_velocity;
  s.specific_force = (1.0 - a) * lo.specific_force + a * hi.specific_force;
  return s;
}

std::vector<ImuSample> ImuBuffer::between(double t_a, double t_b) const {
  if (!(t_a < t_b)) throw Error("imu_between requires t_a < t_b");
  if (samples_.empty()) throw EmptyInterval("buffer is empty");
  std::vector<ImuSample> out;
  out.push_back(at(t_a));
  for (const ImuSample& s : samples_) {
    if (s.t > t_a && s.t < t_b) out.push_back(s);
  }
  out.push_back(at(t_b));
  return out;
}

std::vector<ImuSample> ImuBuffer::range(double t_a, double t_b) const {
  std::vector<ImuSample> out;
  for (const ImuSample& s : samples_) {
    if (s.t >= t_a && s.t <= t_b) out.push_back(s);
  }
  return out;
}

}  // namespace lro
