// The estimated window state: exactly eleven scalars. Gravity is a
// two-angle chart on the sphere of radius |g| = 9.80665 m/s^2; the
// magnitude itself is not estimated.

#pragma once

#include <vector>

#include "limoco/geom.hpp"
#include "limoco/preintegration.hpp"

namespace limoco {

inline constexpr double kGravityMagnitude = 9.80665;  // m/s^2

struct WindowState {
  Vec3 accel_bias = Vec3::Zero();  // m/s^2
  Vec3 gyro_bias = Vec3::Zero();   // rad/s
  Vec3 v0 = Vec3::Zero();          // IMU velocity at t_f0, frame I0, m/s
  double gravity_alpha = 0.0;      // rad, rotation about x of the down vector
  double gravity_beta = 0.0;       // rad, rotation about y

  BiasPair biases() const { return {accel_bias, gyro_bias}; }

  /// Unit gravity direction: u(a, b) = Rx(a) Ry(b) (0, 0, -1).
  Vec3 gravity_dir() const {
    const double sa = std::sin(gravity_alpha), ca = std::cos(gravity_alpha);
    const double sb = std::sin(gravity_beta), cb = std::cos(gravity_beta);
    return {-sb, sa * cb, -ca * cb};
  }

  Vec3 gravity() const { return kGravityMagnitude * gravity_dir(); }

  /// d(gravity) / d(alpha, beta), 3x2.
  Mat32 gravity_jacobian() const {
    const double sa = std::sin(gravity_alpha), ca = std::cos(gravity_alpha);
    const double sb = std::sin(gravity_beta), cb = std::cos(gravity_beta);
    Mat32 j;
    j << 0.0, -cb,
         ca * cb, -sa * sb,
         sa * cb, ca * sb;
    return kGravityMagnitude * j;
  }

  /// Sets (alpha, beta) so that gravity() points along g (g need not be
  /// normalised). Near the chart singularity (g along +/-x) alpha is 0.
  void set_gravity_dir(const Vec3& g) {
    const Vec3 u = g.normalized();
    gravity_beta = std::asin(std::clamp(-u.x(), -1.0, 1.0));
    gravity_alpha = (std::abs(u.y()) + std::abs(u.z()) > 1e-12)
                        ? std::atan2(u.y(), -u.z())
                        : 0.0;
  }

  /// Additive update on the 11-scalar chart, ordered
  /// [accel_bias, gyro_bias, v0, alpha, beta].
  void apply_delta(const Eigen::Matrix<double, 11, 1>& dx) {
    accel_bias += dx.segment<3>(0);
    gyro_bias += dx.segment<3>(3);
    v0 += dx.segment<3>(6);
    gravity_alpha += dx[9];
    gravity_beta += dx[10];
  }

  /// Cold initialisation: zero biases and velocity, gravity direction from
  /// the mean accelerometer reading (specific force points opposite to
  /// gravity for a roughly static sensor). No pose or velocity prior.
  static WindowState cold_init(const std::vector<ImuSample>& imu) {
    WindowState s;
    Vec3 mean = Vec3::Zero();
    for (const ImuSample& m : imu) mean += m.accel;
    if (!imu.empty()) mean /= static_cast<double>(imu.size());
    if (mean.norm() > 1e-6) s.set_gravity_dir(-mean);
    return s;
  }
};

}  // namespace limoco
