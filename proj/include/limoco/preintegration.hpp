// IMU preintegration on a fixed-rate grid. Factors aggregate gyroscope and
// accelerometer samples into relative rotation/velocity/position terms that
// are independent of the initial velocity and of gravity, together with
// first-order bias-correction Jacobians. The pose at any time inside the
// grid follows from the factor plus the window's initial velocity and
// gravity vector.

#pragma once

#include <vector>

#include "limoco/geom.hpp"

namespace limoco {

struct ImuSample {
  double t = 0.0;           // seconds, strictly increasing within a stream
  Vec3 accel = Vec3::Zero();  // specific force, IMU frame, m/s^2
  Vec3 gyro = Vec3::Zero();   // angular rate, IMU frame, rad/s
};

struct BiasPair {
  Vec3 accel = Vec3::Zero();  // m/s^2
  Vec3 gyro = Vec3::Zero();   // rad/s
};

// Relative preintegrated motion from t0 to t, linearised at
// linearization_bias. The j_* blocks are the exact first derivatives of the
// discrete integration scheme with respect to the biases, so correct_bias
// reproduces re-preintegration up to second order in the bias change.
struct PreintegratedFactor {
  double t0 = 0.0;
  double t = 0.0;
  Mat3 delta_R = Mat3::Identity();
  Vec3 delta_v = Vec3::Zero();
  Vec3 delta_p = Vec3::Zero();
  Mat3 j_R_bg = Mat3::Zero();
  Mat3 j_v_ba = Mat3::Zero();
  Mat3 j_v_bg = Mat3::Zero();
  Mat3 j_p_ba = Mat3::Zero();
  Mat3 j_p_bg = Mat3::Zero();
  BiasPair linearization_bias;
};

struct PreintegrationGrid {
  double t0 = 0.0;
  double rate = 1000.0;  // Hz
  std::vector<PreintegratedFactor> factors;  // node k at t0 + k/rate

  double t_end() const { return factors.empty() ? t0 : factors.back().t; }
};

/// Integrates the IMU stream onto a fixed-rate grid starting at t0 and
/// covering t1. Samples are interpolated linearly onto step midpoints
/// (midpoint rule). The stream must cover [t0 - slack, t1 + slack] with
/// slack = 10 ms; throws CoverageError otherwise, DataError on
/// non-monotonic timestamps.
PreintegrationGrid preintegrate(const std::vector<ImuSample>& imu, double t0,
                                double t1, double rate, const BiasPair& lin_bias);

/// Factor at an arbitrary time inside the grid: rotation interpolated
/// geodesically between the bracketing nodes, vector terms and Jacobians
/// linearly. Throws std::out_of_range outside [t0, t_end].
PreintegratedFactor query(const PreintegrationGrid& grid, double t);

/// First-order update of the factor to a new bias (Taylor expansion around
/// linearization_bias). The stored Jacobians and linearisation point are
/// left untouched.
PreintegratedFactor correct_bias(const PreintegratedFactor& f, const BiasPair& new_bias);

/// IMU pose at f.t in the IMU frame of f.t0, given the velocity and gravity
/// vector at t0 expressed in that frame:
///   rotation    = delta_R
///   translation = dt * v0 + dt^2/2 * g0 + delta_p
RigidTransform pose_at(const PreintegratedFactor& f, const Vec3& v0, const Vec3& g0);

}  // namespace limoco
