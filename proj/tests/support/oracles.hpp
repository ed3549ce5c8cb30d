// Independent test oracles: these deliberately avoid the library's
// preintegration and association code paths so they can check them.

#pragma once

#include <Eigen/SVD>
#include <algorithm>
#include <vector>

#include "limoco/geom.hpp"
#include "limoco/kdtree.hpp"
#include "limoco/preintegration.hpp"
#include "limoco/rng.hpp"
#include "limoco/simulator.hpp"

namespace limoco::test {

// Classic RK4 on the coupled pose ODE
//   Rdot = R skew(w(t)),  vdot = R a(t) + g,  pdot = v
// driven by the same piecewise-linear IMU signal the preintegration sees.
// The rotation rows are re-orthonormalised after every step.
struct Rk4State {
  Mat3 rotation = Mat3::Identity();
  Vec3 velocity = Vec3::Zero();
  Vec3 position = Vec3::Zero();
};

inline void imu_signal(const std::vector<ImuSample>& imu, double t, Vec3& accel, Vec3& gyro) {
  if (t <= imu.front().t) {
    accel = imu.front().accel;
    gyro = imu.front().gyro;
    return;
  }
  if (t >= imu.back().t) {
    accel = imu.back().accel;
    gyro = imu.back().gyro;
    return;
  }
  const auto upper = std::upper_bound(
      imu.begin(), imu.end(), t,
      [](double value, const ImuSample& s) { return value < s.t; });
  const ImuSample& b = *upper;
  const ImuSample& a = *(upper - 1);
  const double w = (t - a.t) / (b.t - a.t);
  accel = (1.0 - w) * a.accel + w * b.accel;
  gyro = (1.0 - w) * a.gyro + w * b.gyro;
}

inline Mat3 orthonormalize(const Mat3& m) {
  const Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 flip = Mat3::Identity();
    flip(2, 2) = -1.0;
    r = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return r;
}

inline Rk4State rk4_integrate(const std::vector<ImuSample>& imu, double t0, double t1,
                              const Vec3& v0, const Vec3& g0, const BiasPair& bias = {},
                              double step = 5e-5) {
  struct Derivative {
    Mat3 dR;
    Vec3 dv, dp;
  };
  const auto f = [&](double t, const Rk4State& s) {
    Vec3 accel, gyro;
    imu_signal(imu, t, accel, gyro);
    Derivative d;
    d.dR = s.rotation * skew(gyro - bias.gyro);
    d.dv = s.rotation * (accel - bias.accel) + g0;
    d.dp = s.velocity;
    return d;
  };

  Rk4State s;
  s.velocity = v0;
  double t = t0;
  while (t < t1 - 1e-12) {
    const double h = std::min(step, t1 - t);
    const Derivative k1 = f(t, s);
    Rk4State s2{s.rotation + 0.5 * h * k1.dR, s.velocity + 0.5 * h * k1.dv,
                s.position + 0.5 * h * k1.dp};
    const Derivative k2 = f(t + 0.5 * h, s2);
    Rk4State s3{s.rotation + 0.5 * h * k2.dR, s.velocity + 0.5 * h * k2.dv,
                s.position + 0.5 * h * k2.dp};
    const Derivative k3 = f(t + 0.5 * h, s3);
    Rk4State s4{s.rotation + h * k3.dR, s.velocity + h * k3.dv, s.position + h * k3.dp};
    const Derivative k4 = f(t + h, s4);

    s.rotation += (h / 6.0) * (k1.dR + 2.0 * k2.dR + 2.0 * k3.dR + k4.dR);
    s.velocity += (h / 6.0) * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
    s.position += (h / 6.0) * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp);
    s.rotation = orthonormalize(s.rotation);
    t += h;
  }
  return s;
}

// Brute-force k nearest neighbours with the same (distance, index) ordering
// the KD-tree promises.
inline std::vector<Neighbour> brute_knn(const std::vector<Vec3>& points, const Vec3& q,
                                        std::size_t k) {
  std::vector<Neighbour> all;
  all.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    all.push_back({(points[i] - q).squaredNorm(), i});
  }
  std::sort(all.begin(), all.end());
  if (all.size() > k) all.resize(k);
  return all;
}

inline std::vector<std::size_t> brute_radius(const std::vector<Vec3>& points, const Vec3& q,
                                             double r) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if ((points[i] - q).squaredNorm() <= r * r) out.push_back(i);
  }
  return out;
}

// A gently wiggling test trajectory with tunable speed/rotation scale.
inline TrajectorySpec random_trajectory(Rng& rng, double duration, double speed_scale,
                                        double rot_scale) {
  TrajectorySpec traj;
  traj.duration = duration;
  for (int axis = 0; axis < 3; ++axis) {
    const double f = rng.uniform(0.2, 1.2);
    const double amp = speed_scale / (2.0 * M_PI * f);
    traj.position[axis].push_back({amp * rng.uniform(0.3, 1.0), f, rng.uniform(0.0, 2.0 * M_PI)});
    const double fr = rng.uniform(0.2, 1.0);
    const double rot_amp = rot_scale / (2.0 * M_PI * fr);
    traj.orientation[axis].push_back(
        {rot_amp * rng.uniform(0.3, 1.0), fr, rng.uniform(0.0, 2.0 * M_PI)});
  }
  return traj;
}

}  // namespace limoco::test
