// Synthetic scene/trajectory/sensor generator with exact ground truth.
// Trajectories are sums of sinusoids (analytic derivatives, so the IMU
// signal is exact); scenes are constant-velocity rigid triangle meshes;
// the lidar model is a spinning multi-channel scanner whose rays are cast
// from the true sensor pose at each emission instant.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "limoco/features.hpp"
#include "limoco/geom.hpp"
#include "limoco/preintegration.hpp"

namespace limoco {

struct Sinusoid {
  double amplitude = 0.0;  // metres or radians
  double frequency = 0.0;  // Hz
  double phase = 0.0;      // radians
};

// value(t) = sum_j A_j sin(2 pi f_j t + phi_j), per axis.
struct TrajectorySpec {
  std::array<std::vector<Sinusoid>, 3> position;     // world frame, metres
  std::array<std::vector<Sinusoid>, 3> orientation;  // axis-angle components, rad
  double duration = 1.0;

  Vec3 position_at(double t) const;
  Vec3 velocity_at(double t) const;
  Vec3 acceleration_at(double t) const;
  Vec3 rotvec_at(double t) const;
  Vec3 rotvec_rate_at(double t) const;
  Mat3 rotation_at(double t) const { return so3_exp(rotvec_at(t)); }
  /// Body-frame angular velocity: Jr(theta) * theta_dot.
  Vec3 angular_velocity_body(double t) const;
  RigidTransform pose_at(double t) const { return {rotation_at(t), position_at(t)}; }
};

struct Triangle {
  Vec3 a, b, c;
};

struct Body {
  std::string name;
  std::vector<Triangle> triangles;
  Vec3 velocity = Vec3::Zero();  // constant, world frame, m/s
  bool dynamic = false;
};

struct Scene {
  std::vector<Body> bodies;
};

/// Twelve triangles of an axis-aligned box.
Body make_box(const std::string& name, const Vec3& lo, const Vec3& hi,
              const Vec3& velocity = Vec3::Zero());

struct LidarSpec {
  int channels = 16;
  double vertical_fov = 30.0 * M_PI / 180.0;  // rad, full span
  double rotation_rate = 10.0;                // Hz
  int points_per_rev = 256;                   // per channel
  double range_noise_sigma = 0.02;            // metres
  RigidTransform extrinsic;                   // lidar -> IMU
};

struct ImuSpec {
  double rate = 200.0;  // Hz
  double accel_noise_sigma = 0.0;
  double gyro_noise_sigma = 0.0;
  BiasPair bias;
  Vec3 gravity = Vec3(0.0, 0.0, -kStandardGravity);  // world frame
  double padding = 0.025;  // seconds of extra samples either side

  static constexpr double kStandardGravity = 9.80665;
};

/// IMU samples over [t_begin, t_end] at spec.rate, with the specific-force
/// convention accel = R^T (a_world - g_world) + bias + noise.
std::vector<ImuSample> synth_imu(const TrajectorySpec& traj, const ImuSpec& spec,
                                 double t_begin, double t_end, std::uint64_t seed = 0);

struct SweepPoint {
  LidarPoint raw;     // noisy range, sensor frame at emission time
  Vec3 true_I0;       // the measured point under a perfect correction, frame I(t0)
  Vec3 geom_I0;       // the noise-free surface hit, frame I(t0)
  bool dynamic = false;
  int body_id = -1;
};

/// Casts every ray emitted in [t0, t1) against the scene (bodies displaced
/// by velocity * t), dropping rays with no hit. The I0 frame is the IMU
/// frame at t0. Deterministic: noise is keyed per ray.
std::vector<SweepPoint> synth_sweep(const TrajectorySpec& traj, const Scene& scene,
                                    const LidarSpec& spec, double t0, double t1,
                                    std::uint64_t seed = 0);

/// Nearest hit distance of a ray against one triangle (Moller-Trumbore).
std::optional<double> ray_triangle(const Vec3& origin, const Vec3& dir, const Triangle& tri);

}  // namespace limoco
