// Shared synthetic scenes and window builders for solver/pipeline tests.

#pragma once

#include <vector>

#include "limoco/features.hpp"
#include "limoco/pipeline.hpp"
#include "limoco/simulator.hpp"
#include "limoco/solver.hpp"
#include "limoco/state.hpp"

namespace limoco::test {

// A closed room around the origin with a couple of boxes inside, so planar
// patches face every axis and corners supply edge features.
inline Scene room_scene() {
  Scene scene;
  const double h = 2.5;
  scene.bodies.push_back(make_box("floor", {-h, -h, -1.25}, {h, h, -1.2}));
  scene.bodies.push_back(make_box("ceiling", {-h, -h, 1.3}, {h, h, 1.35}));
  scene.bodies.push_back(make_box("wall_xlo", {-h - 0.05, -h, -1.2}, {-h, h, 1.3}));
  scene.bodies.push_back(make_box("wall_xhi", {h, -h, -1.2}, {h + 0.05, h, 1.3}));
  scene.bodies.push_back(make_box("wall_ylo", {-h, -h - 0.05, -1.2}, {h, -h, 1.3}));
  scene.bodies.push_back(make_box("wall_yhi", {-h, h, -1.2}, {h, h + 0.05, 1.3}));
  scene.bodies.push_back(make_box("crate", {1.2, 0.5, -1.2}, {1.8, 1.1, -0.6}));
  scene.bodies.push_back(make_box("bench", {-1.8, -1.4, -1.2}, {-0.9, -0.9, -0.3}));
  return scene;
}

inline LidarSpec test_lidar(double noise_sigma = 0.0) {
  LidarSpec spec;
  spec.channels = 64;
  spec.vertical_fov = 60.0 * M_PI / 180.0;
  spec.rotation_rate = 10.0;
  spec.points_per_rev = 384;
  spec.range_noise_sigma = noise_sigma;
  return spec;
}

struct SimWindow {
  std::vector<LidarPoint> points;
  std::vector<SweepPoint> sweep;
  std::vector<ImuSample> imu;
  Window window;
  WindowState truth;  // biases, v0 and gravity in the I(t_f0) frame
};

inline SimWindow simulate_window(const TrajectorySpec& traj, const Scene& scene,
                                 const LidarSpec& lidar, const ImuSpec& imu_spec, double t_f0,
                                 double t_f1, std::uint64_t seed = 0) {
  SimWindow out;
  out.sweep = synth_sweep(traj, scene, lidar, t_f0, t_f1, seed);
  for (const SweepPoint& sp : out.sweep) out.points.push_back(sp.raw);
  out.imu = synth_imu(traj, imu_spec, t_f0 - imu_spec.padding, t_f1 + imu_spec.padding, seed);
  out.window = {t_f0, t_f1, 3};

  const Mat3 r0 = traj.rotation_at(t_f0);
  out.truth.accel_bias = imu_spec.bias.accel;
  out.truth.gyro_bias = imu_spec.bias.gyro;
  out.truth.v0 = r0.transpose() * traj.velocity_at(t_f0);
  out.truth.set_gravity_dir(r0.transpose() * imu_spec.gravity);
  return out;
}

inline std::vector<FeaturePoint> window_features(const SimWindow& sim,
                                                 const FeatureParams& params) {
  // Per-segment extraction, as the pipeline does.
  std::vector<FeaturePoint> features;
  const double seg = sim.window.duration() / sim.window.segments;
  for (int s = 0; s < sim.window.segments; ++s) {
    const double s0 = sim.window.t_f0 + s * seg;
    const double s1 = (s + 1 == sim.window.segments) ? sim.window.t_f1
                                                     : sim.window.t_f0 + (s + 1) * seg;
    std::vector<LidarPoint> slice;
    for (const LidarPoint& p : sim.points) {
      if (p.t >= s0 && p.t < s1) slice.push_back(p);
    }
    FeatureParams fp = params;
    fp.seed = params.seed + static_cast<std::uint64_t>(s);
    const auto fs = extract_features(slice, fp);
    features.insert(features.end(), fs.begin(), fs.end());
  }
  return features;
}

inline double angle_between(const Vec3& a, const Vec3& b) {
  return std::acos(std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0));
}

}  // namespace limoco::test
