#include "limoco/simulator.hpp"

#include <cmath>
#include <limits>

#include "limoco/rng.hpp"

namespace limoco {

namespace {

double eval_sum(const std::vector<Sinusoid>& terms, double t, int derivative) {
  double v = 0.0;
  for (const Sinusoid& s : terms) {
    const double w = 2.0 * M_PI * s.frequency;
    const double arg = w * t + s.phase;
    switch (derivative) {
      case 0: v += s.amplitude * std::sin(arg); break;
      case 1: v += s.amplitude * w * std::cos(arg); break;
      default: v -= s.amplitude * w * w * std::sin(arg); break;
    }
  }
  return v;
}

Vec3 eval_axes(const std::array<std::vector<Sinusoid>, 3>& axes, double t, int derivative) {
  return {eval_sum(axes[0], t, derivative), eval_sum(axes[1], t, derivative),
          eval_sum(axes[2], t, derivative)};
}

}  // namespace

Vec3 TrajectorySpec::position_at(double t) const { return eval_axes(position, t, 0); }
Vec3 TrajectorySpec::velocity_at(double t) const { return eval_axes(position, t, 1); }
Vec3 TrajectorySpec::acceleration_at(double t) const { return eval_axes(position, t, 2); }
Vec3 TrajectorySpec::rotvec_at(double t) const { return eval_axes(orientation, t, 0); }
Vec3 TrajectorySpec::rotvec_rate_at(double t) const { return eval_axes(orientation, t, 1); }

Vec3 TrajectorySpec::angular_velocity_body(double t) const {
  return so3_right_jacobian(rotvec_at(t)) * rotvec_rate_at(t);
}

Body make_box(const std::string& name, const Vec3& lo, const Vec3& hi, const Vec3& velocity) {
  Body body;
  body.name = name;
  body.velocity = velocity;
  body.dynamic = velocity.norm() > 0.0;

  const auto corner = [&](int ix, int iy, int iz) {
    return Vec3(ix ? hi.x() : lo.x(), iy ? hi.y() : lo.y(), iz ? hi.z() : lo.z());
  };
  const auto quad = [&](const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    body.triangles.push_back({a, b, c});
    body.triangles.push_back({a, c, d});
  };
  quad(corner(0, 0, 0), corner(1, 0, 0), corner(1, 1, 0), corner(0, 1, 0));  // z = lo
  quad(corner(0, 0, 1), corner(1, 0, 1), corner(1, 1, 1), corner(0, 1, 1));  // z = hi
  quad(corner(0, 0, 0), corner(1, 0, 0), corner(1, 0, 1), corner(0, 0, 1));  // y = lo
  quad(corner(0, 1, 0), corner(1, 1, 0), corner(1, 1, 1), corner(0, 1, 1));  // y = hi
  quad(corner(0, 0, 0), corner(0, 1, 0), corner(0, 1, 1), corner(0, 0, 1));  // x = lo
  quad(corner(1, 0, 0), corner(1, 1, 0), corner(1, 1, 1), corner(1, 0, 1));  // x = hi
  return body;
}

std::vector<ImuSample> synth_imu(const TrajectorySpec& traj, const ImuSpec& spec,
                                 double t_begin, double t_end, std::uint64_t seed) {
  std::vector<ImuSample> out;
  const double dt = 1.0 / spec.rate;
  const std::size_t count =
      static_cast<std::size_t>(std::floor((t_end - t_begin) / dt + 1e-9)) + 1;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double t = t_begin + static_cast<double>(k) * dt;
    const Mat3 r = traj.rotation_at(t);
    ImuSample s;
    s.t = t;
    s.accel = r.transpose() * (traj.acceleration_at(t) - spec.gravity) + spec.bias.accel;
    s.gyro = traj.angular_velocity_body(t) + spec.bias.gyro;
    if (spec.accel_noise_sigma > 0.0 || spec.gyro_noise_sigma > 0.0) {
      Rng rng(seed ^ splitmix64(0x696d7500ull + k), 1);
      s.accel += spec.accel_noise_sigma * Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian());
      s.gyro += spec.gyro_noise_sigma * Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian());
    }
    out.push_back(s);
  }
  return out;
}

std::optional<double> ray_triangle(const Vec3& origin, const Vec3& dir, const Triangle& tri) {
  constexpr double kEps = 1e-12;
  const Vec3 e1 = tri.b - tri.a;
  const Vec3 e2 = tri.c - tri.a;
  const Vec3 h = dir.cross(e2);
  const double det = e1.dot(h);
  if (std::abs(det) < kEps) return std::nullopt;
  const double inv_det = 1.0 / det;
  const Vec3 s = origin - tri.a;
  const double u = inv_det * s.dot(h);
  if (u < -1e-12 || u > 1.0 + 1e-12) return std::nullopt;
  const Vec3 q = s.cross(e1);
  const double v = inv_det * dir.dot(q);
  if (v < -1e-12 || u + v > 1.0 + 1e-12) return std::nullopt;
  const double t = inv_det * e2.dot(q);
  if (t <= 1e-9) return std::nullopt;
  return t;
}

std::vector<SweepPoint> synth_sweep(const TrajectorySpec& traj, const Scene& scene,
                                    const LidarSpec& spec, double t0, double t1,
                                    std::uint64_t seed) {
  std::vector<SweepPoint> out;
  const double step_dt = 1.0 / (spec.rotation_rate * spec.points_per_rev);
  const double channel_dt = step_dt / spec.channels;
  const RigidTransform world_from_i0 = traj.pose_at(t0);
  const RigidTransform i0_from_world = world_from_i0.inverse();

  std::vector<double> elevations(spec.channels, 0.0);
  for (int c = 0; c < spec.channels; ++c) {
    elevations[c] = spec.channels > 1
                        ? -0.5 * spec.vertical_fov +
                              spec.vertical_fov * c / (spec.channels - 1)
                        : 0.0;
  }

  std::uint64_t ray_index = 0;
  for (std::size_t step = 0;; ++step) {
    const double t_step = t0 + static_cast<double>(step) * step_dt;
    if (t_step >= t1) break;
    for (int c = 0; c < spec.channels; ++c, ++ray_index) {
      const double t = t_step + c * channel_dt;
      if (t >= t1) continue;

      const double azimuth = 2.0 * M_PI * spec.rotation_rate * t;
      const double e = elevations[c];
      const Vec3 d_sensor(std::cos(e) * std::cos(azimuth), std::cos(e) * std::sin(azimuth),
                          std::sin(e));

      const RigidTransform sensor_pose = traj.pose_at(t) * spec.extrinsic;
      const Vec3 origin = sensor_pose.translation;
      const Vec3 d_world = sensor_pose.rotation * d_sensor;

      double best = std::numeric_limits<double>::infinity();
      int best_body = -1;
      for (std::size_t b = 0; b < scene.bodies.size(); ++b) {
        const Vec3 shift = scene.bodies[b].velocity * t;
        for (const Triangle& tri : scene.bodies[b].triangles) {
          const Triangle moved{tri.a + shift, tri.b + shift, tri.c + shift};
          if (const auto hit = ray_triangle(origin, d_world, moved)) {
            if (*hit < best) {
              best = *hit;
              best_body = static_cast<int>(b);
            }
          }
        }
      }
      if (best_body < 0) continue;

      double range = best;
      if (spec.range_noise_sigma > 0.0) {
        Rng rng(seed ^ splitmix64(0x72617900ull + ray_index), 2);
        range += spec.range_noise_sigma * rng.gaussian();
      }
      if (range <= 0.0) continue;

      SweepPoint sp;
      sp.raw = {t, range * d_sensor, c};
      sp.true_I0 = i0_from_world * (origin + range * d_world);
      sp.geom_I0 = i0_from_world * (origin + best * d_world);
      sp.dynamic = scene.bodies[best_body].dynamic;
      sp.body_id = best_body;
      out.push_back(sp);
    }
  }
  return out;
}

}  // namespace limoco
