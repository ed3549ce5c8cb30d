#include "limoco/preintegration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "limoco/errors.hpp"

namespace limoco {

namespace {

constexpr double kCoverageSlack = 0.010;  // seconds

// Linear interpolation of the IMU stream at time t. `hint` is the index of
// the first sample with sample.t > previous query time; queries advance
// monotonically during integration.
void interpolate(const std::vector<ImuSample>& imu, double t, std::size_t& hint,
                 Vec3& accel, Vec3& gyro) {
  while (hint + 1 < imu.size() && imu[hint + 1].t <= t) ++hint;
  if (hint + 1 >= imu.size()) {
    accel = imu.back().accel;
    gyro = imu.back().gyro;
    return;
  }
  const ImuSample& a = imu[hint];
  const ImuSample& b = imu[hint + 1];
  if (t <= a.t) {
    accel = a.accel;
    gyro = a.gyro;
    return;
  }
  const double w = (t - a.t) / (b.t - a.t);
  accel = (1.0 - w) * a.accel + w * b.accel;
  gyro = (1.0 - w) * a.gyro + w * b.gyro;
}

}  // namespace

PreintegrationGrid preintegrate(const std::vector<ImuSample>& imu, double t0,
                                double t1, double rate, const BiasPair& lin_bias) {
  if (imu.size() < 2) throw CoverageError("preintegrate: need at least two IMU samples");
  if (!(rate > 0.0)) throw std::invalid_argument("preintegrate: rate must be positive");
  if (!(t1 >= t0)) throw std::invalid_argument("preintegrate: t1 must be >= t0");
  for (std::size_t i = 1; i < imu.size(); ++i) {
    if (!(imu[i].t > imu[i - 1].t)) {
      throw DataError("preintegrate: IMU timestamps are not strictly increasing");
    }
  }
  if (imu.front().t > t0 - kCoverageSlack || imu.back().t < t1 + kCoverageSlack) {
    throw CoverageError("preintegrate: IMU stream does not cover the requested interval");
  }

  const double h = 1.0 / rate;
  const std::size_t steps =
      static_cast<std::size_t>(std::ceil((t1 - t0) * rate - 1e-9));

  PreintegrationGrid grid;
  grid.t0 = t0;
  grid.rate = rate;
  grid.factors.reserve(steps + 1);

  PreintegratedFactor f;
  f.t0 = t0;
  f.t = t0;
  f.linearization_bias = lin_bias;
  grid.factors.push_back(f);

  std::size_t hint = 0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double tk = t0 + static_cast<double>(k) * h;
    Vec3 accel, gyro;
    interpolate(imu, tk + 0.5 * h, hint, accel, gyro);
    const Vec3 w = gyro - lin_bias.gyro;   // unbiased rate over the step
    const Vec3 a = accel - lin_bias.accel; // unbiased specific force

    const Mat3 step_R = so3_exp(w * h);
    const Mat3 half_R = so3_exp(w * (0.5 * h));
    const Mat3 R_mid = f.delta_R * half_R;  // rotation at the step midpoint
    const Vec3 acc_local = R_mid * a;

    // Exact first-order sensitivities of this discrete scheme. H maps a
    // gyro-bias change onto the midpoint rotation's local perturbation.
    const Mat3 H = half_R.transpose() * f.j_R_bg -
                   0.5 * h * so3_right_jacobian(w * (0.5 * h));
    const Mat3 dacc_dbg = -R_mid * skew(a) * H;

    f.j_p_ba += h * f.j_v_ba - 0.5 * h * h * R_mid;
    f.j_p_bg += h * f.j_v_bg + 0.5 * h * h * dacc_dbg;
    f.j_v_ba += -h * R_mid;
    f.j_v_bg += h * dacc_dbg;
    f.j_R_bg = step_R.transpose() * f.j_R_bg - h * so3_right_jacobian(w * h);

    f.delta_p += h * f.delta_v + 0.5 * h * h * acc_local;
    f.delta_v += h * acc_local;
    f.delta_R = f.delta_R * step_R;

    f.t = t0 + static_cast<double>(k + 1) * h;
    grid.factors.push_back(f);
  }
  return grid;
}

PreintegratedFactor query(const PreintegrationGrid& grid, double t) {
  if (grid.factors.empty()) throw std::out_of_range("query: empty grid");
  const double t_end = grid.t_end();
  if (t < grid.t0 - 1e-12 || t > t_end + 1e-12) {
    throw std::out_of_range("query: time outside the preintegration grid");
  }
  t = std::clamp(t, grid.t0, t_end);
  if (grid.factors.size() == 1) return grid.factors.front();

  const double pos = (t - grid.t0) * grid.rate;
  std::size_t k = static_cast<std::size_t>(pos);
  if (k + 1 >= grid.factors.size()) k = grid.factors.size() - 2;
  const PreintegratedFactor& f0 = grid.factors[k];
  const PreintegratedFactor& f1 = grid.factors[k + 1];
  if (t == f0.t) return f0;
  if (t == f1.t) return f1;

  const double w = (t - f0.t) / (f1.t - f0.t);
  PreintegratedFactor out = f0;
  out.t = t;
  out.delta_R = f0.delta_R * so3_exp(w * so3_log(f0.delta_R.transpose() * f1.delta_R));
  out.delta_v = (1.0 - w) * f0.delta_v + w * f1.delta_v;
  out.delta_p = (1.0 - w) * f0.delta_p + w * f1.delta_p;
  out.j_R_bg = (1.0 - w) * f0.j_R_bg + w * f1.j_R_bg;
  out.j_v_ba = (1.0 - w) * f0.j_v_ba + w * f1.j_v_ba;
  out.j_v_bg = (1.0 - w) * f0.j_v_bg + w * f1.j_v_bg;
  out.j_p_ba = (1.0 - w) * f0.j_p_ba + w * f1.j_p_ba;
  out.j_p_bg = (1.0 - w) * f0.j_p_bg + w * f1.j_p_bg;
  return out;
}

PreintegratedFactor correct_bias(const PreintegratedFactor& f, const BiasPair& new_bias) {
  const Vec3 dba = new_bias.accel - f.linearization_bias.accel;
  const Vec3 dbg = new_bias.gyro - f.linearization_bias.gyro;
  PreintegratedFactor out = f;
  out.delta_R = f.delta_R * so3_exp(f.j_R_bg * dbg);
  out.delta_v = f.delta_v + f.j_v_ba * dba + f.j_v_bg * dbg;
  out.delta_p = f.delta_p + f.j_p_ba * dba + f.j_p_bg * dbg;
  return out;
}

RigidTransform pose_at(const PreintegratedFactor& f, const Vec3& v0, const Vec3& g0) {
  const double dt = f.t - f.t0;
  return {f.delta_R, dt * v0 + 0.5 * dt * dt * g0 + f.delta_p};
}

}  // namespace limoco
