#include <doctest.h>

#include <cmath>

#include "limoco/errors.hpp"
#include "limoco/rng.hpp"
#include "limoco/simulator.hpp"
#include "limoco/solver.hpp"
#include "support/oracles.hpp"
#include "support/sim_helpers.hpp"

using namespace limoco;

TEST_CASE("point_to_line closed forms") {
  CHECK(*point_to_line(Vec3(0, 1, 0), Vec3(0, 0, 0), Vec3(1, 0, 0)) == doctest::Approx(1.0));
  CHECK(*point_to_line(Vec3(0.5, 0, 0), Vec3(0, 0, 0), Vec3(1, 0, 0)) ==
        doctest::Approx(0.0));
  CHECK(*point_to_line(Vec3(1, 1, 1), Vec3(0, 0, 0), Vec3(0, 0, 2)) ==
        doctest::Approx(std::sqrt(2.0)));
  CHECK(!point_to_line(Vec3(0, 1, 0), Vec3(0, 0, 0), Vec3(0, 0, 0)).has_value());
}

TEST_CASE("point_to_plane closed forms and sign") {
  // Normal (t1-t2) x (t1-t3) points up for this vertex order.
  CHECK(*point_to_plane(Vec3(0, 0, 1), Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)) ==
        doctest::Approx(1.0));
  CHECK(*point_to_plane(Vec3(0.3, 0.2, 0), Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)) ==
        doctest::Approx(0.0));
  CHECK(std::abs(*point_to_plane(Vec3(1, 1, 5), Vec3(0, 0, 2), Vec3(1, 0, 2), Vec3(0, 1, 2))) ==
        doctest::Approx(3.0));
  CHECK(!point_to_plane(Vec3(0, 0, 1), Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0))
             .has_value());
}

namespace {

// A random association over a random preintegration grid, for Jacobian
// checks. Geometry is kept away from the degenerate configurations.
struct JacobianInstance {
  PreintegrationGrid grid;
  WindowState state;
  RigidTransform extrinsic;
  Association association;
};

JacobianInstance random_instance(Rng& rng, bool planar) {
  JacobianInstance inst;

  const TrajectorySpec traj = test::random_trajectory(rng, 0.6, 1.2, 1.0);
  ImuSpec imu_spec;
  imu_spec.rate = 200.0;
  const auto imu = synth_imu(traj, imu_spec, -0.05, 0.55);
  const BiasPair lin_bias{Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian()) * 0.01,
                          Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian()) * 0.005};
  inst.grid = preintegrate(imu, 0.0, 0.45, 1000.0, lin_bias);

  inst.state.accel_bias =
      lin_bias.accel + 0.02 * Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian());
  inst.state.gyro_bias =
      lin_bias.gyro + 0.01 * Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian());
  inst.state.v0 = Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian());
  inst.state.gravity_alpha = 0.3 * rng.gaussian();
  inst.state.gravity_beta = 0.3 * rng.gaussian();

  inst.extrinsic.rotation = so3_exp(0.2 * Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian()));
  inst.extrinsic.translation = 0.1 * Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian());

  const auto random_point = [&](double t) {
    FeaturePoint f;
    f.point.t = t;
    f.point.position = Vec3(rng.uniform(1.0, 4.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0),
                            rng.uniform(1.0, 4.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0),
                            rng.uniform(-1.0, 1.0));
    f.kind = planar ? FeatureKind::Planar : FeatureKind::Edge;
    return f;
  };

  Association& a = inst.association;
  a.kind = planar ? FeatureKind::Planar : FeatureKind::Edge;
  a.subject.source = random_point(rng.uniform(0.0, 0.15));
  const double t_target = rng.uniform(0.30, 0.449);
  const std::size_t targets = planar ? 3 : 2;
  for (std::size_t i = 0; i < targets; ++i) {
    ProjectedFeature t;
    t.source = random_point(t_target + 1e-3 * static_cast<double>(i));
    // Spread the targets so lines/planes stay well-conditioned.
    t.source.point.position += Vec3(rng.uniform(0.2, 0.5), rng.uniform(-0.5, -0.2),
                                    rng.uniform(0.2, 0.5) * (i % 2 ? 1.0 : -1.0));
    a.targets.push_back(t);
  }
  return inst;
}

Eigen::Matrix<double, 1, 11> finite_difference_jacobian(const JacobianInstance& inst,
                                                        double h = 1e-6) {
  Eigen::Matrix<double, 1, 11> fd;
  for (int k = 0; k < 11; ++k) {
    Eigen::Matrix<double, 11, 1> delta = Eigen::Matrix<double, 11, 1>::Zero();
    delta[k] = h;
    WindowState plus = inst.state;
    plus.apply_delta(delta);
    WindowState minus = inst.state;
    minus.apply_delta(-delta);
    const double rp =
        residual_and_jacobian(inst.association, plus, inst.grid, inst.extrinsic).value;
    const double rm =
        residual_and_jacobian(inst.association, minus, inst.grid, inst.extrinsic).value;
    fd[k] = (rp - rm) / (2.0 * h);
  }
  return fd;
}

}  // namespace

TEST_CASE("analytic jacobians match central finite differences") {
  Rng rng(101);
  int tested = 0;
  while (tested < 100) {
    const bool planar = tested % 2 == 0;
    const JacobianInstance inst = random_instance(rng, planar);
    const Residual res =
        residual_and_jacobian(inst.association, inst.state, inst.grid, inst.extrinsic);
    if (res.degenerate || std::abs(res.value) < 1e-4) continue;  // keep away from the kink
    const auto fd = finite_difference_jacobian(inst);
    const double rel = (res.jacobian - fd).norm() / fd.norm();
    CHECK(rel < 1e-5);
    ++tested;
  }
}

TEST_CASE("coincident-time features give zero residual and finite jacobian") {
  std::vector<ImuSample> imu;
  for (double t = -0.05; t <= 0.5; t += 0.005) imu.push_back({t, Vec3::Zero(), Vec3::Zero()});
  const auto grid = preintegrate(imu, 0.0, 0.45, 1000.0, {});
  WindowState state;

  // Subject in the targets' plane, all at the same timestamp: whatever the
  // state says, the rigid projection preserves coplanarity.
  Association a;
  a.kind = FeatureKind::Planar;
  a.subject.source.point = {0.40, Vec3(2.0, 0.05, 0.05), 0};
  for (int i = 0; i < 3; ++i) {
    ProjectedFeature t;
    t.source.point = {0.40, Vec3(2.0, 0.1 * (i == 1), 0.1 * (i == 2)), 0};
    a.targets.push_back(t);
  }
  const Residual res = residual_and_jacobian(a, state, grid, RigidTransform{});
  CHECK(std::abs(res.value) < 1e-12);
  CHECK(res.jacobian.allFinite());
}

TEST_CASE("gravity only enters residuals spanning time (quadratic factor)") {
  std::vector<ImuSample> imu;
  for (double t = -0.05; t <= 0.5; t += 0.005) imu.push_back({t, Vec3::Zero(), Vec3::Zero()});
  const auto grid = preintegrate(imu, 0.0, 0.45, 1000.0, {});
  WindowState state;

  Association a;
  a.kind = FeatureKind::Edge;
  a.subject.source.point = {0.0, Vec3(2.0, 0.3, 0.2), 0};
  ProjectedFeature t1, t2;
  t1.source.point = {0.0, Vec3(2.0, -0.4, -0.4), 0};
  t2.source.point = {0.0, Vec3(2.0, 0.8, 0.7), 0};
  a.targets = {t1, t2};

  // All points at t = t0: the gravity columns must vanish.
  const Residual same = residual_and_jacobian(a, state, grid, RigidTransform{});
  CHECK(std::abs(same.jacobian[9]) < 1e-12);
  CHECK(std::abs(same.jacobian[10]) < 1e-12);

  // Move the targets to a later timestamp: gravity now has leverage.
  a.targets[0].source.point.t = 0.4;
  a.targets[1].source.point.t = 0.4;
  const Residual spanned = residual_and_jacobian(a, state, grid, RigidTransform{});
  CHECK(std::abs(spanned.jacobian[9]) + std::abs(spanned.jacobian[10]) > 1e-4);
}

TEST_CASE("solve_window: stationary sensor recovers zero velocity and gravity") {
  TrajectorySpec still;
  still.duration = 0.6;
  const Scene scene = test::room_scene();
  const LidarSpec lidar = test::test_lidar(0.0);
  ImuSpec imu_spec;
  const auto sim = test::simulate_window(still, scene, lidar, imu_spec, 0.0, 0.45);

  const auto features = test::window_features(sim, FeatureParams{});
  SolverParams params;
  const auto [state, report] =
      solve_window(features, sim.imu, sim.window, lidar.extrinsic,
                   WindowState::cold_init(sim.imu), params);

  CHECK(state.v0.norm() < 1e-3);
  CHECK(test::angle_between(state.gravity(), sim.truth.gravity()) < 0.05 * M_PI / 180.0);
  CHECK(report.total_residuals >= 30);
}

TEST_CASE("solve_window: constant-velocity pass through the room") {
  TrajectorySpec traj;
  traj.duration = 0.6;
  // ~1 m/s along x at t = 0, gentle yaw.
  traj.position[0].push_back({1.0 / (2.0 * M_PI * 0.25), 0.25, 0.0});
  traj.orientation[2].push_back({0.05, 0.5, 0.0});
  const Scene scene = test::room_scene();
  const LidarSpec lidar = test::test_lidar(0.0);
  ImuSpec imu_spec;
  const auto sim = test::simulate_window(traj, scene, lidar, imu_spec, 0.0, 0.45);

  const auto features = test::window_features(sim, FeatureParams{});
  SolverParams params;
  const auto [state, report] =
      solve_window(features, sim.imu, sim.window, lidar.extrinsic,
                   WindowState::cold_init(sim.imu), params);

  CHECK((state.v0 - sim.truth.v0).norm() < 5e-3);

  // Post-fit mean absolute residual below a millimetre.
  const auto grid = preintegrate(sim.imu, 0.0, 0.45, 1000.0, state.biases());
  const auto segments = partition(features, sim.window);
  const auto first = project(segments.front(), 0, grid, state, lidar.extrinsic);
  const auto last = project(segments.back(), 2, grid, state, lidar.extrinsic);
  const auto assoc = associate(first, last, params.association);
  REQUIRE(!assoc.empty());
  double sum = 0.0;
  int count = 0;
  for (const Association& a : assoc) {
    const Residual r = residual_and_jacobian(a, state, grid, lidar.extrinsic);
    if (!r.degenerate) {
      sum += std::abs(r.value);
      ++count;
    }
  }
  CHECK(sum / count < 1e-3);
}

TEST_CASE("solve_window: injected gyro bias is recovered within 10%") {
  TrajectorySpec traj;
  traj.duration = 0.6;
  traj.position[0].push_back({0.4 / (2.0 * M_PI * 0.3), 0.3, 0.0});
  traj.orientation[2].push_back({0.8 / (2.0 * M_PI * 0.4), 0.4, 0.0});
  traj.orientation[0].push_back({0.3 / (2.0 * M_PI * 0.5), 0.5, 0.3});
  const Scene scene = test::room_scene();
  const LidarSpec lidar = test::test_lidar(0.0);
  ImuSpec imu_spec;
  imu_spec.bias.gyro = Vec3(1.0, -1.0, 1.0).normalized() * 0.01;
  const auto sim = test::simulate_window(traj, scene, lidar, imu_spec, 0.0, 0.45);

  const auto features = test::window_features(sim, FeatureParams{});
  SolverParams params;
  const auto [state, report] =
      solve_window(features, sim.imu, sim.window, lidar.extrinsic,
                   WindowState::cold_init(sim.imu), params);

  CHECK((state.gyro_bias - sim.truth.gyro_bias).norm() < 0.1 * sim.truth.gyro_bias.norm());
}

TEST_CASE("solve_window throws UnderConstrained on too few features") {
  std::vector<ImuSample> imu;
  for (double t = -0.05; t <= 0.5; t += 0.005) {
    imu.push_back({t, Vec3(0.0, 0.0, 9.80665), Vec3::Zero()});
  }
  std::vector<FeaturePoint> features;  // nothing to associate
  const Window window{0.0, 0.45, 3};
  CHECK_THROWS_AS(
      solve_window(features, imu, window, RigidTransform{}, WindowState{}, SolverParams{}),
      UnderConstrainedError);
}

TEST_CASE("accepted LM steps never increase the cost within an outer iteration") {
  TrajectorySpec traj;
  traj.duration = 0.6;
  traj.position[1].push_back({0.5 / (2.0 * M_PI * 0.4), 0.4, 0.5});
  traj.orientation[2].push_back({0.4 / (2.0 * M_PI * 0.3), 0.3, 0.0});
  const Scene scene = test::room_scene();
  const LidarSpec lidar = test::test_lidar(0.02);
  ImuSpec imu_spec;
  const auto sim = test::simulate_window(traj, scene, lidar, imu_spec, 0.0, 0.45, 5);

  const auto features = test::window_features(sim, FeatureParams{});
  const auto [state, report] =
      solve_window(features, sim.imu, sim.window, lidar.extrinsic,
                   WindowState::cold_init(sim.imu), SolverParams{});
  REQUIRE(!report.outer.empty());
  for (const OuterIterationReport& o : report.outer) {
    CHECK(o.cost_final <= o.cost_initial + 1e-12);
  }
}
