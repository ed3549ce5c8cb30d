#include "limoco/solver.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "limoco/errors.hpp"

namespace limoco {

std::optional<double> point_to_line(const Vec3& s, const Vec3& t1, const Vec3& t2) {
  const double base = (t1 - t2).norm();
  if (base < 1e-9) return std::nullopt;
  return (s - t1).cross(s - t2).norm() / base;
}

std::optional<double> point_to_plane(const Vec3& s, const Vec3& t1, const Vec3& t2,
                                     const Vec3& t3) {
  const Vec3 normal = (t1 - t2).cross(t1 - t3);
  const double n = normal.norm();
  if (n < 1e-9) return std::nullopt;
  return (s - t1).dot(normal) / n;
}

namespace {

using RowVec3 = Eigen::Matrix<double, 1, 3>;
using Mat3x11 = Eigen::Matrix<double, 3, 11>;

// Projected position of one lidar point and its derivative with respect to
// the 11 state scalars [b_a, b_g, v0, alpha, beta].
struct ProjectedPoint {
  Vec3 y = Vec3::Zero();
  Mat3x11 dy = Mat3x11::Zero();
};

ProjectedPoint project_with_jacobian(const Vec3& p_lidar, const PreintegratedFactor& f,
                                     const WindowState& state,
                                     const RigidTransform& extrinsic, const Vec3& gravity,
                                     const Mat32& dg) {
  const Vec3 q = extrinsic * p_lidar;  // IMU frame at emission time
  const double dt = f.t - f.t0;

  const Vec3 dbg = state.gyro_bias - f.linearization_bias.gyro;
  const Vec3 rot_correction = f.j_R_bg * dbg;
  const Mat3 r_corr = f.delta_R * so3_exp(rot_correction);

  const Vec3 dba = state.accel_bias - f.linearization_bias.accel;
  const Vec3 p_corr = f.delta_p + f.j_p_ba * dba + f.j_p_bg * dbg;

  ProjectedPoint out;
  out.y = r_corr * q + dt * state.v0 + 0.5 * dt * dt * gravity + p_corr;
  out.dy.block<3, 3>(0, 0) = f.j_p_ba;
  out.dy.block<3, 3>(0, 3) =
      -r_corr * skew(q) * so3_right_jacobian(rot_correction) * f.j_R_bg + f.j_p_bg;
  out.dy.block<3, 3>(0, 6) = dt * Mat3::Identity();
  out.dy.block<3, 2>(0, 9) = 0.5 * dt * dt * dg;
  return out;
}

// d(residual)/d(point) rows for the edge distance
// r = |(s - t1) x (s - t2)| / |t1 - t2|.
bool edge_partials(const Vec3& s, const Vec3& t1, const Vec3& t2, double min_base, double& r,
                   RowVec3& ds, RowVec3& dt1, RowVec3& dt2) {
  const Vec3 base = t1 - t2;
  const double base_norm = base.norm();
  if (base_norm < min_base) return false;
  const Vec3 a = s - t1;
  const Vec3 b = s - t2;
  const Vec3 c = a.cross(b);
  const double c_norm = c.norm();
  r = c_norm / base_norm;

  if (c_norm < 1e-12) {
    // On the line the norm is not differentiable; the residual is zero and
    // contributes nothing, so a zero row is used.
    ds.setZero();
    dt1.setZero();
    dt2.setZero();
    return true;
  }
  const RowVec3 nc = (c / c_norm).transpose();
  const RowVec3 u = (base / base_norm).transpose();
  ds = nc * skew(t2 - t1) / base_norm;
  dt1 = nc * skew(b) / base_norm - (r / base_norm) * u;
  dt2 = -nc * skew(a) / base_norm + (r / base_norm) * u;
  return true;
}

// d(residual)/d(point) rows for the signed plane distance
// r = (s - t1) . m / |m|, m = (t1 - t2) x (t1 - t3).
bool plane_partials(const Vec3& s, const Vec3& t1, const Vec3& t2, const Vec3& t3,
                    double min_normal, double& r, RowVec3& ds, RowVec3& dt1, RowVec3& dt2,
                    RowVec3& dt3) {
  const Vec3 a = t1 - t2;
  const Vec3 b = t1 - t3;
  const Vec3 m = a.cross(b);
  const double m_norm = m.norm();
  if (m_norm < min_normal) return false;
  const Vec3 n = m / m_norm;
  const Vec3 e = s - t1;
  r = e.dot(n);

  const RowVec3 w = ((e - n * n.dot(e)) / m_norm).transpose();  // e^T (I - n n^T) / |m|
  ds = n.transpose();
  dt1 = -n.transpose() + w * (skew(a) - skew(b));
  dt2 = w * skew(b);
  dt3 = -w * skew(a);
  return true;
}

}  // namespace

namespace {

// subject_only drops the target terms from the Jacobian (residual value
// unchanged): the cold stage uses this ICP-style linearisation because the
// target rows' leverage grows with the subject distance and would swamp the
// normal equations before the state is roughly aligned.
Residual residual_impl(const Association& a, const WindowState& state,
                       const PreintegrationGrid& grid, const RigidTransform& extrinsic,
                       double min_plane_normal, double min_edge_base, bool subject_only) {
  const Vec3 gravity = state.gravity();
  const Mat32 dg = state.gravity_jacobian();

  auto project_one = [&](const FeaturePoint& f) {
    return project_with_jacobian(f.point.position, query(grid, f.point.t), state, extrinsic,
                                 gravity, dg);
  };

  Residual res;
  const ProjectedPoint s = project_one(a.subject.source);

  if (a.kind == FeatureKind::Edge) {
    const ProjectedPoint t1 = project_one(a.targets[0].source);
    const ProjectedPoint t2 = project_one(a.targets[1].source);
    RowVec3 ds, dt1, dt2;
    if (!edge_partials(s.y, t1.y, t2.y, min_edge_base, res.value, ds, dt1, dt2)) {
      res.degenerate = true;
      return res;
    }
    res.jacobian = ds * s.dy;
    if (!subject_only) res.jacobian += dt1 * t1.dy + dt2 * t2.dy;
  } else {
    const ProjectedPoint t1 = project_one(a.targets[0].source);
    const ProjectedPoint t2 = project_one(a.targets[1].source);
    const ProjectedPoint t3 = project_one(a.targets[2].source);
    RowVec3 ds, dt1, dt2, dt3;
    if (!plane_partials(s.y, t1.y, t2.y, t3.y, min_plane_normal, res.value, ds, dt1, dt2,
                        dt3)) {
      res.degenerate = true;
      return res;
    }
    res.jacobian = ds * s.dy;
    if (!subject_only) res.jacobian += dt1 * t1.dy + dt2 * t2.dy + dt3 * t3.dy;
  }

  if (!res.jacobian.allFinite() || !std::isfinite(res.value)) {
    res.degenerate = true;
  }
  return res;
}

}  // namespace

Residual residual_and_jacobian(const Association& a, const WindowState& state,
                               const PreintegrationGrid& grid,
                               const RigidTransform& extrinsic, double min_plane_normal,
                               double min_edge_base) {
  return residual_impl(a, state, grid, extrinsic, min_plane_normal, min_edge_base, false);
}

namespace {

struct Evaluation {
  double robust_cost = 0.0;    // sum of loss(r): the quantity reported
  double weighted_cost = 0.0;  // sum of w r^2 with the IRLS weights below
  int residual_count = 0;
  std::vector<double> weights;  // per association; 0 marks degenerate
  std::vector<double> values;   // residual at the evaluation point
  Eigen::Matrix<double, 11, 11> h = Eigen::Matrix<double, 11, 11>::Zero();
  Eigen::Matrix<double, 11, 1> g = Eigen::Matrix<double, 11, 1>::Zero();
};

double loss_weight(double value, const SolverParams& params) {
  if (params.robust_loss == RobustLoss::None) return 1.0;
  const double abs_v = std::abs(value);
  return abs_v <= params.huber_delta ? 1.0 : params.huber_delta / abs_v;
}

double loss_value(double value, const SolverParams& params) {
  if (params.robust_loss == RobustLoss::None) return value * value;
  const double abs_v = std::abs(value);
  if (abs_v <= params.huber_delta) return value * value;
  return 2.0 * params.huber_delta * abs_v - params.huber_delta * params.huber_delta;
}

// Full evaluation at `state`: residuals, robust cost, fresh IRLS weights,
// and the weighted normal equations.
Evaluation evaluate(const std::vector<Association>& associations, const WindowState& state,
                    const PreintegrationGrid& grid, const RigidTransform& extrinsic,
                    const SolverParams& params, bool subject_only) {
  Evaluation ev;
  ev.weights.assign(associations.size(), 0.0);
  ev.values.assign(associations.size(), 0.0);
  for (std::size_t i = 0; i < associations.size(); ++i) {
    const Residual r = residual_impl(associations[i], state, grid, extrinsic,
                                     params.min_plane_normal, params.min_edge_base,
                                     subject_only);
    if (r.degenerate) continue;
    const double w = loss_weight(r.value, params);
    ev.weights[i] = w;
    ev.values[i] = r.value;
    ev.robust_cost += loss_value(r.value, params);
    ev.weighted_cost += w * r.value * r.value;
    ++ev.residual_count;
    ev.h.noalias() += w * r.jacobian.transpose() * r.jacobian;
    ev.g.noalias() -= w * r.jacobian.transpose() * r.value;
  }
  return ev;
}

// Majorizer value of `state` under the frozen weights of `center`: the
// Huber loss is majorized by w(r0) r^2 + const, so a decrease here implies
// a decrease of the true robust cost (the IRLS/MM argument).
double weighted_cost_at(const std::vector<Association>& associations,
                        const WindowState& state, const PreintegrationGrid& grid,
                        const RigidTransform& extrinsic, const SolverParams& params,
                        const Evaluation& center) {
  double cost = 0.0;
  for (std::size_t i = 0; i < associations.size(); ++i) {
    const double w = center.weights[i];
    if (w == 0.0) continue;
    const Residual r = residual_impl(associations[i], state, grid, extrinsic,
                                     params.min_plane_normal, params.min_edge_base, false);
    // A residual whose geometry collapsed at the candidate contributes its
    // center value (neutral), so such steps are not rewarded.
    const double value = r.degenerate ? center.values[i] : r.value;
    cost += w * value * value;
  }
  return cost;
}

}  // namespace

std::pair<WindowState, SolveReport> solve_window(const std::vector<FeaturePoint>& features,
                                                 const std::vector<ImuSample>& imu,
                                                 const Window& window,
                                                 const RigidTransform& extrinsic,
                                                 const WindowState& init,
                                                 const SolverParams& params) {
  WindowState state = init;
  SolveReport report;

  const auto segments = partition(features, window);

  for (int outer = 0; outer < params.max_outer_iterations; ++outer) {
    // Coarse-to-fine schedule. In the cold stage (biases frozen) the wide
    // gate keeps association reachable from a zero state and a widened
    // Huber loss keeps gross distortion residuals from plateauing; the
    // refined stages tighten both so junction mismatches drop out.
    SolverParams stage_params = params;
    const bool freeze_biases = outer < params.bias_freeze_outers;
    if (freeze_biases && params.robust_loss == RobustLoss::Huber) {
      stage_params.huber_delta = std::max(params.huber_delta, 0.1);
    }
    if (!freeze_biases && params.association.refined_gate > 0.0) {
      stage_params.association.gate =
          std::min(params.association.gate, params.association.refined_gate);
    }

    // Re-linearise the preintegration at the current bias estimate and
    // re-associate with the newest state.
    const PreintegrationGrid grid =
        preintegrate(imu, window.t_f0, window.t_f1, params.preint_rate, state.biases());

    std::vector<std::vector<ProjectedFeature>> projected(segments.size());
    if (params.association.all_segment_pairs) {
      for (std::size_t s = 0; s < segments.size(); ++s) {
        projected[s] = project(segments[s], static_cast<int>(s), grid, state, extrinsic);
      }
    } else {
      projected.front() = project(segments.front(), 0, grid, state, extrinsic);
      projected.back() =
          project(segments.back(), window.segments - 1, grid, state, extrinsic);
    }

    std::vector<Association> associations;
    if (params.association.all_segment_pairs) {
      for (std::size_t i = 0; i < projected.size(); ++i) {
        for (std::size_t j = i + 1; j < projected.size(); ++j) {
          const auto pair = associate(projected[i], projected[j], stage_params.association);
          associations.insert(associations.end(), pair.begin(), pair.end());
        }
      }
    } else {
      associations =
          associate(projected.front(), projected.back(), stage_params.association);
    }

    OuterIterationReport outer_report;
    outer_report.association_count = static_cast<int>(associations.size());

    Evaluation ev = evaluate(associations, state, grid, extrinsic, stage_params, false);
    outer_report.cost_initial = ev.robust_cost;
    outer_report.residual_count = ev.residual_count;
    report.total_residuals = ev.residual_count;

    if (ev.residual_count < params.min_residuals) {
      if (outer == 0) {
        throw UnderConstrainedError("solve_window: only " +
                                    std::to_string(ev.residual_count) +
                                    " residuals, need " +
                                    std::to_string(params.min_residuals));
      }
      report.message = "re-association dropped below the residual minimum";
      outer_report.cost_final = ev.robust_cost;
      report.outer.push_back(outer_report);
      break;
    }

    double lambda = params.lm_lambda_init;
    for (int iter = 0; iter < params.max_lm_iterations; ++iter) {
      ++outer_report.lm_iterations;

      // Diagonal damping with an absolute floor so weakly-observable
      // directions cannot take unbounded steps.
      const double diag_floor = 1e-6 * ev.h.diagonal().maxCoeff() + 1e-12;
      Eigen::Matrix<double, 11, 11> damped = ev.h;
      for (int i = 0; i < 11; ++i) {
        damped(i, i) += lambda * std::max(ev.h(i, i), diag_floor);
      }
      Eigen::Matrix<double, 11, 1> dx;
      if (freeze_biases) {
        // Reduced 5-variable system over [v0, alpha, beta].
        const Eigen::Matrix<double, 5, 5> h55 = damped.bottomRightCorner<5, 5>();
        const Eigen::Matrix<double, 5, 1> g5 = ev.g.tail<5>();
        dx.setZero();
        dx.tail<5>() = h55.ldlt().solve(g5);
      } else {
        dx = damped.ldlt().solve(ev.g);
      }
      if (!dx.allFinite()) {
        lambda *= params.lm_lambda_up;
        continue;
      }

      WindowState candidate = state;
      candidate.apply_delta(dx);
      // Accept on the frozen-weight majorizer: a decrease there implies a
      // decrease of the robust cost, and the surface stays smooth even
      // where re-derived weights would jitter.
      const double cand_weighted =
          weighted_cost_at(associations, candidate, grid, extrinsic, stage_params, ev);

      if (std::getenv("LIMOCO_LM_TRACE")) {
        std::fprintf(stderr,
                     "  lm%02d lambda=%.1e |dx|=%.3e |g5|=%.3e h5max=%.3e "
                     "weighted %.6e -> %.6e %s\n",
                     iter, lambda, dx.norm(), ev.g.tail<5>().norm(),
                     ev.h.bottomRightCorner<5, 5>().diagonal().maxCoeff(), ev.weighted_cost,
                     cand_weighted, cand_weighted < ev.weighted_cost ? "accept" : "reject");
      }

      if (cand_weighted < ev.weighted_cost) {
        const double previous_cost = ev.robust_cost;
        state = candidate;
        ev = evaluate(associations, state, grid, extrinsic, stage_params, false);
        const double rel_change =
            (previous_cost - ev.robust_cost) / std::max(previous_cost, 1e-300);
        // A small relative change only signals convergence in the
        // Newton-ish regime; heavily damped micro-steps also change the
        // cost little without being anywhere near a minimum.
        if ((rel_change < params.cost_rel_tol && lambda <= params.lm_lambda_init) ||
            dx.norm() < params.step_tol) {
          outer_report.lm_converged = true;
          break;
        }
        lambda *= params.lm_lambda_down;
      } else {
        lambda *= params.lm_lambda_up;
        if (dx.norm() < params.step_tol) {
          outer_report.lm_converged = true;
          break;
        }
      }
    }

    outer_report.cost_final = ev.robust_cost;
    report.outer.push_back(outer_report);
  }

  report.converged = !report.outer.empty() && report.outer.back().lm_converged;
  if (report.message.empty() && !report.converged) {
    report.message = "iteration limit reached";
  }
  return {state, report};
}

}  // namespace limoco
