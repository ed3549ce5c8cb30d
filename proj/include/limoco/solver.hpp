// Levenberg-Marquardt estimation of the 11-variable window state from
// point-to-line and point-to-plane residuals between associated features.
// The solver re-associates (and re-linearises the preintegration) between
// outer iterations so that convergence does not depend on the initial state.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "limoco/association.hpp"
#include "limoco/features.hpp"
#include "limoco/geom.hpp"
#include "limoco/preintegration.hpp"
#include "limoco/state.hpp"

namespace limoco {

struct Residual {
  double value = 0.0;                       // metres
  Eigen::Matrix<double, 1, 11> jacobian = Eigen::Matrix<double, 1, 11>::Zero();
  bool degenerate = false;  // excluded from the normal equations
};

enum class RobustLoss { None, Huber };

struct SolverParams {
  int max_outer_iterations = 4;   // re-association each
  int max_lm_iterations = 25;     // per outer iteration
  double lm_lambda_init = 1e-4;
  double lm_lambda_up = 10.0;
  double lm_lambda_down = 0.1;
  double cost_rel_tol = 1e-8;     // relative cost change
  double step_tol = 1e-10;        // step norm
  int min_residuals = 30;
  RobustLoss robust_loss = RobustLoss::None;
  double huber_delta = 0.1;       // metres
  // Outer iterations that estimate only velocity and gravity, keeping the
  // biases at their initial values. Solving the well-conditioned 5-variable
  // problem first keeps a cold start out of the shallow bias/gravity
  // trade-off valley; the remaining outers release all 11 variables.
  int bias_freeze_outers = 1;
  // Residuals whose plane-normal cross product (planar, m^2) or base length
  // (edge, m) fall below these are flagged degenerate and excluded: their
  // Jacobian leverage grows like the reciprocal and would swamp the normal
  // equations with noise.
  double min_plane_normal = 1e-3;  // m^2
  double min_edge_base = 1e-2;     // m
  AssociationParams association;
  double preint_rate = 1000.0;    // Hz
};

struct OuterIterationReport {
  double cost_initial = 0.0;
  double cost_final = 0.0;
  int association_count = 0;
  int residual_count = 0;
  int lm_iterations = 0;
  bool lm_converged = false;
};

struct SolveReport {
  std::vector<OuterIterationReport> outer;
  bool converged = false;
  int total_residuals = 0;
  std::string message;
};

/// Unsigned point-to-line distance from s to the line through t1, t2.
/// Returns nothing when the base is degenerate (|t1 - t2| < 1e-9).
std::optional<double> point_to_line(const Vec3& s, const Vec3& t1, const Vec3& t2);

/// Signed point-to-plane distance, with the normal taken as
/// (t1 - t2) x (t1 - t3). Returns nothing when the normal is degenerate.
std::optional<double> point_to_plane(const Vec3& s, const Vec3& t1, const Vec3& t2,
                                     const Vec3& t3);

/// Residual of one association under the given state, with the analytic
/// Jacobian with respect to the 11 state scalars. Subject and targets are
/// re-projected with bias-corrected poses; the stored association positions
/// only define the pairing. Geometry below the degeneracy floors is flagged
/// instead of evaluated.
Residual residual_and_jacobian(const Association& a, const WindowState& state,
                               const PreintegrationGrid& grid,
                               const RigidTransform& extrinsic,
                               double min_plane_normal = 1e-9,
                               double min_edge_base = 1e-9);

/// Estimates the window state. Features and IMU samples must cover the
/// window. Throws UnderConstrainedError when the first association pass
/// yields fewer than params.min_residuals residuals.
std::pair<WindowState, SolveReport> solve_window(const std::vector<FeaturePoint>& features,
                                                 const std::vector<ImuSample>& imu,
                                                 const Window& window,
                                                 const RigidTransform& extrinsic,
                                                 const WindowState& init,
                                                 const SolverParams& params);

}  // namespace limoco
