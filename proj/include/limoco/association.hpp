// Partitions a window's features into K equal-duration segments, projects
// them into the IMU frame at t_f0 with the current state estimate, and
// matches features between the first and last segments through KD-trees.

#pragma once

#include <vector>

#include "limoco/features.hpp"
#include "limoco/geom.hpp"
#include "limoco/preintegration.hpp"
#include "limoco/state.hpp"

namespace limoco {

struct Window {
  double t_f0 = 0.0;
  double t_f1 = 0.0;
  int segments = 3;  // K

  double duration() const { return t_f1 - t_f0; }
  double segment_length() const { return duration() / segments; }
};

struct ProjectedFeature {
  FeaturePoint source;
  std::size_t source_index = 0;  // position in the window feature list
  Vec3 position_I0 = Vec3::Zero();
  int segment = 0;
};

// A subject feature and its 2 (edge) or 3 (planar) neighbours from the
// other segment; one residual in the window cost.
struct Association {
  ProjectedFeature subject;
  std::vector<ProjectedFeature> targets;
  FeatureKind kind = FeatureKind::Planar;
};

struct AssociationParams {
  double gate = 0.5;      // metres, max subject-target distance
  // Gate used for re-association once the state estimate has left the
  // cold-start stage; keeps junction and residual-misalignment matches out
  // of the refined fit. Non-positive keeps the cold gate throughout.
  double refined_gate = 0.15;
  int kd_leaf_size = 16;
  bool bidirectional = true;       // also match last -> first
  bool all_segment_pairs = false;  // pair every segment, not just first/last
};

/// Segment index of a timestamp: floor(K (t - t_f0) / (t_f1 - t_f0)).
/// Throws std::out_of_range for t outside [t_f0, t_f1).
int segment_of(const Window& window, double t);

/// Splits features into K per-segment lists (order preserved).
std::vector<std::vector<FeaturePoint>> partition(const std::vector<FeaturePoint>& features,
                                                 const Window& window);

/// Projects features into the IMU frame at grid.t0 using bias-corrected
/// preintegrated poses: p_I0 = T_I0_t(state) * extrinsic * p_L.
/// `base_index` offsets the stored source indices.
std::vector<ProjectedFeature> project(const std::vector<FeaturePoint>& features,
                                      int segment, const PreintegrationGrid& grid,
                                      const WindowState& state,
                                      const RigidTransform& extrinsic,
                                      std::size_t base_index = 0);

/// Nearest-neighbour association between two projected segments, per
/// feature kind, with all neighbour distances gated. Planar target triples
/// must be non-collinear. With params.bidirectional a second pass swaps the
/// roles. Deterministic: ties resolve to the smallest feature index.
std::vector<Association> associate(const std::vector<ProjectedFeature>& first_seg,
                                   const std::vector<ProjectedFeature>& last_seg,
                                   const AssociationParams& params);

}  // namespace limoco
