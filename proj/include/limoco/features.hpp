// Planar and edge feature extraction from per-channel lidar point streams.
// The roughness of a point is its distance to the line through its +/-n
// channel neighbours: low roughness marks planar surfaces, local maxima
// above the planar band mark edges.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "limoco/geom.hpp"

namespace limoco {

struct LidarPoint {
  double t = 0.0;             // seconds (emission time)
  Vec3 position = Vec3::Zero();  // sensor frame at emission time, metres
  int channel = 0;
};

enum class FeatureKind { Planar, Edge };

struct FeaturePoint {
  LidarPoint point;
  FeatureKind kind = FeatureKind::Planar;
  double roughness = 0.0;  // metres
};

struct FeatureParams {
  int n = 5;                        // neighbour offset
  double planar_threshold = 0.05;   // metres
  int max_planar_per_segment = 2000;
  double edge_min_prominence = 0.05;  // metres, defaults to planar_threshold
  // Range jump between channel-adjacent samples that marks an occlusion
  // boundary; the n samples on the far side are viewpoint-dependent shadow
  // points and yield no features. Non-positive disables the guard.
  double occlusion_min_jump = 0.2;  // metres
  std::uint64_t seed = 0;           // for the planar subsample
};

/// Point-to-line distance from p to the line through p_prev and p_next
/// (the roughness score). Returns nothing when the neighbour base is
/// degenerate (|p_prev - p_next| < 1e-9); such points are skipped.
std::optional<double> roughness(const Vec3& p_prev, const Vec3& p, const Vec3& p_next);

/// Extracts features channel by channel. Points must be time-ordered within
/// each channel. Planar features (roughness < planar_threshold) are capped
/// at max_planar_per_segment by a seeded uniform subsample; edge features
/// are strict local maxima of roughness over the +/-n index window with
/// roughness >= edge_min_prominence. The first and last n points of a
/// channel yield no features. Output is channel-major, time-minor.
std::vector<FeaturePoint> extract_features(const std::vector<LidarPoint>& points,
                                           const FeatureParams& params);

}  // namespace limoco
