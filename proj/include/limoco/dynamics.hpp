// Per-point dynamicity from spatiotemporal normals: the 4x4 covariance of
// [x, y, z, t] neighbourhoods is eigendecomposed and the absolute temporal
// component of the smallest-eigenvalue eigenvector scores the point. For a
// plane translating along its unit normal at speed v the score equals
// v / sqrt(1 + v^2); static surfaces score zero.

#pragma once

#include <cstddef>
#include <vector>

#include "limoco/geom.hpp"

namespace limoco {

struct SpacetimePoint {
  Vec3 position_I0 = Vec3::Zero();  // metres, common window frame
  double t = 0.0;                   // seconds
};

enum class DynamicLabel { Static, Dynamic, Unknown };

struct LabelledPoint {
  SpacetimePoint point;
  double score = 0.0;  // in [0, 1]; 0 when the label is Unknown
  DynamicLabel label = DynamicLabel::Unknown;
};

struct DynamicsParams {
  double search_radius = 0.3;   // metres, spatial neighbour search
  double score_threshold = 0.4;
  double down_voxel = 0.1;      // metres
  double up_voxel = 0.2;        // metres
  int min_neighbours = 8;
};

/// One representative per occupied spatial voxel: the point nearest the
/// voxel's spacetime centroid (raw seconds/metres units). Representatives
/// keep their input order by first occupancy.
std::vector<SpacetimePoint> downsample(const std::vector<SpacetimePoint>& points,
                                       double voxel);

/// Population spacetime covariance of the neighbour set:
/// (1/|N|) sum ([p; t] - m)([p; t] - m)^T with m the spacetime mean.
Mat4 spacetime_covariance(const std::vector<SpacetimePoint>& neighbours);

/// Absolute temporal component of the smallest-eigenvalue eigenvector.
/// Eigenvalue ties are broken towards the smallest temporal component
/// (conservative: favours Static).
double dynamicity_score(const Mat4& cov);

/// Scores voxel representatives with spatial-radius neighbourhoods, then
/// propagates each label to the raw points within up_voxel of their nearest
/// representative. Representatives with fewer than min_neighbours
/// neighbours, and raw points with no representative in range, are Unknown.
std::vector<LabelledPoint> classify(const std::vector<SpacetimePoint>& points,
                                    const DynamicsParams& params);

}  // namespace limoco
