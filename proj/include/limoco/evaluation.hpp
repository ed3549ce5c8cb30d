// Quality metrics: best-fraction nearest-neighbour map distance, the
// double-wall gap from temporal self-overlap, and classification metrics
// over static/dynamic labels with a range gate.

#pragma once

#include <optional>
#include <vector>

#include "limoco/dynamics.hpp"
#include "limoco/geom.hpp"

namespace limoco {

struct ConfusionCounts {
  long tp = 0, fp = 0, fn = 0, tn = 0;  // Dynamic is the positive class
};

struct ClassificationMetrics {
  ConfusionCounts counts;
  std::optional<double> iou;
  std::optional<double> recall;
  std::optional<double> precision;
  std::optional<double> f1;
  std::optional<double> accuracy;
};

/// Mean of the smallest ceil(fraction * n) nearest-neighbour distances from
/// cloud to reference. Throws std::invalid_argument on empty inputs.
double mean_best_distance(const std::vector<Vec3>& cloud, const std::vector<Vec3>& reference,
                          double fraction = 0.75);

struct DoubleWallParams {
  double radius = 0.3;      // metres, early-neighbour search
  int min_neighbours = 3;   // plane fit minimum
};

/// Double-wall gap of one corrected window: points are split into the first
/// and last quarter of the window's time span; each late point with enough
/// early neighbours is measured against a local least-squares plane fit of
/// those neighbours, and the mean absolute distance is returned. Throws
/// NoOverlapError when no late point has enough early neighbours.
double double_wall_gap(const std::vector<SpacetimePoint>& points,
                       const DoubleWallParams& params = {});

/// Confusion counts and derived metrics; predictions labelled Unknown are
/// excluded. Ratios with zero denominators are left unset. Throws
/// std::invalid_argument on length mismatch.
ClassificationMetrics classification_metrics(const std::vector<DynamicLabel>& predicted,
                                             const std::vector<bool>& truth_dynamic);

ClassificationMetrics metrics_from_counts(const ConfusionCounts& counts);

}  // namespace limoco
