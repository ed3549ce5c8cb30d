#include "limoco/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "limoco/errors.hpp"
#include "limoco/kdtree.hpp"

namespace limoco {

double mean_best_distance(const std::vector<Vec3>& cloud, const std::vector<Vec3>& reference,
                          double fraction) {
  if (cloud.empty() || reference.empty()) {
    throw std::invalid_argument("mean_best_distance: empty input cloud");
  }
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw std::invalid_argument("mean_best_distance: fraction must be in (0, 1]");
  }
  const KdTree3 tree(reference);
  std::vector<double> dist;
  dist.reserve(cloud.size());
  for (const Vec3& p : cloud) {
    dist.push_back(std::sqrt(tree.knn(p, 1).front().dist_sq));
  }
  const std::size_t keep =
      static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(dist.size())));
  std::nth_element(dist.begin(), dist.begin() + (keep - 1), dist.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < keep; ++i) sum += dist[i];
  return sum / static_cast<double>(keep);
}

double double_wall_gap(const std::vector<SpacetimePoint>& points,
                       const DoubleWallParams& params) {
  if (points.empty()) throw NoOverlapError("double_wall_gap: no points");

  double t_min = points.front().t, t_max = points.front().t;
  for (const SpacetimePoint& p : points) {
    t_min = std::min(t_min, p.t);
    t_max = std::max(t_max, p.t);
  }
  const double quarter = 0.25 * (t_max - t_min);
  if (quarter <= 0.0) throw NoOverlapError("double_wall_gap: no temporal spread");

  std::vector<Vec3> early;
  std::vector<const SpacetimePoint*> late;
  for (const SpacetimePoint& p : points) {
    if (p.t < t_min + quarter) early.push_back(p.position_I0);
    if (p.t > t_max - quarter) late.push_back(&p);
  }
  if (early.empty() || late.empty()) throw NoOverlapError("double_wall_gap: empty quarter bin");

  const KdTree3 tree(early);
  double sum = 0.0;
  std::size_t count = 0;
  for (const SpacetimePoint* p : late) {
    const auto idx = tree.radius(p->position_I0, params.radius);
    if (idx.size() < static_cast<std::size_t>(params.min_neighbours)) continue;

    Vec3 centroid = Vec3::Zero();
    for (std::size_t i : idx) centroid += tree.point(i);
    centroid /= static_cast<double>(idx.size());
    Mat3 cov = Mat3::Zero();
    for (std::size_t i : idx) {
      const Vec3 d = tree.point(i) - centroid;
      cov += d * d.transpose();
    }
    const Vec3 normal = eig_sym(cov).eigenvectors.col(0);
    sum += std::abs(normal.dot(p->position_I0 - centroid));
    ++count;
  }
  if (count == 0) {
    throw NoOverlapError("double_wall_gap: no late point has enough early neighbours");
  }
  return sum / static_cast<double>(count);
}

ClassificationMetrics classification_metrics(const std::vector<DynamicLabel>& predicted,
                                             const std::vector<bool>& truth_dynamic) {
  if (predicted.size() != truth_dynamic.size()) {
    throw std::invalid_argument("classification_metrics: length mismatch");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] == DynamicLabel::Unknown) continue;
    const bool pred = predicted[i] == DynamicLabel::Dynamic;
    if (pred && truth_dynamic[i]) ++c.tp;
    else if (pred && !truth_dynamic[i]) ++c.fp;
    else if (!pred && truth_dynamic[i]) ++c.fn;
    else ++c.tn;
  }
  return metrics_from_counts(c);
}

ClassificationMetrics metrics_from_counts(const ConfusionCounts& c) {
  ClassificationMetrics m;
  m.counts = c;
  const auto ratio = [](double num, long denom) -> std::optional<double> {
    if (denom == 0) return std::nullopt;
    return num / static_cast<double>(denom);
  };
  m.iou = ratio(static_cast<double>(c.tp), c.tp + c.fp + c.fn);
  m.recall = ratio(static_cast<double>(c.tp), c.tp + c.fn);
  m.precision = ratio(static_cast<double>(c.tp), c.tp + c.fp);
  m.accuracy = ratio(static_cast<double>(c.tp + c.tn), c.tp + c.fp + c.fn + c.tn);
  if (m.precision && m.recall && (*m.precision + *m.recall) > 0.0) {
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  }
  return m;
}

}  // namespace limoco
