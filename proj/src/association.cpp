#include "limoco/association.hpp"

#include <cmath>
#include <stdexcept>

#include "limoco/kdtree.hpp"

namespace limoco {

int segment_of(const Window& window, double t) {
  if (t < window.t_f0 || t >= window.t_f1) {
    throw std::out_of_range("segment_of: timestamp outside the window");
  }
  const double frac = (t - window.t_f0) / window.duration();
  int seg = static_cast<int>(std::floor(frac * window.segments));
  if (seg >= window.segments) seg = window.segments - 1;
  return seg;
}

std::vector<std::vector<FeaturePoint>> partition(const std::vector<FeaturePoint>& features,
                                                 const Window& window) {
  std::vector<std::vector<FeaturePoint>> segments(window.segments);
  for (const FeaturePoint& f : features) {
    segments[segment_of(window, f.point.t)].push_back(f);
  }
  return segments;
}

std::vector<ProjectedFeature> project(const std::vector<FeaturePoint>& features,
                                      int segment, const PreintegrationGrid& grid,
                                      const WindowState& state,
                                      const RigidTransform& extrinsic,
                                      std::size_t base_index) {
  const Vec3 g = state.gravity();
  std::vector<ProjectedFeature> out;
  out.reserve(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const FeaturePoint& f = features[i];
    const PreintegratedFactor factor = correct_bias(query(grid, f.point.t), state.biases());
    const RigidTransform pose = pose_at(factor, state.v0, g);
    out.push_back({f, base_index + i, pose * (extrinsic * f.point.position), segment});
  }
  return out;
}

namespace {

void match_direction(const std::vector<ProjectedFeature>& subjects,
                     const std::vector<ProjectedFeature>& targets, FeatureKind kind,
                     std::size_t k, const AssociationParams& params,
                     std::vector<Association>& out) {
  std::vector<Vec3> target_positions;
  std::vector<std::size_t> target_lookup;  // kd index -> position in `targets`
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i].source.kind != kind) continue;
    target_positions.push_back(targets[i].position_I0);
    target_lookup.push_back(i);
  }
  if (target_lookup.size() < k) return;

  const KdTree3 tree(std::move(target_positions), params.kd_leaf_size);
  const double gate_sq = params.gate * params.gate;

  for (const ProjectedFeature& subject : subjects) {
    if (subject.source.kind != kind) continue;
    const auto nn = tree.knn(subject.position_I0, k);
    if (nn.size() < k) continue;
    bool gated = true;
    for (const Neighbour& n : nn) {
      if (n.dist_sq > gate_sq) gated = false;
    }
    if (!gated) continue;

    Association a;
    a.subject = subject;
    a.kind = kind;
    for (const Neighbour& n : nn) a.targets.push_back(targets[target_lookup[n.index]]);

    if (kind == FeatureKind::Planar) {
      const Vec3 t1 = a.targets[0].position_I0;
      const Vec3 normal = (t1 - a.targets[1].position_I0).cross(t1 - a.targets[2].position_I0);
      if (normal.norm() <= 1e-9) continue;  // collinear triple, Eq. denominator vanishes
    }
    out.push_back(std::move(a));
  }
}

}  // namespace

std::vector<Association> associate(const std::vector<ProjectedFeature>& first_seg,
                                   const std::vector<ProjectedFeature>& last_seg,
                                   const AssociationParams& params) {
  std::vector<Association> out;
  match_direction(first_seg, last_seg, FeatureKind::Planar, 3, params, out);
  match_direction(first_seg, last_seg, FeatureKind::Edge, 2, params, out);
  if (params.bidirectional) {
    match_direction(last_seg, first_seg, FeatureKind::Planar, 3, params, out);
    match_direction(last_seg, first_seg, FeatureKind::Edge, 2, params, out);
  }
  return out;
}

}  // namespace limoco
