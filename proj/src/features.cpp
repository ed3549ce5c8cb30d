#include "limoco/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "limoco/rng.hpp"

namespace limoco {

std::optional<double> roughness(const Vec3& p_prev, const Vec3& p, const Vec3& p_next) {
  const Vec3 base = p_prev - p_next;
  const double base_norm = base.norm();
  if (base_norm < 1e-9) return std::nullopt;
  return (p - p_prev).cross(p - p_next).norm() / base_norm;
}

namespace {

void extract_channel(const std::vector<const LidarPoint*>& pts, const FeatureParams& params,
                     std::vector<FeaturePoint>& out) {
  const std::size_t n = static_cast<std::size_t>(params.n);
  if (pts.size() < 2 * n + 1) return;

  // Roughness for interior indices [n, size-n); NaN marks degenerate bases.
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> score(pts.size(), nan);
  for (std::size_t i = n; i + n < pts.size(); ++i) {
    const auto r = roughness(pts[i - n]->position, pts[i]->position, pts[i + n]->position);
    if (r) score[i] = *r;
  }

  // Occlusion guard: across a range jump, the far-side samples sit on a
  // shadow boundary that moves with the sensor and must not become
  // features of either kind.
  std::vector<bool> shadowed(pts.size(), false);
  if (params.occlusion_min_jump > 0.0) {
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const double dr = pts[i + 1]->position.norm() - pts[i]->position.norm();
      if (dr > params.occlusion_min_jump) {
        for (std::size_t j = i + 1; j <= std::min(i + n, pts.size() - 1); ++j) {
          shadowed[j] = true;
        }
      } else if (dr < -params.occlusion_min_jump) {
        for (std::size_t j = (i >= n - 1 ? i - (n - 1) : 0); j <= i; ++j) {
          shadowed[j] = true;
        }
      }
    }
  }

  for (std::size_t i = n; i + n < pts.size(); ++i) {
    if (std::isnan(score[i]) || shadowed[i]) continue;
    if (score[i] < params.planar_threshold) {
      out.push_back({*pts[i], FeatureKind::Planar, score[i]});
      continue;
    }
    if (score[i] < params.edge_min_prominence) continue;
    bool is_max = true;
    for (std::size_t j = i - n; j <= i + n && is_max; ++j) {
      if (j == i || std::isnan(score[j])) continue;
      if (score[j] >= score[i]) is_max = false;
    }
    if (is_max) out.push_back({*pts[i], FeatureKind::Edge, score[i]});
  }
}

}  // namespace

std::vector<FeaturePoint> extract_features(const std::vector<LidarPoint>& points,
                                           const FeatureParams& params) {
  std::map<int, std::vector<const LidarPoint*>> channels;
  for (const LidarPoint& p : points) channels[p.channel].push_back(&p);

  // Channel-major, time-minor.
  std::vector<FeaturePoint> feats;
  for (const auto& [channel, pts] : channels) extract_channel(pts, params, feats);

  std::vector<std::size_t> planar_pos;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    if (feats[i].kind == FeatureKind::Planar) planar_pos.push_back(i);
  }

  const std::size_t cap = static_cast<std::size_t>(params.max_planar_per_segment);
  if (planar_pos.size() <= cap) return feats;

  // Seeded partial Fisher-Yates over the planar entries, keeping the
  // surviving features in their original order.
  Rng rng(params.seed, 0x66656174u);
  for (std::size_t i = 0; i < cap; ++i) {
    const std::size_t j = i + rng.uniform_index(planar_pos.size() - i);
    std::swap(planar_pos[i], planar_pos[j]);
  }
  planar_pos.resize(cap);
  std::sort(planar_pos.begin(), planar_pos.end());

  std::vector<FeaturePoint> out;
  out.reserve(cap + feats.size() - planar_pos.size());
  std::size_t next_kept = 0;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    if (feats[i].kind == FeatureKind::Edge) {
      out.push_back(feats[i]);
    } else if (next_kept < planar_pos.size() && planar_pos[next_kept] == i) {
      out.push_back(feats[i]);
      ++next_kept;
    }
  }
  return out;
}

}  // namespace limoco
