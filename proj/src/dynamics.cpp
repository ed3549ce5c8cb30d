#include "limoco/dynamics.hpp"

#include <cmath>
#include <cstdint>
#include <unordered_map>

#include "limoco/kdtree.hpp"

namespace limoco {

namespace {

struct VoxelKey {
  std::int64_t x, y, z;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelHash {
  std::size_t operator()(const VoxelKey& k) const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::int64_t v : {k.x, k.y, k.z}) {
      h ^= static_cast<std::uint64_t>(v);
      h *= 0x100000001b3ull;
    }
    return static_cast<std::size_t>(h);
  }
};

VoxelKey key_of(const Vec3& p, double voxel) {
  return {static_cast<std::int64_t>(std::floor(p.x() / voxel)),
          static_cast<std::int64_t>(std::floor(p.y() / voxel)),
          static_cast<std::int64_t>(std::floor(p.z() / voxel))};
}

Vec4 stack(const SpacetimePoint& p) {
  return {p.position_I0.x(), p.position_I0.y(), p.position_I0.z(), p.t};
}

}  // namespace

std::vector<SpacetimePoint> downsample(const std::vector<SpacetimePoint>& points,
                                       double voxel) {
  struct Cell {
    Vec4 sum = Vec4::Zero();
    std::size_t count = 0;
    std::size_t order = 0;  // first-occupancy rank
  };
  std::unordered_map<VoxelKey, Cell, VoxelHash> cells;
  cells.reserve(points.size());

  for (const SpacetimePoint& p : points) {
    Cell& c = cells[key_of(p.position_I0, voxel)];
    if (c.count == 0) c.order = cells.size() - 1;
    c.sum += stack(p);
    ++c.count;
  }

  // Nearest point to each voxel's spacetime centroid; smaller index wins ties.
  struct Best {
    double dist_sq = 0.0;
    std::size_t index = 0;
    bool set = false;
    std::size_t order = 0;
  };
  std::unordered_map<VoxelKey, Best, VoxelHash> best;
  best.reserve(cells.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const VoxelKey key = key_of(points[i].position_I0, voxel);
    const Cell& c = cells.at(key);
    const Vec4 centroid = c.sum / static_cast<double>(c.count);
    const double d = (stack(points[i]) - centroid).squaredNorm();
    Best& b = best[key];
    if (!b.set || d < b.dist_sq) {
      b = {d, i, true, c.order};
    }
  }

  std::vector<std::size_t> ordered(best.size());
  for (const auto& [key, b] : best) ordered[b.order] = b.index;

  std::vector<SpacetimePoint> out;
  out.reserve(ordered.size());
  for (std::size_t i : ordered) out.push_back(points[i]);
  return out;
}

Mat4 spacetime_covariance(const std::vector<SpacetimePoint>& neighbours) {
  Mat4 cov = Mat4::Zero();
  if (neighbours.empty()) return cov;
  Vec4 mean = Vec4::Zero();
  for (const SpacetimePoint& p : neighbours) mean += stack(p);
  mean /= static_cast<double>(neighbours.size());
  for (const SpacetimePoint& p : neighbours) {
    const Vec4 d = stack(p) - mean;
    cov += d * d.transpose();
  }
  return cov / static_cast<double>(neighbours.size());
}

double dynamicity_score(const Mat4& cov) {
  const SymEig4 eig = eig_sym(cov);
  double score = std::abs(eig.eigenvectors(3, 0));
  // Tie on the smallest eigenvalue: pick the eigenvector with the smallest
  // temporal magnitude.
  const double scale = std::abs(eig.eigenvalues[3]);
  const double tol = 1e-12 * (scale > 1.0 ? scale : 1.0);
  for (int i = 1; i < 4; ++i) {
    if (eig.eigenvalues[i] - eig.eigenvalues[0] <= tol) {
      score = std::min(score, std::abs(eig.eigenvectors(3, i)));
    }
  }
  return score;
}

std::vector<LabelledPoint> classify(const std::vector<SpacetimePoint>& points,
                                    const DynamicsParams& params) {
  std::vector<LabelledPoint> out;
  if (points.empty()) return out;

  const std::vector<SpacetimePoint> reps = downsample(points, params.down_voxel);

  std::vector<Vec3> rep_positions;
  rep_positions.reserve(reps.size());
  for (const SpacetimePoint& r : reps) rep_positions.push_back(r.position_I0);
  const KdTree3 tree(rep_positions);

  std::vector<double> rep_score(reps.size(), 0.0);
  std::vector<DynamicLabel> rep_label(reps.size(), DynamicLabel::Unknown);
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const auto idx = tree.radius(reps[i].position_I0, params.search_radius);
    if (idx.size() < static_cast<std::size_t>(params.min_neighbours)) continue;
    std::vector<SpacetimePoint> neighbours;
    neighbours.reserve(idx.size());
    for (std::size_t j : idx) neighbours.push_back(reps[j]);
    const double s = dynamicity_score(spacetime_covariance(neighbours));
    rep_score[i] = s;
    rep_label[i] = s > params.score_threshold ? DynamicLabel::Dynamic : DynamicLabel::Static;
  }

  // Upsample: each raw point inherits from its nearest representative
  // within up_voxel.
  out.reserve(points.size());
  for (const SpacetimePoint& p : points) {
    LabelledPoint lp;
    lp.point = p;
    const auto nn = tree.knn(p.position_I0, 1);
    if (!nn.empty() && nn.front().dist_sq <= params.up_voxel * params.up_voxel) {
      const std::size_t r = nn.front().index;
      if (rep_label[r] != DynamicLabel::Unknown) {
        lp.score = rep_score[r];
        lp.label = rep_label[r];
      }
    }
    out.push_back(lp);
  }
  return out;
}

}  // namespace limoco
