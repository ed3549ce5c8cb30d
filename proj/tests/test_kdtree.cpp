#include <doctest.h>

#include "limoco/kdtree.hpp"
#include "limoco/rng.hpp"
#include "support/oracles.hpp"

using namespace limoco;

namespace {

std::vector<Vec3> random_cloud(Rng& rng, std::size_t n, double extent) {
  std::vector<Vec3> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.emplace_back(rng.uniform(-extent, extent), rng.uniform(-extent, extent),
                     rng.uniform(-extent, extent));
  }
  return out;
}

}  // namespace

TEST_CASE("knn matches brute force exactly, including tie-breaks") {
  Rng rng(42);
  for (int trial = 0; trial < 30; ++trial) {
    auto cloud = random_cloud(rng, 200, 2.0);
    // Inject exact duplicates to force distance ties.
    for (int i = 0; i < 20; ++i) {
      cloud.push_back(cloud[static_cast<std::size_t>(rng.uniform_index(cloud.size()))]);
    }
    const KdTree3 tree(cloud, 8);
    for (int q = 0; q < 20; ++q) {
      const Vec3 query(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
      const std::size_t k = 1 + rng.uniform_index(6);
      const auto got = tree.knn(query, k);
      const auto want = test::brute_knn(cloud, query, k);
      REQUIRE(got.size() == want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].index == want[i].index);
        CHECK(got[i].dist_sq == want[i].dist_sq);
      }
    }
  }
}

TEST_CASE("radius search matches brute force") {
  Rng rng(43);
  const auto cloud = random_cloud(rng, 300, 1.0);
  const KdTree3 tree(cloud);
  for (int q = 0; q < 30; ++q) {
    const Vec3 query(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    const double r = rng.uniform(0.05, 0.8);
    CHECK(tree.radius(query, r) == test::brute_radius(cloud, query, r));
  }
}

TEST_CASE("queries on tiny and empty trees") {
  const KdTree3 empty(std::vector<Vec3>{});
  CHECK(empty.knn(Vec3::Zero(), 3).empty());
  CHECK(empty.radius(Vec3::Zero(), 1.0).empty());

  const KdTree3 one(std::vector<Vec3>{Vec3(1.0, 0.0, 0.0)});
  const auto nn = one.knn(Vec3::Zero(), 5);
  REQUIRE(nn.size() == 1);
  CHECK(nn[0].index == 0);
  CHECK(nn[0].dist_sq == doctest::Approx(1.0));
}

TEST_CASE("radius boundary is inclusive") {
  const std::vector<Vec3> cloud{Vec3(1.0, 0.0, 0.0), Vec3(2.0, 0.0, 0.0)};
  const KdTree3 tree(cloud);
  const auto idx = tree.radius(Vec3::Zero(), 1.0);
  REQUIRE(idx.size() == 1);
  CHECK(idx[0] == 0);
}
