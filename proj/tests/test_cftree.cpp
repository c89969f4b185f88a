#include <doctest.h>

#include <cmath>
#include <limits>
#include <thread>

#include "birchtl/cftree.hpp"
#include "birchtl/error.hpp"
#include "birchtl/random.hpp"
#include "oracles.hpp"

using namespace birchtl;

namespace {

Dataset random_points(std::size_t n, std::size_t d, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Dataset ds(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (auto& v : ds.row(i)) v = scale * rng.uniform();
  return ds;
}

}  // namespace

TEST_CASE("cf_from_point") {
  const auto a = cf_from_point(FeatureVector{2, 0});
  CHECK(a.n == 1);
  CHECK(a.ls == FeatureVector{2, 0});
  CHECK(a.ss == 4.0);
  CHECK(a.radius() == 0.0);
  CHECK(cf_from_point(FeatureVector{0, 0}).ss == 0.0);
  CHECK(cf_from_point(FeatureVector{1, 1, 1}).ss == 3.0);
  CHECK_THROWS_AS(cf_from_point(FeatureVector{NAN}), InvalidArgument);
}

TEST_CASE("cf_merge is additive") {
  const ClusteringFeature a{1, {1, 0}, 1}, b{1, {3, 0}, 9};
  const auto m = cf_merge(a, b);
  CHECK(m.n == 2);
  CHECK(m.ls == FeatureVector{4, 0});
  CHECK(m.ss == 10.0);
  CHECK(m.centroid() == FeatureVector{2, 0});
  CHECK(m.radius() == doctest::Approx(1.0));
  CHECK_THROWS_AS(cf_merge(a, ClusteringFeature{1, {1}, 1}), DimensionMismatch);

  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    ClusteringFeature x{rng.below(9) + 1, {rng.normal(), rng.normal()}, 10 * rng.uniform()};
    ClusteringFeature y{rng.below(9) + 1, {rng.normal(), rng.normal()}, 10 * rng.uniform()};
    CHECK(cf_merge(x, y) == cf_merge(y, x));
  }
}

TEST_CASE("radius agrees with the point-based definition") {
  Rng rng(17);
  for (int t = 0; t < 30; ++t) {
    std::vector<std::vector<double>> pts;
    ClusteringFeature cf;
    for (int i = 0; i < 7; ++i) {
      pts.push_back({rng.normal() * 3 + 5, rng.normal()});
      cf += cf_from_point(pts.back());
    }
    CHECK(cf.radius() == doctest::Approx(oracle::radius_of(pts)).epsilon(1e-9));
  }
}

TEST_CASE("birch_insert small example") {
  CfTree tree(BirchParams{1.0, 2});
  CHECK(tree.insert(FeatureVector{0.0}) == 0);
  CHECK(tree.insert(FeatureVector{0.5}) == 0);
  CHECK(tree.subcluster_count() == 1);
  CHECK(tree.subclusters()[0].cf.radius() == doctest::Approx(oracle::radius_of({{0.0}, {0.5}})));
  CHECK(oracle::radius_of({{0.0}, {0.5}}) == doctest::Approx(0.25));

  // Absorbing [5] would give the three-point radius, which exceeds 1.
  CHECK(oracle::radius_of({{0.0}, {0.5}, {5.0}}) == doctest::Approx(2.2485).epsilon(1e-4));
  CHECK(tree.insert(FeatureVector{5.0}) == 1);
  const auto subs = tree.subclusters();
  REQUIRE(subs.size() == 2);
  CHECK(subs[0].cf.n == 2);
  CHECK(subs[1].cf.n == 1);
  for (const auto& s : subs) CHECK(s.centroid == s.cf.centroid());
  CHECK(tree.audit().empty());
}

TEST_CASE("threshold zero keeps every distinct point apart") {
  const auto ds = random_points(40, 3, 2);
  CfTree tree(BirchParams{0.0, 50});
  tree.insert_all(ds);
  CHECK(tree.subcluster_count() == 40);
  CHECK(tree.height() == 1);
}

TEST_CASE("unbounded threshold gives a single subcluster") {
  const auto ds = random_points(300, 4, 3, 100.0);
  const auto fit = birch_fit(BirchParams{std::numeric_limits<double>::infinity(), 3}, ds);
  CHECK(fit.model.k() == 1);
  for (int l : fit.model.labels) CHECK(l == 0);
}

TEST_CASE("splits keep the tree balanced and consistent") {
  const auto ds = random_points(2000, 2, 5);
  CfTree tree(BirchParams{0.01, 4});
  tree.insert_all(ds);
  CHECK(tree.height() > 2);
  CHECK(tree.total_count() == 2000);
  const auto issues = tree.audit();
  CHECK(issues.empty());
  std::uint64_t total = 0;
  for (const auto& s : tree.subclusters()) {
    total += s.cf.n;
    CHECK(s.cf.radius() <= 0.01);
  }
  CHECK(total == 2000);
}

TEST_CASE("insert returns the index of the absorbing subcluster") {
  const auto ds = random_points(500, 2, 6);
  CfTree tree(BirchParams{0.05, 3});
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto before = tree.subclusters();
    const auto idx = tree.insert(ds.row(i));
    const auto after = tree.subclusters();
    REQUIRE(idx < after.size());
    // The indexed subcluster is either new or an old one that absorbed the sample.
    bool grew_or_new = after.size() == before.size() + 1 && after[idx].cf == cf_from_point(ds.row(i));
    for (const auto& b : before) {
      auto merged = b.cf;
      merged += cf_from_point(ds.row(i));
      if (merged == after[idx].cf) grew_or_new = true;
    }
    CHECK(grew_or_new);
  }
}

TEST_CASE("two separated blobs become two subclusters") {
  Dataset ds;
  Rng rng(1);
  std::vector<int> truth;
  for (int b = 0; b < 2; ++b) {
    for (int i = 0; i < 5; ++i) {
      ds.push_back(FeatureVector{100.0 * b + 0.01 * rng.normal(), 0.01 * rng.normal()});
      truth.push_back(b);
    }
  }
  const auto fit = birch_fit(BirchParams{0.6, 50}, ds);
  CHECK(fit.model.k() == 2);
  CHECK(oracle::canonical(fit.model.labels) == truth);
}

TEST_CASE("one point") {
  const auto fit = birch_fit(BirchParams{}, Dataset::from_rows({{1.0, 2.0}}));
  CHECK(fit.model.k() == 1);
  CHECK(fit.model.labels == std::vector<int>{0});
  CHECK_THROWS_AS(birch_fit(BirchParams{}, Dataset{}), InvalidArgument);
}

TEST_CASE("chunked insertion equals one-shot fitting") {
  const auto ds = random_points(600, 3, 12);
  const BirchParams p{0.08, 5};
  const auto whole = birch_fit(p, ds);
  Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Dataset> chunks;
    std::size_t at = 0;
    while (at < ds.size()) {
      const std::size_t len = std::min<std::size_t>(ds.size() - at, 1 + rng.below(150));
      std::vector<std::size_t> idx(len);
      std::iota(idx.begin(), idx.end(), at);
      chunks.push_back(ds.select(idx));
      at += len;
    }
    const auto chunked = birch_fit_chunked(p, chunks);
    CHECK(chunked.tree == whole.tree);
    CHECK(chunked.model.labels == whole.model.labels);
  }
}

TEST_CASE("predict is side-effect free and matches fitted labels") {
  const auto ds = random_points(400, 2, 13);
  const auto fit = birch_fit(BirchParams{0.1, 6}, ds);
  const CfTree copy = fit.tree;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto a = fit.tree.predict(ds.row(i));
    CHECK(a == fit.tree.predict(ds.row(i)));
    CHECK(static_cast<int>(a) == fit.model.labels[i]);
  }
  CHECK(copy == fit.tree);
  const auto subs = fit.tree.subclusters();
  for (std::size_t s = 0; s < subs.size(); ++s) CHECK(fit.tree.predict(subs[s].centroid) == s);
  CHECK(fit.tree.predict(ds) == std::vector<std::size_t>(fit.model.labels.begin(), fit.model.labels.end()));
}

TEST_CASE("predict runs concurrently on a fitted tree") {
  const auto ds = random_points(300, 2, 14);
  const auto fit = birch_fit(BirchParams{0.1, 6}, ds);
  std::vector<std::vector<std::size_t>> results(4);
  std::vector<std::thread> pool;
  for (auto& r : results) pool.emplace_back([&] { r = fit.tree.predict(ds); });
  for (auto& t : pool) t.join();
  for (const auto& r : results) CHECK(r == results.front());
}

TEST_CASE("tree errors") {
  CfTree tree;
  CHECK(tree.subclusters().empty());
  CHECK_THROWS_AS(tree.predict(FeatureVector{1.0}), InvalidArgument);
  tree.insert(FeatureVector{1.0, 2.0});
  CHECK_THROWS_AS(tree.insert(FeatureVector{1.0}), DimensionMismatch);
  CHECK_THROWS_AS(tree.insert(FeatureVector{1.0, INFINITY}), InvalidArgument);
  CHECK_THROWS_AS(tree.predict(FeatureVector{1.0}), DimensionMismatch);
  CHECK_THROWS_AS(CfTree(BirchParams{-1.0, 5}), InvalidArgument);
  CHECK_THROWS_AS(CfTree(BirchParams{1.0, 1}), InvalidArgument);
}

TEST_CASE("json round trip preserves the tree exactly") {
  const auto ds = random_points(700, 3, 15, 7.0);
  const auto fit = birch_fit(BirchParams{0.3, 4}, ds);
  const auto back = CfTree::from_json(fit.tree.to_json());
  CHECK(back == fit.tree);
  CHECK(back.predict(ds) == fit.tree.predict(ds));

  const auto inf = birch_fit(BirchParams{std::numeric_limits<double>::infinity(), 4}, ds);
  CHECK(CfTree::from_json(inf.tree.to_json()) == inf.tree);

  CHECK_THROWS_AS(CfTree::from_json("{"), ParseError);
  CHECK_THROWS_AS(CfTree::from_json(R"({"format":"other"})"), ParseError);
}

TEST_CASE("copies are independent") {
  const auto ds = random_points(50, 2, 16);
  auto fit = birch_fit(BirchParams{0.1, 3}, ds);
  CfTree copy = fit.tree;
  fit.tree.insert(FeatureVector{50.0, 50.0});
  CHECK(!(copy == fit.tree));
  CHECK(copy.total_count() == 50);
}
