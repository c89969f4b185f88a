#include <doctest.h>

#include "birchtl/error.hpp"
#include "birchtl/random.hpp"
#include "birchtl/transfer.hpp"

using namespace birchtl;

namespace {

void add(RepresentationDb& db, FeatureVector v, const std::string& task) {
  db.insert(Representation{0, std::move(v), task, "accel", 0, std::nullopt});
}

// Task "A" around x = 0, task "B" around x = 20; each stored vector is far
// enough from the others to form its own subcluster.
struct Fixture {
  RepresentationDb db;
  CfTree tree{BirchParams{0.6, 50}};

  Fixture() {
    for (int i = 0; i < 5; ++i) add(db, {0.0, 2.0 * i}, "A");
    for (int i = 0; i < 5; ++i) add(db, {20.0, 2.0 * i}, "B");
    tree.insert_all(db.vectors());
  }
};

Dataset rows(std::initializer_list<FeatureVector> vs) { return Dataset::from_rows(vs); }

}  // namespace

TEST_CASE("demand check on constructed streams") {
  DemandCheckConfig cfg{3, 2, 0.2};
  const std::vector<double> flat(10, 0.8);
  const auto r = demand_check(flat, cfg);
  CHECK(!r.triggered);
  CHECK(r.baseline == doctest::Approx(0.8));
  CHECK(r.recent == doctest::Approx(0.8));

  const std::vector<double> drop{0.1, 0.9, 0.9, 0.9, 0.4, 0.4};
  const auto d = demand_check(drop, cfg);
  CHECK(d.triggered);
  CHECK(d.baseline == doctest::Approx(0.9));
  CHECK(d.recent == doctest::Approx(0.4));

  // recent == baseline * (1 - ratio) exactly: 1.0 * 0.5 == 0.5.
  const std::vector<double> edge{1.0, 1.0, 1.0, 0.5, 0.5};
  CHECK(!demand_check(edge, DemandCheckConfig{3, 2, 0.5}).triggered);
  const std::vector<double> below{1.0, 1.0, 1.0, 0.5, 0.4999999};
  CHECK(demand_check(below, DemandCheckConfig{3, 2, 0.5}).triggered);

  // Improvement never triggers.
  const std::vector<double> up{0.1, 0.1, 0.1, 0.9, 0.9};
  CHECK(!demand_check(up, cfg).triggered);
}

TEST_CASE("demand check errors") {
  const std::vector<double> short_history{1, 2, 3, 4};
  CHECK_THROWS_AS(demand_check(short_history, DemandCheckConfig{3, 2, 0.2}), InvalidArgument);
  const std::vector<double> h(10, 1.0);
  CHECK_THROWS_AS(demand_check(h, DemandCheckConfig{0, 2, 0.2}), InvalidArgument);
  CHECK_THROWS_AS(demand_check(h, DemandCheckConfig{3, 2, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(demand_check(h, DemandCheckConfig{3, 2, 0.0}), InvalidArgument);
  const std::vector<double> bad{1, 1, 1, NAN, 1};
  CHECK_THROWS_AS(demand_check(bad, DemandCheckConfig{3, 2, 0.2}), InvalidArgument);
}

TEST_CASE("query identical to stored exemplars transfers with similarity one") {
  Fixture f;
  REQUIRE(f.tree.subcluster_count() == 10);
  const auto q = rows({{0.0, 0.0}, {0.0, 4.0}, {0.0, 8.0}});
  const auto d = similarity_check(f.db, f.tree, q);
  CHECK(d.outcome == TransferOutcome::transfer);
  REQUIRE(d.candidates.size() == 1);
  CHECK(d.candidates[0].task_id == "A");
  CHECK(d.candidates[0].mean_similarity == 1.0);
  CHECK(d.candidates[0].matched_fraction == 1.0);
  REQUIRE(d.per_vector.size() == 3);
  for (const auto& m : d.per_vector) {
    CHECK(m.matched);
    CHECK(m.distance == 0.0);
    CHECK(m.dominant_task == std::optional<std::string>("A"));
  }
}

TEST_CASE("far query does not transfer") {
  Fixture f;
  const auto d = similarity_check(f.db, f.tree, rows({{10.0, 50.0}, {-40.0, 3.0}}));
  CHECK(d.outcome == TransferOutcome::no_transfer);
  CHECK(d.candidates.empty());
  for (const auto& m : d.per_vector) CHECK(!m.matched);
  CHECK(select_transfer_cases(d, 3).empty());
}

TEST_CASE("mixed query counts matched vectors") {
  Fixture f;
  Dataset q;
  for (int i = 0; i < 8; ++i) q.push_back(FeatureVector{0.0, 2.0 * (i % 5)});
  q.push_back(FeatureVector{10.0, 1.0});
  q.push_back(FeatureVector{0.0, -5.0});
  const auto d = similarity_check(f.db, f.tree, q, SimilarityConfig{0.6, 0.5});
  CHECK(d.outcome == TransferOutcome::transfer);
  REQUIRE(d.candidates.size() == 1);
  CHECK(d.candidates[0].task_id == "A");
  CHECK(d.candidates[0].matched_fraction == 0.8);
  CHECK(d.candidates[0].mean_similarity == 1.0);

  // Raising the bar above 0.8 removes the candidate.
  CHECK(similarity_check(f.db, f.tree, q, SimilarityConfig{0.6, 0.9}).outcome ==
        TransferOutcome::no_transfer);
}

TEST_CASE("similarity decreases linearly with distance") {
  Fixture f;
  const auto d = similarity_check(f.db, f.tree, rows({{0.3, 0.0}}), SimilarityConfig{0.6, 1.0});
  REQUIRE(d.candidates.size() == 1);
  CHECK(d.candidates[0].mean_similarity == doctest::Approx(0.5));
  // Exactly on the threshold still matches, with similarity 0.
  const auto edge = similarity_check(f.db, f.tree, rows({{0.6, 0.0}}), SimilarityConfig{0.6, 1.0});
  REQUIRE(edge.candidates.size() == 1);
  CHECK(edge.candidates[0].mean_similarity == 0.0);
}

TEST_CASE("candidates rank by similarity then task id") {
  Fixture f;
  // Half on A exactly, half on B at distance 0.3.
  const auto q = rows({{0.0, 0.0}, {20.3, 0.0}});
  const auto d = similarity_check(f.db, f.tree, q, SimilarityConfig{0.6, 0.5});
  REQUIRE(d.candidates.size() == 2);
  CHECK(d.candidates[0].task_id == "A");
  CHECK(d.candidates[1].task_id == "B");
  CHECK(select_transfer_cases(d, 1) == std::vector<std::string>{"A"});
  CHECK(select_transfer_cases(d, 5) == std::vector<std::string>{"A", "B"});

  // Equal similarity falls back to the task id.
  const auto tie = similarity_check(f.db, f.tree, rows({{20.0, 0.0}, {0.0, 0.0}}),
                                    SimilarityConfig{0.6, 0.5});
  REQUIRE(tie.candidates.size() == 2);
  CHECK(tie.candidates[0].task_id == "A");
}

TEST_CASE("outcome is invariant under query permutation and repeatable") {
  Fixture f;
  Rng rng(3);
  Dataset q(12, 2);
  for (std::size_t i = 0; i < 12; ++i) {
    q.row(i)[0] = (i % 2 ? 20.0 : 0.0) + 0.2 * rng.normal();
    q.row(i)[1] = 2.0 * static_cast<double>(rng.below(5)) + 0.2 * rng.normal();
  }
  const auto base = similarity_check(f.db, f.tree, q, SimilarityConfig{0.6, 0.2});
  const auto again = similarity_check(f.db, f.tree, q, SimilarityConfig{0.6, 0.2});
  CHECK(base.candidates.size() == again.candidates.size());
  for (std::size_t c = 0; c < base.candidates.size(); ++c) {
    CHECK(base.candidates[c].mean_similarity == again.candidates[c].mean_similarity);
  }
  for (int t = 0; t < 10; ++t) {
    const auto perm = rng.permutation(12);
    const auto other = similarity_check(f.db, f.tree, q.select(perm), SimilarityConfig{0.6, 0.2});
    REQUIRE(other.candidates.size() == base.candidates.size());
    CHECK(other.outcome == base.outcome);
    for (std::size_t c = 0; c < base.candidates.size(); ++c) {
      CHECK(other.candidates[c].task_id == base.candidates[c].task_id);
      CHECK(other.candidates[c].matched_fraction == base.candidates[c].matched_fraction);
      CHECK(other.candidates[c].mean_similarity ==
            doctest::Approx(base.candidates[c].mean_similarity).epsilon(1e-12));
    }
    for (std::size_t i = 0; i < 12; ++i)
      CHECK(other.per_vector[i].subcluster == base.per_vector[perm[i]].subcluster);
  }
}

TEST_CASE("an unrelated far task does not change the decision") {
  Fixture f;
  const auto q = rows({{0.0, 0.0}, {0.0, 2.0}});
  const auto before = similarity_check(f.db, f.tree, q);
  add(f.db, {500.0, 500.0}, "C");
  f.tree.insert(FeatureVector{500.0, 500.0});
  const auto after = similarity_check(f.db, f.tree, q);
  REQUIRE(after.candidates.size() == before.candidates.size());
  CHECK(after.candidates[0].task_id == before.candidates[0].task_id);
  CHECK(after.candidates[0].mean_similarity == before.candidates[0].mean_similarity);
}

TEST_CASE("dominant task takes the majority with lexicographic ties") {
  RepresentationDb db;
  add(db, {0.0}, "zeta");
  add(db, {0.1}, "alpha");
  add(db, {10.0}, "m");
  add(db, {10.1}, "m");
  add(db, {10.2}, "b");
  CfTree tree(BirchParams{1.0, 50});
  tree.insert_all(db.vectors());
  REQUIRE(tree.subcluster_count() == 2);
  const auto dom = dominant_tasks(db, tree);
  CHECK(dom[0] == std::optional<std::string>("alpha"));
  CHECK(dom[1] == std::optional<std::string>("m"));

  // A subcluster with no stored entries has no dominant task and never matches.
  tree.insert(FeatureVector{100.0});
  const auto d = similarity_check(db, tree, Dataset::from_rows({{100.0}}));
  CHECK(!d.per_vector[0].matched);
  CHECK(!d.per_vector[0].dominant_task);
  CHECK(d.outcome == TransferOutcome::no_transfer);
}

TEST_CASE("similarity check errors") {
  Fixture f;
  CHECK_THROWS_AS(similarity_check(f.db, f.tree, Dataset{}), InvalidArgument);
  CHECK_THROWS_AS(similarity_check(f.db, f.tree, rows({{1.0, 2.0, 3.0}})), DimensionMismatch);
  CHECK_THROWS_AS(similarity_check(RepresentationDb{}, f.tree, rows({{1.0, 2.0}})), InvalidArgument);
  CHECK_THROWS_AS(similarity_check(f.db, CfTree{}, rows({{1.0, 2.0}})), InvalidArgument);
  CHECK_THROWS_AS(similarity_check(f.db, f.tree, rows({{1.0, 2.0}}), SimilarityConfig{0.0, 0.5}),
                  InvalidArgument);
  CHECK_THROWS_AS(similarity_check(f.db, f.tree, rows({{1.0, 2.0}}), SimilarityConfig{0.6, 0.0}),
                  InvalidArgument);
}
