#include <doctest.h>

#include <cmath>
#include <sstream>

#include "birchtl/error.hpp"
#include "birchtl/random.hpp"
#include "birchtl/repdb.hpp"
#include "oracles.hpp"

using namespace birchtl;

namespace {

Representation rep(FeatureVector v, std::string task, std::int64_t t = 0,
                   std::optional<std::string> label = std::nullopt, std::string sensor = "accel") {
  return Representation{0, std::move(v), std::move(task), std::move(sensor), t, std::move(label)};
}

RepresentationDb random_db(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  RepresentationDb db;
  const char* tasks[] = {"press", "mill", "weld"};
  for (std::size_t i = 0; i < n; ++i) {
    FeatureVector v(d);
    // Awkward magnitudes stress the round-trip formatting.
    for (auto& x : v) x = rng.normal() * std::pow(10.0, static_cast<double>(rng.below(21)) - 10.0);
    std::optional<std::string> label;
    if (rng.below(3) != 0) label = "ok" + std::to_string(rng.below(4));
    db.insert(rep(std::move(v), tasks[rng.below(3)],
                  static_cast<std::int64_t>(rng.next_u64() >> 20) - (std::int64_t{1} << 42), label,
                  rng.below(2) ? "accel" : "acoustic \"mic\""));
  }
  return db;
}

}  // namespace

TEST_CASE("insert assigns fresh monotone ids") {
  RepresentationDb db;
  CHECK(db.insert(rep({1, 2}, "a")) == 0);
  auto r = rep({3, 4}, "b");
  r.id = 999;
  CHECK(db.insert(r) == 1);
  CHECK(db.size() == 2);
  CHECK(db.dim() == 2);
  CHECK(db.entries()[1].id == 1);
  CHECK_THROWS_AS(db.insert(rep({1, 2, 3}, "c")), DimensionMismatch);
  CHECK_THROWS_AS(db.insert(rep({NAN, 1}, "c")), InvalidArgument);
}

TEST_CASE("query returns exactly the matching entries") {
  const auto db = random_db(300, 2, 3);
  RepresentationFilter f;
  f.task_id = "mill";
  f.measured_from = -(std::int64_t{1} << 41);
  f.measured_to = std::int64_t{1} << 41;
  const auto got = db.query(f);
  std::size_t expected = 0;
  for (const auto& e : db.entries()) {
    const bool ok = e.task_id == "mill" && e.measured_at >= *f.measured_from &&
                    e.measured_at <= *f.measured_to;
    expected += ok;
  }
  CHECK(got.size() == expected);
  for (const auto& e : got) CHECK(f.matches(e));

  RepresentationFilter by_label;
  by_label.label = "ok1";
  for (const auto& e : db.query(by_label)) CHECK(e.label == std::optional<std::string>("ok1"));

  CHECK(db.query(RepresentationFilter{}).size() == db.size());
}

TEST_CASE("time range is inclusive") {
  RepresentationDb db;
  db.insert(rep({0}, "a", 10));
  db.insert(rep({0}, "a", 20));
  RepresentationFilter f;
  f.measured_from = 10;
  f.measured_to = 10;
  CHECK(db.query(f).size() == 1);
}

TEST_CASE("retain with a large cap drops nothing") {
  auto db = random_db(80, 2, 5);
  const auto before = db;
  const auto fit = birch_fit(BirchParams{0.5, 10}, db.vectors());
  const auto report = db.retain_exemplars(fit.tree, 1000);
  CHECK(report.dropped == 0);
  CHECK(report.kept == 80);
  CHECK(db == before);
}

TEST_CASE("retain with cap one keeps one entry per occupied subcluster") {
  auto db = random_db(200, 3, 6);
  const auto fit = birch_fit(BirchParams{1e-3, 8}, db.vectors());
  // Entries go to their nearest centroid, which can leave a subcluster
  // without members on this heavy-tailed data.
  std::set<std::size_t> occupied;
  for (const auto& e : db.entries()) occupied.insert(fit.tree.predict(e.vector));
  const auto report = db.retain_exemplars(fit.tree, 1);
  CHECK(db.size() == occupied.size());
  CHECK(report.kept == db.size());
  CHECK(report.kept + report.dropped == 200);
  CHECK(report.rows.size() == fit.tree.subcluster_count());
  std::set<std::size_t> left;
  for (const auto& e : db.entries()) left.insert(fit.tree.predict(e.vector));
  CHECK(left == occupied);
}

TEST_CASE("retain with cap one leaves k entries on clustered data") {
  Rng rng(21);
  RepresentationDb db;
  for (int b = 0; b < 6; ++b)
    for (int i = 0; i < 30; ++i)
      db.insert(rep({10.0 * b + 0.1 * rng.normal(), 0.1 * rng.normal()}, "t"));
  const auto fit = birch_fit(BirchParams{}, db.vectors());
  db.retain_exemplars(fit.tree, 1);
  CHECK(db.size() == fit.model.k());
  CHECK(fit.model.k() == 6);
}

TEST_CASE("retain keeps the nearest entries of each blob") {
  Rng rng(10);
  RepresentationDb db;
  for (int b = 0; b < 2; ++b)
    for (int i = 0; i < 20; ++i)
      db.insert(rep({100.0 * b + rng.normal() * 0.1, rng.normal() * 0.1}, "t" + std::to_string(b)));
  const auto fit = birch_fit(BirchParams{5.0, 10}, db.vectors());
  REQUIRE(fit.tree.subcluster_count() == 2);

  // Brute force: sort each blob by distance to its centroid, id breaking ties.
  std::set<std::uint64_t> expected;
  const auto cents = fit.tree.centroids();
  for (std::size_t c = 0; c < 2; ++c) {
    std::vector<std::pair<double, std::uint64_t>> members;
    for (const auto& e : db.entries()) {
      const double d0 = oracle::dist(e.vector, cents[0]), d1 = oracle::dist(e.vector, cents[1]);
      if ((d0 <= d1 ? 0u : 1u) == c) members.emplace_back(c == 0 ? d0 : d1, e.id);
    }
    std::sort(members.begin(), members.end());
    expected.insert(members[0].second);
    expected.insert(members[1].second);
  }
  db.retain_exemplars(fit.tree, 2);
  std::set<std::uint64_t> got;
  for (const auto& e : db.entries()) got.insert(e.id);
  CHECK(got == expected);
}

TEST_CASE("retain does not depend on storage order") {
  auto db = random_db(120, 2, 12);
  const auto fit = birch_fit(BirchParams{0.8, 6}, db.vectors());
  // Same entries saved in reverse line order load into the same db.
  std::stringstream ss;
  db.save(ss);
  std::vector<std::string> lines;
  for (std::string l; std::getline(ss, l);) lines.push_back(l);
  std::reverse(lines.begin(), lines.end());
  std::stringstream rev;
  for (const auto& l : lines) rev << l << '\n';
  auto other = RepresentationDb::load(rev);
  db.retain_exemplars(fit.tree, 3);
  other.retain_exemplars(fit.tree, 3);
  CHECK(db == other);
}

TEST_CASE("save and load round trip bit-exactly") {
  const auto db = random_db(1000, 6, 7);
  std::stringstream ss;
  db.save(ss);
  const auto back = RepresentationDb::load(ss);
  CHECK(back == db);
  CHECK(back.next_id() == db.next_id());
  for (std::size_t i = 0; i < db.size(); ++i)
    for (std::size_t j = 0; j < 6; ++j)
      CHECK(std::bit_cast<std::uint64_t>(back.entries()[i].vector[j]) ==
            std::bit_cast<std::uint64_t>(db.entries()[i].vector[j]));

  std::stringstream empty_out;
  RepresentationDb{}.save(empty_out);
  CHECK(RepresentationDb::load(empty_out) == RepresentationDb{});
}

TEST_CASE("load reports the offending line") {
  const auto db = random_db(5, 2, 8);
  std::stringstream ss;
  db.save(ss);
  std::string text = ss.str();
  // Cut the last record in half.
  text.resize(text.size() - 20);
  std::istringstream truncated(text);
  try {
    (void)RepresentationDb::load(truncated);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 5);
    CHECK(std::string(e.what()).find("line 5") == 0);
  }
}

TEST_CASE("load rejects malformed records") {
  const std::string good =
      R"({"id":0,"vector":[1.0,2.0],"task_id":"a","sensor_type":"s","measured_at":5,"label":null})";
  auto fails_on = [](const std::string& text, std::size_t line) {
    std::istringstream in(text);
    try {
      (void)RepresentationDb::load(in);
    } catch (const ParseError& e) {
      return e.line() == line;
    }
    return false;
  };
  CHECK(fails_on(good + "\n" +
                     R"({"id":1,"vector":[1.0,2.0],"task_id":"a","sensor_type":"s","measured_at":5,"label":null,"extra":1})",
                 2));
  CHECK(fails_on(R"({"id":0,"vector":[1.0],"task_id":"a","sensor_type":"s","measured_at":5})", 1));
  CHECK(fails_on(good + "\n" + good, 2));  // duplicate id
  CHECK(fails_on(good + "\n" +
                     R"({"id":1,"vector":[1.0],"task_id":"a","sensor_type":"s","measured_at":5,"label":null})",
                 2));
  CHECK(fails_on(R"({"id":0,"vector":[1.0],"task_id":"a","sensor_type":"s","measured_at":5.5,"label":null})", 1));
  CHECK(fails_on(R"({"id":0,"vector":[],"task_id":"a","sensor_type":"s","measured_at":5,"label":null})", 1));
  CHECK(fails_on(R"({"id":0,"vector":[1],"task_id":"a","sensor_type":"s","measured_at":5,"label":3})", 1));
  CHECK(fails_on(good + "\n\n", 2));
  std::istringstream ok(good + "\n");
  CHECK(RepresentationDb::load(ok).size() == 1);
}

TEST_CASE("merge import appends under fresh ids") {
  auto a = random_db(10, 2, 1);
  const auto original = a.entries();
  RepresentationDb b;
  for (int i = 0; i < 4; ++i) b.insert(rep({1.0 * i, 0.0}, "imported"));

  auto unchanged = a;
  unchanged.merge_import(RepresentationDb{});
  CHECK(unchanged == a);

  a.merge_import(b);
  CHECK(a.size() == 14);
  for (std::size_t i = 0; i < original.size(); ++i) CHECK(a.entries()[i] == original[i]);
  RepresentationFilter f;
  f.task_id = "imported";
  const auto got = a.query(f);
  CHECK(got.size() == 4);
  for (const auto& e : got) CHECK(e.id >= 10);

  RepresentationDb wrong;
  wrong.insert(rep({1, 2, 3}, "x"));
  CHECK_THROWS_AS(a.merge_import(wrong), DimensionMismatch);
}
