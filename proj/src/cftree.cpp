#include "birchtl/cftree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include <json.hpp>

#include "birchtl/error.hpp"

namespace birchtl {

// ---------------------------------------------------------------------------
// ClusteringFeature

FeatureVector ClusteringFeature::centroid() const {
  FeatureVector c(ls.size());
  const double nn = static_cast<double>(n);
  for (std::size_t i = 0; i < ls.size(); ++i) c[i] = ls[i] / nn;
  return c;
}

double ClusteringFeature::radius() const {
  if (n == 0) return 0.0;
  const double nn = static_cast<double>(n);
  double c2 = 0.0;
  for (double v : ls) {
    const double c = v / nn;
    c2 += c * c;
  }
  return std::sqrt(std::max(0.0, ss / nn - c2));
}

double ClusteringFeature::squared_distance_to_centroid(std::span<const double> x) const {
  if (x.size() != ls.size()) throw DimensionMismatch(ls.size(), x.size());
  const double nn = static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < ls.size(); ++i) {
    const double d = x[i] - ls[i] / nn;
    acc += d * d;
  }
  return acc;
}

ClusteringFeature& ClusteringFeature::operator+=(const ClusteringFeature& other) {
  if (n == 0 && ls.empty()) {
    *this = other;
    return *this;
  }
  if (other.ls.size() != ls.size()) throw DimensionMismatch(ls.size(), other.ls.size());
  n += other.n;
  for (std::size_t i = 0; i < ls.size(); ++i) ls[i] += other.ls[i];
  ss += other.ss;
  return *this;
}

ClusteringFeature cf_from_point(std::span<const double> x) {
  require_finite(x);
  return ClusteringFeature{1, FeatureVector(x.begin(), x.end()), squared_norm(x)};
}

ClusteringFeature cf_merge(const ClusteringFeature& a, const ClusteringFeature& b) {
  ClusteringFeature out = a;
  out += b;
  return out;
}

void BirchParams::validate() const {
  if (std::isnan(threshold) || threshold < 0.0) {
    throw InvalidArgument("BIRCH threshold must be >= 0");
  }
  if (branching_factor < 2) throw InvalidArgument("BIRCH branching factor must be >= 2");
}

// ---------------------------------------------------------------------------
// Tree structure

struct CfTree::Node {
  struct Entry {
    ClusteringFeature cf;
    std::unique_ptr<Node> child;  // null in leaves
    std::uint64_t uid = 0;        // subcluster identity, leaves only
  };

  bool leaf = true;
  std::vector<Entry> entries;

  std::unique_ptr<Node> clone() const {
    auto out = std::make_unique<Node>();
    out->leaf = leaf;
    out->entries.reserve(entries.size());
    for (const auto& e : entries) {
      out->entries.push_back({e.cf, e.child ? e.child->clone() : nullptr, e.uid});
    }
    return out;
  }
};

namespace {

using Node = CfTree::Node;
using Entry = Node::Entry;

std::size_t nearest_entry(const Node& node, std::span<const double> x) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < node.entries.size(); ++i) {
    const double d = node.entries[i].cf.squared_distance_to_centroid(x);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

ClusteringFeature sum_of_entries(const Node& node) {
  ClusteringFeature cf;
  for (const auto& e : node.entries) cf += e.cf;
  return cf;
}

// Splits an overflowing node in two around the farthest pair of entry
// centroids. Entries keep their relative order; ties go to the first seed.
std::pair<std::unique_ptr<Node>, std::unique_ptr<Node>> split_node(Node& node) {
  const std::size_t m = node.entries.size();
  std::vector<FeatureVector> cents;
  cents.reserve(m);
  for (const auto& e : node.entries) cents.push_back(e.cf.centroid());

  std::size_t s1 = 0, s2 = 1;
  double far = -1.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double d = squared_distance(cents[i], cents[j]);
      if (d > far) {
        far = d;
        s1 = i;
        s2 = j;
      }
    }
  }

  auto left = std::make_unique<Node>();
  auto right = std::make_unique<Node>();
  left->leaf = right->leaf = node.leaf;
  for (std::size_t i = 0; i < m; ++i) {
    bool to_left;
    if (i == s1) {
      to_left = true;
    } else if (i == s2) {
      to_left = false;
    } else {
      to_left = squared_distance(cents[i], cents[s1]) <= squared_distance(cents[i], cents[s2]);
    }
    (to_left ? left : right)->entries.push_back(std::move(node.entries[i]));
  }
  node.entries.clear();
  return {std::move(left), std::move(right)};
}

struct InsertState {
  const ClusteringFeature& point;
  std::span<const double> x;
  double threshold;
  std::size_t branching;
  std::uint64_t& next_uid;
  std::uint64_t absorbed_uid = 0;
};

// Returns true when `node` now holds more than `branching` entries.
bool insert_into(Node& node, InsertState& st) {
  if (node.leaf) {
    if (!node.entries.empty()) {
      const std::size_t i = nearest_entry(node, st.x);
      ClusteringFeature merged = cf_merge(node.entries[i].cf, st.point);
      if (merged.radius() <= st.threshold) {
        node.entries[i].cf = std::move(merged);
        st.absorbed_uid = node.entries[i].uid;
        return false;
      }
    }
    st.absorbed_uid = st.next_uid++;
    node.entries.push_back({st.point, nullptr, st.absorbed_uid});
    return node.entries.size() > st.branching;
  }

  const std::size_t i = nearest_entry(node, st.x);
  const bool child_split = insert_into(*node.entries[i].child, st);
  node.entries[i].cf += st.point;
  if (!child_split) return false;

  auto [left, right] = split_node(*node.entries[i].child);
  Entry le{sum_of_entries(*left), std::move(left), 0};
  Entry re{sum_of_entries(*right), std::move(right), 0};
  node.entries[i] = std::move(le);
  node.entries.insert(node.entries.begin() + static_cast<std::ptrdiff_t>(i) + 1, std::move(re));
  return node.entries.size() > st.branching;
}

template <typename F>
void for_each_leaf_entry(const Node& node, F&& f) {
  for (const auto& e : node.entries) {
    if (node.leaf) {
      f(e);
    } else {
      for_each_leaf_entry(*e.child, f);
    }
  }
}

std::size_t count_nodes(const Node& node) {
  std::size_t c = 1;
  if (!node.leaf) {
    for (const auto& e : node.entries) c += count_nodes(*e.child);
  }
  return c;
}

bool nodes_equal(const Node& a, const Node& b) {
  if (a.leaf != b.leaf || a.entries.size() != b.entries.size()) return false;
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    const auto& ea = a.entries[i];
    const auto& eb = b.entries[i];
    if (!(ea.cf == eb.cf) || ea.uid != eb.uid) return false;
    if (!a.leaf && !nodes_equal(*ea.child, *eb.child)) return false;
  }
  return true;
}

bool close(double a, double b, double scale, double rel_tol) {
  return std::abs(a - b) <= rel_tol * std::max(1.0, scale);
}

void audit_node(const Node& node, const CfTree& tree, std::size_t depth, std::size_t& leaf_depth,
                double rel_tol, const std::string& path, std::vector<std::string>& issues) {
  const auto& p = tree.params();
  if (node.entries.empty()) issues.push_back(path + ": empty node");
  if (node.entries.size() > p.branching_factor) {
    issues.push_back(path + ": " + std::to_string(node.entries.size()) +
                     " entries exceed the branching factor");
  }
  if (node.leaf) {
    if (leaf_depth == 0) {
      leaf_depth = depth;
    } else if (leaf_depth != depth) {
      issues.push_back(path + ": leaf depth differs (tree not height-balanced)");
    }
  }
  for (std::size_t i = 0; i < node.entries.size(); ++i) {
    const auto& e = node.entries[i];
    const std::string here = path + "/" + std::to_string(i);
    if (e.cf.n == 0) issues.push_back(here + ": entry with zero count");
    if (e.cf.dim() != tree.dim()) issues.push_back(here + ": wrong dimension");
    const double nn = static_cast<double>(e.cf.n);
    double ls2 = 0.0;
    for (double v : e.cf.ls) ls2 += v * v;
    if (e.cf.n > 0 && e.cf.ss < ls2 / nn - rel_tol * std::max(1.0, e.cf.ss)) {
      issues.push_back(here + ": ss below |ls|^2/n");
    }
    if (node.leaf) {
      if (e.child) issues.push_back(here + ": leaf entry with a child");
      if (e.cf.radius() > p.threshold) issues.push_back(here + ": subcluster radius exceeds threshold");
      continue;
    }
    if (!e.child) {
      issues.push_back(here + ": internal entry without child");
      continue;
    }
    const ClusteringFeature sum = sum_of_entries(*e.child);
    const double ls_scale = std::sqrt(nn * std::abs(e.cf.ss));
    bool ok = sum.n == e.cf.n && sum.dim() == e.cf.dim() && close(sum.ss, e.cf.ss, e.cf.ss, rel_tol);
    for (std::size_t j = 0; ok && j < sum.dim(); ++j) {
      ok = close(sum.ls[j], e.cf.ls[j], ls_scale, rel_tol);
    }
    if (!ok) issues.push_back(here + ": CF differs from the merge of its children");
    audit_node(*e.child, tree, depth + 1, leaf_depth, rel_tol, here, issues);
  }
}

// JSON (de)serialisation

nlohmann::json node_to_json(const Node& node) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : node.entries) {
    nlohmann::json je{{"n", e.cf.n}, {"ls", e.cf.ls}, {"ss", e.cf.ss}};
    if (node.leaf) {
      je["uid"] = e.uid;
    } else {
      je["child"] = node_to_json(*e.child);
    }
    entries.push_back(std::move(je));
  }
  return {{"leaf", node.leaf}, {"entries", std::move(entries)}};
}

std::unique_ptr<Node> node_from_json(const nlohmann::json& j) {
  auto node = std::make_unique<Node>();
  node->leaf = j.at("leaf").get<bool>();
  for (const auto& je : j.at("entries")) {
    Entry e;
    e.cf.n = je.at("n").get<std::uint64_t>();
    e.cf.ls = je.at("ls").get<FeatureVector>();
    e.cf.ss = je.at("ss").get<double>();
    if (node->leaf) {
      e.uid = je.at("uid").get<std::uint64_t>();
    } else {
      e.child = node_from_json(je.at("child"));
    }
    node->entries.push_back(std::move(e));
  }
  return node;
}

}  // namespace

// ---------------------------------------------------------------------------
// CfTree

CfTree::CfTree(BirchParams params) : params_(params), root_(std::make_unique<Node>()) {
  params_.validate();
}

CfTree::~CfTree() = default;
CfTree::CfTree(CfTree&&) noexcept = default;
CfTree& CfTree::operator=(CfTree&&) noexcept = default;

CfTree::CfTree(const CfTree& other)
    : params_(other.params_),
      dim_(other.dim_),
      count_(other.count_),
      next_uid_(other.next_uid_),
      root_(other.root_->clone()) {}

CfTree& CfTree::operator=(const CfTree& other) {
  if (this != &other) {
    CfTree tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}

std::uint64_t CfTree::insert_point(std::span<const double> x) {
  require_finite(x);
  if (dim_ == 0) {
    dim_ = x.size();
  } else if (x.size() != dim_) {
    throw DimensionMismatch(dim_, x.size());
  }

  const ClusteringFeature point = cf_from_point(x);
  InsertState st{point, x, params_.threshold, params_.branching_factor, next_uid_};
  if (insert_into(*root_, st)) {
    auto [left, right] = split_node(*root_);
    auto root = std::make_unique<Node>();
    root->leaf = false;
    root->entries.push_back({sum_of_entries(*left), std::move(left), 0});
    root->entries.push_back({sum_of_entries(*right), std::move(right), 0});
    root_ = std::move(root);
  }
  ++count_;
  return st.absorbed_uid;
}

std::size_t CfTree::insert(std::span<const double> x) {
  const std::uint64_t uid = insert_point(x);
  std::size_t index = 0, found = 0;
  bool hit = false;
  for_each_leaf_entry(*root_, [&](const Entry& e) {
    if (!hit && e.uid == uid) {
      found = index;
      hit = true;
    }
    ++index;
  });
  return found;
}

void CfTree::insert_all(const Dataset& chunk) {
  for (std::size_t i = 0; i < chunk.size(); ++i) insert_point(chunk.row(i));
}

std::size_t CfTree::predict(std::span<const double> x) const {
  if (empty()) throw InvalidArgument("predict on an empty CF-tree");
  if (x.size() != dim_) throw DimensionMismatch(dim_, x.size());
  std::size_t index = 0, best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for_each_leaf_entry(*root_, [&](const Entry& e) {
    const double d = e.cf.squared_distance_to_centroid(x);
    if (d < best_d) {
      best_d = d;
      best = index;
    }
    ++index;
  });
  return best;
}

std::vector<std::size_t> CfTree::predict(const Dataset& data) const {
  if (empty()) throw InvalidArgument("predict on an empty CF-tree");
  if (!data.empty() && data.dim() != dim_) throw DimensionMismatch(dim_, data.dim());
  const auto cents = centroids();
  std::vector<std::size_t> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = nearest_index(cents, data.row(i));
  return out;
}

std::vector<Subcluster> CfTree::subclusters() const {
  std::vector<Subcluster> out;
  for_each_leaf_entry(*root_, [&](const Entry& e) { out.push_back({e.cf, e.cf.centroid()}); });
  return out;
}

std::vector<FeatureVector> CfTree::centroids() const {
  std::vector<FeatureVector> out;
  for_each_leaf_entry(*root_, [&](const Entry& e) { out.push_back(e.cf.centroid()); });
  return out;
}

std::size_t CfTree::subcluster_count() const {
  std::size_t c = 0;
  for_each_leaf_entry(*root_, [&](const Entry&) { ++c; });
  return c;
}

std::size_t CfTree::node_count() const { return count_nodes(*root_); }

std::size_t CfTree::height() const {
  std::size_t h = 1;
  for (const Node* n = root_.get(); !n->leaf; n = n->entries.front().child.get()) ++h;
  return h;
}

ClusterModel CfTree::model(const Dataset& data) const {
  ClusterModel m;
  m.centroids = centroids();
  if (data.empty()) return m;
  if (m.centroids.empty()) throw InvalidArgument("cannot label samples with an empty CF-tree");
  if (data.dim() != dim_) throw DimensionMismatch(dim_, data.dim());
  m.labels.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    m.labels[i] = static_cast<int>(nearest_index(m.centroids, data.row(i)));
  }
  return m;
}

std::vector<std::string> CfTree::audit(double rel_tol) const {
  std::vector<std::string> issues;
  if (empty()) {
    if (!root_->entries.empty()) issues.push_back("empty tree with non-empty root");
    return issues;
  }
  std::size_t leaf_depth = 0;
  audit_node(*root_, *this, 1, leaf_depth, rel_tol, "root", issues);
  if (sum_of_entries(*root_).n != count_) issues.push_back("root count differs from inserted count");
  return issues;
}

bool operator==(const CfTree& a, const CfTree& b) {
  return a.params_ == b.params_ && a.dim_ == b.dim_ && a.count_ == b.count_ &&
         a.next_uid_ == b.next_uid_ && nodes_equal(*a.root_, *b.root_);
}

std::string CfTree::to_json() const {
  nlohmann::json j{{"format", "birchtl-cftree"},
                   {"version", 1},
                   {"branching_factor", params_.branching_factor},
                   {"dim", dim_},
                   {"count", count_},
                   {"next_uid", next_uid_},
                   {"root", node_to_json(*root_)}};
  // JSON has no infinity; null stands for an unbounded threshold.
  if (std::isinf(params_.threshold)) {
    j["threshold"] = nullptr;
  } else {
    j["threshold"] = params_.threshold;
  }
  return j.dump();
}

CfTree CfTree::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != "birchtl-cftree") {
      throw ParseError(0, "not a CF-tree model file");
    }
    BirchParams p;
    p.threshold = j.at("threshold").is_null() ? std::numeric_limits<double>::infinity()
                                              : j.at("threshold").get<double>();
    p.branching_factor = j.at("branching_factor").get<std::size_t>();
    CfTree tree(p);
    tree.dim_ = j.at("dim").get<std::size_t>();
    tree.count_ = j.at("count").get<std::uint64_t>();
    tree.next_uid_ = j.at("next_uid").get<std::uint64_t>();
    tree.root_ = node_from_json(j.at("root"));
    auto issues = tree.audit();
    if (!issues.empty()) throw ParseError(0, "inconsistent CF-tree: " + issues.front());
    return tree;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("malformed CF-tree model: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

std::size_t nearest_index(std::span<const FeatureVector> centroids, std::span<const double> x) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < centroids.size(); ++i) {
    const double d = squared_distance(centroids[i], x);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

BirchFit birch_fit(const BirchParams& params, const Dataset& data) {
  if (data.empty()) throw InvalidArgument("birch_fit: empty data");
  CfTree tree(params);
  tree.insert_all(data);
  auto model = tree.model(data);
  return {std::move(tree), std::move(model)};
}

BirchFit birch_fit_chunked(const BirchParams& params, const std::vector<Dataset>& chunks) {
  CfTree tree(params);
  Dataset all;
  for (const auto& c : chunks) {
    tree.insert_all(c);
    for (std::size_t i = 0; i < c.size(); ++i) all.push_back(c.row(i));
  }
  if (all.empty()) throw InvalidArgument("birch_fit: empty data");
  auto model = tree.model(all);
  return {std::move(tree), std::move(model)};
}

}  // namespace birchtl
