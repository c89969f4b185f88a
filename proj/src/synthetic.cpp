#include "birchtl/synthetic.hpp"

#include <cmath>
#include <set>

#include "birchtl/error.hpp"
#include "birchtl/random.hpp"

namespace birchtl {

void SyntheticSpec::validate() const {
  if (ppv_count < 1) throw InvalidArgument("ppv_count must be positive");
  if (samples_per_ppv < 1) throw InvalidArgument("samples_per_ppv must be positive");
  if (dim < 1) throw InvalidArgument("dim must be positive");
  if (!(separation >= 0.0) || !std::isfinite(separation)) {
    throw InvalidArgument("separation must be a finite non-negative number");
  }
  if (!(spread >= 0.0) || !std::isfinite(spread)) {
    throw InvalidArgument("spread must be a finite non-negative number");
  }
}

LabeledDataset gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t d = spec.dim;

  std::vector<FeatureVector> centres(spec.ppv_count, FeatureVector(d, 0.0));
  if (spec.ppv_count <= d) {
    // Scaled unit vectors: |s e_i - s e_j| = s sqrt(2).
    const double s = spec.separation / std::sqrt(2.0);
    for (std::size_t p = 0; p < spec.ppv_count; ++p) centres[p][p] = s;
  } else {
    const double sd = spec.separation / std::sqrt(2.0 * static_cast<double>(d));
    for (auto& c : centres) {
      for (auto& v : c) v = sd * rng.normal();
    }
  }

  const double noise = spec.spread / std::sqrt(static_cast<double>(d));
  LabeledDataset ds;
  ds.data = Dataset(spec.ppv_count * spec.samples_per_ppv, d);
  ds.ppv.reserve(ds.data.size());
  std::size_t row = 0;
  for (std::size_t p = 0; p < spec.ppv_count; ++p) {
    for (std::size_t s = 0; s < spec.samples_per_ppv; ++s, ++row) {
      auto r = ds.data.row(row);
      for (std::size_t j = 0; j < d; ++j) r[j] = centres[p][j] + noise * rng.normal();
      ds.ppv.push_back(static_cast<int>(p));
    }
  }
  return ds;
}

LabeledDataset shuffled(const LabeledDataset& ds, std::uint64_t seed) {
  Rng rng(seed);
  const auto perm = rng.permutation(ds.data.size());
  LabeledDataset out;
  out.data = ds.data.select(perm);
  if (ds.has_ppv()) {
    out.ppv.reserve(perm.size());
    for (auto i : perm) out.ppv.push_back(ds.ppv[i]);
  }
  return out;
}

std::vector<Dataset> chunks_by_ppv(const LabeledDataset& ds, std::span<const int> order) {
  if (!ds.has_ppv()) throw InvalidArgument("dataset has no ppv column");
  std::vector<Dataset> out;
  out.reserve(order.size());
  for (int p : order) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < ds.ppv.size(); ++i) {
      if (ds.ppv[i] == p) rows.push_back(i);
    }
    out.push_back(ds.data.select(rows));
  }
  return out;
}

std::vector<int> ppv_ids(const LabeledDataset& ds) {
  std::set<int> ids(ds.ppv.begin(), ds.ppv.end());
  return {ids.begin(), ids.end()};
}

}  // namespace birchtl
