#include "birchtl/vecmath.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "birchtl/error.hpp"

namespace birchtl {

Dataset::Dataset(std::size_t dim) : dim_(dim) {}

Dataset::Dataset(std::size_t rows, std::size_t dim) : dim_(dim), values_(rows * dim, 0.0) {}

Dataset Dataset::from_rows(const std::vector<FeatureVector>& rows) {
  Dataset out;
  for (const auto& r : rows) out.push_back(r);
  return out;
}

void Dataset::push_back(std::span<const double> x) {
  require_finite(x);
  if (dim_ == 0) {
    dim_ = x.size();
  } else if (x.size() != dim_) {
    throw DimensionMismatch(dim_, x.size());
  }
  values_.insert(values_.end(), x.begin(), x.end());
}

Dataset Dataset::select(std::span<const std::size_t> indices) const {
  Dataset out(dim_);
  out.values_.reserve(indices.size() * dim_);
  for (auto i : indices) {
    auto r = row(i);
    out.values_.insert(out.values_.end(), r.begin(), r.end());
  }
  return out;
}

std::vector<FeatureVector> Dataset::to_rows() const {
  std::vector<FeatureVector> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) {
    auto r = row(i);
    out.emplace_back(r.begin(), r.end());
  }
  return out;
}

void require_finite(std::span<const double> x) {
  if (x.empty()) throw InvalidArgument("feature vector must have at least one entry");
  for (double v : x) {
    if (!std::isfinite(v)) throw InvalidArgument("feature vector contains a non-finite value");
  }
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch(a.size(), b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

double squared_norm(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc;
}

SymmetricEigen symmetric_eigen(std::vector<double> a, std::size_t n, int max_sweeps) {
  if (a.size() != n * n) throw InvalidArgument("symmetric_eigen: matrix is not n x n");
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };

  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

  double frob = 0.0;
  for (double x : a) frob += x * x;

  bool converged = false;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += at(p, q) * at(p, q);
    if (off <= 1e-30 * frob || off == 0.0) {
      converged = true;
      break;
    }

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = at(k, p);
          const double akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = at(p, k);
          const double aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
        at(p, q) = 0.0;
        at(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p];
          const double vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged) throw Error("symmetric eigensolve did not converge");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return at(i, i) > at(j, j); });

  SymmetricEigen out;
  out.eigenvalues.reserve(n);
  out.eigenvectors.reserve(n);
  for (auto col : order) {
    out.eigenvalues.push_back(at(col, col));
    FeatureVector vec(n);
    for (std::size_t k = 0; k < n; ++k) vec[k] = v[k * n + col];
    out.eigenvectors.push_back(std::move(vec));
  }
  return out;
}

PcaModel pca_fit(const Dataset& data, std::size_t k) {
  if (data.empty()) throw InvalidArgument("pca_fit: empty data");
  const std::size_t n = data.size();
  const std::size_t d = data.dim();
  if (k < 1 || k > std::min(d, n)) {
    throw InvalidArgument("pca_fit: k must lie in [1, min(dim, samples)]");
  }

  PcaModel model;
  model.mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = data.row(i);
    for (std::size_t j = 0; j < d; ++j) model.mean[j] += r[j];
  }
  for (auto& m : model.mean) m /= static_cast<double>(n);

  std::vector<double> cov(d * d, 0.0);
  FeatureVector centered(d);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = data.row(i);
    for (std::size_t j = 0; j < d; ++j) centered[j] = r[j] - model.mean[j];
    for (std::size_t a = 0; a < d; ++a) {
      const double ca = centered[a];
      for (std::size_t b = a; b < d; ++b) cov[a * d + b] += ca * centered[b];
    }
  }
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      cov[a * d + b] /= denom;
      cov[b * d + a] = cov[a * d + b];
    }
  }
  for (std::size_t a = 0; a < d; ++a) model.total_variance += cov[a * d + a];

  auto eig = symmetric_eigen(std::move(cov), d);
  for (std::size_t c = 0; c < k; ++c) {
    auto& vec = eig.eigenvectors[c];
    std::size_t arg = 0;
    for (std::size_t j = 1; j < d; ++j) {
      if (std::abs(vec[j]) > std::abs(vec[arg])) arg = j;
    }
    if (vec[arg] < 0.0) {
      for (auto& x : vec) x = -x;
    }
    const double norm = std::sqrt(squared_norm(vec));
    for (auto& x : vec) x /= norm;
    model.components.push_back(std::move(vec));
    model.explained_variance.push_back(std::max(0.0, eig.eigenvalues[c]));
  }
  return model;
}

Dataset pca_transform(const PcaModel& model, const Dataset& data) {
  const std::size_t d = model.input_dim();
  if (!data.empty() && data.dim() != d) throw DimensionMismatch(d, data.dim());
  const std::size_t k = model.output_dim();
  Dataset out(data.size(), k);
  FeatureVector centered(d);
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto r = data.row(i);
    for (std::size_t j = 0; j < d; ++j) centered[j] = r[j] - model.mean[j];
    auto o = out.row(i);
    for (std::size_t c = 0; c < k; ++c) {
      const auto& comp = model.components[c];
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += comp[j] * centered[j];
      o[c] = acc;
    }
  }
  return out;
}

}  // namespace birchtl
