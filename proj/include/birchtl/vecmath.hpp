#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace birchtl {

using FeatureVector = std::vector<double>;

// Row-major collection of n feature vectors sharing one dimension d.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::size_t dim);
  Dataset(std::size_t rows, std::size_t dim);  // zero-filled

  // Throws DimensionMismatch on ragged input and InvalidArgument on
  // non-finite entries or zero-length vectors.
  static Dataset from_rows(const std::vector<FeatureVector>& rows);

  std::size_t size() const noexcept { return dim_ ? values_.size() / dim_ : 0; }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return values_.empty(); }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::span<double> row(std::size_t i) { return {values_.data() + i * dim_, dim_}; }

  // Appends a vector; the first push fixes the dimension of an empty,
  // dimensionless dataset.
  void push_back(std::span<const double> x);

  Dataset select(std::span<const std::size_t> indices) const;
  std::vector<FeatureVector> to_rows() const;

  const std::vector<double>& values() const noexcept { return values_; }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

// Throws InvalidArgument unless every entry is finite and x is non-empty.
void require_finite(std::span<const double> x);

double squared_distance(std::span<const double> a, std::span<const double> b);
double euclidean_distance(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> x);

struct PcaModel {
  FeatureVector mean;
  // components[i] is a unit vector of length d; rows ordered by descending
  // explained variance.
  std::vector<FeatureVector> components;
  std::vector<double> explained_variance;
  double total_variance = 0.0;

  std::size_t input_dim() const noexcept { return mean.size(); }
  std::size_t output_dim() const noexcept { return components.size(); }
};

// Eigen-decomposition of a dense symmetric matrix (row-major, n x n) by
// cyclic Jacobi rotations. Eigenvalues come back sorted descending, with
// eigenvectors[i] matching eigenvalues[i].
struct SymmetricEigen {
  std::vector<double> eigenvalues;
  std::vector<FeatureVector> eigenvectors;
};
SymmetricEigen symmetric_eigen(std::vector<double> matrix, std::size_t n,
                               int max_sweeps = 100);

// Covariance uses the unbiased (n - 1) normalisation, falling back to n for
// a single sample. Each component is sign-fixed so that its largest-magnitude
// entry is positive.
PcaModel pca_fit(const Dataset& data, std::size_t k);
Dataset pca_transform(const PcaModel& model, const Dataset& data);

}  // namespace birchtl
