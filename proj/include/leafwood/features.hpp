// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LEAFWOOD_FEATURES_HPP
#define LEAFWOOD_FEATURES_HPP

#include <Eigen/Core>
#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "leafwood/point_cloud.hpp"
#include "leafwood/spatial.hpp"

namespace leafwood {

/// Denominator floor for the eigenvalue ratios.
inline constexpr double kFeatureEpsilon = 1e-12;

struct NeighborhoodSpec {
  std::vector<double> radii{0.3, 0.6, 0.9};

  /// Radii must be positive, finite and strictly ascending.
  void validate() const;
};

/// Linearity is (l1 - l2) / l3 by default; `lambda1` selects the
/// (l1 - l2) / l1 variant common in the literature.
enum class LinearityDenominator { lambda3, lambda1 };

/// Eigenvalues in descending order with matching unit eigenvectors.
struct EigenTriple {
  std::array<double, 3> values{};
  std::array<Eigen::Vector3d, 3> vectors;
};

struct GeometricFeatures {
  double linearity = 0.0;
  double sphericity = 0.0;
  double verticality = 0.0;
  double pca1 = 0.0;
};

/// All points within distance <= r of point p, p included, ascending.
std::vector<std::size_t> radius_neighbors(const PointCloud& cloud, std::size_t p, double r);

/// Population covariance (divide by |N|) about the barycenter of the neighbors.
Eigen::Matrix3d covariance(std::span<const Vec3> points, std::span<const std::size_t> neighbors);
Eigen::Matrix3d covariance(const PointCloud& cloud, std::span<const std::size_t> neighbors);

/// Symmetric eigendecomposition. Negative round-off eigenvalues clamp to 0.
/// The all-zero matrix yields the canonical basis with e3 = [0, 0, 1].
EigenTriple eigen_decompose(const Eigen::Matrix3d& sigma);

GeometricFeatures eigen_features(const Eigen::Matrix3d& sigma,
                                 LinearityDenominator denom = LinearityDenominator::lambda3);
GeometricFeatures eigen_features(const EigenTriple& eig,
                                 LinearityDenominator denom = LinearityDenominator::lambda3);

/// Row-major per-point feature table.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::vector<std::string> names);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }
  std::vector<double> column(std::size_t c) const;

 private:
  std::size_t rows_ = 0;
  std::vector<std::string> names_;
  std::vector<double> data_;
};

/// Column name of one feature at one radius, e.g. "feat_lin_0.3".
std::string feature_column_name(const std::string& feature, double radius);

struct FeatureOptions {
  LinearityDenominator linearity_denominator = LinearityDenominator::lambda3;
  unsigned threads = 1;
};

/// Features for every point, columns ordered (L, S, V, PCA1) per radius, radii ascending.
FeatureMatrix multiscale_features(const PointCloud& cloud, const NeighborhoodSpec& spec,
                                  const FeatureOptions& options = {});

/// Per-column z-score parameters (population standard deviation).
struct FeatureStats {
  std::vector<std::string> names;
  std::vector<double> means;
  std::vector<double> stds;

  void save(const std::string& path) const;
  static FeatureStats load(const std::string& path);
};

/// Requires at least two rows.
FeatureStats fit_stats(const FeatureMatrix& fm);

struct StandardizeResult {
  FeatureMatrix matrix;
  FeatureStats stats;
  std::vector<std::size_t> zero_variance_columns;  // set to 0 in `matrix`
};

/// Z-scores `fm` with `stats`, fitting them on `fm` when absent.
StandardizeResult standardize(const FeatureMatrix& fm, const std::optional<FeatureStats>& stats = std::nullopt);

}  // namespace leafwood

#endif  // LEAFWOOD_FEATURES_HPP
