// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafwood/features.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>

#include "leafwood/csv.hpp"
#include "leafwood/error.hpp"
#include "leafwood/parallel.hpp"

namespace leafwood {

void NeighborhoodSpec::validate() const {
  if (radii.empty()) throw ValidationError("features.radii", "at least one radius is required");
  for (std::size_t n = 0; n < radii.size(); ++n) {
    if (!(radii[n] > 0.0) || !std::isfinite(radii[n])) {
      throw ValidationError("features.radii", "radii must be positive and finite");
    }
    if (n > 0 && !(radii[n] > radii[n - 1])) {
      throw ValidationError("features.radii", "radii must be strictly ascending");
    }
  }
}

std::vector<std::size_t> radius_neighbors(const PointCloud& cloud, std::size_t p, double r) {
  if (!(r > 0.0)) throw ValidationError("r", "radius must be positive");
  const auto pts = coordinates(cloud);
  return RadiusIndex(pts, r).query(pts.at(p), r);
}

Eigen::Matrix3d covariance(std::span<const Vec3> points, std::span<const std::size_t> neighbors) {
  if (neighbors.empty()) throw ValidationError("neighbors", "covariance of an empty neighborhood");
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (std::size_t n : neighbors) mean += Eigen::Vector3d(points[n][0], points[n][1], points[n][2]);
  mean /= static_cast<double>(neighbors.size());
  Eigen::Matrix3d sigma = Eigen::Matrix3d::Zero();
  for (std::size_t n : neighbors) {
    const Eigen::Vector3d d = Eigen::Vector3d(points[n][0], points[n][1], points[n][2]) - mean;
    sigma += d * d.transpose();
  }
  return sigma / static_cast<double>(neighbors.size());
}

Eigen::Matrix3d covariance(const PointCloud& cloud, std::span<const std::size_t> neighbors) {
  const auto pts = coordinates(cloud);
  return covariance(pts, neighbors);
}

EigenTriple eigen_decompose(const Eigen::Matrix3d& sigma) {
  EigenTriple out;
  if ((sigma.array() == 0.0).all()) {
    out.values = {0.0, 0.0, 0.0};
    out.vectors = {Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY(), Eigen::Vector3d::UnitZ()};
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(sigma);
  // Eigen sorts ascending.
  for (int n = 0; n < 3; ++n) {
    out.values[static_cast<std::size_t>(n)] = std::max(0.0, solver.eigenvalues()(2 - n));
    out.vectors[static_cast<std::size_t>(n)] = solver.eigenvectors().col(2 - n);
  }
  return out;
}

GeometricFeatures eigen_features(const EigenTriple& eig, LinearityDenominator denom) {
  const double l1 = eig.values[0];
  const double l2 = eig.values[1];
  const double l3 = eig.values[2];
  GeometricFeatures f;
  const double lin_den = denom == LinearityDenominator::lambda3 ? l3 : l1;
  f.linearity = (l1 - l2) / std::max(lin_den, kFeatureEpsilon);
  f.sphericity = l3 / std::max(l1, kFeatureEpsilon);
  f.verticality = 1.0 - std::abs(eig.vectors[2].z());
  f.pca1 = l1 / std::max(l1 + l2 + l3, kFeatureEpsilon);
  return f;
}

GeometricFeatures eigen_features(const Eigen::Matrix3d& sigma, LinearityDenominator denom) {
  return eigen_features(eigen_decompose(sigma), denom);
}

FeatureMatrix::FeatureMatrix(std::size_t rows, std::vector<std::string> names)
    : rows_(rows), names_(std::move(names)), data_(rows * names_.size(), 0.0) {}

std::vector<double> FeatureMatrix::column(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

std::string feature_column_name(const std::string& feature, double radius) {
  return "feat_" + feature + "_" + csv::format_number(radius);
}

FeatureMatrix multiscale_features(const PointCloud& cloud, const NeighborhoodSpec& spec,
                                  const FeatureOptions& options) {
  spec.validate();
  if (cloud.empty()) throw ValidationError("cloud", "cannot compute features of an empty cloud");

  std::vector<std::string> names;
  for (double r : spec.radii) {
    for (const char* f : {"lin", "sph", "ver", "pca1"}) names.push_back(feature_column_name(f, r));
  }
  FeatureMatrix fm(cloud.size(), std::move(names));

  const auto pts = coordinates(cloud);
  const double r_max = spec.radii.back();
  const RadiusIndex index(pts, r_max);

  parallel_for(cloud.size(), options.threads, [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> outer;
    std::vector<std::size_t> inner;
    for (std::size_t p = begin; p < end; ++p) {
      index.query(pts[p], r_max, outer);
      for (std::size_t s = 0; s < spec.radii.size(); ++s) {
        const double r = spec.radii[s];
        const double r2 = r * r;
        inner.clear();
        for (std::size_t n : outer) {
          const double dx = pts[n][0] - pts[p][0];
          const double dy = pts[n][1] - pts[p][1];
          const double dz = pts[n][2] - pts[p][2];
          if (dx * dx + dy * dy + dz * dz <= r2) inner.push_back(n);
        }
        const GeometricFeatures f = eigen_features(covariance(pts, inner), options.linearity_denominator);
        fm(p, 4 * s + 0) = f.linearity;
        fm(p, 4 * s + 1) = f.sphericity;
        fm(p, 4 * s + 2) = f.verticality;
        fm(p, 4 * s + 3) = f.pca1;
      }
    }
  });
  return fm;
}

void FeatureStats::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "column,mean,std\n";
  for (std::size_t c = 0; c < names.size(); ++c) {
    out << names[c] << ',' << csv::format_number(means[c]) << ',' << csv::format_number(stds[c]) << '\n';
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

FeatureStats FeatureStats::load(const std::string& path) {
  const csv::Table table = csv::read_table(path);
  const std::size_t name_col = table.require("column", path);
  const std::size_t mean_col = table.require("mean", path);
  const std::size_t std_col = table.require("std", path);
  FeatureStats stats;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    auto mean = csv::parse_number(table.rows[r][mean_col]);
    auto sd = csv::parse_number(table.rows[r][std_col]);
    if (!mean || !sd || *sd < 0.0) throw ParseError(path, table.line_numbers[r], "invalid mean/std");
    stats.names.push_back(table.rows[r][name_col]);
    stats.means.push_back(*mean);
    stats.stds.push_back(*sd);
  }
  return stats;
}

FeatureStats fit_stats(const FeatureMatrix& fm) {
  if (fm.rows() < 2) throw ValidationError("features", "fitting standardization needs at least 2 rows");
  FeatureStats stats;
  stats.names = fm.names();
  const double n = static_cast<double>(fm.rows());
  for (std::size_t c = 0; c < fm.cols(); ++c) {
    double sum = 0.0;
    double lo = fm(0, c);
    double hi = fm(0, c);
    for (std::size_t r = 0; r < fm.rows(); ++r) {
      sum += fm(r, c);
      lo = std::min(lo, fm(r, c));
      hi = std::max(hi, fm(r, c));
    }
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t r = 0; r < fm.rows(); ++r) ss += (fm(r, c) - mean) * (fm(r, c) - mean);
    stats.means.push_back(mean);
    stats.stds.push_back(lo == hi ? 0.0 : std::sqrt(ss / n));
  }
  return stats;
}

StandardizeResult standardize(const FeatureMatrix& fm, const std::optional<FeatureStats>& stats) {
  StandardizeResult out;
  out.stats = stats ? *stats : fit_stats(fm);
  if (out.stats.means.size() != fm.cols() || out.stats.stds.size() != fm.cols()) {
    throw ValidationError("stats", "expected " + std::to_string(fm.cols()) + " columns, got " +
                                       std::to_string(out.stats.means.size()));
  }
  for (std::size_t c = 0; c < fm.cols(); ++c) {
    if (c < out.stats.names.size() && out.stats.names[c] != fm.names()[c]) {
      throw ValidationError("stats", "column " + std::to_string(c) + " is '" + out.stats.names[c] +
                                         "', features have '" + fm.names()[c] + "'");
    }
  }
  out.matrix = FeatureMatrix(fm.rows(), fm.names());
  for (std::size_t c = 0; c < fm.cols(); ++c) {
    const double sd = out.stats.stds[c];
    if (!(sd > 0.0)) {
      out.zero_variance_columns.push_back(c);
      continue;  // stays 0
    }
    const double mean = out.stats.means[c];
    for (std::size_t r = 0; r < fm.rows(); ++r) out.matrix(r, c) = (fm(r, c) - mean) / sd;
  }
  return out;
}

}  // namespace leafwood
