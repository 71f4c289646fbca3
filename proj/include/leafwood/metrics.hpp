// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LEAFWOOD_METRICS_HPP
#define LEAFWOOD_METRICS_HPP

#include <cstdint>
#include <span>

namespace leafwood {

// Labels are 0 = leaf, 1 = wood. The positive class is leaf, so recall and
// precision describe leaves and specificity is the wood recall.

struct ConfusionCounts {
  std::uint64_t tp = 0;  // leaf predicted leaf
  std::uint64_t tn = 0;  // wood predicted wood
  std::uint64_t fp = 0;  // wood predicted leaf
  std::uint64_t fn = 0;  // leaf predicted wood

  std::uint64_t total() const { return tp + tn + fp + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// Throws ValidationError on length mismatch or a value outside {0, 1}.
ConfusionCounts confusion(std::span<const int> truth, std::span<const int> predicted);

/// Matthews correlation; 0 when any factor of the denominator is 0.
double mcc(const ConfusionCounts& c);

/// Bits of MetricSummary::undefined, set when a ratio had a zero denominator
/// and was reported as 0.
enum MetricFlag : unsigned {
  kAccuracyUndefined = 1u << 0,
  kRecallUndefined = 1u << 1,
  kPrecisionUndefined = 1u << 2,
  kSpecificityUndefined = 1u << 3,
};

struct MetricSummary {
  double accuracy = 0.0;
  double recall = 0.0;
  double precision = 0.0;
  double specificity = 0.0;
  double g_mean = 0.0;
  double ba = 0.0;
  unsigned undefined = 0;
};

double g_mean(double recall, double specificity);
double balanced_accuracy(double recall, double specificity);

MetricSummary summary(const ConfusionCounts& c);

/// Area under the ROC curve for scores of class 1, computed from midranks
/// (Mann-Whitney U), so tied scores count one half. Throws ValidationError
/// unless both classes are present.
double auroc(std::span<const int> labels, std::span<const double> scores);

}  // namespace leafwood

#endif  // LEAFWOOD_METRICS_HPP
