// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafwood/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "leafwood/error.hpp"

namespace leafwood {

ConfusionCounts confusion(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) {
    throw ValidationError("predictions", "length " + std::to_string(predicted.size()) +
                                             " does not match truth length " + std::to_string(truth.size()));
  }
  ConfusionCounts c;
  for (std::size_t n = 0; n < truth.size(); ++n) {
    const int t = truth[n];
    const int p = predicted[n];
    if ((t != 0 && t != 1) || (p != 0 && p != 1)) {
      throw ValidationError("labels", "row " + std::to_string(n) + " has a value outside {0, 1}");
    }
    if (t == 0) {
      (p == 0 ? c.tp : c.fn)++;
    } else {
      (p == 1 ? c.tn : c.fp)++;
    }
  }
  return c;
}

double mcc(const ConfusionCounts& c) {
  // Extended precision keeps the quotient correctly rounded for realistic counts.
  const long double tp = static_cast<long double>(c.tp);
  const long double tn = static_cast<long double>(c.tn);
  const long double fp = static_cast<long double>(c.fp);
  const long double fn = static_cast<long double>(c.fn);
  const long double a = tp + fp;
  const long double b = tp + fn;
  const long double d = tn + fp;
  const long double e = tn + fn;
  if (a == 0 || b == 0 || d == 0 || e == 0) return 0.0;
  return static_cast<double>((tp * tn - fp * fn) / std::sqrt(a * b * d * e));
}

double g_mean(double recall, double specificity) { return std::sqrt(recall * specificity); }

double balanced_accuracy(double recall, double specificity) { return 0.5 * (recall + specificity); }

MetricSummary summary(const ConfusionCounts& c) {
  MetricSummary s;
  auto ratio = [&](std::uint64_t num, std::uint64_t den, unsigned flag) {
    if (den == 0) {
      s.undefined |= flag;
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  s.accuracy = ratio(c.tp + c.tn, c.total(), kAccuracyUndefined);
  s.recall = ratio(c.tp, c.tp + c.fn, kRecallUndefined);
  s.precision = ratio(c.tp, c.tp + c.fp, kPrecisionUndefined);
  s.specificity = ratio(c.tn, c.tn + c.fp, kSpecificityUndefined);
  s.g_mean = g_mean(s.recall, s.specificity);
  s.ba = balanced_accuracy(s.recall, s.specificity);
  return s;
}

double auroc(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) {
    throw ValidationError("scores", "length does not match labels");
  }
  for (double s : scores) {
    if (std::isnan(s)) throw ValidationError("scores", "NaN score");
  }
  std::uint64_t positives = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw ValidationError("labels", "values must be 0 or 1");
    positives += static_cast<std::uint64_t>(l);
  }
  const std::uint64_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) throw ValidationError("labels", "AUROC needs both classes present");

  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Rank sums are kept doubled so midranks of tie groups stay integral.
  std::uint64_t doubled_rank_sum = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const std::uint64_t doubled_midrank = (i + 1) + (j + 1);
    for (std::size_t n = i; n <= j; ++n) {
      if (labels[order[n]] == 1) doubled_rank_sum += doubled_midrank;
    }
    i = j + 1;
  }
  const double u = (static_cast<double>(doubled_rank_sum) - static_cast<double>(positives * (positives + 1))) / 2.0;
  return u / (static_cast<double>(positives) * static_cast<double>(negatives));
}

}  // namespace leafwood
