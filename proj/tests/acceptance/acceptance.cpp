// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance checks. Prints one PASS/FAIL line per criterion; exits non-zero
// if any selected criterion fails.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "experiment.hpp"
#include "leafwood/batching.hpp"
#include "leafwood/classifier.hpp"
#include "leafwood/features.hpp"
#include "leafwood/gvd.hpp"
#include "leafwood/labeling.hpp"
#include "leafwood/metrics.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace leafwood;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

// ---------------------------------------------------------------------------

Outcome metric_reproduction() {
  const double recall = 0.884;
  const double specificity = 0.631;
  const double gm = g_mean(recall, specificity);
  const double ba = balanced_accuracy(recall, specificity);
  const bool gm_ok = std::abs(gm - 0.744) <= 0.001;
  const bool ba_ok = std::abs(ba - 0.757) <= 0.001;
  return {gm_ok && ba_ok, "g_mean " + fmt(gm, 6) + " (want 0.744 +/- 0.001" + (gm_ok ? "" : ", off") + "), ba " +
                              fmt(ba, 6) + " (want 0.757 +/- 0.001" + (ba_ok ? "" : ", off") + ")"};
}

// ---------------------------------------------------------------------------

PointCloud jittered_lattice(std::size_t n, std::uint64_t seed, Vec3 spacing) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  const auto side = static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(n))));
  PointCloud cloud;
  for (std::size_t i = 0; i < side && cloud.size() < n; ++i) {
    for (std::size_t j = 0; j < side && cloud.size() < n; ++j) {
      for (std::size_t k = 0; k < side && cloud.size() < n; ++k) {
        Point p;
        p.x = (static_cast<double>(i) + jitter(gen)) * spacing[0];
        p.y = (static_cast<double>(j) + jitter(gen)) * spacing[1];
        p.z = (static_cast<double>(k) + jitter(gen)) * spacing[2];
        cloud.points.push_back(p);
      }
    }
  }
  return cloud;
}

Outcome feature_oracle() {
  const std::vector<Vec3> spacings{{0.12, 0.12, 0.12}, {0.1, 0.1, 0.1}, {0.15, 0.15, 0.15},
                                   {0.12, 0.12, 0.05}, {0.3, 0.3, 0.05}, {0.2, 0.05, 0.2}};
  const NeighborhoodSpec spec;
  double worst = 0.0;
  double largest = 0.0;
  std::size_t values = 0;
  for (std::size_t c = 0; c < spacings.size(); ++c) {
    const PointCloud cloud = jittered_lattice(5000, 1000 + c, spacings[c]);
    const FeatureMatrix fm = multiscale_features(cloud, spec);
    std::vector<oracle::P3> pts;
    for (const Point& p : cloud.points) pts.push_back({p.x, p.y, p.z});
    const auto expected = oracle::multiscale_features(pts, spec.radii);
    for (std::size_t r = 0; r < fm.rows(); ++r) {
      for (std::size_t k = 0; k < fm.cols(); ++k) {
        worst = std::max(worst, std::abs(fm(r, k) - expected[r][k]));
        largest = std::max(largest, std::abs(expected[r][k]));
        ++values;
      }
    }
  }
  return {worst <= 1e-9, std::to_string(spacings.size()) + " clouds x 5000 points, " + std::to_string(values) +
                             " values, max abs diff " + fmt(worst, 3) + " (largest value " + fmt(largest, 4) + ")"};
}

// ---------------------------------------------------------------------------

VoxelGrid grid_of(const std::vector<VoxelIndex>& voxels) {
  VoxelGrid::Cells cells;
  for (std::size_t n = 0; n < voxels.size(); ++n) cells[voxels[n]].push_back(n);
  return VoxelGrid(0.6, {0.0, 0.0, 0.0}, std::move(cells));
}

GvdConfig keep_all(int tau, double gamma) {
  GvdConfig cfg;
  cfg.tau = tau;
  cfg.gamma = gamma;
  cfg.min_voxels = 0;
  cfg.min_points = 0;
  return cfg;
}

std::map<VoxelIndex, std::int64_t> membership(const Decomposition& d) {
  std::map<VoxelIndex, std::int64_t> out;
  for (const auto* list : {&d.components, &d.residuals}) {
    for (const Component& c : *list) {
      for (const VoxelIndex& v : c.voxels) out[v] = c.id;
    }
  }
  return out;
}

Outcome gvd_partition() {
  std::vector<std::string> problems;
  std::size_t largest = 0;
  const int grids = 24;
  for (int g = 0; g < grids; ++g) {
    std::mt19937_64 gen(static_cast<std::uint64_t>(500 + g));
    const int side = 8 + g;
    std::uniform_int_distribution<int> coord(0, side - 1);
    const std::size_t cells = static_cast<std::size_t>(side) * side * side;
    const std::size_t target = std::min<std::size_t>(10000, cells * (2 + g % 5) / 10);
    std::set<VoxelIndex> unique;
    while (unique.size() < target) unique.insert({coord(gen), coord(gen), coord(gen)});
    std::vector<VoxelIndex> voxels(unique.begin(), unique.end());
    largest = std::max(largest, voxels.size());
    const int tau = 2 + g % 12;
    const double gamma = 1.05 + 0.1 * (g % 7);
    GvdConfig cfg = keep_all(tau, gamma);
    cfg.min_voxels = g % 3;
    cfg.min_points = g % 2 ? 4 : 0;
    const Decomposition d = decompose(grid_of(voxels), cfg);

    std::vector<int> seen(voxels.size(), 0);
    for (const auto* list : {&d.components, &d.residuals}) {
      for (const Component& c : *list) {
        for (std::size_t p : c.point_indices) ++seen[p];
        for (std::size_t n = 0; n < c.voxels.size(); ++n) {
          if (n == 0) continue;
          if (!(d_gv(c.seed, c.voxels[n]) < tau) || !(ier(c.seed, c.voxels[n]) < gamma)) {
            problems.push_back("grid " + std::to_string(g) + ": admitted voxel violates a bound");
          }
        }
      }
    }
    if (!std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; })) {
      problems.push_back("grid " + std::to_string(g) + ": not a partition");
    }
    std::shuffle(voxels.begin(), voxels.end(), gen);
    const Decomposition again = decompose(grid_of(voxels), cfg);
    if (membership(again) != membership(d)) problems.push_back("grid " + std::to_string(g) + ": not deterministic");
    if (g < 8) {
      std::set<oracle::Voxel> set;
      for (const VoxelIndex& v : voxels) set.insert({v.i, v.j, v.k});
      std::map<VoxelIndex, std::int64_t> expected;
      for (const auto& [v, id] : oracle::decompose(set, tau, gamma)) expected[{v[0], v[1], v[2]}] = id;
      if (membership(d) != expected) problems.push_back("grid " + std::to_string(g) + ": differs from flood-fill oracle");
    }
  }

  // Hand-traced fixtures.
  std::vector<VoxelIndex> column;
  std::map<VoxelIndex, std::int64_t> column_expected;
  for (int z = 0; z < 15; ++z) {
    column.push_back({0, 0, z});
    column_expected[{0, 0, z}] = z < 10 ? 1 : 2;
  }
  if (membership(decompose(grid_of(column), keep_all(10, 1.5))) != column_expected) {
    problems.push_back("column fixture membership");
  }
  std::vector<VoxelIndex> u;
  std::map<VoxelIndex, std::int64_t> u_expected;
  for (int z = 0; z < 8; ++z) {
    u.push_back({0, 0, z});
    u_expected[{0, 0, z}] = 1;
    u.push_back({3, 3, z});
    u_expected[{3, 3, z}] = z == 0 ? 1 : 2;
  }
  for (VoxelIndex v : {VoxelIndex{1, 0, 0}, {1, 1, 0}, {2, 1, 0}, {2, 2, 0}, {3, 2, 0}}) {
    u.push_back(v);
    u_expected[v] = 1;
  }
  if (membership(decompose(grid_of(u), keep_all(10, 1.5))) != u_expected) problems.push_back("U fixture membership");

  std::string detail = std::to_string(grids) + " grids (largest " + std::to_string(largest) +
                       " voxels) + column and U fixtures";
  if (!problems.empty()) detail += "; first problem: " + problems.front();
  return {problems.empty(), detail};
}

// ---------------------------------------------------------------------------

Batch random_batch(std::size_t rows, std::size_t width, double wood_rate, std::mt19937_64& gen) {
  std::normal_distribution<double> value(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Batch b;
  b.width = width;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t w = 0; w < width; ++w) b.inputs.push_back(value(gen));
    const double draw = u(gen);
    b.labels.push_back(draw < 0.05 ? -1 : (draw < 0.05 + wood_rate ? 1 : 0));
    b.sources.push_back(r);
  }
  return b;
}

struct GradientError {
  double norm = 0.0;     // ||a - n|| / max(||a||, ||n||)
  double element = 0.0;  // max |a - n| / max(|a|, |n|) over entries above 1e-6
};

GradientError gradient_error(const ClassifierModel& model, const Batch& batch, const LossKind& loss,
                             std::uint64_t seed) {
  const std::vector<double> analytic = backward(model, batch, loss, seed).flatten();
  ClassifierModel probe = model;
  std::vector<double> params = model.flatten();
  const double h = 1e-5;
  double diff2 = 0.0;
  double a2 = 0.0;
  double n2 = 0.0;
  GradientError out;
  for (std::size_t n = 0; n < params.size(); ++n) {
    const double saved = params[n];
    params[n] = saved + h;
    probe.unflatten(params);
    const double up = batch_loss(probe, batch, loss, seed);
    params[n] = saved - h;
    probe.unflatten(params);
    const double down = batch_loss(probe, batch, loss, seed);
    params[n] = saved;
    const double numeric = (up - down) / (2 * h);
    const double d = analytic[n] - numeric;
    diff2 += d * d;
    a2 += analytic[n] * analytic[n];
    n2 += numeric * numeric;
    const double scale = std::max(std::abs(analytic[n]), std::abs(numeric));
    if (scale > 1e-6) out.element = std::max(out.element, std::abs(d) / scale);
  }
  const double denom = std::sqrt(std::max(a2, n2));
  out.norm = denom == 0.0 ? std::sqrt(diff2) : std::sqrt(diff2) / denom;
  return out;
}

Outcome gradient_checks() {
  std::mt19937_64 gen(77);
  std::uniform_int_distribution<std::size_t> hidden(2, 8);
  std::uniform_int_distribution<std::size_t> rows(8, 48);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_norm = 0.0;
  double worst_element = 0.0;
  int configs = 0;
  std::map<std::string, int> per_loss;
  for (int c = 0; c < 24; ++c) {
    LossKind loss;
    switch (c % 3) {
      case 0: loss = LossKind::cross_entropy(); break;
      case 1: loss = LossKind::focal(4.0 * u(gen), 0.05 + 0.9 * u(gen)); break;
      default: loss = LossKind::rebalanced(); break;
    }
    std::vector<std::size_t> sizes{c % 2 ? std::size_t{15} : static_cast<std::size_t>(3 + c % 5)};
    const std::size_t depth = 1 + c % 2;
    for (std::size_t d = 0; d < depth; ++d) sizes.push_back(hidden(gen));
    sizes.push_back(1);
    const ClassifierModel model = ClassifierModel::random(sizes, 300 + static_cast<std::uint64_t>(c));
    const Batch batch = random_batch(rows(gen), sizes.front(), 0.1 + 0.4 * u(gen), gen);
    const GradientError e = gradient_error(model, batch, loss, static_cast<std::uint64_t>(c));
    worst_norm = std::max(worst_norm, e.norm);
    worst_element = std::max(worst_element, e.element);
    ++configs;
    ++per_loss[loss.name()];
  }
  std::string detail = std::to_string(configs) + " configurations (";
  for (const auto& [name, count] : per_loss) detail += name + " " + std::to_string(count) + " ";
  detail.back() = ')';
  detail += ", max relative error: norm " + fmt(worst_norm, 3) + ", per entry " + fmt(worst_element, 3);
  return {worst_norm < 1e-4 && worst_element < 1e-4, detail};
}

// ---------------------------------------------------------------------------

double row_ce(int y, double p) { return y == 1 ? -std::log(p) : -std::log1p(-p); }

Outcome rebalanced_law() {
  std::mt19937_64 gen(91);
  std::uniform_int_distribution<std::size_t> size(1, 3000);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t violations = 0;
  for (int b = 0; b < 1000; ++b) {
    const std::size_t n = size(gen);
    const double wood_rate = b % 10 == 0 ? 0.0 : (b % 10 == 1 ? 0.9 : 0.2 * u(gen));
    std::vector<int> labels(n);
    for (int& y : labels) {
      const double draw = u(gen);
      y = draw < 0.05 ? -1 : (draw < 0.05 + wood_rate ? 1 : 0);
    }
    const auto selected = rebalanced_selection(labels, gen());
    std::size_t wood = 0;
    std::size_t leaf = 0;
    for (int y : labels) (y == 1 ? wood : leaf) += y >= 0;
    std::size_t sel_wood = 0;
    std::size_t sel_leaf = 0;
    for (std::size_t s : selected) (labels[s] == 1 ? sel_wood : sel_leaf) += labels[s] >= 0;
    const bool distinct = std::adjacent_find(selected.begin(), selected.end()) == selected.end();
    const std::size_t expected_leaf = wood == 0 ? 0 : std::min(wood, leaf);
    if (sel_wood != wood || sel_leaf != expected_leaf || !distinct || sel_wood + sel_leaf != selected.size()) {
      ++violations;
    }
  }

  // Expectation over the selection randomness.
  double worst = 0.0;
  for (int b = 0; b < 10; ++b) {
    const std::size_t n = 500 + 250 * static_cast<std::size_t>(b);
    std::vector<int> labels(n);
    std::vector<double> probs(n);
    for (std::size_t r = 0; r < n; ++r) {
      labels[r] = u(gen) < 0.04 + 0.02 * b ? 1 : 0;
      probs[r] = 0.02 + 0.96 * u(gen);
    }
    labels[0] = 1;
    double wood_sum = 0.0;
    double leaf_sum = 0.0;
    std::size_t wood = 0;
    for (std::size_t r = 0; r < n; ++r) {
      (labels[r] == 1 ? wood_sum : leaf_sum) += row_ce(labels[r], probs[r]);
      wood += labels[r] == 1;
    }
    const double closed = static_cast<double>(wood) *
                          (wood_sum / static_cast<double>(wood) + leaf_sum / static_cast<double>(n - wood));
    double mean = 0.0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) mean += rebalanced_loss(labels, probs, seed).loss;
    mean /= 1000.0;
    worst = std::max(worst, std::abs(mean - closed) / closed);
  }
  return {violations == 0 && worst < 0.02, "1000 batches, " + std::to_string(violations) +
                                               " cardinality violations; 10 batches x 1000 seeds, worst relative "
                                               "deviation from closed form " + fmt(worst, 3)};
}

// ---------------------------------------------------------------------------

Outcome desk_experiment() {
  const DeskResult r = run_desk_experiment(DeskSettings{});
  const bool spec_ok = r.median_specificity_rebalanced >= r.median_specificity_ce + 0.15;
  const bool acc_ok = std::abs(r.median_accuracy_rebalanced - r.median_accuracy_ce) <= 0.1;
  return {spec_ok && acc_ok, "median specificity rebalanced " + fmt(r.median_specificity_rebalanced, 3) + " vs ce " +
                                 fmt(r.median_specificity_ce, 3) + " (need +0.15" + (spec_ok ? "" : ", short") +
                                 "); median accuracy " + fmt(r.median_accuracy_rebalanced, 3) + " vs " +
                                 fmt(r.median_accuracy_ce, 3) + " (need within 0.1" + (acc_ok ? "" : ", outside") +
                                 ")"};
}

// ---------------------------------------------------------------------------

Outcome metric_oracles() {
  std::mt19937_64 gen(13);
  std::uniform_int_distribution<std::size_t> size(1, 300);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t mismatches = 0;
  std::size_t degenerate = 0;
  std::size_t all_ties = 0;
  std::size_t auroc_checked = 0;
  double worst_auroc = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int kind = t % 5;  // 0,1 random; 2 constant prediction; 3 constant truth; 4 all-tied scores
    const std::size_t n = kind < 2 ? 20 + size(gen) : size(gen);
    std::vector<int> truth(n);
    std::vector<int> pred(n);
    std::vector<double> scores(n);
    const double rate = 0.05 + 0.5 * u(gen);
    for (std::size_t r = 0; r < n; ++r) {
      truth[r] = kind == 3 ? 0 : (u(gen) < rate ? 1 : 0);
      scores[r] = kind == 4 ? 0.5 : (kind == 1 ? std::floor(u(gen) * 8) / 8 : u(gen));
      pred[r] = kind == 2 ? 0 : (scores[r] >= 0.5 ? 1 : 0);
    }
    const ConfusionCounts c = confusion(truth, pred);
    const oracle::Confusion o = oracle::tally(truth, pred);
    if (c.tp != o.tp || c.tn != o.tn || c.fp != o.fp || c.fn != o.fn) ++mismatches;
    if (mcc(c) != oracle::mcc(o)) ++mismatches;
    const bool zero_factor = o.tp + o.fp == 0 || o.tp + o.fn == 0 || o.tn + o.fp == 0 || o.tn + o.fn == 0;
    degenerate += zero_factor;
    if (zero_factor && mcc(c) != 0.0) ++mismatches;

    const bool both = std::count(truth.begin(), truth.end(), 1) > 0 && std::count(truth.begin(), truth.end(), 0) > 0;
    if (both) {
      const double a = auroc(truth, scores);
      const double e = oracle::pair_auroc(truth, scores);
      worst_auroc = std::max(worst_auroc, std::abs(a - e));
      if (!(std::abs(a - e) <= 1e-12)) ++mismatches;
      if (kind == 4) {
        ++all_ties;
        if (a != 0.5) ++mismatches;
      }
      ++auroc_checked;
    } else {
      bool threw = false;
      try {
        auroc(truth, scores);
      } catch (const ValidationError&) {
        threw = true;
      }
      if (!threw) ++mismatches;
    }
  }
  return {mismatches == 0 && degenerate > 0 && all_ties > 0,
          "100 instances (" + std::to_string(degenerate) + " with a zero MCC denominator factor, " +
              std::to_string(all_ties) + " all-tied AUROC), " + std::to_string(mismatches) +
              " mismatches, max AUROC diff " + fmt(worst_auroc, 3) + " over " + std::to_string(auroc_checked)};
}

// ---------------------------------------------------------------------------

Outcome knn_oracle() {
  std::size_t mismatches = 0;
  std::size_t compared = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<int> cell(0, 15);  // coarse lattice: many equal distances
    std::uniform_int_distribution<int> label(-1, 1);
    PointCloud reference;
    PointCloud target;
    for (std::size_t n = 0; n < 2000; ++n) {
      Point p;
      p.x = 0.1 * cell(gen);
      p.y = 0.1 * cell(gen);
      p.z = 0.1 * cell(gen);
      p.label = *label_from_int(label(gen));
      p.tree_id = static_cast<std::int64_t>(1 + n % 23);
      reference.points.push_back(p);
      Point q;
      q.x = 0.05 * cell(gen) + 0.02;
      q.y = 0.1 * cell(gen);
      q.z = 0.05 * cell(gen);
      target.points.push_back(q);
    }
    std::vector<oracle::P3> ref_pts;
    std::vector<int> ref_labels;
    for (const Point& p : reference.points) {
      ref_pts.push_back({p.x, p.y, p.z});
      ref_labels.push_back(to_int(*p.label));
    }
    const std::size_t k = seed % 3 == 0 ? 4 : 5;
    LabelTransferConfig cfg;
    cfg.k = k;
    cfg.drop_unknown = false;
    const PointCloud out = knn_transfer(target, reference, cfg);
    if (out.size() != target.size()) {
      ++mismatches;
      continue;
    }
    std::size_t kept = 0;
    for (std::size_t t = 0; t < target.size(); ++t) {
      const Point& q = target.points[t];
      const auto nearest = oracle::knn(ref_pts, {q.x, q.y, q.z}, k);
      const int expected = oracle::vote(ref_labels, nearest);
      kept += expected != -1;
      ++compared;
      if (to_int(*out.points[t].label) != expected) ++mismatches;
      if (out.points[t].tree_id != reference.points[nearest.front()].tree_id) ++mismatches;
    }
    cfg.drop_unknown = true;
    if (knn_transfer(target, reference, cfg).size() != kept) ++mismatches;
  }
  return {mismatches == 0, "10 seeds x 2000 targets against 2000 lattice references (k 4 and 5), " +
                               std::to_string(compared) + " labels compared, " + std::to_string(mismatches) +
                               " mismatches"};
}

// ---------------------------------------------------------------------------

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) out[fs::relative(entry.path(), dir).string()] = read_file(entry.path());
  }
  return out;
}

bool run_chain(const std::string& exe, const fs::path& dir, const std::string& threads, std::string& error) {
  fs::remove_all(dir);
  fs::create_directories(dir / "run");
  const std::string d = (dir / "run").string() + "/";
  const std::string log = (dir / "log.txt").string();
  const std::string g = " --seed 11 --threads " + threads + " ";
  const std::vector<std::string> steps{
      "synth -o " + d + "forest.csv --trees 9 --points-per-tree 3000 --wood-fraction 0.06",
      "ingest -i " + d + "forest.csv -o " + d + "clean.csv --max-deviation inf --precision 0.005",
      "transfer --target " + d + "clean.csv --reference " + d + "forest.csv -o " + d + "labeled.csv",
      "gvd -i " + d + "labeled.csv -o " + d + "gvd.csv --min-points 30",
      "split -i " + d + "gvd.csv --out-prefix " + d + "split/ --counts 5,2,2",
      "features -i " + d + "split/train.csv -o " + d + "feat_train.csv --stats " + d + "stats.csv --fit",
      "features -i " + d + "split/val.csv -o " + d + "feat_val.csv --stats " + d + "stats.csv",
      "features -i " + d + "split/test.csv -o " + d + "feat_test.csv --stats " + d + "stats.csv",
      "batch -i " + d + "feat_train.csv -o " + d + "train_batches --batch-size 512 --include-residual",
      "batch -i " + d + "feat_val.csv -o " + d + "val_batches --batch-size 512 --include-residual",
      "train --batches " + d + "train_batches --val " + d + "val_batches --checkpoint-dir " + d +
          "ckpt --epochs 6 --lr 0.001 --double-every 2 --checkpoint-every 3 --loss rebalanced",
      "predict --model " + d + "ckpt/epoch_6.csv -i " + d + "feat_test.csv -o " + d + "pred.csv --batch-size 512",
      "eval --truth " + d + "feat_test.csv --pred " + d + "pred.csv --report " + d + "report.csv --group-by tree_id",
  };
  for (const std::string& step : steps) {
    const std::string cmd = "\"" + exe + "\"" + g + step + " >>\"" + log + "\" 2>&1";
    if (std::system(cmd.c_str()) != 0) {
      error = "step failed: " + step.substr(0, step.find(' '));
      return false;
    }
  }
  return true;
}

Outcome e2e_determinism(const std::string& exe) {
  if (exe.empty() || !fs::exists(exe)) return {false, "leafwood executable not found: '" + exe + "'"};
  const fs::path root = fs::temp_directory_path() / ("leafwood_e2e_" + std::to_string(::getpid()));
  std::string error;
  std::vector<std::map<std::string, std::string>> runs;
  for (const auto& [name, threads] : std::vector<std::pair<std::string, std::string>>{
           {"a", "1"}, {"b", "1"}, {"c", "2"}}) {
    if (!run_chain(exe, root / name, threads, error)) {
      fs::remove_all(root);
      return {false, "run " + name + ": " + error};
    }
    runs.push_back(snapshot(root / name / "run"));
  }
  fs::remove_all(root);
  std::size_t bytes = 0;
  for (const auto& [file, content] : runs[0]) bytes += content.size();
  std::string differing;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].size() != runs[0].size()) differing = "file sets differ";
    for (const auto& [file, content] : runs[0]) {
      // The effective config records the thread count, which differs for run c.
      if (r == 2 && file.find("effective_config.") != std::string::npos) continue;
      auto it = runs[r].find(file);
      if (it == runs[r].end() || it->second != content) {
        differing = file;
        break;
      }
    }
  }
  return {differing.empty() && runs[0].count("report.csv") == 1,
          std::to_string(runs[0].size()) + " artifacts (" + std::to_string(bytes) +
              " bytes) compared across 3 runs (threads 1, 1, 2)" + (differing.empty() ? "" : "; differs: " + differing)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"leafwood acceptance checks"};
  std::vector<std::string> only;
  std::string exe = LEAFWOOD_EXE_PATH;
  bool list = false;
  app.add_option("--only", only, "Run only these criteria");
  app.add_option("--leafwood", exe, "Path of the leafwood executable");
  app.add_flag("--list", list, "List criterion names");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {"metric_reproduction", 1.0, metric_reproduction},
      {"feature_oracle", 60.0, feature_oracle},
      {"gvd_partition", 30.0, gvd_partition},
      {"gradient_checks", 60.0, gradient_checks},
      {"rebalanced_law", 60.0, rebalanced_law},
      {"desk_experiment", 300.0, desk_experiment},
      {"metric_oracles", 10.0, metric_oracles},
      {"knn_oracle", 30.0, knn_oracle},
      {"e2e_determinism", 300.0, [&] { return e2e_determinism(exe); }},
  };
  if (list) {
    for (const Criterion& c : criteria) std::cout << c.name << '\n';
    return 0;
  }
  for (const std::string& name : only) {
    if (std::none_of(criteria.begin(), criteria.end(), [&](const Criterion& c) { return c.name == name; })) {
      std::cerr << "unknown criterion '" << name << "'\n";
      return 2;
    }
  }

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.name) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = elapsed <= c.budget_seconds;
    const bool pass = out.pass && in_time;
    failures += !pass;
    std::cout << (pass ? "PASS " : "FAIL ") << c.name << ": " << out.detail << " [" << fmt(elapsed, 3) << " s of "
              << fmt(c.budget_seconds, 3) << " s" << (in_time ? "" : ", over budget") << "]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
