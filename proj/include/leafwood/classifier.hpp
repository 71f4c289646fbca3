// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LEAFWOOD_CLASSIFIER_HPP
#define LEAFWOOD_CLASSIFIER_HPP

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "leafwood/batching.hpp"
#include "leafwood/error.hpp"
#include "leafwood/point_cloud.hpp"

namespace leafwood {

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
};

/// Feed-forward per-point classifier: ELU hidden layers and a logistic
/// output giving the probability that a point is wood.
class ClassifierModel {
 public:
  ClassifierModel() = default;

  /// All weights and biases zero.
  static ClassifierModel zeros(std::vector<std::size_t> sizes);
  /// Glorot-uniform weights, zero biases.
  static ClassifierModel random(std::vector<std::size_t> sizes, std::uint64_t seed);

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t input_width() const { return sizes_.empty() ? 0 : sizes_.front(); }

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  std::size_t parameter_count() const;
  /// Parameters layer by layer: weights (column-major) then bias.
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> params);

  bool operator==(const ClassifierModel& other) const;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<DenseLayer> layers_;
};

/// Metadata stored alongside the weights in a checkpoint file.
struct CheckpointInfo {
  std::uint64_t seed = 0;
  std::size_t epoch = 0;
  double dropout = 0.0;
};

void save_model(const ClassifierModel& model, const CheckpointInfo& info, const std::string& path);
ClassifierModel load_model(const std::string& path, CheckpointInfo* info = nullptr);

/// Inputs of a batch as a width x rows matrix.
Eigen::MatrixXd batch_matrix(const Batch& batch);

/// Per-row wood probability in (0, 1); no dropout. Throws ValidationError on
/// a width mismatch.
std::vector<double> forward(const ClassifierModel& model, const Batch& batch);
std::vector<double> forward(const ClassifierModel& model, const Eigen::MatrixXd& inputs);

struct LossKind {
  enum class Type { cross_entropy, focal, rebalanced };

  Type type = Type::rebalanced;
  double focal_gamma = 2.0;
  double focal_alpha = 0.25;

  static LossKind cross_entropy() { return {Type::cross_entropy}; }
  static LossKind focal(double gamma = 2.0, double alpha = 0.25) { return {Type::focal, gamma, alpha}; }
  static LossKind rebalanced() { return {Type::rebalanced}; }

  /// "ce" / "cross_entropy", "focal", "rebalanced".
  static LossKind parse(std::string_view name);
  std::string name() const;
  void validate() const;
};

// Loss functions take labels in {-1, 0, 1}; rows labeled -1 never participate.

/// Mean binary cross-entropy over labeled rows (0 when there are none).
double cross_entropy_loss(std::span<const int> labels, std::span<const double> probs);

/// Mean of -alpha_t (1 - p_t)^gamma ln(p_t) over labeled rows, with
/// p_t = p, alpha_t = alpha for wood and p_t = 1 - p, alpha_t = 1 - alpha for leaf.
double focal_loss(std::span<const int> labels, std::span<const double> probs, double gamma = 2.0,
                  double alpha = 0.25);

/// Rows taking part in the rebalanced loss, ascending: every wood row plus
/// min(|wood|, |leaf|) leaf rows drawn uniformly without replacement.
/// Empty when the batch has no wood.
std::vector<std::size_t> rebalanced_selection(std::span<const int> labels, std::uint64_t seed);

struct RebalancedLoss {
  double loss = 0.0;                  // summed cross-entropy over `selected`
  std::vector<std::size_t> selected;
};

RebalancedLoss rebalanced_loss(std::span<const int> labels, std::span<const double> probs, std::uint64_t seed);

/// Gradient of the batch loss, same shapes as the model's layers.
struct Gradients {
  std::vector<DenseLayer> layers;
  double loss = 0.0;
  std::size_t participating = 0;  // rows that entered the loss

  std::vector<double> flatten() const;
};

/// Analytic backpropagation of `loss` on `batch`. `seed` drives the
/// rebalanced selection and, when dropout > 0, the dropout masks.
Gradients backward(const ClassifierModel& model, const Batch& batch, const LossKind& loss, std::uint64_t seed,
                   double dropout = 0.0);

/// Loss of the model on a batch computed through `forward` and the public
/// loss functions (no dropout); the reference the gradient is checked against.
double batch_loss(const ClassifierModel& model, const Batch& batch, const LossKind& loss, std::uint64_t seed);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::size_t step = 0;
};

void adam_update(std::vector<double>& params, std::span<const double> grad, AdamState& state, double lr,
                 double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

struct TrainConfig {
  double learning_rate = 1e-7;
  std::size_t epochs = 3000;
  std::size_t initial_batches_per_step = 1;
  std::size_t double_every = 1000;   // epochs between doublings; 0 disables
  std::size_t max_batches_per_step = 128;
  std::vector<std::size_t> hidden{32, 16};
  double dropout = 0.3;
  std::uint64_t seed = 7;
  unsigned threads = 1;
  std::string checkpoint_dir;        // empty: no files written
  std::size_t checkpoint_every = 100;
  std::size_t validate_every = 1;    // epochs between validation passes

  void validate() const;
};

/// Batches aggregated into one optimizer step during `epoch` (1-based).
std::size_t batches_per_step(const TrainConfig& cfg, std::size_t epoch);

struct EpochLog {
  std::size_t epoch = 0;
  std::size_t batches_per_step = 0;
  double train_loss = 0.0;            // mean batch loss
  double train_loss_per_point = 0.0;  // summed loss / participating rows
  double val_loss = 0.0;              // cross-entropy
  double val_specificity = 0.0;
  double val_mcc = 0.0;
  double val_auroc = 0.0;             // NaN when validation lacks a class
};

struct TrainResult {
  ClassifierModel model;
  std::vector<EpochLog> log;
};

class TrainingDiverged : public Error {
 public:
  explicit TrainingDiverged(std::size_t epoch)
      : Error("training diverged: non-finite loss at epoch " + std::to_string(epoch)), epoch_(epoch) {}
  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

/// Adam training. Deterministic for a given config; throws TrainingDiverged
/// on a non-finite loss. With a checkpoint_dir, writes epoch_<N>.csv every
/// checkpoint_every epochs and at the last epoch, plus train_log.csv.
TrainResult train(const std::vector<Batch>& train_batches, const std::vector<Batch>& val_batches,
                  const TrainConfig& cfg, const LossKind& loss,
                  const std::optional<ClassifierModel>& initial = std::nullopt);

void write_train_log(const std::vector<EpochLog>& log, const std::string& path);

struct Prediction {
  std::vector<double> p_wood;
  std::vector<Label> labels;  // wood iff p_wood >= 0.5
};

/// Per-point probabilities for a cloud of `point_count` points. Rows sharing
/// a source point are averaged; every point must be covered by some row.
Prediction predict(const ClassifierModel& model, const std::vector<Batch>& batches, std::size_t point_count,
                   unsigned threads = 1);

}  // namespace leafwood

#endif  // LEAFWOOD_CLASSIFIER_HPP
