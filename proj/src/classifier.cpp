// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafwood/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>

#include "leafwood/csv.hpp"
#include "leafwood/metrics.hpp"
#include "leafwood/parallel.hpp"
#include "leafwood/rng.hpp"

namespace leafwood {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Model

ClassifierModel ClassifierModel::zeros(std::vector<std::size_t> sizes) {
  if (sizes.size() < 2 || sizes.back() != 1) {
    throw ValidationError("classifier.layers", "need an input layer and a single output unit");
  }
  for (std::size_t s : sizes) {
    if (s == 0) throw ValidationError("classifier.layers", "layer sizes must be positive");
  }
  ClassifierModel model;
  model.sizes_ = std::move(sizes);
  for (std::size_t l = 0; l + 1 < model.sizes_.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(model.sizes_[l]);
    const auto out = static_cast<Eigen::Index>(model.sizes_[l + 1]);
    model.layers_.push_back({Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)});
  }
  return model;
}

ClassifierModel ClassifierModel::random(std::vector<std::size_t> sizes, std::uint64_t seed) {
  ClassifierModel model = zeros(std::move(sizes));
  Rng rng(seed);
  for (DenseLayer& layer : model.layers_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.weights.rows() + layer.weights.cols()));
    for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) layer.weights(r, c) = rng.uniform(-limit, limit);
    }
  }
  return model;
}

std::size_t ClassifierModel::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& layer : layers_) n += static_cast<std::size_t>(layer.weights.size() + layer.bias.size());
  return n;
}

namespace {

std::vector<double> flatten_layers(const std::vector<DenseLayer>& layers) {
  std::vector<double> out;
  for (const DenseLayer& layer : layers) {
    out.insert(out.end(), layer.weights.data(), layer.weights.data() + layer.weights.size());
    out.insert(out.end(), layer.bias.data(), layer.bias.data() + layer.bias.size());
  }
  return out;
}

}  // namespace

std::vector<double> ClassifierModel::flatten() const { return flatten_layers(layers_); }

void ClassifierModel::unflatten(std::span<const double> params) {
  if (params.size() != parameter_count()) throw ValidationError("params", "parameter count mismatch");
  std::size_t offset = 0;
  for (DenseLayer& layer : layers_) {
    std::copy_n(params.data() + offset, layer.weights.size(), layer.weights.data());
    offset += static_cast<std::size_t>(layer.weights.size());
    std::copy_n(params.data() + offset, layer.bias.size(), layer.bias.data());
    offset += static_cast<std::size_t>(layer.bias.size());
  }
}

bool ClassifierModel::operator==(const ClassifierModel& other) const {
  return sizes_ == other.sizes_ && flatten() == other.flatten();
}

std::vector<double> Gradients::flatten() const { return flatten_layers(layers); }

void save_model(const ClassifierModel& model, const CheckpointInfo& info, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  std::vector<std::string> sizes;
  for (std::size_t s : model.sizes()) sizes.push_back(std::to_string(s));
  out << "# leafwood classifier\n";
  out << "# layers=" << csv::join(sizes) << '\n';
  out << "# seed=" << info.seed << '\n';
  out << "# epoch=" << info.epoch << '\n';
  out << "# dropout=" << csv::format_number(info.dropout) << '\n';
  out << "layer,param,row,col,value\n";
  for (std::size_t l = 0; l < model.layers().size(); ++l) {
    const DenseLayer& layer = model.layers()[l];
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        out << l << ",W," << r << ',' << c << ',' << csv::format_number(layer.weights(r, c)) << '\n';
      }
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
      out << l << ",b," << r << ",0," << csv::format_number(layer.bias(r)) << '\n';
    }
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

ClassifierModel load_model(const std::string& path, CheckpointInfo* info) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<std::size_t> sizes;
  CheckpointInfo meta;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = csv::trim(line);
    if (view.empty() || view.front() != '#') continue;
    view.remove_prefix(1);
    view = csv::trim(view);
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) continue;
    const std::string_view key = view.substr(0, eq);
    const std::string_view value = view.substr(eq + 1);
    if (key == "layers") {
      for (auto f : csv::split(value)) {
        auto n = csv::parse_integer(f);
        if (!n || *n <= 0) throw ParseError(path, line_no, "invalid layer size");
        sizes.push_back(static_cast<std::size_t>(*n));
      }
    } else if (key == "seed") {
      auto n = csv::parse_integer(value);
      if (n) meta.seed = static_cast<std::uint64_t>(*n);
    } else if (key == "epoch") {
      auto n = csv::parse_integer(value);
      if (n) meta.epoch = static_cast<std::size_t>(*n);
    } else if (key == "dropout") {
      auto v = csv::parse_number(value);
      if (v) meta.dropout = *v;
    }
  }
  if (sizes.empty()) throw SchemaError(path + ": missing '# layers=' header");
  ClassifierModel model = ClassifierModel::zeros(sizes);

  const csv::Table table = csv::read_table(path);
  const std::size_t layer_col = table.require("layer", path);
  const std::size_t param_col = table.require("param", path);
  const std::size_t row_col = table.require("row", path);
  const std::size_t col_col = table.require("col", path);
  const std::size_t value_col = table.require("value", path);
  if (table.rows.size() != model.parameter_count()) {
    throw SchemaError(path + ": expected " + std::to_string(model.parameter_count()) + " parameters, found " +
                      std::to_string(table.rows.size()));
  }
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    auto l = csv::parse_integer(row[layer_col]);
    auto i = csv::parse_integer(row[row_col]);
    auto j = csv::parse_integer(row[col_col]);
    auto v = csv::parse_number(row[value_col]);
    if (!l || !i || !j || !v || *l < 0 || static_cast<std::size_t>(*l) >= model.layers().size()) {
      throw ParseError(path, table.line_numbers[r], "invalid parameter row");
    }
    DenseLayer& layer = model.layers()[static_cast<std::size_t>(*l)];
    if (row[param_col] == "W" && *i >= 0 && *i < layer.weights.rows() && *j >= 0 && *j < layer.weights.cols()) {
      layer.weights(*i, *j) = *v;
    } else if (row[param_col] == "b" && *i >= 0 && *i < layer.bias.size()) {
      layer.bias(*i) = *v;
    } else {
      throw ParseError(path, table.line_numbers[r], "parameter index out of range");
    }
  }
  if (info) *info = meta;
  return model;
}

// ---------------------------------------------------------------------------
// Forward

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double clamp_probability(double p) {
  return std::clamp(p, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

struct ForwardPass {
  std::vector<Eigen::MatrixXd> pre;    // hidden pre-activations
  std::vector<Eigen::MatrixXd> act;    // act[0] = input, act[l+1] = hidden output l (after dropout)
  std::vector<Eigen::MatrixXd> masks;  // dropout scale per hidden unit, empty without dropout
  Eigen::RowVectorXd logits;
};

ForwardPass run_forward(const ClassifierModel& model, const Eigen::MatrixXd& x, double dropout, Rng* rng) {
  ForwardPass pass;
  const auto& layers = model.layers();
  pass.act.push_back(x);
  const double keep = 1.0 - dropout;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    Eigen::MatrixXd z = layers[l].weights * pass.act.back();
    z.colwise() += layers[l].bias;
    Eigen::MatrixXd a = z.unaryExpr([](double v) { return v > 0.0 ? v : std::expm1(v); });
    if (dropout > 0.0 && rng != nullptr) {
      Eigen::MatrixXd mask(a.rows(), a.cols());
      for (Eigen::Index n = 0; n < mask.size(); ++n) mask.data()[n] = rng->uniform() < keep ? 1.0 / keep : 0.0;
      a.array() *= mask.array();
      pass.masks.push_back(std::move(mask));
    }
    pass.pre.push_back(std::move(z));
    pass.act.push_back(std::move(a));
  }
  Eigen::MatrixXd out = layers.back().weights * pass.act.back();
  out.colwise() += layers.back().bias;
  pass.logits = out.row(0);
  return pass;
}

void check_width(const ClassifierModel& model, Eigen::Index width) {
  if (static_cast<std::size_t>(width) != model.input_width()) {
    throw ValidationError("batch", "row width " + std::to_string(width) + " does not match model input " +
                                       std::to_string(model.input_width()));
  }
}

}  // namespace

Eigen::MatrixXd batch_matrix(const Batch& batch) {
  if (batch.inputs.size() != batch.rows() * batch.width) throw ValidationError("batch", "inconsistent input size");
  // Row-major rows x width is column-major width x rows.
  return Eigen::Map<const Eigen::MatrixXd>(batch.inputs.data(), static_cast<Eigen::Index>(batch.width),
                                           static_cast<Eigen::Index>(batch.rows()));
}

std::vector<double> forward(const ClassifierModel& model, const Eigen::MatrixXd& inputs) {
  check_width(model, inputs.rows());
  const ForwardPass pass = run_forward(model, inputs, 0.0, nullptr);
  std::vector<double> probs(static_cast<std::size_t>(pass.logits.size()));
  for (Eigen::Index n = 0; n < pass.logits.size(); ++n) {
    probs[static_cast<std::size_t>(n)] = clamp_probability(sigmoid(pass.logits(n)));
  }
  return probs;
}

std::vector<double> forward(const ClassifierModel& model, const Batch& batch) {
  if (batch.width != model.input_width()) check_width(model, static_cast<Eigen::Index>(batch.width));
  return forward(model, batch_matrix(batch));
}

// ---------------------------------------------------------------------------
// Losses

LossKind LossKind::parse(std::string_view name) {
  if (name == "ce" || name == "cross_entropy") return cross_entropy();
  if (name == "focal") return focal();
  if (name == "rebalanced") return rebalanced();
  throw ValidationError("train.loss", "unknown loss '" + std::string(name) + "' (expected rebalanced, focal or ce)");
}

std::string LossKind::name() const {
  switch (type) {
    case Type::cross_entropy: return "ce";
    case Type::focal: return "focal";
    case Type::rebalanced: return "rebalanced";
  }
  return "?";
}

void LossKind::validate() const {
  if (type != Type::focal) return;
  if (!(focal_gamma >= 0.0)) throw ValidationError("train.focal_gamma", "must be >= 0");
  if (!(focal_alpha > 0.0 && focal_alpha < 1.0)) throw ValidationError("train.focal_alpha", "must be in (0, 1)");
}

namespace {

void check_lengths(std::span<const int> labels, std::span<const double> probs) {
  if (labels.size() != probs.size()) throw ValidationError("probs", "length does not match labels");
}

double row_cross_entropy(int y, double p) { return y == 1 ? -std::log(p) : -std::log1p(-p); }

}  // namespace

double cross_entropy_loss(std::span<const int> labels, std::span<const double> probs) {
  check_lengths(labels, probs);
  double sum = 0.0;
  std::size_t m = 0;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (labels[n] < 0) continue;
    sum += row_cross_entropy(labels[n], probs[n]);
    ++m;
  }
  return m == 0 ? 0.0 : sum / static_cast<double>(m);
}

double focal_loss(std::span<const int> labels, std::span<const double> probs, double gamma, double alpha) {
  check_lengths(labels, probs);
  double sum = 0.0;
  std::size_t m = 0;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (labels[n] < 0) continue;
    const bool wood = labels[n] == 1;
    const double p_t = wood ? probs[n] : 1.0 - probs[n];
    const double alpha_t = wood ? alpha : 1.0 - alpha;
    const double log_p_t = wood ? std::log(probs[n]) : std::log1p(-probs[n]);
    sum += -alpha_t * std::pow(1.0 - p_t, gamma) * log_p_t;
    ++m;
  }
  return m == 0 ? 0.0 : sum / static_cast<double>(m);
}

std::vector<std::size_t> rebalanced_selection(std::span<const int> labels, std::uint64_t seed) {
  std::vector<std::size_t> wood;
  std::vector<std::size_t> leaf;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (labels[n] == 1) wood.push_back(n);
    if (labels[n] == 0) leaf.push_back(n);
  }
  if (wood.empty()) return {};
  std::vector<std::size_t> selected = wood;
  if (leaf.size() >= wood.size()) {
    Rng rng(seed);
    for (std::size_t pick : sample_without_replacement(leaf.size(), wood.size(), rng)) {
      selected.push_back(leaf[pick]);
    }
  } else {
    selected.insert(selected.end(), leaf.begin(), leaf.end());
  }
  std::sort(selected.begin(), selected.end());
  return selected;
}

RebalancedLoss rebalanced_loss(std::span<const int> labels, std::span<const double> probs, std::uint64_t seed) {
  check_lengths(labels, probs);
  RebalancedLoss out;
  out.selected = rebalanced_selection(labels, seed);
  for (std::size_t n : out.selected) out.loss += row_cross_entropy(labels[n], probs[n]);
  return out;
}

double batch_loss(const ClassifierModel& model, const Batch& batch, const LossKind& loss, std::uint64_t seed) {
  const auto probs = forward(model, batch);
  switch (loss.type) {
    case LossKind::Type::cross_entropy: return cross_entropy_loss(batch.labels, probs);
    case LossKind::Type::focal: return focal_loss(batch.labels, probs, loss.focal_gamma, loss.focal_alpha);
    case LossKind::Type::rebalanced: return rebalanced_loss(batch.labels, probs, seed).loss;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Backward

namespace {

// Rows entering the loss.
std::vector<std::size_t> participating_rows(std::span<const int> labels, const LossKind& loss, std::uint64_t seed) {
  if (loss.type == LossKind::Type::rebalanced) return rebalanced_selection(labels, seed);
  std::vector<std::size_t> rows;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (labels[n] >= 0) rows.push_back(n);
  }
  return rows;
}

Gradients zero_gradients(const ClassifierModel& model) {
  Gradients g;
  for (const DenseLayer& layer : model.layers()) {
    g.layers.push_back({Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()),
                        Eigen::VectorXd::Zero(layer.bias.size())});
  }
  return g;
}

Gradients backward_matrix(const ClassifierModel& model, const Eigen::MatrixXd& inputs, std::span<const int> labels,
                          const LossKind& loss, std::uint64_t seed, double dropout) {
  check_width(model, inputs.rows());
  Gradients g = zero_gradients(model);
  const auto rows = participating_rows(labels, loss, seed);
  if (rows.empty()) return g;
  g.participating = rows.size();

  const bool all_rows = rows.size() == static_cast<std::size_t>(inputs.cols());
  Eigen::MatrixXd x;
  if (!all_rows) {
    x.resize(inputs.rows(), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t c = 0; c < rows.size(); ++c) x.col(static_cast<Eigen::Index>(c)) = inputs.col(static_cast<Eigen::Index>(rows[c]));
  }
  Rng dropout_rng(Rng::derive(seed, 0xd50));
  const ForwardPass pass = run_forward(model, all_rows ? inputs : x, dropout, dropout > 0.0 ? &dropout_rng : nullptr);

  // dL/dz for every participating row.
  const auto m = static_cast<Eigen::Index>(rows.size());
  Eigen::RowVectorXd dz(m);
  double total = 0.0;
  const double scale = loss.type == LossKind::Type::rebalanced ? 1.0 : 1.0 / static_cast<double>(m);
  for (Eigen::Index c = 0; c < m; ++c) {
    const int y = labels[rows[static_cast<std::size_t>(c)]];
    const double z = pass.logits(c);
    const double p = sigmoid(z);
    if (loss.type == LossKind::Type::focal) {
      const bool wood = y == 1;
      const double p_t = wood ? p : 1.0 - p;
      const double one_minus = wood ? sigmoid(-z) : p;  // 1 - p_t without cancellation
      const double log_p_t = -softplus(wood ? -z : z);
      const double alpha_t = wood ? loss.focal_alpha : 1.0 - loss.focal_alpha;
      const double gamma = loss.focal_gamma;
      total += -alpha_t * std::pow(one_minus, gamma) * log_p_t;
      // d/dz of -alpha_t (1-p_t)^gamma ln p_t, using dp_t/dz = +-p_t (1-p_t).
      const double sign = wood ? 1.0 : -1.0;
      dz(c) = sign * alpha_t *
              (gamma * std::pow(one_minus, gamma) * p_t * log_p_t - std::pow(one_minus, gamma + 1.0));
    } else {
      total += y == 1 ? softplus(-z) : softplus(z);
      dz(c) = p - static_cast<double>(y);
    }
  }
  dz *= scale;
  g.loss = total * scale;

  const auto& layers = model.layers();
  const std::size_t last = layers.size() - 1;
  Eigen::MatrixXd delta = dz;  // 1 x m
  for (std::size_t l = last + 1; l-- > 0;) {
    g.layers[l].weights = delta * pass.act[l].transpose();
    g.layers[l].bias = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd upstream = layers[l].weights.transpose() * delta;
    const Eigen::MatrixXd& z = pass.pre[l - 1];
    Eigen::MatrixXd local = z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : std::exp(v); });
    if (!pass.masks.empty()) local.array() *= pass.masks[l - 1].array();
    delta = upstream.cwiseProduct(local);
  }
  return g;
}

}  // namespace

Gradients backward(const ClassifierModel& model, const Batch& batch, const LossKind& loss, std::uint64_t seed,
                   double dropout) {
  loss.validate();
  if (batch.width != model.input_width()) check_width(model, static_cast<Eigen::Index>(batch.width));
  return backward_matrix(model, batch_matrix(batch), batch.labels, loss, seed, dropout);
}

void adam_update(std::vector<double>& params, std::span<const double> grad, AdamState& state, double lr,
                 double beta1, double beta2, double eps) {
  if (grad.size() != params.size()) throw ValidationError("grad", "size does not match parameters");
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
    state.step = 0;
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t n = 0; n < params.size(); ++n) {
    state.m[n] = beta1 * state.m[n] + (1.0 - beta1) * grad[n];
    state.v[n] = beta2 * state.v[n] + (1.0 - beta2) * grad[n] * grad[n];
    const double m_hat = state.m[n] / c1;
    const double v_hat = state.v[n] / c2;
    params[n] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

// ---------------------------------------------------------------------------
// Training

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("train.learning_rate", "must be a positive finite number");
  }
  if (initial_batches_per_step == 0) throw ValidationError("train.initial_batches_per_step", "must be >= 1");
  if (max_batches_per_step < initial_batches_per_step) {
    throw ValidationError("train.max_batches_per_step", "cap must be >= the initial batches per step");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("train.dropout", "must be in [0, 1)");
  for (std::size_t h : hidden) {
    if (h == 0) throw ValidationError("train.hidden", "hidden layer sizes must be positive");
  }
  if (validate_every == 0) throw ValidationError("train.validate_every", "must be >= 1");
}

std::size_t batches_per_step(const TrainConfig& cfg, std::size_t epoch) {
  std::size_t n = cfg.initial_batches_per_step;
  if (cfg.double_every == 0 || epoch == 0) return n;
  const std::size_t doublings = (epoch - 1) / cfg.double_every;
  for (std::size_t d = 0; d < doublings && n < cfg.max_batches_per_step; ++d) n *= 2;
  return std::min(n, cfg.max_batches_per_step);
}

void write_train_log(const std::vector<EpochLog>& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "epoch,batches_per_step,train_loss,train_loss_per_point,val_loss,val_specificity,val_mcc,val_auroc\n";
  for (const EpochLog& e : log) {
    out << e.epoch << ',' << e.batches_per_step << ',' << csv::format_number(e.train_loss) << ','
        << csv::format_number(e.train_loss_per_point) << ',' << csv::format_number(e.val_loss) << ','
        << csv::format_number(e.val_specificity) << ',' << csv::format_number(e.val_mcc) << ','
        << csv::format_number(e.val_auroc) << '\n';
  }
}

namespace {

struct ValidationSet {
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<std::vector<int>> labels;
};

void evaluate(const ClassifierModel& model, const ValidationSet& val, EpochLog& entry) {
  std::vector<int> truth;
  std::vector<double> scores;
  for (std::size_t b = 0; b < val.inputs.size(); ++b) {
    const auto probs = forward(model, val.inputs[b]);
    for (std::size_t r = 0; r < probs.size(); ++r) {
      if (val.labels[b][r] < 0) continue;
      truth.push_back(val.labels[b][r]);
      scores.push_back(probs[r]);
    }
  }
  entry.val_loss = cross_entropy_loss(truth, scores);
  std::vector<int> predicted(scores.size());
  for (std::size_t n = 0; n < scores.size(); ++n) predicted[n] = scores[n] >= 0.5 ? 1 : 0;
  const ConfusionCounts c = confusion(truth, predicted);
  entry.val_specificity = summary(c).specificity;
  entry.val_mcc = mcc(c);
  const bool both = c.tp + c.fn > 0 && c.tn + c.fp > 0;
  entry.val_auroc = both ? auroc(truth, scores) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

TrainResult train(const std::vector<Batch>& train_batches, const std::vector<Batch>& val_batches,
                  const TrainConfig& cfg, const LossKind& loss, const std::optional<ClassifierModel>& initial) {
  cfg.validate();
  loss.validate();
  if (train_batches.empty()) throw ValidationError("train.batches", "no training batches");
  if (val_batches.empty()) throw ValidationError("train.val", "no validation batches");
  const std::size_t width = train_batches.front().width;
  for (const auto* set : {&train_batches, &val_batches}) {
    for (const Batch& b : *set) {
      if (b.width != width) throw ValidationError("train.batches", "batches have different row widths");
    }
  }

  std::vector<std::size_t> sizes{width};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(1);
  TrainResult result;
  if (initial) {
    if (initial->input_width() != width) throw ValidationError("train.initial", "initial model input width mismatch");
    result.model = *initial;
  } else {
    result.model = ClassifierModel::random(sizes, Rng::derive(cfg.seed, 0x1417));
  }

  std::vector<Eigen::MatrixXd> train_inputs;
  for (const Batch& b : train_batches) train_inputs.push_back(batch_matrix(b));
  ValidationSet val;
  for (const Batch& b : val_batches) {
    val.inputs.push_back(batch_matrix(b));
    val.labels.push_back(b.labels);
  }

  if (!cfg.checkpoint_dir.empty()) fs::create_directories(cfg.checkpoint_dir);
  std::vector<double> params = result.model.flatten();
  AdamState adam;
  std::vector<std::size_t> order(train_batches.size());
  std::vector<Gradients> grads;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const std::size_t per_step = batches_per_step(cfg, epoch);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng order_rng(Rng::derive(cfg.seed, 2 * epoch));
    shuffle(std::span<std::size_t>(order), order_rng);
    const std::uint64_t batch_stream = Rng::derive(cfg.seed, 2 * epoch + 1);

    EpochLog entry;
    entry.epoch = epoch;
    entry.batches_per_step = per_step;
    double loss_sum = 0.0;
    double point_loss_sum = 0.0;
    std::size_t participating = 0;

    for (std::size_t start = 0; start < order.size(); start += per_step) {
      const std::size_t count = std::min(per_step, order.size() - start);
      grads.assign(count, Gradients{});
      parallel_for(count, cfg.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c) {
          const std::size_t b = order[start + c];
          grads[c] = backward_matrix(result.model, train_inputs[b], train_batches[b].labels, loss,
                                     Rng::derive(batch_stream, b), cfg.dropout);
        }
      });
      std::vector<double> step_grad(params.size(), 0.0);
      for (const Gradients& g : grads) {
        if (!std::isfinite(g.loss)) throw TrainingDiverged(epoch);
        loss_sum += g.loss;
        point_loss_sum += loss.type == LossKind::Type::rebalanced ? g.loss : g.loss * static_cast<double>(g.participating);
        participating += g.participating;
        const auto flat = g.flatten();
        for (std::size_t n = 0; n < flat.size(); ++n) step_grad[n] += flat[n];
      }
      for (double& v : step_grad) v /= static_cast<double>(count);
      adam_update(params, step_grad, adam, cfg.learning_rate);
      if (std::any_of(params.begin(), params.end(), [](double v) { return !std::isfinite(v); })) {
        throw TrainingDiverged(epoch);
      }
      result.model.unflatten(params);
    }

    entry.train_loss = loss_sum / static_cast<double>(order.size());
    entry.train_loss_per_point = participating == 0 ? 0.0 : point_loss_sum / static_cast<double>(participating);
    if (epoch % cfg.validate_every == 0 || epoch == cfg.epochs) {
      evaluate(result.model, val, entry);
    } else {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      entry.val_loss = entry.val_specificity = entry.val_mcc = entry.val_auroc = nan;
    }
    result.log.push_back(entry);

    if (!cfg.checkpoint_dir.empty() &&
        ((cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0) || epoch == cfg.epochs)) {
      save_model(result.model, {cfg.seed, epoch, cfg.dropout},
                 (fs::path(cfg.checkpoint_dir) / ("epoch_" + std::to_string(epoch) + ".csv")).string());
    }
  }
  if (!cfg.checkpoint_dir.empty()) {
    if (cfg.epochs == 0) {
      save_model(result.model, {cfg.seed, 0, cfg.dropout}, (fs::path(cfg.checkpoint_dir) / "epoch_0.csv").string());
    }
    write_train_log(result.log, (fs::path(cfg.checkpoint_dir) / "train_log.csv").string());
  }
  return result;
}

// ---------------------------------------------------------------------------
// Prediction

Prediction predict(const ClassifierModel& model, const std::vector<Batch>& batches, std::size_t point_count,
                   unsigned threads) {
  std::vector<std::vector<double>> probs(batches.size());
  parallel_for(batches.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t b = begin; b < end; ++b) probs[b] = forward(model, batches[b]);
  });
  std::vector<double> sum(point_count, 0.0);
  std::vector<std::size_t> hits(point_count, 0);
  for (std::size_t b = 0; b < batches.size(); ++b) {
    for (std::size_t r = 0; r < batches[b].rows(); ++r) {
      const std::size_t src = batches[b].sources[r];
      if (src >= point_count) throw ValidationError("batch", "source index " + std::to_string(src) + " out of range");
      sum[src] += probs[b][r];
      ++hits[src];
    }
  }
  Prediction out;
  out.p_wood.resize(point_count);
  out.labels.resize(point_count);
  for (std::size_t n = 0; n < point_count; ++n) {
    if (hits[n] == 0) throw ValidationError("batch", "point " + std::to_string(n) + " is not covered by any batch");
    out.p_wood[n] = sum[n] / static_cast<double>(hits[n]);
    out.labels[n] = out.p_wood[n] >= 0.5 ? Label::wood : Label::leaf;
  }
  return out;
}

}  // namespace leafwood
