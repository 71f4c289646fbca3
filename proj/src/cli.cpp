// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafwood/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>

#include "CLI11.hpp"
#include "leafwood/batching.hpp"
#include "leafwood/classifier.hpp"
#include "leafwood/config.hpp"
#include "leafwood/csv.hpp"
#include "leafwood/features.hpp"
#include "leafwood/gvd.hpp"
#include "leafwood/io.hpp"
#include "leafwood/labeling.hpp"
#include "leafwood/metrics.hpp"
#include "leafwood/synth.hpp"
#include "leafwood/voxel.hpp"

namespace leafwood::cli {

namespace fs = std::filesystem;

namespace {

// A flag that, when given, overrides a config value.
struct Override {
  CLI::Option* option;
  std::function<void(PipelineConfig&)> apply;
};

struct Flags {
  // global
  std::string config_path;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  // shared paths
  std::string input;
  std::string output;

  // synth
  std::size_t trees = 0;
  double wood_fraction = 0.0;
  std::size_t points_per_tree = 0;
  std::size_t branches = 0;
  double noise = 0.0;

  // ingest
  double min_intensity_db = 0.0;
  std::string max_deviation;
  double precision = 0.0;

  // gvd
  double voxel_size = 0.0;
  int connectivity = 26;
  int tau = 0;
  double gamma = 0.0;
  std::size_t min_voxels = 0;
  std::size_t min_points = 0;
  std::string voxels_out;

  // features
  std::vector<double> radii;
  std::string stats;
  bool fit = false;
  std::string linearity_denominator;

  // transfer
  std::string reference;
  std::size_t k = 0;
  bool drop_unknown = false;
  bool keep_unknown = false;

  // split
  std::vector<std::size_t> counts;
  std::string out_prefix;
  std::string tree_id_list;
  bool allow_unassigned = false;

  // batch
  std::size_t batch_size = 0;
  bool include_residual = false;

  // train
  std::string val;
  std::string loss;
  double lr = 0.0;
  std::size_t epochs = 0;
  std::size_t double_every = 0;
  std::size_t cap = 0;
  std::size_t initial_batches = 0;
  double dropout = 0.0;
  std::string checkpoint_dir;
  std::size_t checkpoint_every = 0;
  std::size_t validate_every = 0;
  std::string init_model;

  // predict / eval
  std::string model;
  std::string truth;
  std::string pred;
  std::string report;
  std::string group_by;
};

class StageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename T, typename Fn>
CLI::Option* overriding(CLI::App* app, std::vector<Override>& overrides, const std::string& name, T& storage,
                        const std::string& help, Fn apply) {
  CLI::Option* opt = app->add_option(name, storage, help);
  overrides.push_back({opt, [&storage, apply](PipelineConfig& c) { apply(c, storage); }});
  return opt;
}

fs::path parent_dir(const std::string& file) {
  fs::path p = fs::path(file).parent_path();
  return p.empty() ? fs::path(".") : p;
}

void write_effective_config(const PipelineConfig& cfg, const fs::path& dir, const std::string& subcommand) {
  fs::create_directories(dir);
  cfg.save((dir / ("effective_config." + subcommand + ".json")).string());
}

void note(const std::string& stage, const std::string& message) {
  std::cerr << "leafwood " << stage << ": " << message << '\n';
}

// ---------------------------------------------------------------------------
// Stages

void run_synth(const PipelineConfig& cfg, const Flags& f) {
  ForestParams params = cfg.synth;
  params.seed = cfg.seed;
  const PointCloud cloud = generate(params, cfg.threads);
  io::write_csv(cloud, f.output);
  note("synth", std::to_string(cloud.size()) + " points, " + std::to_string(params.trees) + " trees -> " + f.output);
}

void run_ingest(const PipelineConfig& cfg, const Flags& f) {
  const PointCloud cloud = io::read_cloud(f.input);
  const PointCloud filtered = io::filter_quality(cloud, cfg.ingest.min_intensity_db, *cfg.ingest.max_deviation);
  const PointCloud out = io::subsample_precision(filtered, cfg.ingest.precision);
  io::write_csv(out, f.output);
  note("ingest", std::to_string(cloud.size()) + " read, " + std::to_string(filtered.size()) + " after filtering, " +
                     std::to_string(out.size()) + " after subsampling -> " + f.output);
}

void run_gvd(const PipelineConfig& cfg, const Flags& f) {
  PointCloud cloud = io::read_cloud(f.input);
  const VoxelGrid grid = voxelize(cloud, cfg.voxel.size, connectivity_from_int(cfg.voxel.connectivity));
  const Decomposition dec = decompose(grid, cfg.gvd);
  annotate_components(cloud, dec);
  io::write_csv(cloud, f.output);
  if (!f.voxels_out.empty()) grid.write_csv(f.voxels_out);
  note("gvd", std::to_string(grid.cell_count()) + " voxels, " + std::to_string(dec.components.size()) +
                  " components, " + std::to_string(dec.residuals.size()) + " residual -> " + f.output);
}

void run_features(const PipelineConfig& cfg, const Flags& f) {
  PointCloud cloud = io::read_cloud(f.input);
  const FeatureMatrix fm = multiscale_features(cloud, cfg.features, {cfg.linearity_denominator, cfg.threads});
  StandardizeResult result;
  if (f.fit) {
    result = standardize(fm);
    result.stats.save(f.stats);
  } else {
    result = standardize(fm, FeatureStats::load(f.stats));
  }
  for (std::size_t c : result.zero_variance_columns) {
    note("features", "warning: zero variance in column " + fm.names()[c] + "; set to 0");
  }
  for (std::size_t c = 0; c < result.matrix.cols(); ++c) {
    cloud.set_column(result.matrix.names()[c], result.matrix.column(c));
  }
  io::write_csv(cloud, f.output);
  note("features", std::to_string(fm.cols()) + " columns for " + std::to_string(cloud.size()) + " points -> " +
                       f.output);
}

void run_transfer(const PipelineConfig& cfg, const Flags& f) {
  const PointCloud target = io::read_cloud(f.input);
  const PointCloud reference = io::read_cloud(f.reference);
  const PointCloud out = knn_transfer(target, reference, {cfg.transfer_k, cfg.transfer_drop_unknown, cfg.threads});
  io::write_csv(out, f.output);
  note("transfer", std::to_string(out.size()) + " labeled points -> " + f.output);
}

void run_split(const PipelineConfig& cfg, const Flags& f) {
  const PointCloud cloud = io::read_cloud(f.input);
  const TreeSplits splits = f.tree_id_list.empty()
                                ? split_by_tree(cloud, cfg.split, cfg.seed, f.allow_unassigned)
                                : split_by_assignment(cloud, read_split_assignment(f.tree_id_list));
  io::write_csv(splits.train, f.out_prefix + "train.csv");
  io::write_csv(splits.val, f.out_prefix + "val.csv");
  io::write_csv(splits.test, f.out_prefix + "test.csv");
  std::ofstream out(f.out_prefix + "assignment.csv");
  if (!out) throw IoError("cannot open '" + f.out_prefix + "assignment.csv' for writing");
  out << "tree_id,split\n";
  static const char* kNames[] = {"train", "val", "test"};
  for (const auto& [tree, split] : splits.assignment) out << tree << ',' << kNames[static_cast<int>(split)] << '\n';
  note("split", std::to_string(splits.train.size()) + "/" + std::to_string(splits.val.size()) + "/" +
                    std::to_string(splits.test.size()) + " points in train/val/test");
}

void run_batch(const PipelineConfig& cfg, const Flags& f) {
  const PointCloud cloud = io::read_cloud(f.input);
  const BatchedCloud batched = batch_cloud(cloud, {cfg.batch_size, cfg.seed, cfg.batch_include_residual});
  write_batches(batched, feature_columns(cloud), f.output);
  for (const auto& [id, transform] : batched.transforms) {
    if (transform.degenerate) note("batch", "warning: component " + std::to_string(id) + " has zero extent; scale 1 used");
  }
  note("batch", std::to_string(batched.batches.size()) + " batches -> " + f.output);
}

void run_train(const PipelineConfig& cfg, const Flags& f) {
  const std::vector<Batch> train_batches = read_batches(f.input);
  const std::vector<Batch> val_batches = read_batches(f.val);
  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  tc.threads = cfg.threads;
  tc.checkpoint_dir = f.checkpoint_dir;
  std::optional<ClassifierModel> initial;
  if (!f.init_model.empty()) initial = load_model(f.init_model);
  const TrainResult result = train(train_batches, val_batches, tc, cfg.loss, initial);
  if (result.log.empty()) {
    note("train", "0 epochs; initial model -> " + f.checkpoint_dir);
    return;
  }
  const EpochLog& last = result.log.back();
  note("train", "epoch " + std::to_string(last.epoch) + ": train loss " + csv::format_number(last.train_loss) +
                    ", val loss " + csv::format_number(last.val_loss) + ", val specificity " +
                    csv::format_number(last.val_specificity) + " -> " + f.checkpoint_dir);
}

void run_predict(const PipelineConfig& cfg, const Flags& f) {
  const ClassifierModel model = load_model(f.model);
  PointCloud cloud = io::read_cloud(f.input);
  const BatchedCloud batched = batch_cloud(cloud, {cfg.batch_size, cfg.seed, true});
  const Prediction pred = predict(model, batched.batches, cloud.size(), cfg.threads);
  std::vector<double> labels(cloud.size());
  for (std::size_t n = 0; n < labels.size(); ++n) labels[n] = to_int(pred.labels[n]);
  cloud.set_column("p_wood", pred.p_wood);
  cloud.set_column("pred_label", std::move(labels));
  io::write_csv(cloud, f.output);
  note("predict", std::to_string(cloud.size()) + " points -> " + f.output);
}

struct EvalGroup {
  std::vector<int> truth;
  std::vector<int> predicted;
  std::vector<double> scores;
};

void write_group(std::ostream& out, const std::string& group, const EvalGroup& g, bool have_scores) {
  const ConfusionCounts c = confusion(g.truth, g.predicted);
  const MetricSummary s = summary(c);
  auto row = [&](const char* metric, double value) {
    out << group << ',' << metric << ',' << csv::format_number(value) << '\n';
  };
  row("n", static_cast<double>(c.total()));
  row("tp", static_cast<double>(c.tp));
  row("tn", static_cast<double>(c.tn));
  row("fp", static_cast<double>(c.fp));
  row("fn", static_cast<double>(c.fn));
  row("accuracy", s.accuracy);
  row("recall", s.recall);
  row("precision", s.precision);
  row("specificity", s.specificity);
  row("g_mean", s.g_mean);
  row("ba", s.ba);
  row("mcc", mcc(c));
  if (have_scores) {
    const bool both = c.tp + c.fn > 0 && c.tn + c.fp > 0;
    row("auroc", both ? auroc(g.truth, g.scores) : std::numeric_limits<double>::quiet_NaN());
  }
}

void run_eval(const PipelineConfig&, const Flags& f) {
  const PointCloud truth = io::read_cloud(f.truth);
  const PointCloud pred = io::read_cloud(f.pred);
  if (truth.size() != pred.size()) {
    throw ValidationError("pred", "truth has " + std::to_string(truth.size()) + " points but predictions have " +
                                      std::to_string(pred.size()));
  }
  const bool have_column = pred.has_column("pred_label");
  const bool have_scores = pred.has_column("p_wood");
  EvalGroup all;
  std::map<std::int64_t, EvalGroup> groups;
  for (std::size_t n = 0; n < truth.size(); ++n) {
    const auto& t = truth.points[n].label;
    if (!t || *t == Label::unknown) continue;
    int p;
    if (have_column) {
      p = static_cast<int>(pred.column("pred_label")[n]);
    } else if (pred.points[n].label) {
      p = to_int(*pred.points[n].label);
    } else {
      throw ValidationError("pred", "point " + std::to_string(n) + " has no predicted label");
    }
    const double score = have_scores ? pred.column("p_wood")[n] : 0.0;
    all.truth.push_back(to_int(*t));
    all.predicted.push_back(p);
    all.scores.push_back(score);
    if (!f.group_by.empty()) {
      const auto& id = truth.points[n].tree_id ? truth.points[n].tree_id : pred.points[n].tree_id;
      if (!id) throw ValidationError("group_by", "point " + std::to_string(n) + " has no tree_id");
      EvalGroup& g = groups[*id];
      g.truth.push_back(to_int(*t));
      g.predicted.push_back(p);
      g.scores.push_back(score);
    }
  }
  if (all.truth.empty()) throw ValidationError("truth", "no labeled points to evaluate");
  std::ofstream out(f.report);
  if (!out) throw IoError("cannot open '" + f.report + "' for writing");
  out << "group,metric,value\n";
  write_group(out, "all", all, have_scores);
  for (const auto& [id, g] : groups) write_group(out, std::to_string(id), g, have_scores);
  const MetricSummary s = summary(confusion(all.truth, all.predicted));
  note("eval", "specificity " + csv::format_number(s.specificity) + ", BA " + csv::format_number(s.ba) + " -> " +
                   f.report);
}

}  // namespace

int run(const std::vector<std::string>& args) {
  Flags f;
  CLI::App app{"leafwood: leaf/wood separation pipeline for forest point clouds", "leafwood"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  std::vector<Override> overrides;
  app.add_option("--config", f.config_path, "JSON config; flags given on the command line take precedence")
      ->check(CLI::ExistingFile);
  overriding(&app, overrides, "--seed", f.seed, "Seed for every derived random stream",
             [](PipelineConfig& c, std::uint64_t v) { c.seed = v; });
  overriding(&app, overrides, "--threads", f.threads, "Worker threads",
             [](PipelineConfig& c, unsigned v) { c.threads = v; });

  // Effective-config directory and the stage body, filled per subcommand.
  std::map<CLI::App*, std::pair<std::function<fs::path()>, std::function<void(const PipelineConfig&, const Flags&)>>>
      stages;

  {
    CLI::App* s = app.add_subcommand("synth", "Generate a labeled synthetic forest");
    s->add_option("--output,-o", f.output, "Output CSV")->required();
    overriding(s, overrides, "--trees", f.trees, "Number of trees",
               [](PipelineConfig& c, std::size_t v) { c.synth.trees = v; });
    overriding(s, overrides, "--wood-fraction", f.wood_fraction, "Wood fraction in (0, 1)",
               [](PipelineConfig& c, double v) { c.synth.wood_fraction = v; });
    overriding(s, overrides, "--points-per-tree", f.points_per_tree, "Points per tree",
               [](PipelineConfig& c, std::size_t v) { c.synth.points_per_tree = v; });
    overriding(s, overrides, "--branches", f.branches, "Branches per tree",
               [](PipelineConfig& c, std::size_t v) { c.synth.branches = v; });
    overriding(s, overrides, "--noise", f.noise, "Gaussian jitter sigma (m)",
               [](PipelineConfig& c, double v) { c.synth.noise = v; });
    stages[s] = {[&] { return parent_dir(f.output); }, run_synth};
  }
  {
    CLI::App* s = app.add_subcommand("ingest", "Filter by intensity/deviation and subsample to a coordinate precision");
    s->add_option("--input,-i", f.input, "Input CSV or ASCII PLY")->required();
    s->add_option("--output,-o", f.output, "Output CSV")->required();
    overriding(s, overrides, "--min-intensity-db", f.min_intensity_db, "Drop points below this intensity (dB)",
               [](PipelineConfig& c, double v) { c.ingest.min_intensity_db = v; });
    overriding(s, overrides, "--max-deviation", f.max_deviation, "Drop points above this deviation (number or inf)",
               [](PipelineConfig& c, const std::string& v) {
                 const auto parsed = csv::parse_number(v);
                 if (!parsed || std::isnan(*parsed)) throw ValidationError("ingest.max_deviation", "not a number: " + v);
                 c.ingest.max_deviation = *parsed;
               });
    overriding(s, overrides, "--precision", f.precision, "Coordinate precision (m)",
               [](PipelineConfig& c, double v) { c.ingest.precision = v; });
    stages[s] = {[&] { return parent_dir(f.output); }, run_ingest};
  }
  {
    CLI::App* s = app.add_subcommand("gvd", "Voxelize and decompose into geodesic components");
    s->add_option("--input,-i", f.input, "Input CSV")->required();
    s->add_option("--output,-o", f.output, "Output CSV (input plus component_id, gd, residual)")->required();
    s->add_option("--voxels", f.voxels_out, "Also write the occupied voxels to this CSV");
    overriding(s, overrides, "--voxel-size", f.voxel_size, "Voxel edge (m)",
               [](PipelineConfig& c, double v) { c.voxel.size = v; });
    overriding(s, overrides, "--connectivity", f.connectivity, "6, 18 or 26",
               [](PipelineConfig& c, int v) { c.voxel.connectivity = v; });
    overriding(s, overrides, "--tau", f.tau, "Geodesic voxel distance bound",
               [](PipelineConfig& c, int v) { c.gvd.tau = v; });
    overriding(s, overrides, "--gamma", f.gamma, "Intrinsic/extrinsic ratio bound",
               [](PipelineConfig& c, double v) { c.gvd.gamma = v; });
    overriding(s, overrides, "--min-voxels", f.min_voxels, "Smaller components are residual",
               [](PipelineConfig& c, std::size_t v) { c.gvd.min_voxels = v; });
    overriding(s, overrides, "--min-points", f.min_points, "Components with fewer points are residual",
               [](PipelineConfig& c, std::size_t v) { c.gvd.min_points = v; });
    stages[s] = {[&] { return parent_dir(f.output); }, run_gvd};
  }
  {
    CLI::App* s = app.add_subcommand("features", "Append standardized multiscale geometric features");
    s->add_option("--input,-i", f.input, "Input CSV")->required();
    s->add_option("--output,-o", f.output, "Output CSV")->required();
    s->add_option("--stats", f.stats, "Standardization statistics CSV")->required();
    s->add_flag("--fit", f.fit, "Fit statistics on this input and write them to --stats");
    overriding(s, overrides, "--radii", f.radii, "Neighborhood radii (m)",
               [](PipelineConfig& c, const std::vector<double>& v) { c.features.radii = v; })
        ->delimiter(',');
    overriding(s, overrides, "--linearity-denominator", f.linearity_denominator, "lambda3 or lambda1",
               [](PipelineConfig& c, const std::string& v) {
                 if (v == "lambda3") {
                   c.linearity_denominator = LinearityDenominator::lambda3;
                 } else if (v == "lambda1") {
                   c.linearity_denominator = LinearityDenominator::lambda1;
                 } else {
                   throw ValidationError("features.linearity_denominator", "expected lambda3 or lambda1");
                 }
               });
    stages[s] = {[&] { return parent_dir(f.output); }, run_features};
  }
  {
    CLI::App* s = app.add_subcommand("transfer", "Copy labels from a labeled reference cloud by k-NN vote");
    s->add_option("--target,--input,-i", f.input, "Cloud to label")->required();
    s->add_option("--reference", f.reference, "Fully labeled reference cloud")->required();
    s->add_option("--output,-o", f.output, "Output CSV")->required();
    overriding(s, overrides, "--k", f.k, "Neighbors per vote", [](PipelineConfig& c, std::size_t v) { c.transfer_k = v; });
    CLI::Option* drop = s->add_flag("--drop-unknown", f.drop_unknown, "Drop points voted unknown");
    CLI::Option* keep = s->add_flag("--keep-unknown", f.keep_unknown, "Keep points voted unknown");
    drop->excludes(keep);
    overrides.push_back({drop, [](PipelineConfig& c) { c.transfer_drop_unknown = true; }});
    overrides.push_back({keep, [](PipelineConfig& c) { c.transfer_drop_unknown = false; }});
    stages[s] = {[&] { return parent_dir(f.output); }, run_transfer};
  }
  {
    CLI::App* s = app.add_subcommand("split", "Assign whole trees to train/val/test");
    s->add_option("--input,-i", f.input, "Labeled CSV with tree_id")->required();
    s->add_option("--out-prefix", f.out_prefix, "Prefix of train.csv, val.csv, test.csv, assignment.csv")
        ->required();
    s->add_flag("--allow-unassigned", f.allow_unassigned, "Permit trees left out of every split");
    s->add_option("--tree-id-list", f.tree_id_list, "Explicit tree_id,split assignment; overrides --counts")
        ->check(CLI::ExistingFile);
    overriding(s, overrides, "--counts", f.counts, "Trees per split: train,val,test",
               [](PipelineConfig& c, const std::vector<std::size_t>& v) {
                 if (v.size() != 3) throw ValidationError("split.counts", "expected three counts: train,val,test");
                 c.split = {v[0], v[1], v[2]};
               })
        ->delimiter(',');
    stages[s] = {[&] { return parent_dir(f.out_prefix + "x"); }, run_split};
  }
  {
    CLI::App* s = app.add_subcommand("batch", "Normalize components and write fixed-size batches");
    s->add_option("--input,-i", f.input, "CSV with component_id, gd and feature columns")->required();
    s->add_option("--output,-o", f.output, "Output directory")->required();
    overriding(s, overrides, "--batch-size", f.batch_size, "Rows per batch",
               [](PipelineConfig& c, std::size_t v) { c.batch_size = v; });
    CLI::Option* residual = s->add_flag("--include-residual", f.include_residual, "Batch residual components too");
    overrides.push_back({residual, [](PipelineConfig& c) { c.batch_include_residual = true; }});
    stages[s] = {[&] { return fs::path(f.output); }, run_batch};
  }
  {
    CLI::App* s = app.add_subcommand("train", "Train the per-point classifier");
    s->add_option("--batches", f.input, "Training batch directory")->required();
    s->add_option("--val", f.val, "Validation batch directory")->required();
    s->add_option("--checkpoint-dir", f.checkpoint_dir, "Checkpoint and log directory")->required();
    s->add_option("--init", f.init_model, "Start from this checkpoint");
    overriding(s, overrides, "--loss", f.loss, "rebalanced, focal or ce",
               [](PipelineConfig& c, const std::string& v) {
                 const LossKind parsed = LossKind::parse(v);
                 c.loss.type = parsed.type;
               });
    overriding(s, overrides, "--lr", f.lr, "Adam learning rate",
               [](PipelineConfig& c, double v) { c.train.learning_rate = v; });
    overriding(s, overrides, "--epochs", f.epochs, "Epochs",
               [](PipelineConfig& c, std::size_t v) { c.train.epochs = v; });
    overriding(s, overrides, "--double-every", f.double_every, "Epochs between doublings of batches per step",
               [](PipelineConfig& c, std::size_t v) { c.train.double_every = v; });
    overriding(s, overrides, "--cap", f.cap, "Maximum batches per step",
               [](PipelineConfig& c, std::size_t v) { c.train.max_batches_per_step = v; });
    overriding(s, overrides, "--initial-batches", f.initial_batches, "Batches per step in the first epoch",
               [](PipelineConfig& c, std::size_t v) { c.train.initial_batches_per_step = v; });
    overriding(s, overrides, "--dropout", f.dropout, "Dropout on hidden layers",
               [](PipelineConfig& c, double v) { c.train.dropout = v; });
    overriding(s, overrides, "--checkpoint-every", f.checkpoint_every, "Epochs between checkpoints",
               [](PipelineConfig& c, std::size_t v) { c.train.checkpoint_every = v; });
    overriding(s, overrides, "--validate-every", f.validate_every, "Epochs between validation passes",
               [](PipelineConfig& c, std::size_t v) { c.train.validate_every = v; });
    stages[s] = {[&] { return fs::path(f.checkpoint_dir); }, run_train};
  }
  {
    CLI::App* s = app.add_subcommand("predict", "Predict per-point wood probability");
    s->add_option("--model", f.model, "Checkpoint CSV")->required();
    s->add_option("--input,-i", f.input, "CSV with component_id, gd and feature columns")->required();
    s->add_option("--output,-o", f.output, "Output CSV (input plus p_wood, pred_label)")->required();
    overriding(s, overrides, "--batch-size", f.batch_size, "Rows per batch",
               [](PipelineConfig& c, std::size_t v) { c.batch_size = v; });
    stages[s] = {[&] { return parent_dir(f.output); }, run_predict};
  }
  {
    CLI::App* s = app.add_subcommand("eval", "Confusion-matrix metrics of predictions against truth");
    s->add_option("--truth", f.truth, "Labeled CSV")->required();
    s->add_option("--pred", f.pred, "Prediction CSV")->required();
    s->add_option("--report", f.report, "Report CSV (group,metric,value)")->required();
    s->add_option("--group-by", f.group_by, "Also report per group")->check(CLI::IsMember({"tree_id"}));
    stages[s] = {[&] { return parent_dir(f.report); }, run_eval};
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* active = app.get_subcommands().front();
  const std::string name = active->get_name();
  PipelineConfig cfg;
  try {
    if (!f.config_path.empty()) cfg.merge_file(f.config_path);
    for (const Override& o : overrides) {
      if (o.option->count() > 0) o.apply(cfg);
    }
    cfg.validate();
    if (name == "ingest" && !cfg.ingest.max_deviation) {
      throw ValidationError("ingest.max_deviation", "required; pass --max-deviation (a number or inf)");
    }
  } catch (const Error& e) {
    std::cerr << "leafwood " << name << ": invalid configuration: " << e.what() << '\n';
    return kExitUsage;
  }

  const auto& [config_dir, stage] = stages.at(active);
  try {
    write_effective_config(cfg, config_dir(), name);
    if (name != "eval" && !f.output.empty() && name != "batch") fs::create_directories(parent_dir(f.output));
    if (name == "split") fs::create_directories(parent_dir(f.out_prefix + "x"));
    stage(cfg, f);
  } catch (const std::exception& e) {
    std::cerr << "leafwood " << name << ": stage failed: " << e.what() << '\n';
    return kExitStageFailure;
  }
  return kExitOk;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int n = 1; n < argc; ++n) args.emplace_back(argv[n]);
  return run(args);
}

}  // namespace leafwood::cli
