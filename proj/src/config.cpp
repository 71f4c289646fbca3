// Copyright 2026 The leafwood Authors
// SPDX-License-Identifier: Apache-2.0

#include "leafwood/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace leafwood {

using json = nlohmann::ordered_json;

namespace {

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

// Reads known keys of one JSON object and rejects the rest.
class Section {
 public:
  Section(const json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {
    if (!obj_.is_object()) fail(prefix_.empty() ? "config" : prefix_.substr(0, prefix_.size() - 1), "expected an object");
  }

  const json* take(const std::string& key) {
    used_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) fail(key, "expected a number");
      out = v->get<double>();
    }
  }

  void integer(const std::string& key, int& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) fail(key, "expected an integer");
      out = v->get<int>();
    }
  }

  template <typename T>
  void count(const std::string& key, T& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_unsigned()) fail(key, "expected a non-negative integer");
      out = static_cast<T>(v->get<std::uint64_t>());
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) fail(key, "expected true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) fail(key, "expected a string");
      out = v->get<std::string>();
    }
  }

  void optional_number(const std::string& key, std::optional<double>& out) {
    if (const json* v = take(key)) {
      if (v->is_null()) {
        out.reset();
      } else if (v->is_number()) {
        out = v->get<double>();
      } else if (v->is_string() && v->get<std::string>() == "inf") {
        out = INFINITY;
      } else {
        fail(key, "expected a number, \"inf\" or null");
      }
    }
  }

  void range(const std::string& key, Range& out) {
    if (const json* v = take(key)) {
      if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number()) {
        fail(key, "expected [lo, hi]");
      }
      out = {(*v)[0].get<double>(), (*v)[1].get<double>()};
    }
  }

  template <typename T>
  void number_list(const std::string& key, std::vector<T>& out, bool integral) {
    if (const json* v = take(key)) {
      if (!v->is_array()) fail(key, "expected an array");
      std::vector<T> values;
      for (const json& e : *v) {
        if (integral ? !e.is_number_unsigned() : !e.is_number()) fail(key, "unexpected array element");
        values.push_back(e.get<T>());
      }
      out = std::move(values);
    }
  }

  const json* object(const std::string& key) { return take(key); }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!used_.count(it.key())) fail(it.key(), "unknown key");
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& detail) const {
    throw ValidationError(prefix_ + key, detail);
  }

 private:
  const json& obj_;
  std::string prefix_;
  std::set<std::string> used_;
};

template <typename Fn>
void with_section(Section& parent, const std::string& key, const std::string& prefix, Fn fn) {
  if (const json* v = parent.object(key)) {
    Section s(*v, prefix);
    fn(s);
    s.finish();
  }
}

}  // namespace

void PipelineConfig::validate() const {
  if (threads == 0) throw ValidationError("threads", "must be >= 1");
  if (!std::isfinite(ingest.min_intensity_db)) throw ValidationError("ingest.min_intensity_db", "must be finite");
  if (ingest.max_deviation && std::isnan(*ingest.max_deviation)) {
    throw ValidationError("ingest.max_deviation", "must be a number");
  }
  if (!(ingest.precision > 0.0) || !std::isfinite(ingest.precision)) {
    throw ValidationError("ingest.precision", "must be > 0");
  }
  if (!(voxel.size > 0.0) || !std::isfinite(voxel.size)) throw ValidationError("voxel.size", "must be > 0");
  if (voxel.connectivity != 6 && voxel.connectivity != 18 && voxel.connectivity != 26) {
    throw ValidationError("voxel.connectivity", "must be 6, 18 or 26");
  }
  gvd.validate();
  features.validate();
  if (transfer_k == 0) throw ValidationError("transfer.k", "must be >= 1");
  if (split.total() == 0) throw ValidationError("split.counts", "at least one tree must be assigned");
  if (batch_size == 0) throw ValidationError("batch.size", "must be >= 1");
  train.validate();
  loss.validate();
  synth.validate();
}

std::string PipelineConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["threads"] = threads;
  j["ingest"] = {{"min_intensity_db", ingest.min_intensity_db},
                 {"max_deviation", ingest.max_deviation ? (std::isinf(*ingest.max_deviation) ? json("inf")
                                                                                             : json(*ingest.max_deviation))
                                                        : json(nullptr)},
                 {"precision", ingest.precision}};
  j["voxel"] = {{"size", voxel.size}, {"connectivity", voxel.connectivity}};
  j["gvd"] = {{"tau", gvd.tau}, {"gamma", gvd.gamma}, {"min_voxels", gvd.min_voxels}, {"min_points", gvd.min_points}};
  j["features"] = {{"radii", features.radii},
                   {"linearity_denominator",
                    linearity_denominator == LinearityDenominator::lambda3 ? "lambda3" : "lambda1"}};
  j["transfer"] = {{"k", transfer_k}, {"drop_unknown", transfer_drop_unknown}};
  j["split"] = {{"train", split.train}, {"val", split.val}, {"test", split.test}};
  j["batch"] = {{"size", batch_size}, {"include_residual", batch_include_residual}};
  j["train"] = {{"loss", loss.name()},
                {"focal_gamma", loss.focal_gamma},
                {"focal_alpha", loss.focal_alpha},
                {"learning_rate", train.learning_rate},
                {"epochs", train.epochs},
                {"initial_batches_per_step", train.initial_batches_per_step},
                {"double_every", train.double_every},
                {"max_batches_per_step", train.max_batches_per_step},
                {"hidden", train.hidden},
                {"dropout", train.dropout},
                {"checkpoint_every", train.checkpoint_every},
                {"validate_every", train.validate_every}};
  j["synth"] = {{"trees", synth.trees},
                {"trunk_height", range_json(synth.trunk_height)},
                {"trunk_radius", range_json(synth.trunk_radius)},
                {"branches", synth.branches},
                {"crown_radius_xy", range_json(synth.crown_radius_xy)},
                {"crown_radius_z", range_json(synth.crown_radius_z)},
                {"points_per_tree", synth.points_per_tree},
                {"wood_fraction", synth.wood_fraction},
                {"noise", synth.noise},
                {"spacing", synth.spacing}};
  return j.dump(2) + "\n";
}

void PipelineConfig::merge_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("config", std::string("invalid JSON: ") + e.what());
  }
  PipelineConfig next = *this;
  Section root(j, "");
  root.count("seed", next.seed);
  root.count("threads", next.threads);
  with_section(root, "ingest", "ingest.", [&](Section& s) {
    s.number("min_intensity_db", next.ingest.min_intensity_db);
    s.optional_number("max_deviation", next.ingest.max_deviation);
    s.number("precision", next.ingest.precision);
  });
  with_section(root, "voxel", "voxel.", [&](Section& s) {
    s.number("size", next.voxel.size);
    s.integer("connectivity", next.voxel.connectivity);
  });
  with_section(root, "gvd", "gvd.", [&](Section& s) {
    s.integer("tau", next.gvd.tau);
    s.number("gamma", next.gvd.gamma);
    s.count("min_voxels", next.gvd.min_voxels);
    s.count("min_points", next.gvd.min_points);
  });
  with_section(root, "features", "features.", [&](Section& s) {
    s.number_list("radii", next.features.radii, false);
    std::string denom;
    s.string("linearity_denominator", denom);
    if (denom == "lambda3") {
      next.linearity_denominator = LinearityDenominator::lambda3;
    } else if (denom == "lambda1") {
      next.linearity_denominator = LinearityDenominator::lambda1;
    } else if (!denom.empty()) {
      s.fail("linearity_denominator", "expected lambda3 or lambda1");
    }
  });
  with_section(root, "transfer", "transfer.", [&](Section& s) {
    s.count("k", next.transfer_k);
    s.boolean("drop_unknown", next.transfer_drop_unknown);
  });
  with_section(root, "split", "split.", [&](Section& s) {
    s.count("train", next.split.train);
    s.count("val", next.split.val);
    s.count("test", next.split.test);
  });
  with_section(root, "batch", "batch.", [&](Section& s) {
    s.count("size", next.batch_size);
    s.boolean("include_residual", next.batch_include_residual);
  });
  with_section(root, "train", "train.", [&](Section& s) {
    std::string loss_name;
    s.string("loss", loss_name);
    if (!loss_name.empty()) {
      const LossKind parsed = LossKind::parse(loss_name);
      next.loss.type = parsed.type;
    }
    s.number("focal_gamma", next.loss.focal_gamma);
    s.number("focal_alpha", next.loss.focal_alpha);
    s.number("learning_rate", next.train.learning_rate);
    s.count("epochs", next.train.epochs);
    s.count("initial_batches_per_step", next.train.initial_batches_per_step);
    s.count("double_every", next.train.double_every);
    s.count("max_batches_per_step", next.train.max_batches_per_step);
    s.number_list("hidden", next.train.hidden, true);
    s.number("dropout", next.train.dropout);
    s.count("checkpoint_every", next.train.checkpoint_every);
    s.count("validate_every", next.train.validate_every);
  });
  with_section(root, "synth", "synth.", [&](Section& s) {
    s.count("trees", next.synth.trees);
    s.range("trunk_height", next.synth.trunk_height);
    s.range("trunk_radius", next.synth.trunk_radius);
    s.count("branches", next.synth.branches);
    s.range("crown_radius_xy", next.synth.crown_radius_xy);
    s.range("crown_radius_z", next.synth.crown_radius_z);
    s.count("points_per_tree", next.synth.points_per_tree);
    s.number("wood_fraction", next.synth.wood_fraction);
    s.number("noise", next.synth.noise);
    s.number("spacing", next.synth.spacing);
  });
  root.finish();
  *this = std::move(next);
}

void PipelineConfig::merge_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  merge_json(text.str());
}

void PipelineConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << to_json();
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace leafwood
