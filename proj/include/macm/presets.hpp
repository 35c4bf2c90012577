#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "macm/dataset.hpp"
#include "macm/model.hpp"
#include "macm/serialize.hpp"
#include "macm/training.hpp"
#include "macm/util.hpp"

namespace macm {

// ---------------------------------------------------------------------------
// Dataset spec files: {name, task, target, target_transform, features}.
// features is either an explicit list or "auto" (every non-target column
// treated as numeric; useful when the column layout is user-supplied).
// ---------------------------------------------------------------------------

struct DatasetSpec {
  std::string name;
  Task task = Task::regression;
  std::string target;
  TargetTransform target_transform;
  bool auto_features = false;
  std::vector<FeatureSpec> features;
};

inline DatasetSpec dataset_spec_from_json(const json& j) {
  DatasetSpec spec;
  spec.name = j.value("name", "");
  spec.task = task_from_name(j.at("task").get<std::string>());
  spec.target = j.at("target").get<std::string>();
  if (j.contains("target_transform")) {
    spec.target_transform.scale = j.at("target_transform").value("scale", 1.0);
    spec.target_transform.offset = j.at("target_transform").value("offset", 0.0);
  }
  const auto& feats = j.at("features");
  if (feats.is_string() && feats.get<std::string>() == "auto") {
    spec.auto_features = true;
  } else {
    for (const auto& fj : feats) spec.features.push_back(feature_spec_from_json(fj));
    if (spec.features.empty()) throw SchemaError("dataset spec has an empty feature list");
  }
  return spec;
}

inline json dataset_spec_to_json(const DatasetSpec& spec) {
  json j;
  j["name"] = spec.name;
  j["task"] = task_name(spec.task);
  j["target"] = spec.target;
  j["target_transform"] = {{"scale", spec.target_transform.scale},
                           {"offset", spec.target_transform.offset}};
  if (spec.auto_features) {
    j["features"] = "auto";
  } else {
    json feats = json::array();
    for (const auto& f : spec.features) feats.push_back(feature_spec_to_json(f));
    j["features"] = feats;
  }
  return j;
}

// Resolves a dataset spec reference: a path is loaded directly; a bare name
// is looked up under $MACM_PRESET_DIR, then ./presets/<name>.json.
inline DatasetSpec load_dataset_spec(const std::string& ref) {
  namespace fs = std::filesystem;
  std::vector<std::string> candidates;
  if (ref.find('/') != std::string::npos ||
      (ref.size() > 5 && ref.substr(ref.size() - 5) == ".json")) {
    candidates.push_back(ref);
  } else {
    if (const char* dir = std::getenv("MACM_PRESET_DIR"))
      candidates.push_back(std::string(dir) + "/" + ref + ".json");
    candidates.push_back("presets/" + ref + ".json");
  }
  for (const auto& path : candidates) {
    if (!fs::exists(path)) continue;
    std::ifstream in(path);
    json j;
    try {
      in >> j;
      return dataset_spec_from_json(j);
    } catch (const json::exception& e) {
      throw SchemaError("malformed dataset spec " + path + ": " + e.what());
    }
  }
  throw SchemaError("dataset spec '" + ref + "' not found");
}

// Expands "auto" feature lists against the CSV header.
inline std::vector<FeatureSpec> resolve_features(const DatasetSpec& spec, const std::string& csv_path) {
  if (!spec.auto_features) return spec.features;
  const CsvTable table = read_csv(csv_path);
  std::vector<FeatureSpec> out;
  for (const auto& col : table.header) {
    if (col == spec.target) continue;
    FeatureSpec f;
    f.name = col;
    out.push_back(std::move(f));
  }
  if (out.empty()) throw SchemaError("auto features: no columns besides the target");
  return out;
}

// ---------------------------------------------------------------------------
// Model/training presets (one per supported experiment row).
// ---------------------------------------------------------------------------

struct ModelSpec {
  std::string kind;  // macm_poly | macm_nn | cesr | esr | mp_poly | ap_poly | mp_nn | ap_nn
  Task task = Task::regression;
  int degree = 12;          // polynomial kinds
  int hidden_layers = 10;   // nn kinds
  int hidden_width = 20;
  double scale = 20.0;      // multiplicative scaling factor (fixed, not trained)
};

inline bool is_nn_kind(const std::string& kind) {
  return kind == "macm_nn" || kind == "mp_nn" || kind == "ap_nn";
}
inline bool is_poly_kind(const std::string& kind) {
  return kind == "macm_poly" || kind == "mp_poly" || kind == "ap_poly" || kind == "cesr" ||
         kind == "esr";
}

struct Preset {
  ModelSpec model;
  TrainConfig train;
};

// Defaults per model family: polynomial models use degree 12, scale 20,
// lr 0.005, batch 1024, 5000 epochs, no decay. NN models use 10x20 ReLU
// nets; regression scale 10, lr 5e-4 with 0.99/100 decay, 10000 epochs;
// binary scale 1000, lr 5e-5 with 0.995/10 decay, 2000 epochs. The
// *_reduced NN presets shrink to 3x16 and 2000 epochs for desk-scale runs.
inline Preset resolve_preset(const std::string& name, Task task) {
  Preset p;
  p.model.task = task;
  p.train.loss = task == Task::binary ? LossKind::bce : LossKind::rmse;
  p.train.batch_size = 1024;

  std::string kind = name;
  bool reduced = false;
  const std::string suffix = "_reduced";
  if (kind.size() > suffix.size() && kind.substr(kind.size() - suffix.size()) == suffix) {
    reduced = true;
    kind = kind.substr(0, kind.size() - suffix.size());
  }
  p.model.kind = kind;

  if (is_poly_kind(kind)) {
    if (reduced) throw std::invalid_argument("reduced presets exist only for NN models");
    p.model.degree = kind == "esr" ? 2 : 12;
    p.model.scale = 20.0;
    p.train.learning_rate = 0.005;
    p.train.decay_factor = 1.0;
    p.train.decay_every = 100;
    p.train.epochs = 5000;
  } else if (is_nn_kind(kind)) {
    p.model.hidden_layers = reduced ? 3 : 10;
    p.model.hidden_width = reduced ? 16 : 20;
    if (task == Task::binary) {
      p.model.scale = 1000.0;
      p.train.learning_rate = 0.00005;
      p.train.decay_factor = 0.995;
      p.train.decay_every = 10;
      p.train.epochs = 2000;
    } else {
      p.model.scale = 10.0;
      p.train.learning_rate = 0.0005;
      p.train.decay_factor = 0.99;
      p.train.decay_every = 100;
      p.train.epochs = reduced ? 2000 : 10000;
    }
  } else {
    throw std::invalid_argument("unknown model preset '" + name + "'");
  }
  return p;
}

// Builds a freshly initialized model. Multiplicative polynomial shapes start
// at (1, eps, ...) so the initial product stays near one; additive shapes
// start all-eps; NN shapes use fan-in uniform weights with zero biases.
inline Model make_model(const ModelSpec& spec, std::size_t n_features, std::uint64_t seed) {
  if (n_features == 0) throw std::invalid_argument("make_model: no features");
  const auto mult_seed = [&](std::size_t i) { return mix_seed(seed, i); };
  const auto add_seed = [&](std::size_t i) { return mix_seed(seed, 0x8000 + i); };

  if (spec.kind == "macm_poly" || spec.kind == "macm_nn") {
    MacmModel m;
    m.task = spec.task;
    m.scale = spec.scale;
    for (std::size_t i = 0; i < n_features; ++i) {
      if (spec.kind == "macm_poly") {
        m.mult_shapes.emplace_back(init_polynomial(spec.degree, mult_seed(i), PolyInit::multiplicative));
        m.add_shapes.emplace_back(init_polynomial(spec.degree, add_seed(i), PolyInit::additive));
      } else {
        const auto widths = mlp_widths(spec.hidden_layers, spec.hidden_width);
        m.mult_shapes.emplace_back(init_mlp(widths, mult_seed(i)));
        m.add_shapes.emplace_back(init_mlp(widths, add_seed(i)));
      }
    }
    return m;
  }
  if (spec.kind == "cesr") {
    CesrModel m;
    m.task = spec.task;
    m.C = 1.0;
    for (std::size_t i = 0; i < n_features; ++i) {
      Rng rng(mult_seed(i));
      std::vector<double> w(static_cast<std::size_t>(spec.degree));
      for (auto& v : w) v = rng.uniform(-0.01, 0.01);
      m.unit_coeffs.push_back(std::move(w));
    }
    return m;
  }
  if (spec.kind == "esr") {
    EsrModel m;
    m.task = spec.task;
    m.degrees.assign(n_features, spec.degree);
    const std::size_t count = m.term_count();
    if (count > 10'000'000)
      throw std::invalid_argument("esr: " + std::to_string(count) +
                                  " ergodic terms exceed the 1e7 cap; lower the degree");
    Rng rng(mult_seed(0));
    m.coeffs.resize(count);
    for (auto& c : m.coeffs) c = rng.uniform(-0.01, 0.01);
    return m;
  }
  if (spec.kind == "mp_poly" || spec.kind == "ap_poly" || spec.kind == "mp_nn" ||
      spec.kind == "ap_nn") {
    AblationModel m;
    m.task = spec.task;
    const bool mult = spec.kind == "mp_poly" || spec.kind == "mp_nn";
    m.kind = mult ? AblationModel::Kind::multiplicative_only : AblationModel::Kind::additive_only;
    m.scale = mult ? spec.scale : 1.0;
    for (std::size_t i = 0; i < n_features; ++i) {
      if (spec.kind == "mp_poly" || spec.kind == "ap_poly")
        m.shapes.emplace_back(init_polynomial(
            spec.degree, mult_seed(i), mult ? PolyInit::multiplicative : PolyInit::additive));
      else
        m.shapes.emplace_back(init_mlp(mlp_widths(spec.hidden_layers, spec.hidden_width), mult_seed(i)));
    }
    return m;
  }
  throw std::invalid_argument("unknown model kind '" + spec.kind + "'");
}

}  // namespace macm
