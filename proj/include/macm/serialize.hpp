#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "macm/dataset.hpp"
#include "macm/model.hpp"
#include "macm/util.hpp"

// Model files are versioned JSON. Doubles round-trip exactly (shortest
// representation on write, nearest on parse), so a saved model reproduces
// forward outputs bit-for-bit.

namespace macm {

inline constexpr int kModelSchemaVersion = 1;

using json = nlohmann::json;

inline json shape_to_json(const ShapeFunction& shape) {
  json j;
  if (const auto* p = std::get_if<PolynomialShape>(&shape)) {
    j["kind"] = "polynomial";
    j["degree"] = p->degree();
    j["parameters"] = p->coeffs;
  } else {
    const auto& m = std::get<MlpShape>(shape);
    j["kind"] = "mlp";
    j["widths"] = m.widths;
    std::vector<double> flat(m.param_count());
    m.get_params(flat);
    j["parameters"] = flat;
  }
  return j;
}

inline ShapeFunction shape_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "polynomial") {
    PolynomialShape p;
    p.coeffs = j.at("parameters").get<std::vector<double>>();
    if (p.coeffs.size() != static_cast<std::size_t>(j.at("degree").get<int>()) + 1)
      throw SchemaError("polynomial shape: parameter count does not match degree");
    return p;
  }
  if (kind == "mlp") {
    MlpShape m;
    m.widths = j.at("widths").get<std::vector<int>>();
    if (m.widths.size() < 2 || m.widths.front() != 1 || m.widths.back() != 1)
      throw SchemaError("mlp shape: invalid widths");
    m.weights.resize(m.widths.size() - 1);
    m.biases.resize(m.widths.size() - 1);
    for (std::size_t l = 0; l + 1 < m.widths.size(); ++l) {
      m.weights[l].resize(static_cast<std::size_t>(m.widths[l]) * static_cast<std::size_t>(m.widths[l + 1]));
      m.biases[l].resize(static_cast<std::size_t>(m.widths[l + 1]));
    }
    const auto flat = j.at("parameters").get<std::vector<double>>();
    if (flat.size() != m.param_count())
      throw SchemaError("mlp shape: parameter count does not match widths");
    m.set_params(flat);
    return m;
  }
  throw SchemaError("unknown shape kind '" + kind + "'");
}

inline json feature_spec_to_json(const FeatureSpec& spec) {
  json j;
  j["name"] = spec.name;
  j["kind"] = spec.kind == FeatureKind::categorical ? "categorical" : "numeric";
  if (spec.kind == FeatureKind::categorical) {
    json enc = json::array();
    for (const auto& [label, code] : spec.encoding) enc.push_back({{"label", label}, {"code", code}});
    j["encoding"] = enc;
  }
  if (spec.has_bounds()) {
    j["raw_min"] = spec.raw_min;
    j["raw_max"] = spec.raw_max;
  }
  return j;
}

inline FeatureSpec feature_spec_from_json(const json& j) {
  FeatureSpec spec;
  spec.name = j.at("name").get<std::string>();
  spec.kind = j.at("kind").get<std::string>() == "categorical" ? FeatureKind::categorical
                                                               : FeatureKind::numeric;
  if (j.contains("encoding"))
    for (const auto& e : j.at("encoding"))
      spec.encoding.emplace_back(e.at("label").get<std::string>(), e.at("code").get<double>());
  if (j.contains("raw_min")) {
    spec.raw_min = j.at("raw_min").get<double>();
    spec.raw_max = j.at("raw_max").get<double>();
  }
  return spec;
}

inline std::string task_name(Task t) { return t == Task::binary ? "binary" : "regression"; }
inline Task task_from_name(const std::string& s) {
  if (s == "binary") return Task::binary;
  if (s == "regression") return Task::regression;
  throw SchemaError("unknown task '" + s + "'");
}

inline json model_to_json(const Model& model, const std::vector<FeatureSpec>& specs,
                          const TargetTransform& target = {}) {
  json j;
  j["schema_version"] = kModelSchemaVersion;
  j["task"] = task_name(task_of(model));
  json fs = json::array();
  for (const auto& s : specs) fs.push_back(feature_spec_to_json(s));
  j["feature_specs"] = fs;
  j["target_transform"] = {{"scale", target.scale}, {"offset", target.offset}};

  if (const auto* p = std::get_if<MacmModel>(&model)) {
    j["model_kind"] = "macm";
    j["scale"] = p->scale;
    json mult = json::array(), add = json::array();
    for (const auto& s : p->mult_shapes) mult.push_back(shape_to_json(s));
    for (const auto& s : p->add_shapes) add.push_back(shape_to_json(s));
    j["shapes"] = {{"mult", mult}, {"add", add}};
  } else if (const auto* p = std::get_if<CesrModel>(&model)) {
    j["model_kind"] = "cesr";
    j["shapes"] = {{"C", p->C}, {"units", p->unit_coeffs}};
  } else if (const auto* p = std::get_if<EsrModel>(&model)) {
    j["model_kind"] = "esr";
    j["shapes"] = {{"degrees", p->degrees}, {"coeffs", p->coeffs}};
  } else {
    const auto& a = std::get<AblationModel>(model);
    j["model_kind"] = a.kind == AblationModel::Kind::multiplicative_only ? "multiplicative_only"
                                                                         : "additive_only";
    j["scale"] = a.scale;
    json shapes = json::array();
    for (const auto& s : a.shapes) shapes.push_back(shape_to_json(s));
    j["shapes"] = {{"parts", shapes}};
  }
  return j;
}

struct LoadedModel {
  Model model;
  std::vector<FeatureSpec> specs;
  TargetTransform target;
};

inline LoadedModel model_from_json(const json& j) {
  if (!j.contains("schema_version"))
    throw SchemaError("model file missing schema_version");
  if (j.at("schema_version").get<int>() != kModelSchemaVersion)
    throw SchemaError("unsupported model schema version " +
                      std::to_string(j.at("schema_version").get<int>()));
  LoadedModel out;
  const Task task = task_from_name(j.at("task").get<std::string>());
  for (const auto& fj : j.at("feature_specs")) out.specs.push_back(feature_spec_from_json(fj));
  if (j.contains("target_transform")) {
    out.target.scale = j.at("target_transform").at("scale").get<double>();
    out.target.offset = j.at("target_transform").at("offset").get<double>();
  }
  const std::string kind = j.at("model_kind").get<std::string>();
  const json& shapes = j.at("shapes");
  if (kind == "macm") {
    MacmModel m;
    m.task = task;
    m.scale = j.at("scale").get<double>();
    for (const auto& s : shapes.at("mult")) m.mult_shapes.push_back(shape_from_json(s));
    for (const auto& s : shapes.at("add")) m.add_shapes.push_back(shape_from_json(s));
    if (m.mult_shapes.size() != m.add_shapes.size())
      throw SchemaError("macm: multiplicative and additive shape counts differ");
    out.model = std::move(m);
  } else if (kind == "cesr") {
    CesrModel m;
    m.task = task;
    m.C = shapes.at("C").get<double>();
    m.unit_coeffs = shapes.at("units").get<std::vector<std::vector<double>>>();
    out.model = std::move(m);
  } else if (kind == "esr") {
    EsrModel m;
    m.task = task;
    m.degrees = shapes.at("degrees").get<std::vector<int>>();
    m.coeffs = shapes.at("coeffs").get<std::vector<double>>();
    for (int d : m.degrees)
      if (d < 1) throw SchemaError("esr: degrees must be >= 1");
    if (m.coeffs.size() != m.term_count())
      throw SchemaError("esr: coefficient count does not match degrees");
    out.model = std::move(m);
  } else if (kind == "multiplicative_only" || kind == "additive_only") {
    AblationModel m;
    m.task = task;
    m.kind = kind == "multiplicative_only" ? AblationModel::Kind::multiplicative_only
                                           : AblationModel::Kind::additive_only;
    m.scale = j.at("scale").get<double>();
    for (const auto& s : shapes.at("parts")) m.shapes.push_back(shape_from_json(s));
    out.model = std::move(m);
  } else {
    throw SchemaError("unknown model_kind '" + kind + "'");
  }
  if (feature_count(out.model) != out.specs.size())
    throw SchemaError("model shape count does not match feature_specs");
  return out;
}

inline void save_model(const Model& model, const std::vector<FeatureSpec>& specs,
                       const TargetTransform& target, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write model file: " + path);
  out << model_to_json(model, specs, target).dump(2) << "\n";
}

inline LoadedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open model file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SchemaError("malformed model file " + path + ": " + e.what());
  }
  try {
    return model_from_json(j);
  } catch (const json::exception& e) {
    throw SchemaError("invalid model schema in " + path + ": " + e.what());
  }
}

}  // namespace macm
