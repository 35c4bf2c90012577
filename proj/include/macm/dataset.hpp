#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "macm/csv.hpp"
#include "macm/util.hpp"

namespace macm {

enum class FeatureKind { numeric, categorical };

// Per-feature metadata: categorical encoding map and, once normalization has
// run, the original-scale bounds used for the back-transform.
struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::numeric;
  std::vector<std::pair<std::string, double>> encoding;  // categorical only
  double raw_min = std::numeric_limits<double>::quiet_NaN();
  double raw_max = std::numeric_limits<double>::quiet_NaN();

  bool has_bounds() const { return std::isfinite(raw_min) && std::isfinite(raw_max); }

  double encode(const std::string& label) const {
    for (const auto& [key, code] : encoding)
      if (key == label) return code;
    throw SchemaError("label '" + label + "' has no encoding for feature '" + name + "'");
  }
};

// Affine map applied to the target column at load time (e.g. prices / 1000).
struct TargetTransform {
  double scale = 1.0;
  double offset = 0.0;
  double apply(double y) const { return y * scale + offset; }
};

// Immutable after construction; safe to share across fold-training workers.
struct Dataset {
  std::size_t n_samples = 0;
  std::size_t n_features = 0;
  std::vector<double> values;  // row-major n_samples x n_features
  std::vector<double> target;
  std::vector<FeatureSpec> specs;
  bool normalized = false;

  double at(std::size_t row, std::size_t col) const { return values[row * n_features + col]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values.data() + r * n_features, n_features);
  }

  Dataset subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.n_samples = rows.size();
    out.n_features = n_features;
    out.specs = specs;
    out.normalized = normalized;
    out.values.reserve(rows.size() * n_features);
    out.target.reserve(rows.size());
    for (std::size_t r : rows) {
      const auto src = row(r);
      out.values.insert(out.values.end(), src.begin(), src.end());
      out.target.push_back(target[r]);
    }
    return out;
  }

  static Dataset from_rows(std::vector<std::vector<double>> rows, std::vector<double> y,
                           bool normalized_flag) {
    Dataset d;
    d.n_samples = rows.size();
    d.n_features = rows.empty() ? 0 : rows.front().size();
    d.normalized = normalized_flag;
    d.target = std::move(y);
    d.specs.resize(d.n_features);
    for (std::size_t i = 0; i < d.n_features; ++i) d.specs[i].name = "x" + std::to_string(i + 1);
    d.values.reserve(d.n_samples * d.n_features);
    for (const auto& r : rows) {
      if (r.size() != d.n_features) throw SchemaError("ragged row in from_rows");
      d.values.insert(d.values.end(), r.begin(), r.end());
    }
    return d;
  }
};

// Loads a CSV, drops rows with any missing cell, replaces categorical labels
// by their configured codes. Pass an empty target_column to load features
// only (prediction input). The returned dataset is un-normalized.
inline Dataset load_csv(const std::string& path, const std::string& target_column,
                        const std::vector<FeatureSpec>& specs,
                        const TargetTransform& target_transform = {},
                        std::size_t* dropped_rows = nullptr) {
  const CsvTable table = read_csv(path);
  const bool with_target = !target_column.empty();
  std::size_t target_col = 0;
  if (with_target) target_col = table.column_index(target_column);

  std::vector<std::size_t> feature_cols;
  feature_cols.reserve(specs.size());
  for (const auto& spec : specs) feature_cols.push_back(table.column_index(spec.name));

  Dataset data;
  data.n_features = specs.size();
  data.specs = specs;
  data.normalized = false;

  std::size_t dropped = 0;
  for (const auto& row : table.rows) {
    bool missing = false;
    for (std::size_t c : feature_cols)
      if (is_missing_cell(row[c])) missing = true;
    if (with_target && is_missing_cell(row[target_col])) missing = true;
    if (missing) {
      ++dropped;
      continue;
    }
    for (std::size_t i = 0; i < specs.size(); ++i) {
      const std::string& cell = row[feature_cols[i]];
      if (specs[i].kind == FeatureKind::categorical)
        data.values.push_back(specs[i].encode(cell));
      else
        data.values.push_back(parse_numeric_cell(cell, specs[i].name));
    }
    if (with_target)
      data.target.push_back(target_transform.apply(parse_numeric_cell(row[target_col], target_column)));
  }
  data.n_samples = with_target ? data.target.size() : data.values.size() / std::max<std::size_t>(1, data.n_features);
  if (data.n_features == 0) throw SchemaError("no features configured for " + path);
  if (dropped_rows) *dropped_rows = dropped;
  return data;
}

inline double normalize_value(double raw, double raw_min, double raw_max) {
  return 2.0 * (raw - raw_min) / (raw_max - raw_min) - 1.0;
}

inline double denormalize_value(double xn, double raw_min, double raw_max) {
  return (xn + 1.0) / 2.0 * (raw_max - raw_min) + raw_min;
}

// Min-max scaling of every feature to [-1, 1]; bounds are recorded in the
// specs for later back-transform. Rejects constant columns.
inline std::vector<std::pair<double, double>> minmax_normalize(Dataset& data) {
  if (data.normalized) throw std::invalid_argument("dataset already normalized");
  std::vector<std::pair<double, double>> bounds(data.n_features);
  for (std::size_t j = 0; j < data.n_features; ++j) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < data.n_samples; ++i) {
      lo = std::min(lo, data.at(i, j));
      hi = std::max(hi, data.at(i, j));
    }
    if (!(hi > lo))
      throw std::invalid_argument("constant feature column '" + data.specs[j].name +
                                  "' cannot be min-max normalized");
    bounds[j] = {lo, hi};
    data.specs[j].raw_min = lo;
    data.specs[j].raw_max = hi;
  }
  for (std::size_t i = 0; i < data.n_samples; ++i)
    for (std::size_t j = 0; j < data.n_features; ++j) {
      double& v = data.values[i * data.n_features + j];
      v = normalize_value(v, bounds[j].first, bounds[j].second);
    }
  data.normalized = true;
  return bounds;
}

// Normalizes with bounds taken from the given specs (a trained model's
// stored bounds). Out-of-range values are clamped to [-1, 1]; returns the
// number of clamped cells.
inline std::size_t normalize_with_specs(Dataset& data, std::span<const FeatureSpec> specs) {
  if (data.normalized) throw std::invalid_argument("dataset already normalized");
  if (specs.size() != data.n_features)
    throw SchemaError("feature count mismatch: model has " + std::to_string(specs.size()) +
                      ", data has " + std::to_string(data.n_features));
  std::size_t clamped = 0;
  for (std::size_t j = 0; j < data.n_features; ++j) {
    if (!specs[j].has_bounds())
      throw SchemaError("feature '" + specs[j].name + "' has no stored normalization bounds");
    for (std::size_t i = 0; i < data.n_samples; ++i) {
      double& v = data.values[i * data.n_features + j];
      v = normalize_value(v, specs[j].raw_min, specs[j].raw_max);
      if (v < -1.0 || v > 1.0) {
        v = std::clamp(v, -1.0, 1.0);
        ++clamped;
      }
    }
    data.specs[j].raw_min = specs[j].raw_min;
    data.specs[j].raw_max = specs[j].raw_max;
  }
  data.normalized = true;
  return clamped;
}

struct FoldSplit {
  int fold_count = 0;
  std::vector<int> assignments;  // fold index per sample
  std::uint64_t seed = 0;

  std::vector<std::size_t> fold_indices(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] == fold) out.push_back(i);
    return out;
  }
  std::vector<std::size_t> complement_indices(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] != fold) out.push_back(i);
    return out;
  }
};

// Shuffled k-fold assignment; fold sizes differ by at most one.
inline FoldSplit kfold_split(std::size_t n_samples, int fold_count, std::uint64_t seed) {
  if (fold_count < 2) throw std::invalid_argument("fold_count must be >= 2");
  if (static_cast<std::size_t>(fold_count) > n_samples)
    throw std::invalid_argument("fold_count exceeds sample count");
  std::vector<std::size_t> order(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  FoldSplit split;
  split.fold_count = fold_count;
  split.seed = seed;
  split.assignments.assign(n_samples, -1);
  const std::size_t base = n_samples / static_cast<std::size_t>(fold_count);
  const std::size_t extra = n_samples % static_cast<std::size_t>(fold_count);
  std::size_t pos = 0;
  for (int f = 0; f < fold_count; ++f) {
    const std::size_t len = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
    for (std::size_t i = 0; i < len; ++i) split.assignments[order[pos++]] = f;
  }
  return split;
}

// Shuffled holdout split; returns (train indices, test indices).
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> train_test_split(
    std::size_t n_samples, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("test_fraction must be in (0, 1)");
  std::vector<std::size_t> order(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  const std::size_t n_test =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n_samples))));
  std::vector<std::size_t> test(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  return {train, test};
}

}  // namespace macm
