#pragma once

#include "pmfl/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>

namespace pmfl {

enum class Task { Binary, MultiClass, Regression };

/// Per-feature affine transform that was applied to the raw columns:
/// X_stored = scale .* X_raw + offset. Kept so raw values can be recovered.
struct ScalingInfo {
  Vector scale;
  Vector offset;

  bool identity() const { return scale.size() == 0; }
  Matrix invert(const Matrix& X_scaled) const;
};

struct Dataset {
  Matrix X;  // n_data x n_x
  Vector y;  // binary: -1/+1; multi-class: class index; regression: targets
  Task task = Task::Binary;
  Index classes = 0;  // m for multi-class
  std::string name;
  ScalingInfo scaling;
  bool display_zero_one = false;  // report labels as {0,1} instead of {-1,+1}

  Index n_data() const { return X.rows(); }
  Index n_x() const { return X.cols(); }
  Matrix onehot() const;  // n_data x classes, multi-class only
  Vector targets() const;  // quadratic-risk targets: y for binary/regression, 1 for multi-class
};

struct SplitSpec {
  enum class Mode { Fraction, HeadCount };
  Mode mode = Mode::Fraction;
  double train_frac = 0.7;  // train count = floor(train_frac * n)
  Index n_train = 0;
  bool shuffle = false;
  std::uint64_t seed = 0;
};

// Deterministic given the seed; train indices come first after the optional
// Fisher-Yates shuffle. Degenerate splits (empty side) are rejected.
std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);

// UCI wdbc.data: id, diagnosis in {M, B}, 30 real features. M -> +1, B -> -1;
// features min-max rescaled to [-1, 1] per column.
Dataset load_wdbc(const std::filesystem::path& path);

// Space-separated rows of 256 pixel booleans plus 10 one-hot label columns.
// Pixels are mapped {0,1} -> {-1,+1}; labels become class indices 0-9.
Dataset load_semeion(const std::filesystem::path& path);

struct TabularSchema {
  std::string name;
  Index n_features = 0;
  std::optional<Index> expected_rows;
  char delimiter = ',';
  // Feature scaling applied after the full file is read.
  enum class Scaling { None, MinMax, Multiply } scaling = Scaling::None;
  double scale_lo = 0.0, scale_hi = 1.0;  // MinMax target range
  double factor = 1.0;                    // Multiply factor
  // Raw label values mapped to -1 / +1 (labels are the last column).
  double negative_label = 0.0;
  double positive_label = 1.0;
  bool display_zero_one = false;
};

TabularSchema banana_schema();    // 5300 x 2, features min-max to [0, 8]
TabularSchema diabetes_schema();  // 768 x 8, features min-max to [0, 1]
TabularSchema twonorm_schema();   // 7400 x 20, features multiplied by 8

Dataset load_tabular(const std::filesystem::path& path, const TabularSchema& schema);

// x ~ Unif[x_lo, x_hi), y = sin(x); n_x = 1.
Dataset gen_sinusoid(Index n_points, double x_lo, double x_hi, std::uint64_t seed);

// FNV-1a over the file bytes, for the dataset manifest.
std::string file_checksum(const std::filesystem::path& path);

}  // namespace pmfl
