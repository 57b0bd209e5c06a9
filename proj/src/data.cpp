#include "pmfl/data.hpp"

#include "pmfl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <vector>

namespace pmfl {

Matrix ScalingInfo::invert(const Matrix& X_scaled) const {
  if (identity()) return X_scaled;
  Matrix raw = X_scaled;
  raw.rowwise() -= offset.transpose();
  raw.array().rowwise() /= scale.transpose().array();
  return raw;
}

Matrix Dataset::onehot() const {
  if (task != Task::MultiClass) throw std::invalid_argument("onehot: not a multi-class dataset");
  Matrix Y = Matrix::Zero(n_data(), classes);
  for (Index i = 0; i < n_data(); ++i) {
    const Index c = static_cast<Index>(y(i));
    if (c < 0 || c >= classes) throw std::invalid_argument("onehot: label out of range");
    Y(i, c) = 1.0;
  }
  return Y;
}

Vector Dataset::targets() const {
  if (task == Task::MultiClass) return Vector::Ones(n_data());
  return y;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
  const Index n = ds.n_data();
  Index n_train = 0;
  if (spec.mode == SplitSpec::Mode::Fraction) {
    if (!(spec.train_frac > 0.0 && spec.train_frac < 1.0))
      throw ConfigError("split: train fraction must be in (0, 1)");
    n_train = static_cast<Index>(std::floor(spec.train_frac * static_cast<double>(n)));
  } else {
    n_train = spec.n_train;
  }
  if (n_train < 1 || n_train >= n) throw ConfigError("split: degenerate split");

  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  if (spec.shuffle) {
    Rng rng(spec.seed);
    for (Index i = n - 1; i > 0; --i)
      std::swap(idx[static_cast<std::size_t>(i)],
                idx[static_cast<std::size_t>(rng.uniform_below(static_cast<std::uint64_t>(i) + 1))]);
  }

  auto take = [&](Index begin, Index count) {
    Dataset part = ds;
    part.X.resize(count, ds.n_x());
    part.y.resize(count);
    for (Index r = 0; r < count; ++r) {
      const Index source = idx[static_cast<std::size_t>(begin + r)];
      part.X.row(r) = ds.X.row(source);
      part.y(r) = ds.y(source);
    }
    return part;
  };
  return {take(0, n_train), take(n_train, n - n_train)};
}

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

double parse_number(const std::string& cell, const std::filesystem::path& path, std::size_t row) {
  try {
    return std::stod(cell);
  } catch (const std::exception&) {
    throw IoError(path.string() + ": row " + std::to_string(row) + ": bad number '" + cell + "'");
  }
}

void minmax_rescale(Dataset& ds, double lo, double hi) {
  const Index n_x = ds.n_x();
  ds.scaling.scale.resize(n_x);
  ds.scaling.offset.resize(n_x);
  for (Index j = 0; j < n_x; ++j) {
    const double cmin = ds.X.col(j).minCoeff();
    const double cmax = ds.X.col(j).maxCoeff();
    if (!(cmax > cmin))
      throw IoError(ds.name + ": feature column " + std::to_string(j) + " is constant, cannot rescale");
    const double s = (hi - lo) / (cmax - cmin);
    const double o = lo - s * cmin;
    ds.X.col(j) = (ds.X.col(j).array() * s + o).matrix();
    ds.scaling.scale(j) = s;
    ds.scaling.offset(j) = o;
  }
}

}  // namespace

Dataset load_wdbc(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  const Index n = static_cast<Index>(lines.size());
  if (n == 0) throw IoError(path.string() + ": empty file");

  Dataset ds;
  ds.name = "wdbc";
  ds.task = Task::Binary;
  ds.X.resize(n, 30);
  ds.y.resize(n);

  for (std::size_t r = 0; r < lines.size(); ++r) {
    std::stringstream ss(lines[r]);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 32)
      throw IoError(path.string() + ": row " + std::to_string(r) + " has " +
                    std::to_string(cells.size()) + " columns, expected 32");
    if (cells[1] == "M")
      ds.y(static_cast<Index>(r)) = 1.0;
    else if (cells[1] == "B")
      ds.y(static_cast<Index>(r)) = -1.0;
    else
      throw IoError(path.string() + ": row " + std::to_string(r) + ": unknown diagnosis '" +
                    cells[1] + "'");
    for (Index j = 0; j < 30; ++j)
      ds.X(static_cast<Index>(r), j) = parse_number(cells[static_cast<std::size_t>(j) + 2], path, r);
  }
  if (!ds.X.allFinite()) throw IoError(path.string() + ": non-finite feature values");
  minmax_rescale(ds, -1.0, 1.0);
  return ds;
}

Dataset load_semeion(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  const Index n = static_cast<Index>(lines.size());
  if (n == 0) throw IoError(path.string() + ": empty file");

  Dataset ds;
  ds.name = "semeion";
  ds.task = Task::MultiClass;
  ds.classes = 10;
  ds.X.resize(n, 256);
  ds.y.resize(n);

  for (std::size_t r = 0; r < lines.size(); ++r) {
    std::stringstream ss(lines[r]);
    std::vector<double> vals;
    std::string tok;
    while (ss >> tok) vals.push_back(parse_number(tok, path, r));
    if (vals.size() != 266)
      throw IoError(path.string() + ": row " + std::to_string(r) + " has " +
                    std::to_string(vals.size()) + " fields, expected 266");
    for (Index j = 0; j < 256; ++j)
      ds.X(static_cast<Index>(r), j) = vals[static_cast<std::size_t>(j)] != 0.0 ? 1.0 : -1.0;
    Index label = -1;
    int ones = 0;
    for (Index c = 0; c < 10; ++c) {
      const double v = vals[256 + static_cast<std::size_t>(c)];
      if (v == 1.0) {
        ++ones;
        label = c;
      } else if (v != 0.0) {
        throw IoError(path.string() + ": row " + std::to_string(r) + ": non-boolean label field");
      }
    }
    if (ones != 1)
      throw IoError(path.string() + ": row " + std::to_string(r) + ": label block is not one-hot");
    ds.y(static_cast<Index>(r)) = static_cast<double>(label);
  }
  return ds;
}

TabularSchema banana_schema() {
  TabularSchema s;
  s.name = "banana";
  s.n_features = 2;
  s.expected_rows = 5300;
  s.scaling = TabularSchema::Scaling::MinMax;
  s.scale_lo = 0.0;
  s.scale_hi = 8.0;
  s.negative_label = -1.0;
  s.positive_label = 1.0;
  s.display_zero_one = true;
  return s;
}

TabularSchema diabetes_schema() {
  TabularSchema s;
  s.name = "diabetes";
  s.n_features = 8;
  s.expected_rows = 768;
  s.scaling = TabularSchema::Scaling::MinMax;
  s.scale_lo = 0.0;
  s.scale_hi = 1.0;
  s.negative_label = 0.0;
  s.positive_label = 1.0;
  s.display_zero_one = true;
  return s;
}

TabularSchema twonorm_schema() {
  TabularSchema s;
  s.name = "twonorm";
  s.n_features = 20;
  s.expected_rows = 7400;
  s.scaling = TabularSchema::Scaling::Multiply;
  s.factor = 8.0;
  s.negative_label = 0.0;
  s.positive_label = 1.0;
  s.display_zero_one = true;
  return s;
}

Dataset load_tabular(const std::filesystem::path& path, const TabularSchema& schema) {
  const auto lines = read_lines(path);
  const Index n = static_cast<Index>(lines.size());
  if (n == 0) throw IoError(path.string() + ": empty file");
  if (schema.expected_rows && n != *schema.expected_rows)
    throw IoError(path.string() + ": " + std::to_string(n) + " rows, schema '" + schema.name +
                  "' expects " + std::to_string(*schema.expected_rows));

  Dataset ds;
  ds.name = schema.name;
  ds.task = Task::Binary;
  ds.display_zero_one = schema.display_zero_one;
  ds.X.resize(n, schema.n_features);
  ds.y.resize(n);

  for (std::size_t r = 0; r < lines.size(); ++r) {
    std::stringstream ss(lines[r]);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, schema.delimiter)) vals.push_back(parse_number(cell, path, r));
    if (vals.size() != static_cast<std::size_t>(schema.n_features) + 1)
      throw IoError(path.string() + ": row " + std::to_string(r) + " has " +
                    std::to_string(vals.size()) + " columns, schema '" + schema.name +
                    "' expects " + std::to_string(schema.n_features + 1));
    for (Index j = 0; j < schema.n_features; ++j)
      ds.X(static_cast<Index>(r), j) = vals[static_cast<std::size_t>(j)];
    const double raw = vals.back();
    if (raw == schema.positive_label)
      ds.y(static_cast<Index>(r)) = 1.0;
    else if (raw == schema.negative_label)
      ds.y(static_cast<Index>(r)) = -1.0;
    else
      throw IoError(path.string() + ": row " + std::to_string(r) + ": unknown label value");
  }
  if (!ds.X.allFinite()) throw IoError(path.string() + ": non-finite feature values");

  switch (schema.scaling) {
    case TabularSchema::Scaling::None:
      break;
    case TabularSchema::Scaling::MinMax:
      minmax_rescale(ds, schema.scale_lo, schema.scale_hi);
      break;
    case TabularSchema::Scaling::Multiply:
      ds.X *= schema.factor;
      ds.scaling.scale = Vector::Constant(schema.n_features, schema.factor);
      ds.scaling.offset = Vector::Zero(schema.n_features);
      break;
  }
  return ds;
}

Dataset gen_sinusoid(Index n_points, double x_lo, double x_hi, std::uint64_t seed) {
  if (n_points < 2) throw ConfigError("gen_sinusoid: need at least 2 points");
  if (!(x_lo < x_hi)) throw ConfigError("gen_sinusoid: empty range");
  Rng rng(seed);
  Dataset ds;
  ds.name = "sinusoid";
  ds.task = Task::Regression;
  ds.X.resize(n_points, 1);
  ds.y.resize(n_points);
  for (Index i = 0; i < n_points; ++i) {
    ds.X(i, 0) = rng.uniform(x_lo, x_hi);
    ds.y(i) = std::sin(ds.X(i, 0));
  }
  return ds;
}

std::string file_checksum(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::uint64_t hash = 1469598103934665603ull;
  char buf[1 << 16];
  while (f.read(buf, sizeof(buf)) || f.gcount() > 0) {
    for (std::streamsize i = 0; i < f.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 1099511628211ull;
    }
  }
  char out[32];
  std::snprintf(out, sizeof(out), "fnv1a64:%016llx", static_cast<unsigned long long>(hash));
  return out;
}

}  // namespace pmfl
