#include "pmfl/cloud.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace pmfl {

namespace {

using nlohmann::json;

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::vector<double> parse_csv_row(const std::string& line, const std::string& file, Index row) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(cell, &pos));
    } catch (const std::exception&) {
      throw IoError(file + ": row " + std::to_string(row) + ": bad number '" + cell + "'");
    }
  }
  return out;
}

}  // namespace

void validate(const ParticleCloud& cloud) {
  if (cloud.rho.size() != cloud.theta.rows())
    throw ConfigError("cloud: rho length does not match particle count");
  if (!cloud.theta.allFinite())
    throw NumericalError("cloud: theta contains non-finite entries");
  if (!(cloud.rho.array() > 0.0).all())
    throw ConfigError("cloud: rho must be strictly positive");
}

std::vector<Interval> uniform_box(Interval iv, Index p) {
  return std::vector<Interval>(static_cast<std::size_t>(p), iv);
}

std::vector<Interval> binary_box(Interval a, Interval b, Interval w, Index n_x) {
  std::vector<Interval> box;
  box.reserve(static_cast<std::size_t>(n_x) + 2);
  box.push_back(a);
  box.push_back(b);
  for (Index j = 0; j < n_x; ++j) box.push_back(w);
  return box;
}

ParticleCloud init_cloud(const InitSpec& spec, Index n, Index p, Rng& rng) {
  if (n < 1) throw ConfigError("init_cloud: need at least one particle");
  if (p < 1) throw ConfigError("init_cloud: need at least one parameter coordinate");
  if (spec.box.size() != static_cast<std::size_t>(p))
    throw ConfigError("init_cloud: box has " + std::to_string(spec.box.size()) +
                      " intervals, expected " + std::to_string(p));

  double volume = 1.0;
  for (const Interval& iv : spec.box) {
    if (!(iv.lo < iv.hi))
      throw ConfigError("init_cloud: empty interval [" + fmt17(iv.lo) + ", " + fmt17(iv.hi) + "]");
    volume *= iv.hi - iv.lo;
  }

  ParticleCloud cloud;
  cloud.theta.resize(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) {
      const Interval& iv = spec.box[static_cast<std::size_t>(j)];
      cloud.theta(i, j) = rng.uniform(iv.lo, iv.hi);
    }

  cloud.rho.resize(n);
  switch (spec.weight_init) {
    case WeightInit::UniformDensity:
      if (!(volume > 0.0) || !std::isfinite(1.0 / volume) || 1.0 / volume <= 0.0)
        throw ConfigError("init_cloud: box volume unusable for uniform-density weights");
      cloud.rho.setConstant(1.0 / volume);
      break;
    case WeightInit::UniformRandom:
      if (!(spec.weight_lo < spec.weight_hi) || spec.weight_hi <= 0.0)
        throw ConfigError("init_cloud: bad weight range");
      rng.fill_uniform_pos(cloud.rho, spec.weight_lo, spec.weight_hi);
      break;
    case WeightInit::Constant:
      if (!(spec.weight_value > 0.0))
        throw ConfigError("init_cloud: constant weight must be positive");
      cloud.rho.setConstant(spec.weight_value);
      break;
  }

  cloud.step_index = 0;
  validate(cloud);
  return cloud;
}

void save_cloud(const ParticleCloud& cloud, const std::filesystem::path& dir,
                const CheckpointMeta& meta) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("save_cloud: cannot create " + dir.string());

  {
    std::ofstream f(dir / "theta.csv");
    if (!f) throw IoError("save_cloud: cannot write theta.csv");
    for (Index i = 0; i < cloud.theta.rows(); ++i) {
      for (Index j = 0; j < cloud.theta.cols(); ++j) {
        if (j) f << ',';
        f << fmt17(cloud.theta(i, j));
      }
      f << '\n';
    }
  }
  {
    std::ofstream f(dir / "rho.csv");
    if (!f) throw IoError("save_cloud: cannot write rho.csv");
    for (Index i = 0; i < cloud.rho.size(); ++i) f << fmt17(cloud.rho(i)) << '\n';
  }
  {
    json j;
    j["N"] = cloud.num_particles();
    j["p"] = cloud.dim();
    j["step_index"] = cloud.step_index;
    j["model"] = meta.model;
    j["config_hash"] = meta.config_hash;
    j["seed"] = meta.seed;
    std::ofstream f(dir / "meta.json");
    if (!f) throw IoError("save_cloud: cannot write meta.json");
    f << j.dump(2) << '\n';
  }
}

LoadedCloud load_cloud(const std::filesystem::path& dir) {
  json meta;
  {
    std::ifstream f(dir / "meta.json");
    if (!f) throw IoError("load_cloud: missing " + (dir / "meta.json").string());
    try {
      f >> meta;
    } catch (const json::exception& e) {
      throw IoError("load_cloud: malformed meta.json: " + std::string(e.what()));
    }
  }

  LoadedCloud out;
  try {
    out.meta.n = meta.at("N").get<Index>();
    out.meta.p = meta.at("p").get<Index>();
    out.meta.step_index = meta.at("step_index").get<std::int64_t>();
    out.meta.model = meta.at("model").get<std::string>();
    out.meta.config_hash = meta.at("config_hash").get<std::string>();
    out.meta.seed = meta.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw IoError("load_cloud: meta.json missing fields: " + std::string(e.what()));
  }
  if (out.meta.n < 1 || out.meta.p < 1) throw IoError("load_cloud: bad dimensions in meta.json");

  out.cloud.theta.resize(out.meta.n, out.meta.p);
  {
    std::ifstream f(dir / "theta.csv");
    if (!f) throw IoError("load_cloud: missing theta.csv");
    std::string line;
    Index i = 0;
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      if (i >= out.meta.n) throw IoError("load_cloud: theta.csv has more rows than meta declares");
      std::vector<double> row = parse_csv_row(line, "theta.csv", i);
      if (row.size() != static_cast<std::size_t>(out.meta.p))
        throw IoError("load_cloud: theta.csv row " + std::to_string(i) + " has " +
                      std::to_string(row.size()) + " columns, expected " + std::to_string(out.meta.p));
      for (Index j = 0; j < out.meta.p; ++j) out.cloud.theta(i, j) = row[static_cast<std::size_t>(j)];
      ++i;
    }
    if (i != out.meta.n)
      throw IoError("load_cloud: theta.csv has " + std::to_string(i) + " rows, expected " +
                    std::to_string(out.meta.n));
  }

  out.cloud.rho.resize(out.meta.n);
  {
    std::ifstream f(dir / "rho.csv");
    if (!f) throw IoError("load_cloud: missing rho.csv");
    std::string line;
    Index i = 0;
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      if (i >= out.meta.n) throw IoError("load_cloud: rho.csv has more rows than meta declares");
      std::vector<double> row = parse_csv_row(line, "rho.csv", i);
      if (row.size() != 1) throw IoError("load_cloud: rho.csv row " + std::to_string(i) + " is not a single column");
      out.cloud.rho(i) = row[0];
      ++i;
    }
    if (i != out.meta.n)
      throw IoError("load_cloud: rho.csv has " + std::to_string(i) + " rows, expected " +
                    std::to_string(out.meta.n));
  }

  out.cloud.step_index = out.meta.step_index;
  if (!out.cloud.theta.allFinite()) throw IoError("load_cloud: theta.csv has non-finite entries");
  if (!(out.cloud.rho.array() > 0.0).all())
    throw IoError("load_cloud: rho.csv violates positivity");
  return out;
}

}  // namespace pmfl
