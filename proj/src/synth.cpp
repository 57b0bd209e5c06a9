#include "pmfl/synth.hpp"

#include "pmfl/rng.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

namespace pmfl {

namespace {

void write_rows(const std::filesystem::path& path, const Matrix& X, const Vector& labels) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  char buf[64];
  for (Index i = 0; i < X.rows(); ++i) {
    for (Index j = 0; j < X.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.10g", X(i, j));
      f << buf << ',';
    }
    std::snprintf(buf, sizeof(buf), "%g", labels(i));
    f << buf << '\n';
  }
}

}  // namespace

void write_banana_csv(const std::filesystem::path& path, std::uint64_t seed) {
  const Index n_neg = 2924;
  const Index n_pos = 2376;
  const Index n = n_neg + n_pos;
  Rng rng(seed);

  Matrix X(n, 2);
  Vector y(n);
  const double noise = 0.55;
  for (Index i = 0; i < n; ++i) {
    const bool neg = i < n_neg;
    const double t = rng.uniform(0.0, M_PI);
    double x0, x1;
    if (neg) {
      x0 = 1.6 * std::cos(t) - 0.4;
      x1 = 1.6 * std::sin(t) - 0.3;
    } else {
      x0 = 1.6 * std::cos(t + M_PI) + 0.4;
      x1 = 1.6 * std::sin(t + M_PI) + 1.1;
    }
    X(i, 0) = x0 + noise * rng.normal();
    X(i, 1) = x1 + noise * rng.normal();
    y(i) = neg ? -1.0 : 1.0;
  }
  write_rows(path, X, y);
}

void write_twonorm_csv(const std::filesystem::path& path, std::uint64_t seed) {
  const Index n = 7400;
  const Index d = 20;
  const double a = 2.0 / std::sqrt(static_cast<double>(d));
  Rng rng(seed);

  Matrix X(n, d);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    const bool positive = (i % 2) == 0;  // 3700 / 3700
    const double mean = positive ? a : -a;
    for (Index j = 0; j < d; ++j) X(i, j) = mean + rng.normal();
    y(i) = positive ? 1.0 : 0.0;
  }
  write_rows(path, X, y);
}

}  // namespace pmfl
