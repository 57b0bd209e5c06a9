#pragma once

#include "pmfl/types.hpp"

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <string>

namespace pmfl {

/// Single reproducible random stream: mt19937_64 with 53-bit uniforms and
/// Box-Muller normals (spare cached). All consumers draw from one stream in a
/// fixed order, so a run is fully determined by its seed regardless of thread
/// count. std::*_distribution is avoided on purpose: its output is not pinned
/// by the standard.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform on (lo, hi]; keeps draws strictly above lo.
  double uniform_pos(double lo, double hi) { return hi - (hi - lo) * uniform01(); }

  // Uniform integer in [0, n), unbiased via rejection.
  std::uint64_t uniform_below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * M_PI * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  // Fills in row-major order (draw order is part of the determinism contract).
  void fill_normal(Eigen::Ref<Matrix> out) {
    for (Index i = 0; i < out.rows(); ++i)
      for (Index j = 0; j < out.cols(); ++j) out(i, j) = normal();
  }

  void fill_uniform_pos(Eigen::Ref<Vector> out, double lo, double hi) {
    for (Index i = 0; i < out.size(); ++i) out(i) = uniform_pos(lo, hi);
  }

  // State round trip for checkpoint resume; the spare is stored bit-exactly.
  void save_state(std::ostream& os) const {
    os << gen_ << '\n' << (has_spare_ ? 1 : 0) << ' ';
    os << std::hexfloat << spare_ << std::defaultfloat << '\n';
  }

  void load_state(std::istream& is) {
    is >> gen_;
    int flag = 0;
    is >> flag;
    has_spare_ = (flag != 0);
    std::string tok;
    is >> tok;
    spare_ = std::strtod(tok.c_str(), nullptr);
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace pmfl
