#pragma once

#include "pmfl/types.hpp"

#include <cstdint>
#include <filesystem>

namespace pmfl {

/// Generators for the synthetic comparison benchmarks. Files come out in the
/// CSV layout the matching load_tabular schema reads (features, then the raw
/// label column); rerunning with the same seed reproduces the bytes.

// Two overlapping crescent-shaped clusters, 5300 points with a 2924 / 2376
// negative/positive class balance; labels -1.0 / 1.0.
void write_banana_csv(const std::filesystem::path& path, std::uint64_t seed = 20240601);

// Breiman's twonorm: 7400 points in R^20, class c in {0,1} drawn N(+-a 1, I)
// with a = 2/sqrt(20); labels 0 / 1.
void write_twonorm_csv(const std::filesystem::path& path, std::uint64_t seed = 20240602);

}  // namespace pmfl
