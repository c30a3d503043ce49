// Sampled trajectories on [0,1] and their CSV/JSON serialization.
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace truncvar {

struct PathMeta {
  std::string generator;  // "brownian" | "fbm" | "heavy_tail_walk" | "csv"
  std::uint64_t n_steps = 0;
  std::uint64_t seed = 0;
  double hurst = std::nan("");     // fbm only
  double tail_dof = std::nan("");  // heavy_tail_walk only
  std::string method;              // fbm only: "hosking" | "cholesky"
};

struct SampledPath {
  std::vector<double> times;   // strictly increasing, in [0,1]
  std::vector<double> values;  // same length, all finite
  PathMeta meta;

  // Throws std::invalid_argument on any structural violation.
  void validate() const;
};

// CSV with header "t,x", 17 significant digits, '.' decimal separator.
std::string path_to_csv(const SampledPath& path);
SampledPath path_from_csv(const std::string& text);

// JSON record {meta, times, values}.
std::string path_to_json(const SampledPath& path);

}  // namespace truncvar
