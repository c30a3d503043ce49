// Exact truncated variation of a finite sampled path:
//
//   TV^c(x) = max over index subsequences i0 < ... < im of
//             sum_j max(|x_{i_j} - x_{i_{j-1}}| - c, 0).
//
// For samples of a piecewise-linear path this equals the supremum over all
// real-time partitions of the interpolant: within a linear segment the move
// is monotone, and splitting a monotone move never helps because
// (a-c)_+ + (b-c)_+ <= (a+b-c)_+ for a,b >= 0. For samples of a rougher
// path it is a lower bound that improves with resolution.
#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "truncvar/path.hpp"

namespace truncvar {

struct TVResult {
  double value = 0.0;
  // Optional subsequence attaining the value; strictly increasing indices.
  // Present only when requested.
  std::optional<std::vector<std::size_t>> witness;
};

// O(n) time; O(1) extra space without witness, O(n) with.
TVResult tv_exact(std::span<const double> values, double c,
                  bool want_witness = false);
TVResult tv_exact(const SampledPath& path, double c,
                  bool want_witness = false);

// Exhaustive maximum over all 2^n subsequences; refuses paths longer than 20.
TVResult tv_bruteforce(std::span<const double> values, double c);

// Pointwise tv_exact over an ascending grid of thresholds.
std::vector<std::pair<double, double>> tv_sweep(
    std::span<const double> values, std::span<const double> c_grid);

}  // namespace truncvar
