#include "truncvar/truncated_variation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace truncvar {

namespace {

void check_inputs(std::span<const double> values, double c) {
  if (!(c >= 0.0) || !std::isfinite(c))
    throw std::invalid_argument("tv: threshold c must be finite and >= 0");
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("tv: non-finite value");
}

// Re-evaluate a witness subsequence. Also used to make the reported value
// agree exactly with its witness.
double evaluate_subsequence(std::span<const double> values,
                            std::span<const std::size_t> idx, double c) {
  double sum = 0.0;
  for (std::size_t j = 1; j < idx.size(); ++j) {
    const double term = std::abs(values[idx[j]] - values[idx[j - 1]]) - c;
    if (term > 0.0) sum += term;
  }
  return sum;
}

}  // namespace

TVResult tv_exact(std::span<const double> values, double c,
                  bool want_witness) {
  check_inputs(values, c);
  if (values.empty()) throw std::invalid_argument("tv: path needs >= 1 point");

  // Left-to-right recursion over the last chosen index j:
  //   best(j) = max(M, A + x_j - c, B - x_j - c, 0)
  // where, over indices i < j,
  //   M = max best(i)          (appending j with a zero term never loses),
  //   A = max best(i) - x_i,   B = max best(i) + x_i.
  // A and B are read before being updated at j, so the candidates exclude j.
  // best is non-decreasing, hence the final M is the answer.
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  double M = 0.0, A = kNegInf, B = kNegInf;

  // Witness chains as linked lists into a node pool (at most one node per j).
  struct Node {
    std::size_t idx;
    std::int64_t parent;
  };
  std::vector<Node> pool;
  std::int64_t m_chain = -1, a_chain = -1, b_chain = -1;

  for (std::size_t j = 0; j < values.size(); ++j) {
    const double x = values[j];
    const double via_a = A + x - c;
    const double via_b = B - x - c;
    const double new_m = std::max({M, via_a, via_b, 0.0});

    std::int64_t chain_at_j = -2;  // lazily created
    auto ensure_chain_at_j = [&]() {
      if (chain_at_j != -2) return;
      // Parent is a chain realizing best(j). Ties prefer the earliest
      // established chain: carry first (appending j adds a zero term),
      // then the A branch, then the B branch.
      std::int64_t parent;
      if (new_m == M)
        parent = m_chain;
      else if (via_a == new_m)
        parent = a_chain;
      else
        parent = b_chain;
      pool.push_back({j, parent});
      chain_at_j = static_cast<std::int64_t>(pool.size()) - 1;
    };

    if (want_witness && new_m > M) {
      ensure_chain_at_j();
      m_chain = chain_at_j;
    }
    if (new_m - x > A) {
      A = new_m - x;
      if (want_witness) {
        ensure_chain_at_j();
        a_chain = chain_at_j;
      }
    }
    if (new_m + x > B) {
      B = new_m + x;
      if (want_witness) {
        ensure_chain_at_j();
        b_chain = chain_at_j;
      }
    }
    M = new_m;
  }

  TVResult result;
  result.value = M;
  if (want_witness) {
    std::vector<std::size_t> witness;
    for (std::int64_t node = m_chain; node >= 0; node = pool[node].parent)
      witness.push_back(pool[node].idx);
    std::reverse(witness.begin(), witness.end());
    // Report the value the witness re-evaluates to, so the pair is exact.
    result.value = evaluate_subsequence(values, witness, c);
    result.witness = std::move(witness);
  }
  return result;
}

TVResult tv_exact(const SampledPath& path, double c, bool want_witness) {
  path.validate();
  return tv_exact(std::span<const double>(path.values), c, want_witness);
}

TVResult tv_bruteforce(std::span<const double> values, double c) {
  check_inputs(values, c);
  const std::size_t n = values.size();
  if (n == 0) throw std::invalid_argument("tv: path needs >= 1 point");
  if (n > 20)
    throw std::invalid_argument(
        "tv_bruteforce: refusing paths longer than 20 points");

  double best = 0.0;
  std::uint32_t best_mask = 0;
  std::vector<std::size_t> idx;
  idx.reserve(n);
  const std::uint32_t limit = 1u << n;
  for (std::uint32_t mask = 0; mask < limit; ++mask) {
    double sum = 0.0;
    bool have_prev = false;
    double prev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(mask & (1u << i))) continue;
      if (have_prev) {
        const double term = std::abs(values[i] - prev) - c;
        if (term > 0.0) sum += term;
      }
      prev = values[i];
      have_prev = true;
    }
    if (sum > best) {
      best = sum;
      best_mask = mask;
    }
  }
  TVResult result;
  result.value = best;
  std::vector<std::size_t> witness;
  for (std::size_t i = 0; i < n; ++i)
    if (best_mask & (1u << i)) witness.push_back(i);
  result.witness = std::move(witness);
  return result;
}

std::vector<std::pair<double, double>> tv_sweep(
    std::span<const double> values, std::span<const double> c_grid) {
  for (std::size_t i = 0; i < c_grid.size(); ++i) {
    if (!(c_grid[i] >= 0.0) || !std::isfinite(c_grid[i]))
      throw std::invalid_argument("tv_sweep: thresholds must be >= 0");
    if (i > 0 && c_grid[i] < c_grid[i - 1])
      throw std::invalid_argument("tv_sweep: c grid must be ascending");
  }
  std::vector<std::pair<double, double>> out;
  out.reserve(c_grid.size());
  for (double c : c_grid) out.emplace_back(c, tv_exact(values, c).value);
  return out;
}

}  // namespace truncvar
