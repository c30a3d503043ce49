// The r-adic chaining skeleton on [0,1] and executable verifiers for the
// two combinatorial/pathwise facts the moment bound rests on:
//
//  - grids        T_n = {k r^{-n} : k = 0..r^n},  T_n subset of T_{n+1}
//  - projection   pi_n(t) = the unique s in T_n with s <= t, t - s < r^{-n}
//  - neighborhood I_{n+1}(t) = {s in T_{n+1} : |s - t| < 2 r^{-n}}
//  - classes      J_m = {i : r^{-m-1} < |t_i - t_{i-1}| <= r^{-m}}
//  - cutoff       m_k defined by k^p r^{-(m_k+1)q} < c/M0 <= k^p r^{-m_k q}
//
// verify_step_uniqueness checks that a fixed approximation step (u,v) is
// used by at most one interval per endpoint role; verify_chain_bound checks
// the pathwise estimate
//   sum_i (|X(t_i)-X(t_{i-1})| - c)_+
//     <= 2 sum_{n<=m_k} sum_{u,v} |X(u)-X(v)|
//      + 2 sum_{n>m_k}  sum_{u,v} (|X(u)-X(v)| - 2^{m_k-n-1} c)_+ .
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace truncvar {

// ---------------------------------------------------------------------------
// Grid primitives
// ---------------------------------------------------------------------------

struct RAdicGrid {
  int r;      // branching factor >= 2
  int level;  // n >= 0; spacing r^{-n}

  RAdicGrid(int r_, int level_);
  std::size_t size() const;           // r^level + 1
  double point(std::int64_t k) const; // k r^{-level}
  std::vector<double> points() const;
};

// Integer power as an exactly-representable double; guards against overflow.
double ipow_d(int base, int exp);

// pi_n(t); monotone in t, idempotent on T_n, and |t - pi_n(t)| < r^{-n}.
double project_pi(double t, int n, int r);
// Same projection returned as a grid index at level n.
std::int64_t project_pi_index(double t, int n, int r);

// I_{n+1}(u) for u in T_{n_plus_1}; throws std::domain_error off-grid.
std::vector<double> neighborhood(double u, int n_plus_1, int r);

// ---------------------------------------------------------------------------
// Partitions
// ---------------------------------------------------------------------------

struct PartitionSpec {
  std::vector<double> times;  // d+1 strictly increasing points in [0,1]
  void validate() const;
  std::size_t interval_count() const { return times.empty() ? 0 : times.size() - 1; }
};

// Maps class index m to the (1-based) interval indices in J_m. Every
// interval lands in exactly one class; the boundary |dt| = r^{-m} belongs
// to J_m (closed upper end).
std::map<int, std::vector<std::size_t>> classify_intervals(
    const PartitionSpec& partition, int r);

// Cutoff level; returns -1 when c >= M0 k^p (empty coarse regime). The two
// defining inequalities are re-verified (in log space) before returning.
int compute_m_k(double k, double p, double q, double c, double M0, int r);

// ---------------------------------------------------------------------------
// Pathwise chain bound
// ---------------------------------------------------------------------------

// Values of a path on the full grid T_level for branching factor r.
struct GridPath {
  int r = 2;
  int level = 0;
  std::vector<double> values;  // size r^level + 1, index k <-> k r^{-level}

  void validate() const;
};

struct ChainRhs {
  double coarse = 0.0;  // sum over levels n <= m_k, untruncated
  double fine = 0.0;    // sum over levels n > m_k, truncated at 2^{m_k-n-1} c
};

// Raw double sums (no factor 2); levels run up to level-1, which captures
// every nonzero approximation step when the data lives on T_level.
ChainRhs chain_bound_rhs(const GridPath& grid, double c, int m_k);

struct CutoffParams {
  double k = 1.0;
  double p = 0.5;
  double q = 0.5;
  double M0 = 1.0;
};

struct ChainBoundReport {
  double lhs = 0.0;
  double rhs_coarse = 0.0;
  double rhs_fine = 0.0;
  int m_k = -1;
  bool holds = false;   // lhs <= 2 (coarse + fine) + 1e-9
  double margin = 0.0;  // 2 (coarse + fine) - lhs

  double rhs_total() const { return 2.0 * (rhs_coarse + rhs_fine); }
};

// Partition points must lie on the grid of `grid` (refused otherwise:
// truncating the level sums would be unsound for off-grid data).
ChainBoundReport verify_chain_bound(const GridPath& grid,
                                    const PartitionSpec& partition, double c,
                                    const CutoffParams& params);

struct StepUniquenessReport {
  bool ok = true;
  std::string counterexample;  // empty when ok
};

// For every level n <= n_max and every step (u in T_n, v in T_{n+1}):
// among intervals i in J_m with m+1 <= n, at most one uses (u,v) through
// its left endpoint and at most one through its right endpoint.
StepUniquenessReport verify_step_uniqueness(const PartitionSpec& partition,
                                            int r, int n_max);

}  // namespace truncvar
