#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "truncvar/chaining.hpp"
#include "truncvar/generators.hpp"

using namespace truncvar;

namespace {

PartitionSpec random_partition(std::mt19937_64& rng, std::size_t max_points) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::set<double> pts;
  const std::size_t want = 2 + rng() % max_points;
  while (pts.size() < want) pts.insert(uni(rng));
  PartitionSpec partition;
  partition.times.assign(pts.begin(), pts.end());
  return partition;
}

PartitionSpec random_grid_partition(std::mt19937_64& rng, int r, int level,
                                    std::size_t max_points) {
  const auto count = static_cast<std::uint64_t>(ipow_d(r, level));
  std::set<std::uint64_t> idx;
  const std::size_t want =
      std::min<std::size_t>(2 + rng() % max_points, count + 1);
  while (idx.size() < want) idx.insert(rng() % (count + 1));
  PartitionSpec partition;
  for (auto k : idx)
    partition.times.push_back(static_cast<double>(k) /
                              static_cast<double>(count));
  return partition;
}

}  // namespace

TEST_CASE("projection floors onto the grid") {
  CHECK(project_pi(0.3, 2, 2) == doctest::Approx(0.25).epsilon(1e-16));
  CHECK(project_pi(0.999, 1, 2) == doctest::Approx(0.5).epsilon(1e-16));
  CHECK(project_pi(1.0, 3, 2) == 1.0);
  CHECK(project_pi(0.0, 5, 3) == 0.0);
  CHECK_THROWS_AS(project_pi(-0.1, 2, 2), std::domain_error);
  CHECK_THROWS_AS(project_pi(1.1, 2, 2), std::domain_error);
}

TEST_CASE("projection is idempotent on grid points, including r = 3") {
  for (int r : {2, 3, 4}) {
    for (int n : {0, 1, 2, 5, 8}) {
      const RAdicGrid grid(r, n);
      for (const double t : grid.points()) CHECK(project_pi(t, n, r) == t);
    }
  }
}

TEST_CASE("projection contract on random points") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int trial = 0; trial < 10000; ++trial) {
    const int r = 2 + static_cast<int>(rng() % 3);
    const int n = static_cast<int>(rng() % 9);
    const double t = uni(rng);
    const double s = project_pi(t, n, r);
    REQUIRE(s <= t);
    REQUIRE(t - s < 1.0 / ipow_d(r, n));
    // Monotone in t and refining in n.
    const double t2 = uni(rng);
    if (t2 >= t) REQUIRE(project_pi(t2, n, r) >= s);
    REQUIRE(project_pi(t, n + 1, r) >= s);
  }
}

TEST_CASE("neighborhood of the midpoint at a coarse level is the whole grid") {
  const auto nb = neighborhood(0.5, 2, 2);  // radius 2 r^{-1} = 1
  CHECK(nb == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
}

TEST_CASE("neighborhood at the left edge is one-sided") {
  const auto nb = neighborhood(0.0, 4, 4);  // radius 2 * 4^{-3} = 8 * 4^{-4}
  REQUIRE(nb.size() == 8);
  for (std::size_t j = 0; j < nb.size(); ++j)
    CHECK(nb[j] == doctest::Approx(static_cast<double>(j) / 256.0).epsilon(1e-16));
}

TEST_CASE("neighborhood contains its center and respects the 4r+1 bound") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 2000; ++trial) {
    const int r = 2 + static_cast<int>(rng() % 3);
    const int level = 1 + static_cast<int>(rng() % 7);
    const auto count = static_cast<std::uint64_t>(ipow_d(r, level));
    const double u = static_cast<double>(rng() % (count + 1)) /
                     static_cast<double>(count);
    const auto nb = neighborhood(u, level, r);
    REQUIRE(std::count(nb.begin(), nb.end(), u) == 1);
    REQUIRE(nb.size() <= static_cast<std::size_t>(4 * r + 1));
    const double radius = 2.0 / ipow_d(r, level - 1);
    for (double s : nb) REQUIRE(std::abs(s - u) < radius);
  }
}

TEST_CASE("neighborhood rejects off-grid centers") {
  CHECK_THROWS_AS(neighborhood(0.1, 3, 2), std::domain_error);
}

TEST_CASE("interval classification: boundary lengths sit on the closed side") {
  PartitionSpec partition;
  partition.times = {0.0, 0.25, 1.0};  // lengths 1/4 = 2^{-2} and 3/4
  const auto classes = classify_intervals(partition, 2);
  // |dt| = r^{-m} exactly -> J_m.
  REQUIRE(classes.count(2) == 1);
  CHECK(classes.at(2) == std::vector<std::size_t>{1});
  REQUIRE(classes.count(0) == 1);
  CHECK(classes.at(0) == std::vector<std::size_t>{2});
}

TEST_CASE("interval classification example at r = 2") {
  PartitionSpec partition;
  partition.times = {0.0, 0.3, 1.0};  // 0.3 in (1/4, 1/2]; 0.7 in (1/2, 1]
  const auto classes = classify_intervals(partition, 2);
  CHECK(classes.at(1) == std::vector<std::size_t>{1});
  CHECK(classes.at(0) == std::vector<std::size_t>{2});
}

TEST_CASE("interval classes partition {1..d}") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    const int r = 2 + static_cast<int>(rng() % 3);
    const auto partition = random_partition(rng, 40);
    const auto classes = classify_intervals(partition, r);
    std::set<std::size_t> seen;
    for (const auto& [m, members] : classes) {
      REQUIRE(m >= 0);
      for (std::size_t i : members) {
        REQUIRE(seen.insert(i).second);  // disjoint
        const double dt = partition.times[i] - partition.times[i - 1];
        REQUIRE(dt <= 1.0 / ipow_d(r, m));
        REQUIRE(dt > 1.0 / ipow_d(r, m + 1));
      }
    }
    REQUIRE(seen.size() == partition.interval_count());
  }
}

TEST_CASE("cutoff level worked example") {
  // r=4, q=p=1/2, k=1, M0 = 8e, c=1:
  //   4^{-2} = 0.0625 >= c/M0 ~ 0.046 and 4^{-2.5} ~ 0.0312 < 0.046.
  const double M0 = 8.0 * std::exp(1.0);
  CHECK(compute_m_k(1.0, 0.5, 0.5, 1.0, M0, 4) == 4);
}

TEST_CASE("cutoff level degenerate regime returns -1") {
  CHECK(compute_m_k(1.0, 0.5, 0.5, 10.0, 2.0, 2) == -1);
  CHECK(compute_m_k(1.0, 0.5, 0.5, 2.0, 2.0, 2) == -1);  // c == M0 k^p
}

TEST_CASE("cutoff level satisfies its defining inequalities") {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const double k = 1.0 + 15.0 * uni(rng);
    const double p = 0.1 + 0.9 * uni(rng);
    const double q = 0.1 + 0.8 * uni(rng);
    const double M0 = std::exp(6.0 * uni(rng) - 1.0);
    const double c = std::exp(8.0 * uni(rng) - 6.0);
    const int r = 2 + static_cast<int>(rng() % 4);
    const int m_k = compute_m_k(k, p, q, c, M0, r);
    if (c >= M0 * std::pow(k, p)) {
      REQUIRE(m_k == -1);
      continue;
    }
    REQUIRE(m_k >= 0);
    const double ratio = c / M0;
    const double kp = std::pow(k, p);
    REQUIRE(kp * std::pow(static_cast<double>(r), -(m_k + 1) * q) < ratio);
    REQUIRE(ratio <= kp * std::pow(static_cast<double>(r), -m_k * q) *
                         (1.0 + 1e-12));
  }
}

// Independent second implementation of the chain-bound right-hand side,
// written directly from the sum definition over explicit grids.
namespace {
ChainRhs chain_rhs_reference(const GridPath& grid, double c, int m_k) {
  ChainRhs rhs;
  const double scale = ipow_d(grid.r, grid.level);
  for (int n = 0; n < grid.level; ++n) {
    const RAdicGrid fine(grid.r, n + 1);
    const double threshold =
        (n <= m_k) ? 0.0 : c * std::pow(2.0, static_cast<double>(m_k - n - 1));
    double sum = 0.0;
    for (const double u : fine.points()) {
      for (const double v : neighborhood(u, n + 1, grid.r)) {
        const auto iu = static_cast<std::size_t>(std::llround(u * scale));
        const auto iv = static_cast<std::size_t>(std::llround(v * scale));
        const double diff = std::abs(grid.values[iu] - grid.values[iv]);
        if (n <= m_k)
          sum += diff;
        else
          sum += std::max(diff - threshold, 0.0);
      }
    }
    if (n <= m_k)
      rhs.coarse += sum;
    else
      rhs.fine += sum;
  }
  return rhs;
}
}  // namespace

TEST_CASE("chain bound rhs: constant path vanishes") {
  GridPath grid;
  grid.r = 2;
  grid.level = 4;
  grid.values.assign(17, 3.0);
  const auto rhs = chain_bound_rhs(grid, 0.5, 1);
  CHECK(rhs.coarse == 0.0);
  CHECK(rhs.fine == 0.0);
}

TEST_CASE("chain bound rhs matches direct summation on the alternating path") {
  GridPath grid;
  grid.r = 2;
  grid.level = 3;
  grid.values = {0, 1, 0, 1, 0, 1, 0, 1, 0};
  for (int m_k : {-1, 0, 1, 2}) {
    const auto fast = chain_bound_rhs(grid, 0.5, m_k);
    const auto ref = chain_rhs_reference(grid, 0.5, m_k);
    CHECK(fast.coarse == doctest::Approx(ref.coarse).epsilon(1e-13));
    CHECK(fast.fine == doctest::Approx(ref.fine).epsilon(1e-13));
  }
}

TEST_CASE("chain bound rhs matches direct summation on random paths") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 40; ++trial) {
    const int r = 2 + static_cast<int>(rng() % 2);
    const int level = 2 + static_cast<int>(rng() % 3);
    GridPath grid;
    grid.r = r;
    grid.level = level;
    grid.values = generate_bm(static_cast<std::size_t>(ipow_d(r, level)),
                              rng())
                      .values;
    const double c = 0.05 + 0.5 * std::uniform_real_distribution<>(0, 1)(rng);
    const int m_k = static_cast<int>(rng() % 4) - 1;
    const auto fast = chain_bound_rhs(grid, c, m_k);
    const auto ref = chain_rhs_reference(grid, c, m_k);
    REQUIRE(fast.coarse == doctest::Approx(ref.coarse).epsilon(1e-12));
    REQUIRE(fast.fine == doctest::Approx(ref.fine).epsilon(1e-12));
  }
}

TEST_CASE("doubling the path doubles the coarse sum, fine never decreases") {
  std::mt19937_64 rng(73);
  GridPath grid;
  grid.r = 2;
  grid.level = 5;
  grid.values = generate_bm(32, 9).values;
  GridPath doubled = grid;
  for (auto& v : doubled.values) v *= 2.0;
  const auto base = chain_bound_rhs(grid, 0.3, 1);
  const auto big = chain_bound_rhs(doubled, 0.3, 1);
  CHECK(big.coarse == doctest::Approx(2.0 * base.coarse).epsilon(1e-12));
  CHECK(big.fine >= base.fine - 1e-12);
}

TEST_CASE("pathwise chain bound holds on random instances") {
  std::mt19937_64 rng(101);
  const double c_set[] = {0.1, 0.5, 2.0};
  const double M0 = 8.0 * std::exp(1.0);
  for (int trial = 0; trial < 150; ++trial) {
    GridPath grid;
    grid.r = 2;
    grid.level = 6;
    grid.values = generate_bm(64, rng()).values;
    const auto partition = random_grid_partition(rng, 2, 6, 30);
    CutoffParams params;
    params.k = 1.0 + static_cast<double>(rng() % 4);
    params.M0 = M0;
    const auto report =
        verify_chain_bound(grid, partition, c_set[trial % 3], params);
    REQUIRE(report.holds);
    REQUIRE(report.lhs >= 0.0);
    REQUIRE(report.rhs_coarse >= 0.0);
    REQUIRE(report.rhs_fine >= 0.0);
  }
}

TEST_CASE("chain bound on the full grid with vanishing threshold") {
  // With c ~ 0 every level is coarse; the left side is the grid total
  // variation and the right side is finite and strictly larger.
  GridPath grid;
  grid.r = 2;
  grid.level = 5;
  grid.values = generate_bm(32, 4).values;
  PartitionSpec partition;
  for (int k = 0; k <= 32; ++k)
    partition.times.push_back(static_cast<double>(k) / 32.0);
  double tv0 = 0.0;
  for (std::size_t i = 1; i < grid.values.size(); ++i)
    tv0 += std::abs(grid.values[i] - grid.values[i - 1]);
  const auto rhs = chain_bound_rhs(grid, 0.0, grid.level - 1);
  CHECK(std::isfinite(rhs.coarse));
  CHECK(rhs.fine == 0.0);
  CHECK(2.0 * rhs.coarse > tv0);
}

TEST_CASE("chain bound refuses off-grid partitions") {
  GridPath grid;
  grid.r = 2;
  grid.level = 3;
  grid.values.assign(9, 0.0);
  PartitionSpec partition;
  partition.times = {0.0, 0.3, 1.0};
  CutoffParams params;
  params.M0 = 10.0;
  CHECK_THROWS_AS(verify_chain_bound(grid, partition, 0.5, params),
                  std::invalid_argument);
}

TEST_CASE("successor and first-step containment") {
  std::mt19937_64 rng(113);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int trial = 0; trial < 4000; ++trial) {
    const int r = 2 + static_cast<int>(rng() % 3);
    const int n = static_cast<int>(rng() % 8);
    const double t = uni(rng);
    // pi_{n+1}(t) lies in the neighborhood of pi_n(t).
    REQUIRE(std::abs(project_pi(t, n + 1, r) - project_pi(t, n, r)) <
            2.0 / ipow_d(r, n));
  }
  for (int trial = 0; trial < 400; ++trial) {
    const int r = 2 + static_cast<int>(rng() % 3);
    const auto partition = random_partition(rng, 30);
    const auto classes = classify_intervals(partition, r);
    for (const auto& [m, members] : classes) {
      if (m > 12) continue;
      for (const std::size_t i : members) {
        const double left = project_pi(partition.times[i - 1], m + 1, r);
        const double right = project_pi(partition.times[i], m + 1, r);
        REQUIRE(std::abs(left - right) < 2.0 / ipow_d(r, m));
      }
    }
  }
}

TEST_CASE("step uniqueness: single interval is trivially unique") {
  PartitionSpec partition;
  partition.times = {0.1, 0.9};
  CHECK(verify_step_uniqueness(partition, 2, 8).ok);
}

TEST_CASE("step uniqueness on random partitions") {
  std::mt19937_64 rng(127);
  for (int trial = 0; trial < 400; ++trial) {
    const int r = 2 + static_cast<int>(rng() % 3);
    const auto partition = trial % 3 == 0
                               ? random_grid_partition(rng, r, 5, 50)
                               : random_partition(rng, 50);
    const auto report = verify_step_uniqueness(partition, r, 8);
    REQUIRE_MESSAGE(report.ok, report.counterexample);
  }
}

TEST_CASE("step uniqueness on adversarial equal-length partitions") {
  for (int r : {2, 3, 4}) {
    for (int m : {1, 2, 3}) {
      const double len = 1.0 / ipow_d(r, m);
      PartitionSpec partition;
      for (int i = 0;; ++i) {
        const double t = static_cast<double>(i) * len;
        if (t > 1.0 + 1e-12) break;
        partition.times.push_back(std::min(t, 1.0));
      }
      const auto report = verify_step_uniqueness(partition, r, 8);
      REQUIRE_MESSAGE(report.ok, report.counterexample);
    }
  }
}
