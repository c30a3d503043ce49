#include "truncvar/chaining.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "truncvar/common.hpp"

namespace truncvar {

double ipow_d(int base, int exp) {
  if (base < 2) throw std::invalid_argument("ipow_d: base >= 2 required");
  if (exp < 0 || exp > 62) throw std::invalid_argument("ipow_d: exponent out of range");
  double v = 1.0;
  for (int i = 0; i < exp; ++i) {
    v *= base;
    if (v > 0x1.0p53) throw std::invalid_argument("ipow_d: power exceeds 2^53");
  }
  return v;
}

RAdicGrid::RAdicGrid(int r_, int level_) : r(r_), level(level_) {
  if (r < 2) throw std::invalid_argument("RAdicGrid: r >= 2 required");
  if (level < 0) throw std::invalid_argument("RAdicGrid: level >= 0 required");
  ipow_d(r, level);  // range check
}

std::size_t RAdicGrid::size() const {
  return static_cast<std::size_t>(ipow_d(r, level)) + 1;
}

double RAdicGrid::point(std::int64_t k) const {
  return static_cast<double>(k) / ipow_d(r, level);
}

std::vector<double> RAdicGrid::points() const {
  std::vector<double> pts(size());
  for (std::size_t k = 0; k < pts.size(); ++k)
    pts[k] = point(static_cast<std::int64_t>(k));
  return pts;
}

std::int64_t project_pi_index(double t, int n, int r) {
  if (!(t >= 0.0 && t <= 1.0))
    throw std::domain_error("project_pi: t must lie in [0,1]");
  const double scale = ipow_d(r, n);
  const auto count = static_cast<std::int64_t>(scale);
  auto k = static_cast<std::int64_t>(std::floor(t * scale));
  k = std::clamp<std::int64_t>(k, 0, count);
  // Adjust so that point(k) <= t < point(k+1) holds on represented values
  // (the naive floor can be off by one near grid points).
  while (k > 0 && static_cast<double>(k) / scale > t) --k;
  while (k < count && static_cast<double>(k + 1) / scale <= t) ++k;
  return k;
}

double project_pi(double t, int n, int r) {
  return static_cast<double>(project_pi_index(t, n, r)) / ipow_d(r, n);
}

std::vector<double> neighborhood(double u, int n_plus_1, int r) {
  if (n_plus_1 < 1) throw std::invalid_argument("neighborhood: level >= 1");
  if (r < 2) throw std::invalid_argument("neighborhood: r >= 2");
  const double scale = ipow_d(r, n_plus_1);
  const auto count = static_cast<std::int64_t>(scale);
  const auto ju = static_cast<std::int64_t>(std::llround(u * scale));
  if (ju < 0 || ju > count || static_cast<double>(ju) / scale != u)
    throw std::domain_error("neighborhood: u is not a grid point of T_{n+1}");
  // |s - u| < 2 r^{-n} means |j - ju| < 2r on level-(n+1) indices.
  const std::int64_t lo = std::max<std::int64_t>(0, ju - (2 * r - 1));
  const std::int64_t hi = std::min<std::int64_t>(count, ju + (2 * r - 1));
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(hi - lo + 1));
  for (std::int64_t j = lo; j <= hi; ++j)
    out.push_back(static_cast<double>(j) / scale);
  return out;
}

void PartitionSpec::validate() const {
  if (times.empty()) throw std::invalid_argument("partition: empty");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || times[i] < 0.0 || times[i] > 1.0)
      throw std::invalid_argument("partition: point outside [0,1]");
    if (i > 0 && !(times[i] > times[i - 1]))
      throw std::invalid_argument("partition: not strictly increasing");
  }
}

std::map<int, std::vector<std::size_t>> classify_intervals(
    const PartitionSpec& partition, int r) {
  partition.validate();
  if (r < 2) throw std::invalid_argument("classify_intervals: r >= 2");
  std::map<int, std::vector<std::size_t>> classes;
  for (std::size_t i = 1; i < partition.times.size(); ++i) {
    const double dt = partition.times[i] - partition.times[i - 1];
    // m with r^{-m-1} < dt <= r^{-m}; scan around the float estimate so the
    // boundary dt == r^{-m} lands exactly on the closed side.
    int m0 = static_cast<int>(std::floor(-std::log(dt) / std::log(r)));
    int found = -1;
    for (int m = std::max(0, m0 - 2); m <= m0 + 2; ++m) {
      const double upper = 1.0 / ipow_d(r, m);
      const double lower = upper / r;
      if (dt <= upper && dt > lower) {
        found = m;
        break;
      }
    }
    if (found < 0)
      throw std::runtime_error("classify_intervals: no class found (fp edge)");
    classes[found].push_back(i);
  }
  return classes;
}

int compute_m_k(double k, double p, double q, double c, double M0, int r) {
  if (!(k >= 1.0)) throw std::invalid_argument("compute_m_k: k >= 1");
  if (!(c > 0.0)) throw std::invalid_argument("compute_m_k: c > 0");
  if (!(M0 > 0.0)) throw std::invalid_argument("compute_m_k: M0 > 0");
  if (r < 2) throw std::invalid_argument("compute_m_k: r >= 2");
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("compute_m_k: q in (0,1)");
  if (!(p > 0.0)) throw std::invalid_argument("compute_m_k: p > 0");

  // Degenerate regime: the coarse sum is empty.
  if (c >= M0 * std::pow(k, p)) return -1;

  const double log_rhs = std::log(c) - std::log(M0);  // log(c/M0)
  const double log_kp = p * std::log(k);
  const double log_rq = q * std::log(static_cast<double>(r));
  const double level = (log_kp - log_rhs) / log_rq;
  auto satisfies = [&](long m) {
    // k^p r^{-(m+1)q} < c/M0 <= k^p r^{-mq}, compared in log space.
    const double left = log_kp - (static_cast<double>(m) + 1.0) * log_rq;
    const double right = log_kp - static_cast<double>(m) * log_rq;
    return left < log_rhs && log_rhs <= right;
  };
  long m = static_cast<long>(std::floor(level));
  for (long cand : {m, m - 1, m + 1})
    if (cand >= 0 && satisfies(cand)) return static_cast<int>(cand);
  throw std::runtime_error("compute_m_k: no level satisfies the defining inequalities");
}

void GridPath::validate() const {
  if (r < 2) throw std::invalid_argument("grid path: r >= 2");
  if (level < 0) throw std::invalid_argument("grid path: level >= 0");
  const auto expected = static_cast<std::size_t>(ipow_d(r, level)) + 1;
  if (values.size() != expected)
    throw std::invalid_argument("grid path: values size must be r^level + 1");
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("grid path: non-finite value");
}

ChainRhs chain_bound_rhs(const GridPath& grid, double c, int m_k) {
  grid.validate();
  if (!(c >= 0.0)) throw std::invalid_argument("chain_bound_rhs: c >= 0");
  if (m_k < -1) throw std::invalid_argument("chain_bound_rhs: m_k >= -1");

  const int r = grid.r;
  const int n_max = grid.level;  // data grid T_{n_max}
  ChainRhs rhs;
  // Level n pairs: u in T_{n+1}, v in I_{n+1}(u). For data on T_{n_max},
  // every approximation step at level n >= n_max has u = v, so levels stop
  // at n_max - 1.
  for (int n = 0; n < n_max; ++n) {
    const auto level_count = static_cast<std::int64_t>(ipow_d(r, n + 1));
    const std::int64_t stride =
        static_cast<std::int64_t>(ipow_d(r, n_max - n - 1));
    const bool coarse = (n <= m_k);
    const double threshold = coarse ? 0.0 : std::ldexp(c, m_k - n - 1);
    double level_sum = 0.0;
    for (std::int64_t ku = 0; ku <= level_count; ++ku) {
      const double xu = grid.values[static_cast<std::size_t>(ku * stride)];
      const std::int64_t lo = std::max<std::int64_t>(0, ku - (2 * r - 1));
      const std::int64_t hi = std::min<std::int64_t>(level_count, ku + (2 * r - 1));
      for (std::int64_t kv = lo; kv <= hi; ++kv) {
        if (kv == ku) continue;  // zero contribution
        const double diff =
            std::abs(xu - grid.values[static_cast<std::size_t>(kv * stride)]);
        if (coarse) {
          level_sum += diff;
        } else if (diff > threshold) {
          level_sum += diff - threshold;
        }
      }
    }
    if (coarse)
      rhs.coarse += level_sum;
    else
      rhs.fine += level_sum;
  }
  return rhs;
}

ChainBoundReport verify_chain_bound(const GridPath& grid,
                                    const PartitionSpec& partition, double c,
                                    const CutoffParams& params) {
  grid.validate();
  partition.validate();
  if (!(c > 0.0)) throw std::invalid_argument("verify_chain_bound: c > 0");

  const double scale = ipow_d(grid.r, grid.level);
  const auto count = static_cast<std::int64_t>(scale);
  std::vector<std::int64_t> idx(partition.times.size());
  for (std::size_t i = 0; i < partition.times.size(); ++i) {
    const auto k = static_cast<std::int64_t>(
        std::llround(partition.times[i] * scale));
    if (k < 0 || k > count || static_cast<double>(k) / scale != partition.times[i])
      throw std::invalid_argument(
          "verify_chain_bound: partition point off the data grid");
    idx[i] = k;
  }

  ChainBoundReport report;
  report.m_k = compute_m_k(params.k, params.p, params.q, c, params.M0, grid.r);
  for (std::size_t i = 1; i < idx.size(); ++i) {
    const double diff =
        std::abs(grid.values[static_cast<std::size_t>(idx[i])] -
                 grid.values[static_cast<std::size_t>(idx[i - 1])]);
    if (diff > c) report.lhs += diff - c;
  }
  const ChainRhs rhs = chain_bound_rhs(grid, c, report.m_k);
  report.rhs_coarse = rhs.coarse;
  report.rhs_fine = rhs.fine;
  report.margin = report.rhs_total() - report.lhs;
  report.holds = report.lhs <= report.rhs_total() + 1e-9;
  return report;
}

StepUniquenessReport verify_step_uniqueness(const PartitionSpec& partition,
                                            int r, int n_max) {
  partition.validate();
  if (r < 2) throw std::invalid_argument("verify_step_uniqueness: r >= 2");
  if (n_max < 0) throw std::invalid_argument("verify_step_uniqueness: n_max >= 0");

  const auto classes = classify_intervals(partition, r);
  std::vector<int> class_of(partition.times.size(), -1);  // by interval index
  for (const auto& [m, members] : classes)
    for (std::size_t i : members) class_of[i] = m;

  StepUniquenessReport report;
  // role 0: left endpoint t_{i-1}; role 1: right endpoint t_i.
  for (int n = 1; n <= n_max; ++n) {
    std::map<std::pair<std::int64_t, std::int64_t>, std::size_t> seen[2];
    for (std::size_t i = 1; i < partition.times.size(); ++i) {
      if (class_of[i] + 1 > n) continue;  // chain for J_m starts at level m+1
      for (int role = 0; role < 2; ++role) {
        const double t = partition.times[role == 0 ? i - 1 : i];
        const std::int64_t u = project_pi_index(t, n, r);
        const std::int64_t v = project_pi_index(t, n + 1, r);
        // Containment of the successor step: |v - r u| < 2r on indices.
        if (std::llabs(v - static_cast<std::int64_t>(r) * u) >= 2 * r) {
          report.ok = false;
          report.counterexample = "step outside neighborhood at level n=" +
                                  std::to_string(n) + ", interval " +
                                  std::to_string(i);
          return report;
        }
        auto [it, inserted] = seen[role].try_emplace({u, v}, i);
        if (!inserted) {
          report.ok = false;
          report.counterexample =
              "duplicate step at level n=" + std::to_string(n) + ", role " +
              std::to_string(role) + ": intervals " + std::to_string(it->second) +
              " and " + std::to_string(i) + ", u=" +
              format_g17(static_cast<double>(u) / ipow_d(r, n)) + ", v=" +
              format_g17(static_cast<double>(v) / ipow_d(r, n + 1));
          return report;
        }
      }
    }
  }
  return report;
}

}  // namespace truncvar
