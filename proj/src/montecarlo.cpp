#include "truncvar/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "truncvar/common.hpp"
#include "truncvar/rng.hpp"
#include "truncvar/truncated_variation.hpp"

namespace truncvar {

std::string config_digest(const ExperimentConfig& config) {
  // parallel_width is numerically irrelevant by construction and therefore
  // excluded: runs at different widths share a digest.
  nlohmann::ordered_json j;
  j["generator"] = {{"kind", kind_name(config.generator.kind)},
                    {"n_steps", config.generator.n_steps}};
  if (config.generator.kind == GeneratorSpec::Kind::fbm) {
    j["generator"]["hurst"] = config.generator.hurst;
    j["generator"]["method"] =
        config.generator.method == FbmMethod::hosking ? "hosking" : "cholesky";
  }
  if (config.generator.kind == GeneratorSpec::Kind::heavy_tail_walk)
    j["generator"]["tail_dof"] = config.generator.tail_dof;
  j["replicas"] = config.replicas;
  j["c_grid"] = config.c_grid;
  j["k_grid"] = config.k_grid;
  j["u_grid"] = config.u_grid;
  j["base_seed"] = config.base_seed;
  return fnv1a64_hex(j.dump());
}

int effective_width(int requested) {
  int width = std::max(1, requested);
  if (const char* cap_env = std::getenv("TRUNCVAR_THREADS")) {
    const int cap = std::atoi(cap_env);
    if (cap >= 1) width = std::min(width, cap);
  }
  return width;
}

namespace {

// Runs fn(replica_index) for every replica on `width` threads. Exceptions
// are rethrown on the caller with the smallest failing replica attached.
template <typename Fn>
void parallel_replicas(std::size_t replicas, int width, Fn&& fn) {
  width = std::min<std::size_t>(std::max(1, width), replicas);
  if (width <= 1) {
    for (std::size_t j = 0; j < replicas; ++j) {
      try {
        fn(j);
      } catch (const std::exception& e) {
        throw std::runtime_error("replica " + std::to_string(j) + ": " +
                                 e.what());
      }
    }
    return;
  }
  std::vector<std::pair<std::size_t, std::string>> failures(width,
                                                            {SIZE_MAX, {}});
  std::vector<std::thread> workers;
  workers.reserve(width);
  for (int t = 0; t < width; ++t) {
    workers.emplace_back([&, t]() {
      for (std::size_t j = static_cast<std::size_t>(t); j < replicas;
           j += static_cast<std::size_t>(width)) {
        try {
          fn(j);
        } catch (const std::exception& e) {
          if (j < failures[t].first) failures[t] = {j, e.what()};
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  const auto worst = std::min_element(failures.begin(), failures.end());
  if (worst != failures.end() && worst->first != SIZE_MAX)
    throw std::runtime_error("replica " + std::to_string(worst->first) + ": " +
                             worst->second);
}

double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

}  // namespace

TvMatrix run_replicas(const ExperimentConfig& config) {
  if (config.replicas < 1)
    throw std::invalid_argument("run_replicas: replicas >= 1");
  if (config.c_grid.empty())
    throw std::invalid_argument("run_replicas: c grid must be non-empty");
  for (std::size_t i = 1; i < config.c_grid.size(); ++i)
    if (config.c_grid[i] < config.c_grid[i - 1])
      throw std::invalid_argument("run_replicas: c grid must be ascending");

  TvMatrix matrix;
  matrix.c_grid = config.c_grid;
  matrix.replicas = config.replicas;
  matrix.values.assign(config.replicas * config.c_grid.size(), 0.0);

  const int width = effective_width(config.parallel_width);
  parallel_replicas(config.replicas, width, [&](std::size_t j) {
    GeneratorSpec spec = config.generator;
    spec.seed = derive_seed(config.base_seed, j);
    const SampledPath path = generate(spec);
    const auto sweep = tv_sweep(path.values, config.c_grid);
    for (std::size_t ci = 0; ci < sweep.size(); ++ci)
      matrix.values[j * config.c_grid.size() + ci] = sweep[ci].second;
  });
  return matrix;
}

MomentTable estimate_moments(const TvMatrix& matrix,
                             std::span<const double> k_grid) {
  if (k_grid.empty())
    throw std::invalid_argument("estimate_moments: k grid must be non-empty");
  const std::size_t R = matrix.replicas;
  for (double k : k_grid) {
    if (!(k >= 1.0)) throw std::invalid_argument("estimate_moments: k >= 1");
    if (k <= 6.0 && R < 100)
      throw std::invalid_argument(
          "estimate_moments: need >= 100 replicas for k <= 6");
    if (k > 6.0 && R < 10000)
      throw std::invalid_argument(
          "estimate_moments: refusing k > 6 with < 10^4 replicas "
          "(estimator variance unbounded at this scale)");
  }

  constexpr std::size_t kBatches = 10;
  constexpr double kZ99 = 2.3263478740408408;  // one-sided 99% normal quantile

  MomentTable table;
  std::vector<double> powers(R);
  std::vector<double> log_c, log_norm1;
  for (std::size_t ci = 0; ci < matrix.c_grid.size(); ++ci) {
    for (double k : k_grid) {
      for (std::size_t j = 0; j < R; ++j)
        powers[j] = std::pow(matrix.at(j, ci), k);
      const double mu = mean_of(powers);

      // Batch means over contiguous index ranges, replica order fixed.
      double batch_means[kBatches];
      for (std::size_t b = 0; b < kBatches; ++b) {
        const std::size_t lo = b * R / kBatches;
        const std::size_t hi = (b + 1) * R / kBatches;
        batch_means[b] = mean_of(std::span(powers).subspan(lo, hi - lo));
      }
      double var = 0.0;
      for (double bm : batch_means) var += (bm - mu) * (bm - mu);
      var /= static_cast<double>(kBatches - 1);
      const double se_mu = std::sqrt(var / static_cast<double>(kBatches));

      MomentRow row;
      row.c = matrix.c_grid[ci];
      row.k = k;
      row.estimate = std::pow(mu, 1.0 / k);
      row.ucb = std::pow(mu + kZ99 * se_mu, 1.0 / k);
      row.stderr_ =
          (mu > 0.0) ? row.estimate * se_mu / (k * mu) : 0.0;  // delta method
      table.rows.push_back(row);

      if (k == 1.0 && row.estimate > 0.0 && row.c > 0.0) {
        log_c.push_back(std::log(row.c));
        log_norm1.push_back(std::log(row.estimate));
      }
    }
  }

  if (log_c.size() >= 2) {
    const double mx = mean_of(log_c), my = mean_of(log_norm1);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < log_c.size(); ++i) {
      sxx += (log_c[i] - mx) * (log_c[i] - mx);
      sxy += (log_c[i] - mx) * (log_norm1[i] - my);
    }
    if (sxx > 0.0) table.slope_loglog = sxy / sxx;
  }
  return table;
}

void attach_moment_bounds(MomentTable& table, const ChainingCertificate& cert,
                          const MomentEnvelope& env) {
  for (auto& row : table.rows)
    if (row.c > 0.0) row.bound = moment_bound(cert, env, row.k, row.c);
}

double binomial_upper_confidence(std::size_t successes, std::size_t trials,
                                 double confidence) {
  if (trials == 0) throw std::invalid_argument("binomial ucb: trials >= 1");
  if (successes > trials)
    throw std::invalid_argument("binomial ucb: successes <= trials");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw std::invalid_argument("binomial ucb: confidence in (0,1)");
  if (successes == trials) return 1.0;

  const double alpha = 1.0 - confidence;
  const auto n = static_cast<double>(trials);
  const auto x = static_cast<double>(successes);
  // log P(X <= x; n, p), summed directly (x is small in our use).
  auto log_cdf = [&](double prob) {
    const double lp = std::log(prob), lq = std::log1p(-prob);
    double acc = -std::numeric_limits<double>::infinity();
    for (double i = 0.0; i <= x; ++i) {
      const double lt = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) -
                        std::lgamma(n - i + 1.0) + i * lp + (n - i) * lq;
      acc = (acc > lt) ? acc + std::log1p(std::exp(lt - acc))
                       : lt + std::log1p(std::exp(acc - lt));
    }
    return acc;
  };
  double lo = x / n, hi = 1.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (log_cdf(mid) > std::log(alpha))
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

std::vector<TailRow> estimate_tail(const TvMatrix& matrix,
                                   const ChainingCertificate& cert,
                                   const MomentEnvelope& env,
                                   std::span<const double> u_grid) {
  if (matrix.replicas < 1000)
    throw std::invalid_argument("estimate_tail: needs >= 1000 replicas");
  if (u_grid.empty())
    throw std::invalid_argument("estimate_tail: u grid must be non-empty");
  for (double u : u_grid)
    if (!(u >= 1.0)) throw std::invalid_argument("estimate_tail: u >= 1");

  std::vector<TailRow> rows;
  for (std::size_t ci = 0; ci < matrix.c_grid.size(); ++ci) {
    const double c = matrix.c_grid[ci];
    for (double u : u_grid) {
      const TailBound tb = tail_bound(cert, env, u, c);
      std::size_t hits = 0;
      for (std::size_t j = 0; j < matrix.replicas; ++j)
        if (matrix.at(j, ci) >= tb.threshold) ++hits;
      TailRow row;
      row.c = c;
      row.u = u;
      row.threshold = tb.threshold;
      row.freq = static_cast<double>(hits) / static_cast<double>(matrix.replicas);
      row.ucb = binomial_upper_confidence(hits, matrix.replicas, 0.99);
      row.bound = tb.probability;
      row.pass = row.ucb <= row.bound;
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<LlnRow> lln_check(const GeneratorSpec& generator,
                              std::span<const double> c_sequence,
                              std::size_t replicas, std::uint64_t base_seed,
                              int parallel_width) {
  if (c_sequence.empty())
    throw std::invalid_argument("lln_check: c sequence must be non-empty");
  for (std::size_t i = 1; i < c_sequence.size(); ++i)
    if (!(c_sequence[i] < c_sequence[i - 1]))
      throw std::invalid_argument("lln_check: c sequence must be decreasing");
  const double dt = 1.0 / static_cast<double>(generator.n_steps);
  const double h_eff =
      (generator.kind == GeneratorSpec::Kind::fbm) ? generator.hurst : 0.5;
  const double guard = 8.0 * std::pow(dt, h_eff);
  if (c_sequence.back() < guard)
    throw std::invalid_argument(
        "lln_check: smallest c " + format_g17(c_sequence.back()) +
        " is below the resolution guard 8*dt^H = " + format_g17(guard) +
        "; the sampled path cannot resolve oscillations of that size");

  ExperimentConfig config;
  config.generator = generator;
  config.replicas = replicas;
  config.c_grid.assign(c_sequence.rbegin(), c_sequence.rend());  // ascending
  config.base_seed = base_seed;
  config.parallel_width = parallel_width;
  const TvMatrix matrix = run_replicas(config);

  std::vector<LlnRow> rows;
  for (double c : c_sequence) {
    const auto it =
        std::find(matrix.c_grid.begin(), matrix.c_grid.end(), c);
    const auto ci = static_cast<std::size_t>(it - matrix.c_grid.begin());
    double mean = 0.0;
    for (std::size_t j = 0; j < replicas; ++j) mean += c * matrix.at(j, ci);
    mean /= static_cast<double>(replicas);
    double var = 0.0;
    for (std::size_t j = 0; j < replicas; ++j) {
      const double d = c * matrix.at(j, ci) - mean;
      var += d * d;
    }
    var = (replicas > 1) ? var / static_cast<double>(replicas - 1) : 0.0;
    rows.push_back({c, mean, std::sqrt(var / static_cast<double>(replicas))});
  }
  return rows;
}

}  // namespace truncvar
