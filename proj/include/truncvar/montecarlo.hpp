// Moment, tail, and small-threshold-limit experiments over simulated path
// ensembles, compared against certificate bounds.
//
// Reproducibility contract: every estimate is a pure function of the
// ExperimentConfig. Replica j draws its seed from derive_seed(base_seed, j)
// and writes into its own matrix slot, so the result is identical at any
// parallel width.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "truncvar/certificate.hpp"
#include "truncvar/generators.hpp"

namespace truncvar {

struct ExperimentConfig {
  GeneratorSpec generator;  // per-replica seed is derived from base_seed
  std::size_t replicas = 1;
  std::vector<double> c_grid;  // ascending thresholds
  std::vector<double> k_grid;  // moment orders (moments mode)
  std::vector<double> u_grid;  // tail levels >= 1 (tail mode)
  std::uint64_t base_seed = 0;
  int parallel_width = 1;  // numeric no-op; excluded from the digest
};

// Stable hash of the numerically relevant part of the config.
std::string config_digest(const ExperimentConfig& config);

// Effective worker count: parallel_width capped by TRUNCVAR_THREADS.
int effective_width(int requested);

// replica-major TV^c matrix.
struct TvMatrix {
  std::vector<double> c_grid;
  std::size_t replicas = 0;
  std::vector<double> values;  // replicas x c_grid.size()

  double at(std::size_t replica, std::size_t ci) const {
    return values[replica * c_grid.size() + ci];
  }
};

TvMatrix run_replicas(const ExperimentConfig& config);

struct MomentRow {
  double c = 0.0;
  double k = 0.0;
  double estimate = 0.0;  // (mean TV^k)^{1/k}
  double stderr_ = 0.0;   // delta-method error of the estimate
  double ucb = 0.0;       // one-sided 99% upper confidence, batch based
  double bound = std::nan("");  // certificate bound when available
};

struct MomentTable {
  std::vector<MomentRow> rows;
  double slope_loglog = std::nan("");  // LS slope of log ||TV^c||_1 vs log c
};

// Power-mean estimates with batch standard errors (10 batches). Requires
// replicas >= 100 for k <= 6 and replicas >= 10^4 for k > 6.
MomentTable estimate_moments(const TvMatrix& matrix,
                             std::span<const double> k_grid);

// Attaches moment_bound(cert, env, k, c) to each row.
void attach_moment_bounds(MomentTable& table, const ChainingCertificate& cert,
                          const MomentEnvelope& env);

struct TailRow {
  double c = 0.0;
  double u = 0.0;
  double threshold = 0.0;
  double freq = 0.0;
  double ucb = 0.0;    // exact binomial upper confidence at 99%
  double bound = 0.0;  // exp(-u^{q/p})
  bool pass = false;   // ucb <= bound
};

// Requires replicas >= 1000.
std::vector<TailRow> estimate_tail(const TvMatrix& matrix,
                                   const ChainingCertificate& cert,
                                   const MomentEnvelope& env,
                                   std::span<const double> u_grid);

// Smallest p with P(Binomial(trials, p) <= successes) <= 1 - confidence,
// by exact tail inversion (no normal approximation).
double binomial_upper_confidence(std::size_t successes, std::size_t trials,
                                 double confidence = 0.99);

struct LlnRow {
  double c = 0.0;
  double mean = 0.0;    // mean of c * TV^c
  double stderr_ = 0.0;
};

// c_sequence must be strictly decreasing and bounded below by the
// resolution guard 8 * dt^H (H = 1/2 except for fbm generators): below it
// the sampled path cannot resolve oscillations of size c and TV^c is biased
// downward.
std::vector<LlnRow> lln_check(const GeneratorSpec& generator,
                              std::span<const double> c_sequence,
                              std::size_t replicas, std::uint64_t base_seed,
                              int parallel_width = 1);

}  // namespace truncvar
