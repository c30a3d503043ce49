// Path generators with exactly known increment-moment structure, plus the
// Gaussian moment utilities used to fit moment envelopes.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "truncvar/path.hpp"

namespace truncvar {

// Autocovariance of unit-variance fractional Gaussian noise at integer lag:
//   gamma(j) = ((j+1)^{2H} - 2 j^{2H} + (j-1)^{2H}) / 2,  gamma(0) = 1.
double fgn_autocovariance(double hurst, std::int64_t lag);

// k-norm of N(0, sigma^2):  sigma * (2^{k/2} Gamma((k+1)/2) / sqrt(pi))^{1/k}.
// Exact to double precision via log-Gamma; k >= 1 may be non-integer.
double gaussian_abs_moment_norm(double k, double sigma);

// Standard Brownian motion sampled on the uniform grid i/n_steps.
// Increments are i.i.d. N(0, 1/n_steps); deterministic in the seed.
SampledPath generate_bm(std::size_t n_steps, std::uint64_t seed);

enum class FbmMethod { hosking, cholesky };

// Fractional Brownian motion on the uniform grid. Both methods transform the
// same innovation stream, so for a fixed seed they agree up to roundoff;
// cholesky is the small-n exact-covariance oracle (n_steps <= 1024).
SampledPath generate_fbm(double hurst, std::size_t n_steps, std::uint64_t seed,
                         FbmMethod method = FbmMethod::hosking);

// Random walk with i.i.d. Student-t increments (tail_dof > 2), scaled to
// increment variance 1/n_steps. Exploratory heavy-tail instance.
SampledPath generate_heavy_tail_walk(double tail_dof, std::size_t n_steps,
                                     std::uint64_t seed);

struct GeneratorSpec {
  enum class Kind { brownian, fbm, heavy_tail_walk };
  Kind kind = Kind::brownian;
  double hurst = 0.5;
  double tail_dof = 3.0;
  std::size_t n_steps = 1;
  std::uint64_t seed = 0;
  FbmMethod method = FbmMethod::hosking;
};

SampledPath generate(const GeneratorSpec& spec);

const char* kind_name(GeneratorSpec::Kind kind);
GeneratorSpec::Kind kind_from_name(const std::string& name);

class GaussianSampler;

namespace detail {

// Unit-variance fGn from a given innovation stream; exposed for oracle tests.
// hosking_fgn runs the Durbin-Levinson recursion (O(n^2)); cholesky_fgn
// factors the full covariance matrix (O(n^3)) and throws if a pivot is not
// positive.
std::vector<double> hosking_fgn(double hurst, std::span<const double> z);
std::vector<double> cholesky_fgn(double hurst, std::span<const double> z);

// One Student-t draw via Bailey's polar method (exact for any dof > 0).
double student_t_draw(GaussianSampler& rng, double dof);

}  // namespace detail

}  // namespace truncvar
