#include "truncvar/generators.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "truncvar/rng.hpp"

namespace truncvar {

double fgn_autocovariance(double hurst, std::int64_t lag) {
  if (!(hurst > 0.0 && hurst < 1.0))
    throw std::domain_error("fgn_autocovariance: H must lie in (0,1)");
  if (lag < 0) throw std::domain_error("fgn_autocovariance: lag must be >= 0");
  if (lag == 0) return 1.0;
  const double h2 = 2.0 * hurst;
  const double j = static_cast<double>(lag);
  return 0.5 * (std::pow(j + 1.0, h2) - 2.0 * std::pow(j, h2) +
                std::pow(j - 1.0, h2));
}

double gaussian_abs_moment_norm(double k, double sigma) {
  if (!(k >= 1.0)) throw std::invalid_argument("moment order k must be >= 1");
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  // log E|Z|^k = (k/2) log 2 + lgamma((k+1)/2) - log sqrt(pi)
  const double log_moment = 0.5 * k * std::log(2.0) +
                            std::lgamma(0.5 * (k + 1.0)) -
                            0.5 * std::log(M_PI);
  return sigma * std::exp(log_moment / k);
}

namespace {

std::vector<double> draw_normals(std::uint64_t seed, std::size_t n) {
  GaussianSampler rng(seed);
  std::vector<double> z(n);
  for (auto& v : z) v = rng.next_gaussian();
  return z;
}

SampledPath assemble_path(std::vector<double> increments, PathMeta meta) {
  const std::size_t n = increments.size();
  SampledPath path;
  path.times.resize(n + 1);
  path.values.resize(n + 1);
  path.values[0] = 0.0;
  for (std::size_t i = 0; i <= n; ++i)
    path.times[i] = static_cast<double>(i) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    path.values[i + 1] = path.values[i] + increments[i];
  path.meta = std::move(meta);
  return path;
}

}  // namespace

SampledPath generate_bm(std::size_t n_steps, std::uint64_t seed) {
  if (n_steps < 1) throw std::invalid_argument("generate_bm: n_steps >= 1");
  std::vector<double> inc = draw_normals(seed, n_steps);
  const double sigma = std::sqrt(1.0 / static_cast<double>(n_steps));
  for (auto& v : inc) v *= sigma;
  PathMeta meta;
  meta.generator = "brownian";
  meta.n_steps = n_steps;
  meta.seed = seed;
  return assemble_path(std::move(inc), std::move(meta));
}

namespace detail {

std::vector<double> hosking_fgn(double hurst, std::span<const double> z) {
  const std::size_t n = z.size();
  std::vector<double> gamma(n);
  for (std::size_t j = 0; j < n; ++j)
    gamma[j] = fgn_autocovariance(hurst, static_cast<std::int64_t>(j));

  std::vector<double> x(n);
  if (n == 0) return x;
  x[0] = z[0];  // gamma(0) = 1

  // Durbin-Levinson: phi holds the AR coefficients of the current order,
  // v the innovation variance.
  std::vector<double> phi, phi_prev;
  double v = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    double acc = gamma[i];
    for (std::size_t k = 1; k < i; ++k) acc -= phi_prev[k - 1] * gamma[i - k];
    const double phi_ii = acc / v;
    phi.assign(i, 0.0);
    for (std::size_t k = 1; k < i; ++k)
      phi[k - 1] = phi_prev[k - 1] - phi_ii * phi_prev[i - k - 1];
    phi[i - 1] = phi_ii;
    v *= (1.0 - phi_ii * phi_ii);
    if (!(v > 0.0))
      throw std::runtime_error("hosking_fgn: innovation variance collapsed");
    double mu = 0.0;
    for (std::size_t k = 1; k <= i; ++k) mu += phi[k - 1] * x[i - k];
    x[i] = mu + std::sqrt(v) * z[i];
    phi.swap(phi_prev);
  }
  return x;
}

std::vector<double> cholesky_fgn(double hurst, std::span<const double> z) {
  const std::size_t n = z.size();
  std::vector<double> gamma(n);
  for (std::size_t j = 0; j < n; ++j)
    gamma[j] = fgn_autocovariance(hurst, static_cast<std::int64_t>(j));

  // Lower-triangular factor of Sigma_{ij} = gamma(|i-j|), row-packed.
  std::vector<double> L(n * (n + 1) / 2, 0.0);
  auto at = [&L](std::size_t i, std::size_t j) -> double& {
    return L[i * (i + 1) / 2 + j];
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = gamma[i - j];
      for (std::size_t k = 0; k < j; ++k) s -= at(i, k) * at(j, k);
      if (i == j) {
        if (!(s > 0.0))
          throw std::runtime_error(
              "cholesky_fgn: covariance not numerically positive definite");
        at(i, j) = std::sqrt(s);
      } else {
        at(i, j) = s / at(j, j);
      }
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j <= i; ++j) s += at(i, j) * z[j];
    x[i] = s;
  }
  return x;
}

double student_t_draw(GaussianSampler& rng, double dof) {
  // Bailey's polar method.
  double u, v, w;
  do {
    u = 2.0 * rng.uniform01() - 1.0;
    v = 2.0 * rng.uniform01() - 1.0;
    w = u * u + v * v;
  } while (w >= 1.0 || w == 0.0);
  return u * std::sqrt(dof * (std::pow(w, -2.0 / dof) - 1.0) / w);
}

}  // namespace detail

SampledPath generate_fbm(double hurst, std::size_t n_steps, std::uint64_t seed,
                         FbmMethod method) {
  if (!(hurst > 0.0 && hurst < 1.0))
    throw std::domain_error("generate_fbm: H must lie in (0,1)");
  if (n_steps < 1) throw std::invalid_argument("generate_fbm: n_steps >= 1");
  if (method == FbmMethod::cholesky && n_steps > 1024)
    throw std::invalid_argument(
        "generate_fbm: cholesky restricted to n_steps <= 1024");

  std::vector<double> z = draw_normals(seed, n_steps);
  std::vector<double> fgn;
  if (hurst == 0.5 && method == FbmMethod::hosking) {
    // gamma(j) = 0 for j >= 1, so the recursion reduces to the identity;
    // skip the O(n^2) pass. Output is bit-identical to the full recursion.
    fgn = std::move(z);
  } else if (method == FbmMethod::hosking) {
    fgn = detail::hosking_fgn(hurst, z);
  } else {
    fgn = detail::cholesky_fgn(hurst, z);
  }

  // Self-similar scaling: unit-spaced fGn scaled by n^{-H} has increment
  // covariance n^{-2H} gamma(|i-j|) at resolution 1/n.
  const double scale = std::pow(static_cast<double>(n_steps), -hurst);
  for (auto& v : fgn) v *= scale;

  PathMeta meta;
  meta.generator = "fbm";
  meta.n_steps = n_steps;
  meta.seed = seed;
  meta.hurst = hurst;
  meta.method = (method == FbmMethod::hosking) ? "hosking" : "cholesky";
  return assemble_path(std::move(fgn), std::move(meta));
}

SampledPath generate_heavy_tail_walk(double tail_dof, std::size_t n_steps,
                                     std::uint64_t seed) {
  if (!(tail_dof > 2.0))
    throw std::domain_error(
        "generate_heavy_tail_walk: tail_dof must exceed 2 (finite variance)");
  if (n_steps < 1)
    throw std::invalid_argument("generate_heavy_tail_walk: n_steps >= 1");
  GaussianSampler rng(seed);
  // Var(t_nu) = nu/(nu-2); scale so increments have variance 1/n.
  const double scale = std::sqrt((tail_dof - 2.0) / tail_dof /
                                 static_cast<double>(n_steps));
  std::vector<double> inc(n_steps);
  for (auto& v : inc) v = scale * detail::student_t_draw(rng, tail_dof);
  PathMeta meta;
  meta.generator = "heavy_tail_walk";
  meta.n_steps = n_steps;
  meta.seed = seed;
  meta.tail_dof = tail_dof;
  return assemble_path(std::move(inc), std::move(meta));
}

SampledPath generate(const GeneratorSpec& spec) {
  switch (spec.kind) {
    case GeneratorSpec::Kind::brownian:
      return generate_bm(spec.n_steps, spec.seed);
    case GeneratorSpec::Kind::fbm:
      return generate_fbm(spec.hurst, spec.n_steps, spec.seed, spec.method);
    case GeneratorSpec::Kind::heavy_tail_walk:
      return generate_heavy_tail_walk(spec.tail_dof, spec.n_steps, spec.seed);
  }
  throw std::invalid_argument("generate: unknown kind");
}

const char* kind_name(GeneratorSpec::Kind kind) {
  switch (kind) {
    case GeneratorSpec::Kind::brownian: return "brownian";
    case GeneratorSpec::Kind::fbm: return "fbm";
    case GeneratorSpec::Kind::heavy_tail_walk: return "heavy_tail_walk";
  }
  return "unknown";
}

GeneratorSpec::Kind kind_from_name(const std::string& name) {
  if (name == "brownian") return GeneratorSpec::Kind::brownian;
  if (name == "fbm") return GeneratorSpec::Kind::fbm;
  if (name == "heavy_tail_walk") return GeneratorSpec::Kind::heavy_tail_walk;
  throw std::invalid_argument("unknown generator kind: " + name);
}

}  // namespace truncvar
