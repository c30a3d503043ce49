#include "truncvar/certificate.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

#include "truncvar/common.hpp"
#include "truncvar/generators.hpp"

namespace truncvar {

void MomentEnvelope::validate() const {
  if (!(C1 > 0.0) || !std::isfinite(C1))
    throw std::invalid_argument("envelope: C1 must be positive and finite");
  if (!(p > 0.0) || !std::isfinite(p))
    throw std::invalid_argument("envelope: p must be positive");
  if (!(q > 0.0 && q < 1.0))
    throw std::invalid_argument("envelope: q must lie in (0,1)");
}

double DecayFunction::operator()(double x) const {
  switch (kind) {
    case Kind::subgaussian:
      return std::exp(-param * std::pow(x, 1.0 / param));
    case Kind::power:
      return std::pow(x, -param);
  }
  throw std::logic_error("decay function: unknown kind");
}

std::string DecayFunction::describe() const {
  if (kind == Kind::subgaussian)
    return "exp(-" + format_g17(param) + " * x^(1/" + format_g17(param) + "))";
  return "x^(-" + format_g17(param) + ")";
}

TruncationEnvelope derive_trunc_envelope(const MomentEnvelope& env) {
  env.validate();
  if (env.p > 1.0)
    throw std::invalid_argument(
        "derive_trunc_envelope: p > 1 is outside the sub-Gaussian regime; "
        "supply a truncation envelope explicitly");
  TruncationEnvelope trunc;
  trunc.C2 = std::exp(1.0) * env.C1 * std::pow(env.p, env.p);
  trunc.f = {DecayFunction::Kind::subgaussian, env.p};
  return trunc;
}

GammaScanResult check_gamma_inequality(std::span<const double> k_grid,
                                       std::span<const double> p_grid) {
  GammaScanResult result;
  for (double k : k_grid) {
    if (!(k >= 1.0)) throw std::invalid_argument("gamma scan: k >= 1");
    for (double p : p_grid) {
      if (!(p > 0.0 && p <= 1.0))
        throw std::invalid_argument("gamma scan: p in (0,1]");
      const double kp = k * p;
      if (kp < 1e-3)
        throw std::invalid_argument("gamma scan: kp below the 1e-3 floor");
      // Gamma(kp)^{1/k} <= (kp)^p, compared in log space with a tiny slack
      // so exact-equality cells (e.g. kp = 1, k = 1) pass.
      const double lhs = std::lgamma(kp) / k;
      const double rhs = p * std::log(kp);
      if (lhs > rhs + 1e-12) {
        result.ok = false;
        result.violations.emplace_back(k, p);
      }
    }
  }
  return result;
}

GrowthCheck growth_condition_check(const std::function<double(double)>& f,
                                   int r, double q, double p, double C3) {
  if (r < 2) throw std::invalid_argument("growth check: r >= 2");
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("growth check: q in (0,1)");
  if (!(p > 0.0)) throw std::invalid_argument("growth check: p > 0");
  if (!(C3 > 0.0)) throw std::invalid_argument("growth check: C3 > 0");

  GrowthCheck check;
  check.C3 = C3;

  const double base = std::pow(static_cast<double>(r), q) / 2.0;
  if (base <= 1.0 && f(C3) > 0.0) {
    check.reason = "r^q <= 2: the decay argument does not grow, terms diverge";
    return check;
  }

  constexpr int kMaxTerms = 4000;
  const double growth_factor = std::pow(static_cast<double>(r), 1.0 - q);
  double prev_term = -1.0;
  std::deque<double> ratios;
  int zero_streak = 0;
  for (int l = 0; l < kMaxTerms; ++l) {
    const double arg = C3 * std::pow(base, static_cast<double>(l) / p);
    const double term = std::pow(growth_factor, static_cast<double>(l)) * f(arg);
    check.terms = l + 1;
    check.partial_sum += term;
    if (!std::isfinite(check.partial_sum) || check.partial_sum > 1e300) {
      check.reason = "partial sums diverge";
      check.converged = false;
      return check;
    }
    if (term == 0.0) {
      if (++zero_streak >= 3 || (l == 0 && f(C3) == 0.0)) {
        check.tail_bound = 0.0;
        check.converged = true;
        return check;
      }
    } else {
      zero_streak = 0;
    }
    if (prev_term > 0.0) {
      ratios.push_back(term / prev_term);
      if (ratios.size() > 3) ratios.pop_front();
    }
    prev_term = term;
    const bool small = term <= 1e-15 * check.partial_sum;
    const bool contracting =
        ratios.size() == 3 &&
        ratios[0] < 0.5 && ratios[1] < 0.5 && ratios[2] < 0.5;
    if (small && (contracting || term == 0.0)) {
      double rho = 0.0;
      for (double x : ratios) rho = std::max(rho, x);
      check.tail_bound = (term > 0.0) ? term * rho / (1.0 - rho) : 0.0;
      check.converged = true;
      return check;
    }
  }
  check.reason = "series did not certify within the iteration cap";
  return check;
}

GrowthCheck growth_condition_check(const DecayFunction& f, int r, double q,
                                   double p, double C3) {
  return growth_condition_check(
      std::function<double(double)>([&f](double x) { return f(x); }), r, q, p,
      C3);
}

const char* flavor_name(CertFlavor flavor) {
  return flavor == CertFlavor::paper_literal ? "paper_literal" : "audited";
}

CertFlavor flavor_from_name(const std::string& name) {
  if (name == "paper_literal") return CertFlavor::paper_literal;
  if (name == "audited") return CertFlavor::audited;
  throw std::invalid_argument("unknown certificate flavor: " + name);
}

int default_r(double q) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("default_r: q in (0,1)");
  int r = static_cast<int>(std::ceil(std::pow(2.0, 1.0 / q) - 1e-12));
  r = std::max(r, 2);
  // r^q must exceed 2 strictly or the growth series cannot be certified.
  while (std::pow(static_cast<double>(r), q) <= 2.0 * (1.0 + 1e-12)) ++r;
  return r;
}

CertificateConstants certificate_constants(const MomentEnvelope& env,
                                           double C2, int r,
                                           CertFlavor flavor) {
  env.validate();
  if (!(C2 > 0.0)) throw std::invalid_argument("certificate: C2 > 0");
  if (r < 2) throw std::invalid_argument("certificate: r >= 2");
  const double q = env.q;
  const double rd = static_cast<double>(r);

  const double M0 = (flavor == CertFlavor::paper_literal)
                        ? std::pow(2.0, q) * C2 * std::pow(rd, 2.0 * q)
                        : 2.0 * std::exp(1.0) * C2 * std::pow(rd, 2.0 * q);
  // Audited flavor replaces the printed neighborhood cardinality 2r-1 by
  // the conservative bound 4r+1 wherever it entered (D1 and D3).
  const double cardinality_factor =
      (flavor == CertFlavor::audited) ? (4.0 * rd + 1.0) / (2.0 * rd - 1.0) : 1.0;

  const double m0_pow = std::pow(M0, 1.0 / q - 1.0);
  const double D1 = 8.0 * env.C1 * std::pow(rd, 3.0 - q) * m0_pow /
                    (std::pow(rd, 1.0 - q) - 1.0) * cardinality_factor;
  const double D2 = M0 / (4.0 * std::pow(2.0, q));
  const double D3 = 4.0 * C2 * std::pow(rd, 3.0 - q) * m0_pow * cardinality_factor;
  return {M0, D1, D2, D3};
}

ChainingCertificate build_certificate(const MomentEnvelope& env,
                                      const TruncationEnvelope& trunc, int r,
                                      CertFlavor flavor) {
  env.validate();
  const int r_min = static_cast<int>(std::ceil(std::pow(2.0, 1.0 / env.q) - 1e-12));
  if (r < r_min)
    throw std::invalid_argument("build_certificate: r must be >= ceil(2^[1/q]) = " +
                                std::to_string(r_min));

  const auto consts = certificate_constants(env, trunc.C2, r, flavor);
  GrowthCheck growth =
      growth_condition_check(trunc.f, r, env.q, env.p, consts.D2);
  if (!growth.converged)
    throw std::runtime_error("build_certificate: growth series not certified (" +
                             growth.reason + ")");

  ChainingCertificate cert;
  cert.r = r;
  cert.M0 = consts.M0;
  cert.D1 = consts.D1;
  cert.D2 = consts.D2;
  cert.D3 = consts.D3;
  // Conservative: include the certified tail of the series.
  cert.D4 = consts.D3 * (growth.partial_sum + growth.tail_bound);
  cert.K = cert.D1 + cert.D2 * cert.D4;
  cert.flavor = flavor;
  cert.conjectural = (trunc.f.kind == DecayFunction::Kind::power);
  cert.growth = std::move(growth);
  return cert;
}

double moment_bound(const ChainingCertificate& cert, const MomentEnvelope& env,
                    double k, double c) {
  if (!(k >= 1.0)) throw std::invalid_argument("moment_bound: k >= 1");
  if (!(c > 0.0)) throw std::invalid_argument("moment_bound: c > 0");
  return cert.K * std::pow(c, 1.0 - 1.0 / env.q) * std::pow(k, env.p / env.q);
}

TailBound tail_bound(const ChainingCertificate& cert, const MomentEnvelope& env,
                     double u, double c) {
  if (!(u >= 1.0)) throw std::domain_error("tail_bound: u >= 1 required");
  if (!(c > 0.0)) throw std::invalid_argument("tail_bound: c > 0");
  TailBound bound;
  bound.threshold =
      std::exp(1.0) * cert.K * u * std::pow(c, 1.0 - 1.0 / env.q);
  bound.probability = std::exp(-std::pow(u, env.q / env.p));
  return bound;
}

MomentEnvelope fbm_envelope(double hurst) {
  if (!(hurst > 0.0 && hurst < 1.0))
    throw std::domain_error("fbm_envelope: H must lie in (0,1)");
  double c1 = 0.0;
  for (int k = 1; k <= 256; ++k)
    c1 = std::max(c1, gaussian_abs_moment_norm(static_cast<double>(k), 1.0) /
                          std::sqrt(static_cast<double>(k)));
  return {c1, 0.5, hurst};
}

}  // namespace truncvar
