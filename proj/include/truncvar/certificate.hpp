// Explicit constants for the moment bound on truncated variation.
//
// Inputs are a moment envelope (condition on increment k-norms)
//     ||X(t)-X(s)||_k <= C1 k^p |t-s|^q,          0 < q < 1, p > 0,
// and a truncation envelope (condition on truncated-excess k-norms)
//     ||(|X(t)-X(s)|-d)_+||_k <= C2 k^p |t-s|^q f(d / (C2 k^p |t-s|^q))
// for d >= C2 k^p |t-s|^q, with f positive, non-increasing, and summable in
// the sense of growth_condition_check. From these the explicit chain of
// constants M0, D1..D4 and K is computed, giving
//     ||TV^c(X)||_k <= K c^{1-1/q} k^{p/q}
// and, via Markov at k = u^{q/p}, the tail bound
//     P(TV^c >= e K u c^{1-1/q}) <= exp(-u^{q/p}),  u >= 1.
//
// Two flavors: `paper_literal` evaluates the constants exactly as printed in
// the derivation this module implements; `audited` substitutes the larger of
// the two printed M0 definitions (2e C2 r^{2q}) and the conservative
// neighborhood cardinality bound 4r+1 in place of 2r-1, under which every
// inequality used downstream re-verifies numerically.
#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace truncvar {

struct MomentEnvelope {
  double C1 = 1.0;
  double p = 0.5;
  double q = 0.5;
  void validate() const;
};

struct DecayFunction {
  enum class Kind { subgaussian, power };
  Kind kind = Kind::subgaussian;
  // subgaussian: f(x) = exp(-param x^{1/param}) with param = p;
  // power:       f(x) = x^{-param}              with param = alpha.
  double param = 1.0;

  double operator()(double x) const;
  std::string describe() const;
};

struct TruncationEnvelope {
  double C2 = 1.0;
  DecayFunction f;
};

// Sub-Gaussian instance: C2 = e C1 p^p and f(x) = exp(-p x^{1/p}).
// Requires p <= 1; larger p has no derived form here and must be supplied.
TruncationEnvelope derive_trunc_envelope(const MomentEnvelope& env);

// Numeric audit of the bound Gamma(kp)^{1/k} <= (kp)^p over a grid.
// A violation is reported, not thrown. (The bound is equivalent to
// Gamma(x) <= x^x at x = kp, which holds iff x >= 1.)
struct GammaScanResult {
  bool ok = true;
  std::vector<std::pair<double, double>> violations;  // offending (k, p)
};
GammaScanResult check_gamma_inequality(std::span<const double> k_grid,
                                       std::span<const double> p_grid);

// Certified partial sum of  sum_l r^{l(1-q)} f(C3 (r^q/2)^{l/p}).
// Certification requires the term to fall below 1e-15 of the running sum
// and the term ratio to stay below 1/2 for three consecutive terms; the
// tail is then bounded by geometric extrapolation. Series that cannot be
// certified (including the boundary r^q = 2 with non-vanishing f) come
// back with converged = false and a reason.
struct GrowthCheck {
  double C3 = 0.0;
  double partial_sum = 0.0;
  double tail_bound = 0.0;
  bool converged = false;
  int terms = 0;
  std::string reason;
};
GrowthCheck growth_condition_check(const std::function<double(double)>& f,
                                   int r, double q, double p, double C3);
GrowthCheck growth_condition_check(const DecayFunction& f, int r, double q,
                                   double p, double C3);

enum class CertFlavor { paper_literal, audited };
const char* flavor_name(CertFlavor flavor);
CertFlavor flavor_from_name(const std::string& name);

struct ChainingCertificate {
  int r = 0;
  double M0 = 0.0;
  double D1 = 0.0;
  double D2 = 0.0;
  double D3 = 0.0;
  double D4 = 0.0;
  double K = 0.0;  // D1 + D2 D4
  CertFlavor flavor = CertFlavor::audited;
  // Set for power-law truncation envelopes: the constants are computed the
  // same way but no moment-bound guarantee is claimed for them.
  bool conjectural = false;
  GrowthCheck growth;
};

// Smallest admissible branching factor: the least integer r with
// r >= 2^{1/q}, bumped past the degenerate boundary r^q = 2 (at which the
// growth series cannot converge for any non-vanishing f).
int default_r(double q);

struct CertificateConstants {
  double M0, D1, D2, D3;
};
// Pure arithmetic of the constant formulas (no convergence requirement).
CertificateConstants certificate_constants(const MomentEnvelope& env,
                                           double C2, int r,
                                           CertFlavor flavor);

// Full certificate; throws std::runtime_error if the growth series for
// C3 = D2 cannot be certified.
ChainingCertificate build_certificate(const MomentEnvelope& env,
                                      const TruncationEnvelope& trunc, int r,
                                      CertFlavor flavor);

// K c^{1-1/q} k^{p/q}, the certified bound on ||TV^c||_k.
double moment_bound(const ChainingCertificate& cert, const MomentEnvelope& env,
                    double k, double c);

struct TailBound {
  double threshold = 0.0;    // e K u c^{1-1/q}
  double probability = 0.0;  // exp(-u^{q/p})
};
// Requires u >= 1.
TailBound tail_bound(const ChainingCertificate& cert, const MomentEnvelope& env,
                     double u, double c);

// Envelope for fractional Brownian motion with Hurst exponent H:
// C1 = max_{k=1..256} ||N(0,1)||_k / sqrt(k)  (attained at k = 1), p = 1/2,
// q = H.
MomentEnvelope fbm_envelope(double hurst);

}  // namespace truncvar
