#include "dispersion/equilibria.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace dispersion {

namespace {

constexpr double kInvE = 0.36787944117144233;  // 1/e

double halley_refine(double w, double x) {
  for (int it = 0; it < 50; ++it) {
    double ew = std::exp(w);
    double f = w * ew - x;
    double fp = ew * (1.0 + w);
    double fpp = ew * (2.0 + w);
    double denom = fp - f * fpp / (2.0 * fp);
    double step = f / denom;
    double next = w - step;
    if (next < -1.0) next = -1.0;  // W0 never drops below -1
    if (std::abs(next - w) <= 1e-16 * (1.0 + std::abs(next))) return next;
    w = next;
  }
  return w;
}

}  // namespace

double lambert_w0(double x) {
  if (x < -kInvE - 1e-12) {
    throw OutOfDomain("lambert_w0: x = " + std::to_string(x) +
                      " below branch point -1/e");
  }
  if (x < -kInvE) x = -kInvE;
  if (x == 0.0) return 0.0;

  double w;
  if (x < -0.25) {
    // Branch-point series in p = sqrt(2 (e x + 1)); the curvature at the
    // branch point defeats a plain Newton start.
    double p = std::sqrt(2.0 * (std::exp(1.0) * x + 1.0));
    w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
    if (p < 1e-7) return w;
  } else if (x >= std::exp(1.0)) {
    double l1 = std::log(x);
    double l2 = std::log(l1);
    w = l1 - l2 + l2 / l1;
  } else if (x < 0.5) {
    w = x * (1.0 - x);  // two-term Taylor at the origin
  } else {
    w = std::log1p(x);  // Halley draws this in from above within a few steps
  }
  return halley_refine(w, x);
}

double nu_of_mu(double mu) {
  if (!(mu > 1.0)) {
    throw OutOfDomain("nu_of_mu: requires mu > 1, got " + std::to_string(mu));
  }
  return mu + lambert_w0(-mu * std::exp(-mu));
}

Equilibrium bernoulli_equilibrium(double mu, int n_max) {
  if (!(mu > 0.0) || mu > 1.0) {
    throw OutOfDomain("bernoulli_equilibrium: requires 0 < mu <= 1");
  }
  if (n_max < 1) throw OutOfDomain("n_max must be >= 1");
  std::vector<double> w(static_cast<std::size_t>(n_max) + 1, 0.0);
  w[0] = 1.0 - mu;
  w[1] = mu;
  return Equilibrium{EquilibriumKind::Bernoulli, Pmf::unchecked(std::move(w)),
                     mu, std::numeric_limits<double>::quiet_NaN()};
}

double ztp_tail_bound(double nu, int n) {
  // Chernoff bound for the Poisson tail, divided by the zero-truncation
  // normalizer: sum_{k > n} p_k <= (e nu / n)^n / (e^nu - 1).
  if (n <= nu) return 1.0;
  double log_tail = n * (1.0 + std::log(nu) - std::log(static_cast<double>(n)));
  return std::exp(log_tail) / std::expm1(nu);
}

Equilibrium ztp_equilibrium(double mu, int n_max) {
  if (!(mu > 1.0)) {
    throw OutOfDomain("ztp_equilibrium: requires mu > 1");
  }
  if (n_max < 1) throw OutOfDomain("n_max must be >= 1");
  double nu = nu_of_mu(mu);
  if (ztp_tail_bound(nu, n_max) >= 1e-12) {
    throw TruncationTooSmall("ztp_equilibrium: tail mass beyond n_max = " +
                             std::to_string(n_max) + " exceeds 1e-12");
  }
  std::vector<double> w(static_cast<std::size_t>(n_max) + 1, 0.0);
  w[1] = nu / std::expm1(nu);
  for (int n = 1; n < n_max; ++n) {
    w[n + 1] = w[n] * nu / (n + 1);
  }
  return Equilibrium{EquilibriumKind::ZeroTruncatedPoisson,
                     Pmf::unchecked(std::move(w)), mu, nu};
}

}  // namespace dispersion
