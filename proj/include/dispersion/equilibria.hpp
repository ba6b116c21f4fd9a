#ifndef DISPERSION_EQUILIBRIA_HPP_
#define DISPERSION_EQUILIBRIA_HPP_

#include "dispersion/pmf.hpp"

namespace dispersion {

/// Principal branch of the Lambert W function: the solution y of y e^y = x
/// with y >= -1, defined for x >= -1/e.
///
/// Halley iteration with a branch-point series start for x < -0.25 and a
/// log-based asymptotic start for large x. Residual |y e^y - x| stays below
/// 1e-13 * max(1, |x|). Throws OutOfDomain for x < -1/e - 1e-12.
double lambert_w0(double x);

/// nu = mu + W0(-mu e^-mu) for mu > 1. Satisfies e^nu = mu (e^nu - 1) / nu.
/// Throws OutOfDomain for mu <= 1 where nu degenerates to zero.
double nu_of_mu(double mu);

enum class EquilibriumKind { Bernoulli, ZeroTruncatedPoisson };

struct Equilibrium {
  EquilibriumKind kind;
  Pmf pmf;
  double mu;
  double nu;  // NaN for Bernoulli
};

/// {1 - mu, mu, 0, ...} for 0 < mu <= 1. At mu = 1 this is the Dirac mass
/// at one.
Equilibrium bernoulli_equilibrium(double mu, int n_max);

/// Zero-truncated Poisson with parameter nu(mu) for mu > 1:
/// p_0 = 0, p_n = nu^n / (n! (e^nu - 1)).
///
/// Terms are generated by the multiplicative recurrence starting from
/// p_1 = nu / (e^nu - 1), so n_max can be large without factorial overflow.
/// Throws TruncationTooSmall when the Chernoff bound on the dropped tail
/// mass exceeds 1e-12.
Equilibrium ztp_equilibrium(double mu, int n_max);

/// Chernoff bound on the zero-truncated Poisson tail mass beyond index n.
double ztp_tail_bound(double nu, int n);

}  // namespace dispersion

#endif  // DISPERSION_EQUILIBRIA_HPP_
