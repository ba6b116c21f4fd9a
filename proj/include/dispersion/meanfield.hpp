#ifndef DISPERSION_MEANFIELD_HPP_
#define DISPERSION_MEANFIELD_HPP_

#include <span>
#include <vector>

#include "dispersion/pmf.hpp"

namespace dispersion {

/// Time-stamped ODE solution. States are recorded every `record_every`
/// steps plus at the final time; a_series holds the active-particle count
/// and energy_series the Lyapunov energy at each sample.
struct Trajectory {
  std::vector<double> times;
  std::vector<Pmf> states;
  std::vector<double> a_series;
  std::vector<double> energy_series;
  double mu = 0.0;

  std::size_t size() const { return times.size(); }

  /// Grid spacing; throws NonUniformSampling unless the times are uniform
  /// to 1e-9 relative.
  double uniform_spacing() const;
};

/// Right-hand side of the truncated evolution, dq/dt = F[q].
///
/// Interior rows follow
///   F[q]_0 = -A q_0
///   F[q]_1 = 2 q_2 - A (q_1 - q_0)
///   F[q]_n = (n+1) q_{n+1} - n q_n - A (q_n - q_{n-1})
/// with advective rate A = (mu - q_1) / (1 - q_{n_max}). The boundary row
/// drops the influx from above and the advective outflux past n_max:
///   F[q]_{n_max} = -n_max q_{n_max} + A q_{n_max - 1}.
///
/// The 1/(1 - q_{n_max}) factor redistributes the advective flux that a
/// plain cut at the boundary would lose, so that sum F = 0 holds for any q
/// and sum n F = 0 holds exactly whenever q has unit mass and mean mu. When
/// q_{n_max} = 0 the rows coincide with the untruncated generator.
std::vector<double> generator(const Pmf& q, double mu);

/// In-place variant used by the integrator. q and out must have equal size.
void generator_into(std::span<const double> q, double mu,
                    std::span<double> out);

/// One classical Runge-Kutta 4 step of q' = F[q].
///
/// Post-step weights below -1e-8 signal a step size too large for the stiff
/// drift (use dt <= 0.5 / n_max) and raise StepUnstable. Smaller negative
/// round-off is clamped to zero, and the result is renormalized only when
/// the mass has drifted by more than 1e-13.
Pmf rk4_step(const Pmf& q, double mu, double dt);

/// Integrates from p0 up to t_end, recording every `record_every` steps and
/// the final time. Requires moment(p0, 1) = mu to 1e-10 (MeanMismatch
/// otherwise; mu enters the generator itself, and a mean offset changes the
/// observed decay rate). StepUnstable propagates with the offending time.
Trajectory solve(const Pmf& p0, double mu, double t_end, double dt,
                 int record_every = 1);

/// Lyapunov energy E[q] = sum n^2 q_n - mu. Nonnegative on the constraint
/// set, zero exactly at the Bernoulli equilibrium.
double energy(const Pmf& q, double mu);

/// Residuals |centered-difference dE/dt - (-2 E + 2 mu (mu - p_1))| at the
/// interior samples of a uniformly spaced trajectory. Second-order in the
/// sample spacing.
std::vector<double> energy_derivative_residual(const Trajectory& traj,
                                               double mu);

}  // namespace dispersion

#endif  // DISPERSION_MEANFIELD_HPP_
