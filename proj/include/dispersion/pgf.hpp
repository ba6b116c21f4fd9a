#ifndef DISPERSION_PGF_HPP_
#define DISPERSION_PGF_HPP_

#include <complex>
#include <vector>

#include "dispersion/meanfield.hpp"

namespace dispersion {

/// Auxiliary integral data derived from a trajectory on its uniform grid:
///   v(t)     = exp(int_0^t e^{s-t} a(s) ds),   v(0) = 1
///   H(t)     = int_0^t e^s a(s) ds = e^t log v(t)
///   log_v_integral(t) = int_0^t log v(s) ds   (cumulative trapezoid)
struct AuxiliarySolution {
  std::vector<double> times;
  std::vector<double> v_series;
  std::vector<double> h_series;
  std::vector<double> log_v_integral;
};

/// Evaluates the probability generating function sum_n p_n z^n by Horner's
/// scheme. Requires |z| <= 1 + 1e-12.
std::complex<double> pgf_eval(const Pmf& q, std::complex<double> z);

/// Builds the auxiliary solution from a trajectory.
///
/// The integral I(t) = int_0^t e^{s-t} a(s) ds is advanced one step at a
/// time through I(t+d) = e^{-d} I(t) + int over the step, where the step
/// integral treats the exponential kernel exactly and interpolates a
/// linearly. This keeps the O(d^2) error uniform in t. Throws
/// NonUniformSampling on a non-uniform grid.
AuxiliarySolution v_from_trajectory(const Trajectory& traj);

/// Pointwise residual of the integral equation
///   v(t) = 1 - f0(t) + f0(0) e^{-int_0^t log v}
///          + mu int_0^t v(s)^{e^{s-t}} e^{s-t} ds,
/// with f0(t) = G(0, 1 - e^{-t}), all integrals by trapezoid on the grid.
std::vector<double> volterra_residual(const Trajectory& traj,
                                      const AuxiliarySolution& aux);

/// Characteristic-line solution of the generating-function PDE:
///   G(t, 1-z) = 1 + (G(0, 1 - z e^{-t}) - 1
///               - mu z int_0^t v(s)^{z e^{s-t}} e^{s-t} ds) v(t)^{-z}.
///
/// Requires |1 - z| <= 1 (OutOfDomain otherwise) and t on the aux grid
/// (OffGrid otherwise). The quadrature runs on the damped integrand
/// exp(z (e^{s-t} log v(s) - log v(t))) e^{s-t}, whose modulus never
/// exceeds one, using composite Simpson on the grid.
std::complex<double> explicit_pgf(double t, std::complex<double> z,
                                  const Pmf& p0,
                                  const AuxiliarySolution& aux);

/// phi(x) = mu (x - 1) / log x with the removable singularity phi(1) = mu.
/// Near x = 1 the series mu (1 + w/2 + w^2/6), w = log x, keeps full
/// precision. Strictly increasing; its fixed point in [e^{mu-1}, e^mu] is
/// e^{nu}. Throws OutOfDomain for x <= 0.
double phi(double x, double mu);

/// phi_c(x) = mu int_0^inf x^{e^{-s}} e^{-(1-c)s} ds for x >= 1 and
/// 0 <= c < 1. Adaptive Simpson to 1e-12 on [0, s*] where
/// s* = log(log x / 1e-14); past s* the integrand is exponential to within
/// 1e-14 and the tail is added in closed form. phi_c(1) = mu / (1 - c).
double phi_c(double x, double mu, double c);

}  // namespace dispersion

#endif  // DISPERSION_PGF_HPP_
