#include "dispersion/pgf.hpp"

#include <cmath>
#include <string>

namespace dispersion {

namespace {

using cplx = std::complex<double>;

// Composite Simpson over m uniform intervals of width d. Odd interval
// counts close with the 3/8 rule on the last three; a single interval
// falls back to the trapezoid.
cplx integrate_uniform(std::span<const cplx> g, double d) {
  const std::size_t m = g.size() - 1;
  if (m == 0) return 0.0;
  if (m == 1) return 0.5 * d * (g[0] + g[1]);
  cplx s = 0.0;
  std::size_t even_end = (m % 2 == 0) ? m : m - 3;
  if (m % 2 == 1 && m < 3) even_end = 0;
  if (even_end >= 2) {
    cplx acc = g[0] + g[even_end];
    for (std::size_t j = 1; j < even_end; j += 2) acc += 4.0 * g[j];
    for (std::size_t j = 2; j < even_end; j += 2) acc += 2.0 * g[j];
    s += acc * (d / 3.0);
  }
  if (m % 2 == 1) {
    s += (g[m - 3] + 3.0 * g[m - 2] + 3.0 * g[m - 1] + g[m]) * (3.0 * d / 8.0);
  }
  return s;
}

std::size_t grid_index(const std::vector<double>& times, double t) {
  if (times.size() < 2) throw OffGrid("auxiliary grid has no spacing");
  double d = times[1] - times[0];
  long long i = std::llround((t - times[0]) / d);
  if (i < 0 || i >= static_cast<long long>(times.size()) ||
      std::abs(times[static_cast<std::size_t>(i)] - t) >
          1e-9 * std::max(1.0, std::abs(t))) {
    throw OffGrid("t = " + std::to_string(t) + " is not on the grid");
  }
  return static_cast<std::size_t>(i);
}

}  // namespace

std::complex<double> pgf_eval(const Pmf& q, std::complex<double> z) {
  if (std::abs(z) > 1.0 + 1e-12) {
    throw OutOfDomain("pgf_eval: |z| exceeds 1");
  }
  cplx acc = 0.0;
  for (std::size_t n = q.size(); n-- > 0;) {
    acc = acc * z + q[n];
  }
  return acc;
}

AuxiliarySolution v_from_trajectory(const Trajectory& traj) {
  const double d = traj.uniform_spacing();
  const std::size_t n = traj.size();

  AuxiliarySolution aux;
  aux.times = traj.times;
  aux.v_series.resize(n);
  aux.h_series.resize(n);
  aux.log_v_integral.resize(n);

  // I(t) = int_0^t e^{s-t} a(s) ds advanced with the exact kernel:
  //   I(t+d) = e^{-d} I(t) + a_i c1 + (a_{i+1} - a_i) c2,
  // the coefficients being the kernel integrals against 1 and (s-t_i)/d.
  const double ed = std::exp(-d);
  const double c1 = -std::expm1(-d);
  const double c2 = (d + std::expm1(-d)) / d;

  std::vector<double> logv(n);
  logv[0] = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    logv[i + 1] = ed * logv[i] + traj.a_series[i] * c1 +
                  (traj.a_series[i + 1] - traj.a_series[i]) * c2;
  }

  double cum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    aux.v_series[i] = std::exp(logv[i]);
    aux.h_series[i] = std::exp(traj.times[i]) * logv[i];
    if (i > 0) cum += 0.5 * d * (logv[i - 1] + logv[i]);
    aux.log_v_integral[i] = cum;
  }
  return aux;
}

std::vector<double> volterra_residual(const Trajectory& traj,
                                      const AuxiliarySolution& aux) {
  const double d = traj.uniform_spacing();
  const std::size_t n = traj.size();
  const Pmf& p0 = traj.states.front();
  const double mu = traj.mu;
  const double f0_at_0 = p0[0];

  std::vector<double> res(n);
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = traj.times[i];
    double f0 = pgf_eval(p0, 1.0 - std::exp(-t)).real();
    for (std::size_t j = 0; j <= i; ++j) {
      double h = std::exp(traj.times[j] - t);
      g[j] = std::pow(aux.v_series[j], h) * h;
    }
    double integral = 0.0;
    for (std::size_t j = 1; j <= i; ++j) {
      integral += 0.5 * d * (g[j - 1] + g[j]);
    }
    double rhs = 1.0 - f0 + f0_at_0 * std::exp(-aux.log_v_integral[i]) +
                 mu * integral;
    res[i] = std::abs(aux.v_series[i] - rhs);
  }
  return res;
}

std::complex<double> explicit_pgf(double t, std::complex<double> z,
                                  const Pmf& p0,
                                  const AuxiliarySolution& aux) {
  if (std::abs(1.0 - z) > 1.0 + 1e-12) {
    throw OutOfDomain("explicit_pgf: |1 - z| exceeds 1");
  }
  const std::size_t i = grid_index(aux.times, t);
  const double d = aux.times.size() > 1 ? aux.times[1] - aux.times[0] : 0.0;

  const double log_vt = std::log(aux.v_series[i]);
  const cplx damp = std::exp(-z * log_vt);

  // Damped integrand exp(z (e^{s-t} log v(s) - log v(t))) e^{s-t}; the
  // real part of the exponent is nonpositive, so no magnitude blow-up.
  std::vector<cplx> g(i + 1);
  for (std::size_t j = 0; j <= i; ++j) {
    double h = std::exp(aux.times[j] - t);
    double log_vs = std::log(aux.v_series[j]);
    g[j] = std::exp(z * (h * log_vs - log_vt)) * h;
  }
  cplx integral = integrate_uniform(g, d);

  cplx g0 = pgf_eval(p0, 1.0 - z * std::exp(-t));
  double mu = 0.0;
  {
    // mean of p0 doubles as mu; trajectories enforce this at solve time
    for (std::size_t n = 1; n < p0.size(); ++n) {
      mu += static_cast<double>(n) * p0[n];
    }
  }
  return 1.0 + (g0 - 1.0) * damp - mu * z * integral;
}

double phi(double x, double mu) {
  if (!(x > 0.0)) throw OutOfDomain("phi: requires x > 0");
  double w = std::log(x);
  if (std::abs(w) < 1e-6) {
    // direct formula loses all digits at the removable singularity
    return mu * (1.0 + w / 2.0 + w * w / 6.0);
  }
  return mu * (x - 1.0) / w;
}

namespace {

double phi_c_integrand(double s, double log_x, double c) {
  return std::exp(std::exp(-s) * log_x - (1.0 - c) * s);
}

double adaptive_simpson(double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth, double log_x,
                        double c) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = phi_c_integrand(lm, log_x, c);
  double frm = phi_c_integrand(rm, log_x, c);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive_simpson(a, m, fa, flm, fm, left, tol / 2.0, depth - 1,
                          log_x, c) +
         adaptive_simpson(m, b, fm, frm, fb, right, tol / 2.0, depth - 1,
                          log_x, c);
}

}  // namespace

double phi_c(double x, double mu, double c) {
  if (!(x >= 1.0)) throw OutOfDomain("phi_c: requires x >= 1");
  if (!(c >= 0.0) || !(c < 1.0)) throw OutOfDomain("phi_c: requires 0 <= c < 1");

  const double log_x = std::log(x);
  // Past s* the power factor is within 1e-14 of exp(e^{-s} log x) ~ 1 and
  // the integrand is exponential; integrate the tail in closed form with
  // the first-order log x correction.
  double s_star = log_x > 1e-14 ? std::log(log_x / 1e-14) : 0.0;
  if (s_star < 0.0) s_star = 0.0;

  double head = 0.0;
  if (s_star > 0.0) {
    double fa = phi_c_integrand(0.0, log_x, c);
    double fb = phi_c_integrand(s_star, log_x, c);
    double fm = phi_c_integrand(0.5 * s_star, log_x, c);
    double whole = s_star / 6.0 * (fa + 4.0 * fm + fb);
    head = adaptive_simpson(0.0, s_star, fa, fm, fb, whole, 1e-12, 48, log_x,
                            c);
  }
  double tail = std::exp(-(1.0 - c) * s_star) / (1.0 - c) +
                log_x * std::exp(-(2.0 - c) * s_star) / (2.0 - c);
  return mu * (head + tail);
}

}  // namespace dispersion
