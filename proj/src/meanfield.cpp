#include "dispersion/meanfield.hpp"

#include <cmath>
#include <string>

namespace dispersion {

double Trajectory::uniform_spacing() const {
  if (times.size() < 2) {
    throw NonUniformSampling("trajectory has fewer than two samples");
  }
  double d = times[1] - times[0];
  for (std::size_t i = 1; i + 1 < times.size(); ++i) {
    double di = times[i + 1] - times[i];
    if (std::abs(di - d) > 1e-9 * std::max(1.0, std::abs(d))) {
      throw NonUniformSampling("sample spacing varies at index " +
                               std::to_string(i));
    }
  }
  return d;
}

void generator_into(std::span<const double> q, double mu,
                    std::span<double> out) {
  const std::size_t n = q.size() - 1;
  const double a = (mu - q[1]) / (1.0 - q[n]);
  out[0] = -a * q[0];
  out[1] = 2.0 * q[2] - a * (q[1] - q[0]);
  for (std::size_t k = 2; k < n; ++k) {
    out[k] = static_cast<double>(k + 1) * q[k + 1] -
             static_cast<double>(k) * q[k] - a * (q[k] - q[k - 1]);
  }
  out[n] = -static_cast<double>(n) * q[n] + a * q[n - 1];
}

std::vector<double> generator(const Pmf& q, double mu) {
  std::vector<double> out(q.size());
  generator_into(q.span(), mu, out);
  return out;
}

namespace {

// Shared RK4 kernel operating on raw weights; the caller owns validation.
void rk4_step_raw(std::vector<double>& q, double mu, double dt,
                  std::vector<double>& k1, std::vector<double>& k2,
                  std::vector<double>& k3, std::vector<double>& k4,
                  std::vector<double>& tmp) {
  const std::size_t m = q.size();
  generator_into(q, mu, k1);
  for (std::size_t i = 0; i < m; ++i) tmp[i] = q[i] + 0.5 * dt * k1[i];
  generator_into(tmp, mu, k2);
  for (std::size_t i = 0; i < m; ++i) tmp[i] = q[i] + 0.5 * dt * k2[i];
  generator_into(tmp, mu, k3);
  for (std::size_t i = 0; i < m; ++i) tmp[i] = q[i] + dt * k3[i];
  generator_into(tmp, mu, k4);
  for (std::size_t i = 0; i < m; ++i) {
    q[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
}

// Clamp post-step round-off and renormalize only on real drift, so that a
// silent conservation bug cannot hide behind routine renormalization.
void revalidate_step(std::vector<double>& q, double t) {
  double s = 0.0;
  for (double& w : q) {
    if (w < 0.0) {
      if (w < -1e-8) {
        throw StepUnstable(
            "negative weight " + std::to_string(w) + " at t = " +
            std::to_string(t) + "; reduce dt to <= 0.5 / n_max");
      }
      w = 0.0;
    }
    s += w;
  }
  if (std::abs(s - 1.0) > 1e-13) {
    for (double& w : q) w /= s;
  }
}

}  // namespace

Pmf rk4_step(const Pmf& q, double mu, double dt) {
  if (!(dt > 0.0)) throw OutOfDomain("rk4_step: dt must be positive");
  std::vector<double> w = q.weights();
  const std::size_t m = w.size();
  std::vector<double> k1(m), k2(m), k3(m), k4(m), tmp(m);
  rk4_step_raw(w, mu, dt, k1, k2, k3, k4, tmp);
  revalidate_step(w, dt);
  return Pmf::unchecked(std::move(w));
}

Trajectory solve(const Pmf& p0, double mu, double t_end, double dt,
                 int record_every) {
  if (!(t_end > 0.0)) throw OutOfDomain("solve: t_end must be positive");
  if (!(dt > 0.0)) throw OutOfDomain("solve: dt must be positive");
  if (record_every < 1) throw OutOfDomain("solve: record_every must be >= 1");
  double mean0 = moment(p0, 1);
  if (std::abs(mean0 - mu) > 1e-10) {
    throw MeanMismatch("solve: initial mean " + std::to_string(mean0) +
                       " differs from mu = " + std::to_string(mu));
  }
  const long long nsteps = std::llround(t_end / dt);
  if (nsteps < 1 || std::abs(nsteps * dt - t_end) > 1e-9 * std::max(1.0, t_end)) {
    throw OutOfDomain("solve: t_end must be an integer multiple of dt");
  }

  Trajectory traj;
  traj.mu = mu;
  auto record = [&](double t, const std::vector<double>& w) {
    Pmf p = Pmf::unchecked(w);
    traj.times.push_back(t);
    traj.a_series.push_back(active_particles(p));
    traj.energy_series.push_back(energy(p, mu));
    traj.states.push_back(std::move(p));
  };

  std::vector<double> w = p0.weights();
  const std::size_t m = w.size();
  std::vector<double> k1(m), k2(m), k3(m), k4(m), tmp(m);
  record(0.0, w);
  for (long long i = 1; i <= nsteps; ++i) {
    rk4_step_raw(w, mu, dt, k1, k2, k3, k4, tmp);
    try {
      revalidate_step(w, i * dt);
    } catch (const StepUnstable&) {
      throw;
    }
    if (i % record_every == 0 || i == nsteps) {
      record(i * dt, w);
    }
  }
  return traj;
}

double energy(const Pmf& q, double mu) {
  double s = 0.0;
  for (std::size_t n = 1; n < q.size(); ++n) {
    s += static_cast<double>(n) * static_cast<double>(n) * q[n];
  }
  return s - mu;
}

std::vector<double> energy_derivative_residual(const Trajectory& traj,
                                               double mu) {
  if (traj.size() < 3) {
    throw NonUniformSampling("need at least three samples");
  }
  const double d = traj.uniform_spacing();
  std::vector<double> res;
  res.reserve(traj.size() - 2);
  for (std::size_t i = 1; i + 1 < traj.size(); ++i) {
    double dEdt =
        (traj.energy_series[i + 1] - traj.energy_series[i - 1]) / (2.0 * d);
    double p1 = traj.states[i][1];
    double rhs = -2.0 * traj.energy_series[i] + 2.0 * mu * (mu - p1);
    res.push_back(std::abs(dEdt - rhs));
  }
  return res;
}

}  // namespace dispersion
