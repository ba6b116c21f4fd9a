#include "dispersion/pmf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dispersion/equilibria.hpp"

namespace dispersion {

namespace {

double sum_weights(const std::vector<double>& w) {
  double s = 0.0;
  for (double x : w) s += x;
  return s;
}

}  // namespace

double Pmf::mass() const { return sum_weights(weights_); }

Pmf Pmf::unchecked(std::vector<double> weights) {
  return Pmf(std::move(weights));
}

Pmf make_pmf(std::vector<double> weights, bool normalize, double tol_mass) {
  if (weights.size() < 2) weights.resize(2, 0.0);

  for (double& w : weights) {
    if (std::abs(w) < 1e-15) w = 0.0;
  }
  for (std::size_t n = 0; n < weights.size(); ++n) {
    if (weights[n] < 0.0) {
      throw NegativeWeight("weight at index " + std::to_string(n) +
                           " is negative");
    }
  }

  double s = sum_weights(weights);
  if (s <= 0.0) throw ZeroMass("all weights are zero");

  if (normalize) {
    if (s != 1.0) {
      for (double& w : weights) w /= s;
      // Absorb the rounding residual into the largest entry until the sum
      // is exactly one.
      auto largest = std::max_element(weights.begin(), weights.end());
      for (int pass = 0; pass < 5; ++pass) {
        double r = 1.0 - sum_weights(weights);
        if (r == 0.0) break;
        *largest += r;
      }
    }
  } else if (std::abs(s - 1.0) > tol_mass) {
    throw NotNormalized("mass " + std::to_string(s) + " deviates from 1 by " +
                        std::to_string(std::abs(s - 1.0)));
  }
  return Pmf::unchecked(std::move(weights));
}

double moment(const Pmf& p, int k) {
  double s = 0.0;
  for (std::size_t n = 0; n < p.size(); ++n) {
    s += std::pow(static_cast<double>(n), k) * p[n];
  }
  return s;
}

double active_particles(const Pmf& p) {
  double s = 0.0;
  for (std::size_t n = 2; n < p.size(); ++n) {
    s += static_cast<double>(n) * p[n];
  }
  return s;
}

ModelParams make_model_params(double mu, int n_max, double dt,
                              double tol_mass, double tol_fixedpoint) {
  if (!(mu > 0.0)) throw OutOfDomain("mu must be positive");
  if (n_max < 1) throw OutOfDomain("n_max must be >= 1");
  if (!(dt > 0.0)) throw OutOfDomain("dt must be positive");
  ModelParams params;
  params.mu = mu;
  params.n_max = n_max;
  params.dt = dt;
  params.tol_mass = tol_mass;
  params.tol_fixedpoint = tol_fixedpoint;
  if (mu > 1.0) {
    double nu = nu_of_mu(mu);
    double lhs = std::exp(nu);
    double rhs = mu * std::expm1(nu) / nu;
    if (std::abs(lhs - rhs) > tol_fixedpoint * std::max(1.0, lhs)) {
      throw OutOfDomain("nu fixed-point residual exceeds tolerance");
    }
    params.nu = nu;
  }
  return params;
}

}  // namespace dispersion
