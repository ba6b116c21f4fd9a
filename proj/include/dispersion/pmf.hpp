#ifndef DISPERSION_PMF_HPP_
#define DISPERSION_PMF_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dispersion/errors.hpp"

namespace dispersion {

/// Truncated probability mass function on {0, 1, ..., n_max}.
///
/// Weights are stored densely from index 0. Instances are immutable after
/// construction and safe to share across threads. The infinite sequences of
/// the underlying model are represented by truncation; n_max defaults to 100
/// elsewhere in the library.
class Pmf {
 public:
  /// Number of stored weights minus one (the truncation index). Always >= 1.
  std::size_t n_max() const { return weights_.size() - 1; }

  double operator[](std::size_t n) const { return weights_[n]; }

  const std::vector<double>& weights() const { return weights_; }
  std::span<const double> span() const { return weights_; }

  std::size_t size() const { return weights_.size(); }

  /// Sum of all weights. By construction within tol_mass of 1.
  double mass() const;

  /// Builds a Pmf from weights that are already known to satisfy the
  /// invariants (nonnegative, mass within 1e-9 of one). Used on hot paths
  /// where the caller has just enforced them; no clamping is applied.
  static Pmf unchecked(std::vector<double> weights);

  friend Pmf make_pmf(std::vector<double>, bool, double);

 private:
  explicit Pmf(std::vector<double> w) : weights_(std::move(w)) {}
  std::vector<double> weights_;
};

/// Validates and constructs a Pmf.
///
/// Entries with magnitude below 1e-15 are clamped to zero first (this absorbs
/// integrator round-off near absorbing states). Throws NegativeWeight if any
/// entry is below -1e-15, ZeroMass if all entries vanish, and NotNormalized
/// if `normalize` is unset and |sum - 1| > tol_mass. With `normalize` set the
/// weights are divided by their sum and the residual is absorbed into the
/// largest entry so the sum is exactly 1.0.
Pmf make_pmf(std::vector<double> weights, bool normalize,
             double tol_mass = 1e-9);

/// k-th raw moment: sum_n n^k p_n. moment(p, 0) is the mass.
double moment(const Pmf& p, int k);

/// Active particles per site: sum_{n>=2} n p_n. Equals moment(p,1) - p_1.
double active_particles(const Pmf& p);

/// Model parameters shared by the solvers and the CLI. nu is present exactly
/// when mu > 1 and satisfies nu = mu + W0(-mu e^-mu) to tol_fixedpoint.
struct ModelParams {
  double mu = 0.0;
  std::optional<double> nu;
  int n_max = 100;
  double dt = 0.01;
  double tol_mass = 1e-9;
  double tol_fixedpoint = 1e-12;
};

ModelParams make_model_params(double mu, int n_max = 100, double dt = 0.01,
                              double tol_mass = 1e-9,
                              double tol_fixedpoint = 1e-12);

}  // namespace dispersion

#endif  // DISPERSION_PMF_HPP_
