#ifndef DISPERSION_METRICS_HPP_
#define DISPERSION_METRICS_HPP_

#include <span>
#include <vector>

#include "dispersion/pmf.hpp"

namespace dispersion {

/// sum |p_n - q_n|; shorter operand is zero-padded.
double ell1_dist(const Pmf& p, const Pmf& q);

/// sqrt(sum (p_n - q_n)^2); shorter operand is zero-padded.
double ell2_dist(const Pmf& p, const Pmf& q);

/// Weighted norm sum (1 + n) |w_n|. Accepts any signed sequence, so it can
/// be applied to generator output and to differences.
double weighted_s_norm(std::span<const double> w);
double weighted_s_norm(const Pmf& p);

/// 1-Wasserstein distance on the integers: sum_k |F_p(k) - F_q(k)| with F
/// the CDF. In one dimension with cost |m - n| this equals the
/// optimal-transport value.
double wasserstein1(const Pmf& p, const Pmf& q);

enum class DecayModel { PureExponential, ExponentialTimesPower };

/// Fitted decay model for a positive time series:
///   PureExponential:       log y = log_prefactor - rate * t
///   ExponentialTimesPower: log y = log_prefactor - rate * t
///                                  + power * log sqrt(1 + t^2)
struct RateFit {
  double rate = 0.0;
  double log_prefactor = 0.0;
  double power = 0.0;  // ExponentialTimesPower only
  double rmse = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  int n_used = 0;
  DecayModel model = DecayModel::PureExponential;
};

/// Ordinary least squares on logs over the window [t_lo, t_hi]. Points with
/// value below 1e-13 (the precision floor, 100x machine epsilon scale) are
/// excluded. Throws WindowTooSmall when fewer than 8 points fall in the
/// window and AllFloored when flooring is what left fewer than 8.
RateFit fit_decay(std::span<const double> times,
                  std::span<const double> values, double t_lo, double t_hi,
                  DecayModel model = DecayModel::PureExponential);

}  // namespace dispersion

#endif  // DISPERSION_METRICS_HPP_
