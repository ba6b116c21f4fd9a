#include "dispersion/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace dispersion {

namespace {

inline double at_or_zero(const Pmf& p, std::size_t n) {
  return n < p.size() ? p[n] : 0.0;
}

}  // namespace

double ell1_dist(const Pmf& p, const Pmf& q) {
  std::size_t m = std::max(p.size(), q.size());
  double s = 0.0;
  for (std::size_t n = 0; n < m; ++n) {
    s += std::abs(at_or_zero(p, n) - at_or_zero(q, n));
  }
  return s;
}

double ell2_dist(const Pmf& p, const Pmf& q) {
  std::size_t m = std::max(p.size(), q.size());
  double s = 0.0;
  for (std::size_t n = 0; n < m; ++n) {
    double d = at_or_zero(p, n) - at_or_zero(q, n);
    s += d * d;
  }
  return std::sqrt(s);
}

double weighted_s_norm(std::span<const double> w) {
  double s = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) {
    s += (1.0 + static_cast<double>(n)) * std::abs(w[n]);
  }
  return s;
}

double weighted_s_norm(const Pmf& p) { return weighted_s_norm(p.span()); }

double wasserstein1(const Pmf& p, const Pmf& q) {
  std::size_t m = std::max(p.size(), q.size());
  double cdf_diff = 0.0;
  double s = 0.0;
  for (std::size_t n = 0; n + 1 < m; ++n) {
    cdf_diff += at_or_zero(p, n) - at_or_zero(q, n);
    s += std::abs(cdf_diff);
  }
  return s;
}

RateFit fit_decay(std::span<const double> times,
                  std::span<const double> values, double t_lo, double t_hi,
                  DecayModel model) {
  if (times.size() != values.size()) {
    throw WindowTooSmall("times and values differ in length");
  }
  if (!(t_lo < t_hi)) throw WindowTooSmall("empty window");

  constexpr double kFloor = 1e-13;  // 100x the 1e-15 precision scale
  std::vector<double> ts, ys;
  int in_window = 0, floored = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t_lo || times[i] > t_hi) continue;
    ++in_window;
    if (!(values[i] >= kFloor)) {
      ++floored;
      continue;
    }
    ts.push_back(times[i]);
    ys.push_back(std::log(values[i]));
  }
  if (in_window < 8) throw WindowTooSmall("fewer than 8 samples in window");
  if (static_cast<int>(ts.size()) < 8) {
    throw AllFloored("series is at the precision floor inside the window");
  }

  const int k = model == DecayModel::PureExponential ? 2 : 3;
  const std::size_t n = ts.size();

  // Centered regressors keep the normal equations well conditioned.
  double t_mean = 0.0;
  for (double t : ts) t_mean += t;
  t_mean /= static_cast<double>(n);

  auto regressor = [&](std::size_t i, int j) -> double {
    if (j == 0) return 1.0;
    if (j == 1) return ts[i] - t_mean;
    double br = std::sqrt(1.0 + ts[i] * ts[i]);
    return std::log(br);
  };

  std::array<std::array<double, 3>, 3> ata{};
  std::array<double, 3> aty{};
  for (std::size_t i = 0; i < n; ++i) {
    for (int r = 0; r < k; ++r) {
      double xr = regressor(i, r);
      aty[r] += xr * ys[i];
      for (int c = 0; c < k; ++c) ata[r][c] += xr * regressor(i, c);
    }
  }

  // Gaussian elimination with partial pivoting on the k x k system.
  std::array<double, 3> beta{};
  {
    std::array<std::array<double, 4>, 3> m{};
    for (int r = 0; r < k; ++r) {
      for (int c = 0; c < k; ++c) m[r][c] = ata[r][c];
      m[r][k] = aty[r];
    }
    for (int col = 0; col < k; ++col) {
      int piv = col;
      for (int r = col + 1; r < k; ++r) {
        if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
      }
      std::swap(m[col], m[piv]);
      for (int r = col + 1; r < k; ++r) {
        double f = m[r][col] / m[col][col];
        for (int c = col; c <= k; ++c) m[r][c] -= f * m[col][c];
      }
    }
    for (int r = k - 1; r >= 0; --r) {
      double acc = m[r][k];
      for (int c = r + 1; c < k; ++c) acc -= m[r][c] * beta[c];
      beta[r] = acc / m[r][r];
    }
  }

  RateFit fit;
  fit.model = model;
  fit.rate = -beta[1];
  fit.power = k == 3 ? beta[2] : 0.0;
  fit.log_prefactor = beta[0] + beta[1] * t_mean;  // undo centering
  fit.t_lo = t_lo;
  fit.t_hi = t_hi;
  fit.n_used = static_cast<int>(n);

  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double pred = beta[0];
    for (int j = 1; j < k; ++j) pred += beta[j] * regressor(i, j);
    double r = ys[i] - pred;
    ss += r * r;
  }
  fit.rmse = std::sqrt(ss / static_cast<double>(n));
  return fit;
}

}  // namespace dispersion
