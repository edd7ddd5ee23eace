#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. None of these call into the library's numerical routines.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

namespace oracle {

/// Residuals of the reparameterized model with an explicit loop:
///   e_t = X_t - X_{t-1} - phi0 - (phi10 + phi11 X_{t-1}) I(X_{t-1} <= r)
///         + theta e_{t-1},  e_0 = 0.
inline std::vector<double> residuals(const std::vector<double>& x, double phi0,
                                     double theta, double phi10, double phi11,
                                     double r) {
  std::vector<double> e(x.size() - 1);
  double prev = 0.0;
  for (std::size_t t = 1; t < x.size(); ++t) {
    const double ind = x[t - 1] <= r ? 1.0 : 0.0;
    prev = x[t] - x[t - 1] - phi0 - (phi10 + phi11 * x[t - 1]) * ind + theta * prev;
    e[t - 1] = prev;
  }
  return e;
}

/// LM statistic at r from central finite-difference residual derivatives and
/// a brute-force 5x5 information matrix in the order
/// (phi0, theta, sigma2, phi10, phi11). The psi_2 block of the full inverse
/// is the inverse Schur complement. nullopt when the matrix is numerically
/// singular.
inline std::optional<double> lm_stat(const std::vector<double>& x, double phi0,
                                     double theta, double sigma2, double r,
                                     double step = 1e-6) {
  const std::size_t n = x.size() - 1;
  const std::vector<double> e = residuals(x, phi0, theta, 0.0, 0.0, r);
  std::vector<std::vector<double>> d(4, std::vector<double>(n));
  for (int k = 0; k < 4; ++k) {
    double p[4] = {phi0, theta, 0.0, 0.0};
    double m[4] = {phi0, theta, 0.0, 0.0};
    p[k] += step;
    m[k] -= step;
    const auto ep = residuals(x, p[0], p[1], p[2], p[3], r);
    const auto em = residuals(x, m[0], m[1], m[2], m[3], r);
    for (std::size_t t = 0; t < n; ++t) d[k][t] = (ep[t] - em[t]) / (2.0 * step);
  }
  // Map derivative index to position in the 5x5 ordering.
  const int pos[4] = {0, 1, 3, 4};
  Eigen::Matrix<double, 5, 5> info = Eigen::Matrix<double, 5, 5>::Zero();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < n; ++t) s += d[i][t] * d[j][t];
      info(pos[i], pos[j]) = s / sigma2;
    }
  info(2, 2) = static_cast<double>(n) / (2.0 * sigma2 * sigma2);
  Eigen::Vector2d g = Eigen::Vector2d::Zero();
  for (std::size_t t = 0; t < n; ++t) {
    g(0) -= e[t] * d[2][t] / sigma2;
    g(1) -= e[t] * d[3][t] / sigma2;
  }
  Eigen::FullPivLU<Eigen::Matrix<double, 5, 5>> lu(info);
  if (lu.rcond() < 1e-14) return std::nullopt;
  const Eigen::Matrix<double, 5, 5> inv = lu.inverse();
  return g.dot(inv.bottomRightCorner<2, 2>() * g);
}

enum class Regime { ergodic, null_recurrent, transient };

/// Long-run classification of the constrained model, condition by condition.
inline Regime classify(double phi10, double phi11, double phi20) {
  const bool c1 = phi20 < 0 && phi11 < 1;
  const bool c2 = phi20 < 0 && phi11 == 1 && phi10 > 0;
  if (c1 || c2) return Regime::ergodic;
  const bool c3 = phi11 == 1 && phi20 == 0 && phi10 >= 0;
  const bool c4 = phi11 == 1 && phi20 < 0 && phi10 == 0;
  const bool c5 = phi11 < 1 && phi20 == 0;
  if (c3 || c4 || c5) return Regime::null_recurrent;
  return Regime::transient;
}

inline double phi(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Mass of pi(x) = exp[-{(x-h)^2 I(x<=0) + (x+h)^2 I(x>0)}/2] / k on [lo, hi],
/// integrated in closed form.
inline double density_mass(double lo, double hi, double h) {
  const double k = 2.0 * std::sqrt(2.0 * std::numbers::pi) * phi(-h);
  const double c = std::sqrt(2.0 * std::numbers::pi) / k;
  double m = 0.0;
  if (lo < 0.0) m += c * (phi(std::min(hi, 0.0) - h) - phi(lo - h));
  if (hi > 0.0) m += c * (phi(-std::max(lo, 0.0) - h) - phi(-hi - h));
  return m;
}

/// Total-variation distance between the occupation histogram of `samples`
/// and pi(. ; h): `bins` equal cells on [-width, width] plus two tail cells.
template <typename Range>
double occupation_tv(const Range& samples, double h, double width, int bins) {
  std::vector<double> count(bins + 2, 0.0);
  double total = 0.0;
  for (double v : samples) {
    int b;
    if (v < -width) b = 0;
    else if (v >= width) b = bins + 1;
    else b = 1 + std::min(bins - 1, static_cast<int>((v + width) / (2.0 * width) * bins));
    count[b] += 1.0;
    total += 1.0;
  }
  double tv = 0.0;
  const double w = 2.0 * width / bins;
  tv += std::abs(count[0] / total - density_mass(-1e9, -width, h));
  tv += std::abs(count[bins + 1] / total - density_mass(width, 1e9, h));
  for (int b = 0; b < bins; ++b) {
    const double lo = -width + b * w;
    tv += std::abs(count[b + 1] / total - density_mass(lo, lo + w, h));
  }
  return 0.5 * tv;
}

}  // namespace oracle
