#include "tarma/ima_fit.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace tarma {

Vector residuals_under_h0(const TimeSeries& series, double phi0, double theta) {
  return residuals_under_h0(series.values(), phi0, theta);
}

double ima_loglik(const TimeSeries& series, double phi0, double theta,
                  double sigma2) {
  require(sigma2 > 0.0, ErrorKind::invalid_argument, "sigma2 must be positive");
  const Vector e = residuals_under_h0(series, phi0, theta);
  const double n = static_cast<double>(e.size());
  return -0.5 * n * std::log(2.0 * std::numbers::pi * sigma2) -
         0.5 * e.squaredNorm() / sigma2;
}

namespace {

constexpr int kCoarsePoints = 200;

// With e_t = u_t + phi0 a_t, u_t = dX_t + theta u_{t-1}, a_t = -1 + theta a_{t-1},
// the residual sum of squares is quadratic in phi0.
struct Sums {
  double suu = 0.0;
  double sua = 0.0;
  double saa = 0.0;
};

Sums sums_at(const Vector& dx, double theta) {
  Sums s;
  double u = 0.0, a = 0.0;
  for (Index t = 0; t < dx.size(); ++t) {
    u = dx(t) + theta * u;
    a = -1.0 + theta * a;
    s.suu += u * u;
    s.sua += u * a;
    s.saa += a * a;
  }
  return s;
}

double profile_phi0(const Sums& s, bool fix_phi0) {
  return fix_phi0 ? 0.0 : -s.sua / s.saa;
}

double profile_rss(const Sums& s, bool fix_phi0) {
  const double rss = fix_phi0 ? s.suu : s.suu - s.sua * s.sua / s.saa;
  return std::max(rss, 0.0);
}

double rss_at(const Vector& dx, double theta, bool fix_phi0) {
  return profile_rss(sums_at(dx, theta), fix_phi0);
}

// All coarse grid points in one pass over the data.
std::array<double, kCoarsePoints> coarse_rss(const Vector& dx,
                                             const std::array<double, kCoarsePoints>& th,
                                             bool fix_phi0) {
  std::array<double, kCoarsePoints> u{}, a{}, suu{}, sua{}, saa{};
  for (Index t = 0; t < dx.size(); ++t) {
    const double d = dx(t);
    for (int k = 0; k < kCoarsePoints; ++k) {
      u[k] = d + th[k] * u[k];
      a[k] = -1.0 + th[k] * a[k];
      suu[k] += u[k] * u[k];
      sua[k] += u[k] * a[k];
      saa[k] += a[k] * a[k];
    }
  }
  std::array<double, kCoarsePoints> out{};
  for (int k = 0; k < kCoarsePoints; ++k)
    out[k] = profile_rss({suu[k], sua[k], saa[k]}, fix_phi0);
  return out;
}

// Newton step on the profiled score: d RSS / d theta = 2 sum e b, curvature
// 2 sum b~^2 with b~ the part of b orthogonal to a.
double newton_step(const Vector& dx, double theta, bool fix_phi0) {
  const Sums s = sums_at(dx, theta);
  const double phi0 = profile_phi0(s, fix_phi0);
  double e = 0.0, a = 0.0, b = 0.0;
  double seb = 0.0, sbb = 0.0, sab = 0.0, saa = 0.0;
  for (Index t = 0; t < dx.size(); ++t) {
    const double e_prev = e;
    a = -1.0 + theta * a;
    b = e_prev + theta * b;
    e = dx(t) - phi0 + theta * e_prev;
    seb += e * b;
    sbb += b * b;
    sab += a * b;
    saa += a * a;
  }
  const double curv = fix_phi0 ? sbb : sbb - sab * sab / saa;
  if (!(curv > 0.0)) return 0.0;
  return -seb / curv;
}

}  // namespace

ImaProfile profile_at(const TimeSeries& series, double theta, bool fix_phi0) {
  require(std::abs(theta) < 1.0, ErrorKind::invalid_spec, "|theta| must be < 1");
  require(series.size() >= 2, ErrorKind::too_short, "need two observations");
  const Vector dx = series.values().tail(series.steps()) -
                    series.values().head(series.steps());
  const Sums s = sums_at(dx, theta);
  return {profile_phi0(s, fix_phi0),
          profile_rss(s, fix_phi0) / static_cast<double>(dx.size())};
}

ImaFit fit_ima11(const TimeSeries& series, bool fix_phi0) {
  require(series.size() >= 20, ErrorKind::too_short,
          "IMA(1,1) fit needs at least 20 observations");
  const Index n = series.steps();
  const Vector dx = series.values().tail(n) - series.values().head(n);
  const double mean_dx = dx.mean();
  const double var_dx = (dx.array() - mean_dx).square().sum();
  const double scale = fix_phi0 ? dx.squaredNorm() : var_dx;
  require(scale > 0.0, ErrorKind::degenerate_input,
          "degenerate series: first differences have zero variance");

  std::array<double, kCoarsePoints> grid{};
  const double step = 2.0 * kThetaBound / (kCoarsePoints - 1);
  for (int k = 0; k < kCoarsePoints; ++k) grid[k] = -kThetaBound + k * step;
  grid[kCoarsePoints - 1] = kThetaBound;
  const auto coarse = coarse_rss(dx, grid, fix_phi0);
  int best = 0;
  for (int k = 1; k < kCoarsePoints; ++k)
    if (coarse[k] < coarse[best]) best = k;

  double lo = grid[std::max(best - 1, 0)];
  double hi = grid[std::min(best + 1, kCoarsePoints - 1)];
  const double bracket_lo = lo, bracket_hi = hi;
  constexpr double inv_phi = 0.6180339887498949;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = rss_at(dx, c, fix_phi0);
  double fd = rss_at(dx, d, fix_phi0);
  while (hi - lo > 1e-9) {
    if (fc <= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = rss_at(dx, c, fix_phi0);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = rss_at(dx, d, fix_phi0);
    }
  }
  double theta = 0.5 * (lo + hi);
  double f = rss_at(dx, theta, fix_phi0);
  for (const double edge : {bracket_lo, bracket_hi}) {
    const double fe = rss_at(dx, edge, fix_phi0);
    if (fe < f) {
      f = fe;
      theta = edge;
    }
  }
  // Polish on the score equation so the optimum is resolved beyond what
  // comparisons of nearly equal sums of squares can deliver.
  for (int it = 0; it < 4; ++it) {
    const double delta = newton_step(dx, theta, fix_phi0);
    const double next = theta + delta;
    if (!(std::abs(delta) < 1e-5) || next < bracket_lo || next > bracket_hi) break;
    theta = next;
    if (std::abs(delta) < 1e-15) break;
  }

  ImaFit fit;
  fit.fix_phi0 = fix_phi0;
  fit.theta_hat = theta;
  const Sums s = sums_at(dx, theta);
  fit.phi0_hat = profile_phi0(s, fix_phi0);
  fit.residuals = residuals_under_h0(series.values(), fit.phi0_hat, theta);
  fit.sigma2_hat = fit.residuals.squaredNorm() / static_cast<double>(n);
  require(fit.sigma2_hat > 1e-24 * scale / static_cast<double>(n),
          ErrorKind::degenerate_input, "degenerate series: residuals vanish");
  fit.loglik = -0.5 * static_cast<double>(n) *
                   std::log(2.0 * std::numbers::pi * fit.sigma2_hat) -
               0.5 * static_cast<double>(n);
  fit.at_boundary = std::abs(theta) >= kThetaBound - 1e-6;
  return fit;
}

}  // namespace tarma
