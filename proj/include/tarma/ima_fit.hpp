#pragma once

#include "tarma/common.hpp"
#include "tarma/series.hpp"

namespace tarma {

/// Conditional Gaussian ML fit of X_t = phi0 + X_{t-1} + e_t - theta e_{t-1}.
struct ImaFit {
  double phi0_hat = 0.0;
  double theta_hat = 0.0;
  double sigma2_hat = 0.0;
  Vector residuals;  // e_1..e_n, e_0 = 0 implicit
  double loglik = 0.0;
  bool fix_phi0 = false;
  bool at_boundary = false;  // |theta_hat| reached the search bound
};

/// e_t = X_t - X_{t-1} - phi0 + theta e_{t-1}, e_0 = 0, for t = 1..n.
template <typename Derived>
VectorX<typename Derived::Scalar> residuals_under_h0(
    const Eigen::MatrixBase<Derived>& x, typename Derived::Scalar phi0,
    typename Derived::Scalar theta) {
  using Scalar = typename Derived::Scalar;
  using std::abs;
  require(abs(theta) < Scalar(1), ErrorKind::invalid_spec,
          "residuals_under_h0: |theta| must be < 1");
  require(x.size() >= 2, ErrorKind::too_short,
          "residuals_under_h0: need at least two observations");
  const Index n = x.size() - 1;
  VectorX<Scalar> e(n);
  Scalar prev(0);
  for (Index t = 1; t <= n; ++t) {
    prev = x(t) - x(t - 1) - phi0 + theta * prev;
    e(t - 1) = prev;
  }
  return e;
}

Vector residuals_under_h0(const TimeSeries& series, double phi0, double theta);

/// Conditional Gaussian log-likelihood given X_0.
double ima_loglik(const TimeSeries& series, double phi0, double theta,
                  double sigma2);

/// Profile fit: phi0 (closed form) and sigma^2 are profiled out, theta is
/// located on a 200-point grid over [-0.999, 0.999] and refined by golden
/// section. Requires at least 20 observations.
ImaFit fit_ima11(const TimeSeries& series, bool fix_phi0 = false);

/// Profiled (phi0_hat(theta), sigma2_hat(theta)) at a given theta.
struct ImaProfile {
  double phi0;
  double sigma2;
};
ImaProfile profile_at(const TimeSeries& series, double theta, bool fix_phi0);

}  // namespace tarma
